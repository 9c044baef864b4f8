#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>
#include <unistd.h>

#include "commands.hpp"
#include "config.hpp"

namespace fs = std::filesystem;
using pinsim::Json;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("pinsim_test_" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string first_line(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  return line;
}

Json small_config() {
  return Json::parse(R"({
    "model": {"family": "gaussian", "params": {"kappa": 1.0}},
    "lattice": {"N": 2},
    "pinning": {"J": 0.0},
    "mcmc": {"sweeps": 130, "burn_in": 10, "thin": 1, "seed": 5, "replicas": 2},
    "renorm": {"l": 1, "epsilon": 0.5, "r_list": [1, 2]},
    "hswalk": {"replicas": 60, "prerun_sweeps": 20, "fields": 3, "hit_replicas": 40, "box_l": 2,
               "distances": [1, 2]},
    "analysis": {"d_min": 0, "d_max": 2, "J_list": [0.0, 1.0], "N_list": [1, 2, 3]},
    "enumeration": {"region": [0, 0, 3, 2]},
    "tuples": {"instances": 15, "N": 3}
  })");
}

fs::path write_config(const fs::path& dir, const Json& j) {
  const auto p = dir / "config.json";
  std::ofstream(p) << j.dump(2);
  return p;
}

int run_in(const std::string& sub, const fs::path& config, const fs::path& out, unsigned threads = 1,
           bool dump = false) {
  pinsim::RunOptions o;
  o.subcommand = sub;
  o.config_path = config.string();
  o.out_dir = out.string();
  o.threads = threads;
  o.dump_trajectories = dump;
  return pinsim::run(o);
}

int run_exe(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(PINSIM_EXE) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("unknown keys and bad types name the key") {
  auto j = small_config();
  j["mcmc"]["sweep"] = 10;
  try {
    pinsim::parse_config(j);
    FAIL("accepted an unknown key");
  } catch (const pinsim::ConfigError& e) {
    CHECK(std::string(e.what()).find("mcmc.sweep") != std::string::npos);
  }
  j = small_config();
  j["renorm"]["epsilon"] = "half";
  try {
    pinsim::parse_config(j);
    FAIL("accepted a string epsilon");
  } catch (const pinsim::ConfigError& e) {
    CHECK(std::string(e.what()).find("renorm.epsilon") != std::string::npos);
  }
  j = small_config();
  j["colour"] = 1;
  CHECK_THROWS_WITH_AS(pinsim::parse_config(j), doctest::Contains("colour"), pinsim::ConfigError);
}

TEST_CASE("validation rejects uncertified families and bad parameters") {
  auto j = small_config();
  j["model"] = {{"family", "cosine-perturbed"}, {"params", {{"beta", 1.2}}}};
  CHECK_THROWS_AS(pinsim::validate(pinsim::parse_config(j)), pinsim::ConfigError);
  j = small_config();
  j["mcmc"]["burn_in"] = 500;
  CHECK_THROWS_WITH_AS(pinsim::validate(pinsim::parse_config(j)), doctest::Contains("mcmc.sweeps"),
                       pinsim::ConfigError);
  j = small_config();
  j["hswalk"]["start"] = {9, 9};
  CHECK_THROWS_WITH_AS(pinsim::validate(pinsim::parse_config(j)), doctest::Contains("hswalk.start"),
                       pinsim::ConfigError);
  j = small_config();
  j["renorm"]["epsilon"] = 1.5;
  CHECK_THROWS_AS(pinsim::validate(pinsim::parse_config(j)), pinsim::ConfigError);
  for (const char* fam : {"gaussian", "cosine-perturbed", "log-cosh"}) {
    j = small_config();
    const char* key = std::string(fam) == "gaussian" ? "kappa" : std::string(fam) == "log-cosh" ? "lambda" : "beta";
    j["model"] = {{"family", fam}, {"params", {{key, 0.5}}}};
    CHECK_NOTHROW(pinsim::validate(pinsim::parse_config(j)));
  }
}

TEST_CASE("canonical serialisation round-trips") {
  const auto c = pinsim::parse_config(small_config());
  const auto again = pinsim::parse_config(c.to_json());
  CHECK(again.hash() == c.hash());
  CHECK(again.to_json() == c.to_json());
  CHECK(c.hash().size() == 16);
  auto j = small_config();
  j["mcmc"]["seed"] = 6;
  CHECK(pinsim::parse_config(j).hash() != c.hash());
}

TEST_CASE("every subcommand writes its documented CSV headers") {
  const auto dir = scratch("headers");
  const auto cfg = write_config(dir, small_config());
  struct Expect {
    const char* sub;
    const char* file;
    const char* header;
  };
  const Expect cases[] = {
      {"sample", "stream.csv", "replica,sweep,dry_fraction,phi0"},
      {"covariance", "covariance.csv", "dx,dy,distance,cov,se"},
      {"mass", "mass.csv", "J,m,ci_lo,ci_hi,r2,n_points_used,n_excluded"},
      {"mass-scan", "mass.csv", "J,m,ci_lo,ci_hi,r2,n_points_used,n_excluded"},
      {"dryset-stats", "cleanprob.csv", "r,p_clean,se,n_samples"},
      {"dryset-stats", "occupancy.csv", "u,v,x,y,dirty_fraction"},
      {"hs-verify", "hs_verify.csv", "i_x,i_y,j_x,j_y,occupation,se,reference,reference_se,z"},
      {"hit-bound", "hit_bound.csv", "field,distance,k_x,k_y,p,se,bound,ok"},
      {"hit-bound", "survival.csv", "n,empirical,bound"},
      {"enumerate", "enumerate.csv", "mask,size,logZ,rho"},
      {"enumerate", "clean_mass_scan.csv", "size,neg_log_clean"},
      {"tuple-check", "tuples.csv", "instance,size_A,size_B,components,sum_k,admissible,size_bound,maximal"},
      {"deloc-scan", "deloc.csv", "N,var,se,exact"},
  };
  for (const auto& e : cases) {
    CAPTURE(e.sub);
    const auto out = dir / e.sub;
    REQUIRE(run_in(e.sub, cfg, out) == pinsim::kOk);
    CHECK(first_line(out / e.file) == e.header);
    const auto manifest = Json::parse(slurp(out / "manifest.json"));
    CHECK(manifest["subcommand"] == e.sub);
    CHECK(manifest["config_hash"] == pinsim::parse_config(small_config()).hash());
  }
}

TEST_CASE("enumerate output matches the region size") {
  const auto dir = scratch("enumerate");
  REQUIRE(run_in("enumerate", write_config(dir, small_config()), dir / "out") == pinsim::kOk);
  std::ifstream in(dir / "out" / "enumerate.csv");
  std::string line;
  std::size_t rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 1 + (1u << 6));
}

TEST_CASE("same config and seed give byte-identical outputs, independent of threads") {
  const auto dir = scratch("determinism");
  const auto cfg = write_config(dir, small_config());
  for (const char* sub : {"sample", "mass", "dryset-stats", "hs-verify", "hit-bound", "tuple-check"}) {
    CAPTURE(sub);
    REQUIRE(run_in(sub, cfg, dir / "a") == pinsim::kOk);
    REQUIRE(run_in(sub, cfg, dir / "b", 3) == pinsim::kOk);
    for (const auto& f : fs::directory_iterator(dir / "a")) {
      CAPTURE(f.path().filename().string());
      CHECK(slurp(f.path()) == slurp(dir / "b" / f.path().filename()));
    }
    fs::remove_all(dir / "a");
    fs::remove_all(dir / "b");
  }
}

TEST_CASE("rerunning from a manifest reproduces every file") {
  const auto dir = scratch("manifest");
  auto j = small_config();
  j["model"] = {{"family", "log-cosh"}, {"params", {{"lambda", 0.3}}}};
  const auto cfg = write_config(dir, j);
  pinsim::RunOptions o;
  o.subcommand = "hs-verify";
  o.config_path = cfg.string();
  o.out_dir = (dir / "first").string();
  o.seed = 99;
  o.dump_trajectories = true;
  REQUIRE(pinsim::run(o) == pinsim::kOk);
  const auto manifest = Json::parse(slurp(dir / "first" / "manifest.json"));
  CHECK(manifest["seed"] == 99);
  CHECK(manifest["config"]["mcmc"]["seed"] == 99);

  o.config_path = (dir / "first" / "manifest.json").string();
  o.out_dir = (dir / "second").string();
  o.seed.reset();
  REQUIRE(pinsim::run(o) == pinsim::kOk);
  std::size_t files = 0;
  for (const auto& f : fs::directory_iterator(dir / "first")) {
    ++files;
    CAPTURE(f.path().filename().string());
    CHECK(slurp(f.path()) == slurp(dir / "second" / f.path().filename()));
  }
  CHECK(files == 4);  // csv, json, trajectories, manifest
}

TEST_CASE("trajectory dumps are one jump per line") {
  const auto dir = scratch("dump");
  REQUIRE(run_in("hs-verify", write_config(dir, small_config()), dir / "out", 2, true) == pinsim::kOk);
  std::ifstream in(dir / "out" / "trajectories.jsonl");
  std::string line;
  std::size_t n = 0, last = 0;
  while (std::getline(in, line)) {
    const auto j = Json::parse(line);
    REQUIRE(j.contains("time"));
    REQUIRE(j.contains("x"));
    REQUIRE(j.contains("y"));
    CHECK(j["replica"].get<std::size_t>() >= last);
    last = j["replica"].get<std::size_t>();
    ++n;
  }
  CHECK(n >= 60);
  CHECK(last == 59);
}

TEST_CASE("executable exit codes") {
  const auto dir = scratch("exe");
  auto j = small_config();
  j.erase("enumeration");
  const auto cfg = write_config(dir, j);
  const auto log = dir / "log.txt";

  CHECK(run_exe("enumerate --config " + cfg.string() + " --out " + (dir / "e").string(), log) == 1);
  CHECK(slurp(log).find("cap is 16") != std::string::npos);

  auto bad = small_config();
  bad["lattice"]["size"] = 3;
  const auto bad_dir = scratch("exe_bad");
  CHECK(run_exe("sample --config " + write_config(bad_dir, bad).string(), log) == 1);
  CHECK(slurp(log).find("lattice.size") != std::string::npos);

  CHECK(run_exe("sample --threads 0 --config " + cfg.string(), log) == 1);
  CHECK(run_exe("frobnicate", log) == 1);

  CHECK(run_exe("tuple-check --seed 3 --threads 2 --config " + cfg.string() + " --out " + (dir / "t").string(), log) ==
        0);
  CHECK(Json::parse(slurp(dir / "t" / "manifest.json"))["seed"] == 3);
}

TEST_CASE("output directory falls back to the environment, then the config") {
  const auto dir = scratch("env");
  auto j = small_config();
  j["outputs"] = {{"directory", (dir / "from_config").string()}, {"formats", {"csv"}}};
  const auto cfg = write_config(dir, j);
  pinsim::RunOptions o;
  o.subcommand = "tuple-check";
  o.config_path = cfg.string();
  ::setenv("PINSIM_OUT_DIR", (dir / "from_env").string().c_str(), 1);
  REQUIRE(pinsim::run(o) == pinsim::kOk);
  CHECK(fs::exists(dir / "from_env" / "tuples.csv"));
  CHECK_FALSE(fs::exists(dir / "from_env" / "tuples.json"));
  ::unsetenv("PINSIM_OUT_DIR");
  REQUIRE(pinsim::run(o) == pinsim::kOk);
  CHECK(fs::exists(dir / "from_config" / "manifest.json"));
}

TEST_CASE("enumerate needs the gaussian family and a pinning strength") {
  const auto dir = scratch("enum_pre");
  auto j = small_config();
  j["pinning"] = {{"disabled", true}};
  CHECK(run_in("enumerate", write_config(dir, j), dir / "o") == pinsim::kValidation);
  j = small_config();
  j["model"] = {{"family", "log-cosh"}, {"params", {{"lambda", 0.5}}}};
  CHECK(run_in("enumerate", write_config(dir, j), dir / "o") == pinsim::kValidation);
}
