#include "config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>

#include "pinning/random.hpp"

namespace pinsim {

namespace {

class Section {
 public:
  Section(const Json& j, std::string path, std::set<std::string> allowed) : j_(j), path_(std::move(path)) {
    if (!j.is_object()) throw ConfigError("config key '" + path_ + "' must be an object");
    for (const auto& [key, _] : j.items())
      if (!allowed.contains(key)) throw ConfigError("unknown config key '" + name(key) + "'");
  }

  bool has(const std::string& key) const { return j_.contains(key); }
  const Json& raw(const std::string& key) const { return j_.at(key); }
  std::string name(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  template <class T>
  void get(const std::string& key, T& out) const {
    if (!j_.contains(key)) return;
    const Json& v = j_.at(key);
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) fail(key, "a boolean");
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) fail(key, "an integer");
      if constexpr (std::is_unsigned_v<T>)
        if (!v.is_number_unsigned() && v.get<long long>() < 0) fail(key, "a nonnegative integer");
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) fail(key, "a number");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) fail(key, "a string");
    }
    try {
      out = v.get<T>();
    } catch (const nlohmann::json::exception&) {
      fail(key, "of the documented type");
    }
  }

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    throw ConfigError("config key '" + name(key) + "' must be " + what);
  }

 private:
  const Json& j_;
  std::string path_;
};

Site parse_site(const Json& v, const std::string& name) {
  if (!v.is_array() || v.size() != 2 || !v[0].is_number_integer() || !v[1].is_number_integer())
    throw ConfigError("config key '" + name + "' must be a site [x, y]");
  return {v[0].get<int>(), v[1].get<int>()};
}

std::vector<Site> parse_sites(const Json& v, const std::string& name) {
  if (!v.is_array()) throw ConfigError("config key '" + name + "' must be a list of sites");
  std::vector<Site> out;
  for (const auto& s : v) out.push_back(parse_site(s, name));
  return out;
}

Json sites_json(const std::vector<Site>& s) {
  Json out = Json::array();
  for (Site x : s) out.push_back({x.x, x.y});
  return out;
}

template <class T>
void get_list(const Section& s, const std::string& key, std::vector<T>& out) {
  if (!s.has(key)) return;
  const Json& v = s.raw(key);
  if (!v.is_array()) s.fail(key, "a list");
  out.clear();
  for (const auto& x : v) {
    if constexpr (std::is_integral_v<T>) {
      if (!x.is_number_integer()) s.fail(key, "a list of integers");
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!x.is_number()) s.fail(key, "a list of numbers");
    } else {
      if (!x.is_string()) s.fail(key, "a list of strings");
    }
    out.push_back(x.get<T>());
  }
}

const char* param_key(pinning::PotentialKind k) {
  switch (k) {
    case pinning::PotentialKind::Gaussian: return "kappa";
    case pinning::PotentialKind::CosinePerturbed: return "beta";
    case pinning::PotentialKind::LogCosh: return "lambda";
  }
  return "kappa";
}

}  // namespace

pinning::PotentialFamily ModelConfig::resolved() const {
  pinning::PotentialFamily f;
  switch (pinning::parse_potential_kind(family)) {
    case pinning::PotentialKind::Gaussian: f = pinning::PotentialFamily::gaussian(param); break;
    case pinning::PotentialKind::CosinePerturbed: f = pinning::PotentialFamily::cosine_perturbed(param); break;
    case pinning::PotentialKind::LogCosh: f = pinning::PotentialFamily::log_cosh(param); break;
  }
  if (c_V) f.c_V = *c_V;
  return f;
}

bool OutputConfig::csv() const { return std::find(formats.begin(), formats.end(), "csv") != formats.end(); }
bool OutputConfig::json() const { return std::find(formats.begin(), formats.end(), "json") != formats.end(); }

ExperimentConfig parse_config(const Json& j) {
  ExperimentConfig c;
  Section top(j, "", {"model", "lattice", "pinning", "mcmc", "renorm", "hswalk", "analysis", "enumeration", "tuples",
                      "outputs"});
  if (top.has("model")) {
    Section s(top.raw("model"), "model", {"family", "params", "c_V"});
    s.get("family", c.model.family);
    pinning::PotentialKind kind;
    try {
      kind = pinning::parse_potential_kind(c.model.family);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("config key 'model.family': ") + e.what());
    }
    if (s.has("params")) {
      Section p(s.raw("params"), "model.params", {param_key(kind)});
      p.get(param_key(kind), c.model.param);
    } else if (kind != pinning::PotentialKind::Gaussian) {
      throw ConfigError(std::string("config key 'model.params.") + param_key(kind) + "' is required");
    }
    if (s.has("c_V")) {
      double v = 0;
      s.get("c_V", v);
      c.model.c_V = v;
    }
  }
  if (top.has("lattice")) {
    Section s(top.raw("lattice"), "lattice", {"N"});
    s.get("N", c.N);
  }
  if (top.has("pinning")) {
    Section s(top.raw("pinning"), "pinning", {"J", "disabled"});
    bool disabled = false;
    s.get("disabled", disabled);
    if (disabled && s.has("J")) throw ConfigError("config key 'pinning.J' conflicts with 'pinning.disabled'");
    if (disabled) {
      c.J.reset();
    } else {
      double J = 0.0;
      s.get("J", J);
      c.J = J;
    }
  }
  if (top.has("mcmc")) {
    Section s(top.raw("mcmc"), "mcmc", {"sweeps", "burn_in", "thin", "seed", "replicas"});
    s.get("sweeps", c.mcmc.sweeps);
    s.get("burn_in", c.mcmc.burn_in);
    s.get("thin", c.mcmc.thin);
    s.get("seed", c.mcmc.seed);
    s.get("replicas", c.mcmc.replicas);
  }
  if (top.has("renorm")) {
    Section s(top.raw("renorm"), "renorm", {"l", "epsilon", "r_list"});
    s.get("l", c.renorm.l);
    s.get("epsilon", c.renorm.epsilon);
    get_list(s, "r_list", c.renorm.r_list);
  }
  if (top.has("hswalk")) {
    Section s(top.raw("hswalk"), "hswalk",
              {"dt", "horizon", "replicas", "prerun_sweeps", "between_sweeps", "start", "targets", "dry_set", "fields",
               "distances", "box_l", "synthetic_c_V", "hit_replicas"});
    auto& h = c.hswalk;
    s.get("dt", h.dt);
    s.get("horizon", h.horizon);
    s.get("replicas", h.replicas);
    s.get("prerun_sweeps", h.prerun_sweeps);
    s.get("between_sweeps", h.between_sweeps);
    if (s.has("start")) h.start = parse_site(s.raw("start"), "hswalk.start");
    if (s.has("targets")) h.targets = parse_sites(s.raw("targets"), "hswalk.targets");
    if (s.has("dry_set")) h.dry_set = parse_sites(s.raw("dry_set"), "hswalk.dry_set");
    s.get("fields", h.fields);
    get_list(s, "distances", h.distances);
    s.get("box_l", h.box_l);
    s.get("synthetic_c_V", h.synthetic_c_V);
    s.get("hit_replicas", h.hit_replicas);
  }
  if (top.has("analysis")) {
    Section s(top.raw("analysis"), "analysis", {"norm", "d_min", "d_max", "central", "J_list", "N_list"});
    auto& a = c.analysis;
    s.get("norm", a.norm);
    s.get("d_min", a.d_min);
    s.get("d_max", a.d_max);
    if (s.has("central")) {
      int v = 0;
      s.get("central", v);
      a.central = v;
    }
    get_list(s, "J_list", a.J_list);
    get_list(s, "N_list", a.N_list);
  }
  if (top.has("enumeration")) {
    Section s(top.raw("enumeration"), "enumeration", {"region", "cap"});
    if (s.has("region")) {
      std::vector<int> r;
      get_list(s, "region", r);
      if (r.size() != 4) s.fail("region", "[x0, y0, width, height]");
      c.enumeration.region = r;
    }
    s.get("cap", c.enumeration.cap);
  }
  if (top.has("tuples")) {
    Section s(top.raw("tuples"), "tuples", {"instances", "N", "p_A", "p_B", "norm"});
    s.get("instances", c.tuples.instances);
    s.get("N", c.tuples.N);
    s.get("p_A", c.tuples.p_A);
    s.get("p_B", c.tuples.p_B);
    s.get("norm", c.tuples.norm);
  }
  if (top.has("outputs")) {
    Section s(top.raw("outputs"), "outputs", {"directory", "formats"});
    s.get("directory", c.outputs.directory);
    get_list(s, "formats", c.outputs.formats);
  }
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
  }
  if (j.is_object() && j.contains("config_hash") && j.contains("config")) return parse_config(j.at("config"));
  return parse_config(j);
}

Json ExperimentConfig::to_json() const {
  Json j;
  const auto kind = pinning::parse_potential_kind(model.family);
  j["model"] = {{"family", pinning::potential_kind_name(kind)}, {"params", {{param_key(kind), model.param}}}};
  if (model.c_V) j["model"]["c_V"] = *model.c_V;
  j["lattice"] = {{"N", N}};
  if (J)
    j["pinning"] = {{"J", *J}};
  else
    j["pinning"] = {{"disabled", true}};
  j["mcmc"] = {{"sweeps", mcmc.sweeps}, {"burn_in", mcmc.burn_in}, {"thin", mcmc.thin},
               {"seed", mcmc.seed},     {"replicas", mcmc.replicas}};
  j["renorm"] = {{"l", renorm.l}, {"epsilon", renorm.epsilon}, {"r_list", renorm.r_list}};
  j["hswalk"] = {{"dt", hswalk.dt},
                 {"horizon", hswalk.horizon},
                 {"replicas", hswalk.replicas},
                 {"prerun_sweeps", hswalk.prerun_sweeps},
                 {"between_sweeps", hswalk.between_sweeps},
                 {"start", {hswalk.start.x, hswalk.start.y}},
                 {"targets", sites_json(hswalk.targets)},
                 {"dry_set", sites_json(hswalk.dry_set)},
                 {"fields", hswalk.fields},
                 {"distances", hswalk.distances},
                 {"box_l", hswalk.box_l},
                 {"synthetic_c_V", hswalk.synthetic_c_V},
                 {"hit_replicas", hswalk.hit_replicas}};
  j["analysis"] = {{"norm", analysis.norm},     {"d_min", analysis.d_min},     {"d_max", analysis.d_max},
                   {"J_list", analysis.J_list}, {"N_list", analysis.N_list}};
  if (analysis.central) j["analysis"]["central"] = *analysis.central;
  j["enumeration"] = {{"cap", enumeration.cap}};
  if (enumeration.region) j["enumeration"]["region"] = *enumeration.region;
  j["tuples"] = {{"instances", tuples.instances}, {"N", tuples.N}, {"p_A", tuples.p_A}, {"p_B", tuples.p_B},
                 {"norm", tuples.norm}};
  j["outputs"] = {{"formats", outputs.formats}};
  return j;
}

std::string ExperimentConfig::hash() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(pinning::fnv1a64(to_json().dump())));
  return buf;
}

void validate(const ExperimentConfig& c) {
  auto require = [](bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
  };
  const auto family = c.model.resolved();
  const auto report = pinning::certify_bounds(family);
  require(report.pass, "config key 'model': " + report.message);
  require(c.N >= 0, "config key 'lattice.N' must be >= 0");
  require(c.mcmc.sweeps > c.mcmc.burn_in, "config key 'mcmc.sweeps' must exceed 'mcmc.burn_in'");
  require(c.mcmc.thin >= 1, "config key 'mcmc.thin' must be >= 1");
  require(c.mcmc.replicas >= 1, "config key 'mcmc.replicas' must be >= 1");
  require(c.renorm.l >= 1, "config key 'renorm.l' must be >= 1");
  require(c.renorm.epsilon > 0 && c.renorm.epsilon < 1, "config key 'renorm.epsilon' must lie in (0, 1)");
  require(!c.renorm.r_list.empty(), "config key 'renorm.r_list' must be nonempty");
  for (int r : c.renorm.r_list) require(r >= 1, "config key 'renorm.r_list' entries must be >= 1");
  require(c.hswalk.dt > 0, "config key 'hswalk.dt' must be positive");
  require(c.hswalk.horizon > 0, "config key 'hswalk.horizon' must be positive");
  require(c.hswalk.replicas >= 30, "config key 'hswalk.replicas' must be >= 30");
  require(c.hswalk.box_l >= 1, "config key 'hswalk.box_l' must be >= 1");
  require(c.hswalk.synthetic_c_V >= 1, "config key 'hswalk.synthetic_c_V' must be >= 1");
  require(c.hswalk.hit_replicas >= 1, "config key 'hswalk.hit_replicas' must be >= 1");
  for (int d : c.hswalk.distances)
    require(d >= 0 && d <= 2 * c.hswalk.box_l, "config key 'hswalk.distances' entries must lie in [0, 2 box_l]");
  const auto box = pinning::Region::box(c.N);
  const pinning::SiteSet A(c.hswalk.dry_set.begin(), c.hswalk.dry_set.end());
  for (Site s : c.hswalk.dry_set) require(box.contains(s), "config key 'hswalk.dry_set' has a site outside the box");
  auto free_site = [&](Site s) { return box.contains(s) && !A.contains(s); };
  require(free_site(c.hswalk.start), "config key 'hswalk.start' must be a free site of the box");
  for (Site s : c.hswalk.targets) require(free_site(s), "config key 'hswalk.targets' must be free sites of the box");
  try {
    pinning::parse_norm(c.analysis.norm);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config key 'analysis.norm': ") + e.what());
  }
  try {
    pinning::parse_norm(c.tuples.norm);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config key 'tuples.norm': ") + e.what());
  }
  require(c.analysis.d_min <= c.analysis.d_max, "config key 'analysis.d_min' must not exceed 'analysis.d_max'");
  if (c.analysis.central) require(*c.analysis.central >= 0 && *c.analysis.central <= c.N,
                                  "config key 'analysis.central' must lie in [0, N]");
  for (int n : c.analysis.N_list) require(n >= 0, "config key 'analysis.N_list' entries must be >= 0");
  if (c.enumeration.region)
    require((*c.enumeration.region)[2] > 0 && (*c.enumeration.region)[3] > 0,
            "config key 'enumeration.region' must have positive width and height");
  require(c.tuples.N >= 0, "config key 'tuples.N' must be >= 0");
  require(c.tuples.p_A >= 0 && c.tuples.p_A <= 1, "config key 'tuples.p_A' must lie in [0, 1]");
  require(c.tuples.p_B >= 0 && c.tuples.p_B <= 1, "config key 'tuples.p_B' must lie in [0, 1]");
  for (const auto& f : c.outputs.formats)
    require(f == "csv" || f == "json", "config key 'outputs.formats' entries must be 'csv' or 'json'");
}

}  // namespace pinsim
