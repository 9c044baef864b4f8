#include <iostream>
#include <map>

#include <CLI11.hpp>

#include "commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"pinsim: delta-pinned gradient interface experiments"};
  app.require_subcommand(1, 1);
  pinsim::RunOptions opts;
  std::string config, out;
  std::uint64_t seed = 0;
  const std::map<std::string, std::string> about{
      {"sample", "heat-bath stream of the dry fraction and phi_0"},
      {"covariance", "translation-averaged covariance curve"},
      {"mass", "covariance curve and exponential decay fit"},
      {"mass-scan", "decay rate for every J in analysis.J_list"},
      {"dryset-stats", "dirty-block occupancy and clean probability by radius"},
      {"hs-verify", "random-walk occupation times against the covariance"},
      {"hit-bound", "hitting probabilities against the per-step bound"},
      {"enumerate", "exact dry-set weights and the clean-mass scan (gaussian)"},
      {"tuple-check", "admissible tuple properties on random instances"},
      {"deloc-scan", "Var(phi_0) against the box size"}};
  for (const auto& name : pinsim::kSubcommands) {
    auto* sub = app.add_subcommand(name, about.at(name));
    sub->add_option("--config", config, "experiment configuration (JSON) or a previous manifest.json")
        ->check(CLI::ExistingFile);
    sub->add_option("--out", out, "output directory");
    sub->add_option("--seed", seed, "base seed, overrides mcmc.seed");
    sub->add_option("--threads", opts.threads, "worker threads")->check(CLI::PositiveNumber);
    sub->add_flag("--dump-trajectories", opts.dump_trajectories, "write walk trajectories as JSON lines (hs-verify)");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return pinsim::kValidation;
  }
  auto* sub = app.get_subcommands().front();
  opts.subcommand = sub->get_name();
  if (sub->count("--config")) opts.config_path = config;
  if (sub->count("--out")) opts.out_dir = out;
  if (sub->count("--seed")) opts.seed = seed;
  return pinsim::run(opts);
}
