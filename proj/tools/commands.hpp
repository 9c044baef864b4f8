#pragma once

#include <optional>
#include <string>
#include <vector>

#include "config.hpp"

namespace pinsim {

inline const std::vector<std::string> kSubcommands{"sample",    "covariance",  "mass",      "mass-scan",
                                                   "dryset-stats", "hs-verify", "hit-bound", "enumerate",
                                                   "tuple-check",  "deloc-scan"};

struct RunOptions {
  std::string subcommand;
  std::optional<std::string> config_path;
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  unsigned threads = 1;
  bool dump_trajectories = false;
};

/// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kValidation = 1;
inline constexpr int kRuntime = 2;

/// Loads and validates the configuration, runs the subcommand and writes its
/// artifacts plus manifest.json. Messages go to stderr.
int run(const RunOptions& opts);

}  // namespace pinsim
