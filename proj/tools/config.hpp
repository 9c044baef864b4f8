#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "pinning/lattice.hpp"
#include "pinning/potentials.hpp"

namespace pinsim {

using pinning::Site;
using Json = nlohmann::json;

/// Invalid configuration; the message names the offending field.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ModelConfig {
  std::string family = "gaussian";
  double param = 1.0;                 // kappa, beta or lambda
  std::optional<double> c_V;          // defaults to the family's natural constant
  pinning::PotentialFamily resolved() const;
};

struct McmcConfig {
  std::size_t sweeps = 2000;
  std::size_t burn_in = 200;
  std::size_t thin = 1;
  std::uint64_t seed = 1;
  std::size_t replicas = 1;
};

struct RenormConfig {
  int l = 2;
  double epsilon = 0.5;
  std::vector<int> r_list{2, 4, 6, 8};
};

struct HswalkConfig {
  double dt = 0.01;
  double horizon = 1e4;
  std::size_t replicas = 10000;
  std::size_t prerun_sweeps = 2000;
  std::size_t between_sweeps = 5;
  Site start{0, 0};
  std::vector<Site> targets{{0, 0}, {1, 0}, {1, 1}};
  std::vector<Site> dry_set;
  // hit-bound
  std::size_t fields = 100;
  std::vector<int> distances{1, 2, 3};
  int box_l = 3;
  double synthetic_c_V = 2.0;
  std::size_t hit_replicas = 2000;
};

struct AnalysisConfig {
  std::string norm = "linf";
  double d_min = 2;
  double d_max = 8;
  std::optional<int> central;  // defaults to N/2
  std::vector<double> J_list{-1.0, 0.0, 1.0};
  std::vector<int> N_list{4, 8, 16, 32};
};

struct EnumerationConfig {
  std::optional<std::vector<int>> region;  // x0, y0, width, height; defaults to the box
  std::size_t cap = 16;
};

struct TupleConfig {
  std::size_t instances = 1000;
  int N = 6;
  double p_A = 0.05;
  double p_B = 0.1;
  std::string norm = "linf";
};

struct OutputConfig {
  std::string directory = "out";
  std::vector<std::string> formats{"csv", "json"};
  bool csv() const;
  bool json() const;
};

struct ExperimentConfig {
  ModelConfig model;
  int N = 8;
  std::optional<double> J = 0.0;  // unset: pinning disabled
  McmcConfig mcmc;
  RenormConfig renorm;
  HswalkConfig hswalk;
  AnalysisConfig analysis;
  EnumerationConfig enumeration;
  TupleConfig tuples;
  OutputConfig outputs;

  /// Fully resolved experiment, every default spelled out. The output
  /// directory is where results go, not part of the experiment, and is left out.
  Json to_json() const;
  /// FNV-1a of the canonical serialisation, as 16 hex digits.
  std::string hash() const;
};

/// Strict parse: unknown keys and wrong types raise ConfigError naming the key.
ExperimentConfig parse_config(const Json& j);
/// Reads a config file; a manifest written by a previous run is accepted and
/// its embedded configuration is used.
ExperimentConfig load_config(const std::string& path);

/// Preconditions of every module (certified potential, sampler and walk
/// parameters, radii, ...).
void validate(const ExperimentConfig& cfg);

}  // namespace pinsim
