#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "pinning/gibbs.hpp"
#include "pinning/lattice.hpp"
#include "pinning/potentials.hpp"
#include "pinning/random.hpp"

namespace pinning {

/// Time-dependent symmetric jump rates a(i, j; t) on nearest-neighbour edges,
/// each within [1/c_V, c_V]. `dir` indexes neighbors(i) (E, W, N, S).
class RateField {
 public:
  virtual ~RateField() = default;
  virtual double c_V() const = 0;
  virtual double rate(Site i, int dir, double t) const = 0;
};

class ConstantRates final : public RateField {
 public:
  ConstantRates(double value, double c_V) : value_(value), c_V_(c_V) {}
  double c_V() const override { return c_V_; }
  double rate(Site, int, double) const override { return value_; }

 private:
  double value_;
  double c_V_;
};

/// Log-uniform random rates in [1/c_V, c_V], a deterministic function of
/// (seed, edge, epoch) with epoch = floor(t / period). period <= 0 gives
/// static rates.
class SyntheticRates final : public RateField {
 public:
  SyntheticRates(std::uint64_t seed, double c_V, double period = 0.0) : seed_(seed), c_V_(c_V), period_(period) {}
  double c_V() const override { return c_V_; }
  double rate(Site i, int dir, double t) const override;

 private:
  std::uint64_t seed_;
  double c_V_;
  double period_;
};

/// a(i, j) = V''(phi_i - phi_j) read from a live field (zero outside the
/// region and on pinned sites).
class FieldRates final : public RateField {
 public:
  FieldRates(const FieldConfig& field, const CertifiedPotential& pot) : field_(&field), pot_(&pot) {}
  double c_V() const override { return pot_->c_V(); }
  double rate(Site i, int dir, double t) const override;

 private:
  const FieldConfig* field_;
  const CertifiedPotential* pot_;
};

struct RateContractError : std::domain_error {
  using std::domain_error::domain_error;
};

struct WalkEvent {
  double time = 0.0;
  Site site;
};

/// One uniformization step: a candidate time from a Poisson clock of rate
/// 4 c_V; the walk then jumps along edge e with probability a(e; t')/(4 c_V)
/// and stays otherwise. Throws RateContractError for a rate outside
/// [1/c_V, c_V].
WalkEvent walk_step(Site x, double t, const RateField& rates, Rng& rng);

struct WalkTrajectory {
  std::vector<WalkEvent> jumps;  // first entry is the start (time 0)
  double death_time = 0.0;       // tau_A, or the censoring time
  bool killed = false;

  bool valid() const;
  /// One line per jump: {"time":t,"x":x,"y":y}, prefixed by "replica" when given.
  void write_jsonl(std::ostream& out, std::optional<std::size_t> replica = std::nullopt) const;
};

/// Walk from `start` with static or externally driven rates until it enters
/// a site where `killed` is true, or the horizon.
WalkTrajectory run_walk(Site start, const RateField& rates, const std::function<bool(Site)>& killed, double horizon,
                        Rng& rng);

/// Field dynamics on the free sites of a configuration, invariant under P_A.
class FieldDiffusion {
 public:
  virtual ~FieldDiffusion() = default;
  virtual void step(FieldConfig& field, Rng& rng) = 0;
  virtual double dt() const = 0;
  virtual double acceptance_rate() const { return 1.0; }
};

/// Euler-Maruyama proposal for d phi = -grad H dt + sqrt(2 dt) xi with a
/// Metropolis correction (MALA), so P_A is exactly invariant.
class MalaDiffusion final : public FieldDiffusion {
 public:
  MalaDiffusion(const CertifiedPotential& pot, double dt) : pot_(&pot), dt_(dt) {}
  void step(FieldConfig& field, Rng& rng) override;
  double dt() const override { return dt_; }
  double acceptance_rate() const override {
    return proposals_ ? static_cast<double>(accepted_) / static_cast<double>(proposals_) : 1.0;
  }
  std::size_t proposals() const { return proposals_; }
  std::size_t accepted() const { return accepted_; }

 private:
  void prepare(const FieldConfig& field);
  double energy_gradient(const std::vector<double>& h, std::vector<double>& grad) const;

  const CertifiedPotential* pot_;
  double dt_;
  NormalSource normal_;
  // Edge list of the current pinning pattern; npos marks a zero neighbour.
  std::vector<std::uint8_t> pattern_;
  std::vector<std::size_t> free_;
  std::vector<std::pair<std::size_t, std::size_t>> edges_;
  std::vector<double> x_, gx_, y_, gy_;
  double ex_ = 0.0;
  std::size_t proposals_ = 0;
  std::size_t accepted_ = 0;
};

/// Exact Ornstein-Uhlenbeck transition of the gaussian field over time dt.
class GaussianExactDiffusion final : public FieldDiffusion {
 public:
  GaussianExactDiffusion(const Region& region, const SiteSet& A, double kappa, double dt);
  void step(FieldConfig& field, Rng& rng) override;
  double dt() const override { return dt_; }

 private:
  std::vector<std::size_t> free_;
  Eigen::MatrixXd drift_;  // exp(-Q dt)
  Eigen::MatrixXd noise_;  // symmetric square root of Q^{-1}(I - exp(-2 Q dt))
  double dt_;
  NormalSource normal_;
};

/// One diffusion update; uses MALA for every family unless `exact_gaussian`
/// is set (gaussian family only).
void diffusion_step(FieldConfig& field, double dt, const CertifiedPotential& pot, Rng& rng,
                    bool exact_gaussian = false);

struct OccupationParams {
  double dt = 0.01;
  double horizon = 1e4;
  std::size_t replicas = 10000;
  std::size_t prerun_sweeps = 2000;
  std::size_t between_sweeps = 5;
  std::uint64_t seed = 1;
  std::string tag = "hs-verify";
  unsigned threads = 1;
  /// Receives (replica, trajectory) for replicas below `dump_limit`.
  std::function<void(std::size_t, const WalkTrajectory&)> dump;
  std::size_t dump_limit = 0;
};

struct OccupationResult {
  std::vector<double> mean;  // per target
  std::vector<double> se;
  double censored_fraction = 0.0;
  bool censor_warning = false;
  double mala_acceptance = 1.0;
  std::size_t prerun_sweeps = 0;
  double mean_lifetime = 0.0;
};

/// Monte Carlo estimate of E int_0^{tau_A} 1{X(s) = j} ds for each target j,
/// with the field started from a heat-bath pre-run of P_A and X(0) = i. For
/// the gaussian family the rates do not depend on the field and the
/// diffusion is skipped. Replicas are split over 16 fixed streams so results
/// do not depend on the thread count; the SE uses 30 batch means over the
/// ordered replica sequence.
OccupationResult occupation_time(const Region& region, const SiteSet& A, Site i, const std::vector<Site>& targets,
                                 const CertifiedPotential& pot, const OccupationParams& params);

/// (1/(3 c_V^2 + 1))^steps.
double hitting_bound(double c_V, int steps);

struct HittingResult {
  double p = 0.0;
  double se = 0.0;
  double bound = 0.0;
  int steps = 0;
};

/// Fraction of walks from i hitting k before leaving the l_inf box of radius
/// l around `center`.
HittingResult hitting_probability(Site i, Site k, Site center, int l, const RateField& rates, std::size_t replicas,
                                  Rng& rng);

/// (1 - (1/(3 c_V^2 + 1))^{2l})^n.
double dirty_block_survival_bound(double c_V, int l, int n_blocks);

/// T_n = first time after S_{n-1} at which the walk sits in a dirty l-block;
/// S_n = first time after T_n at which its block changes (or the death /
/// censoring time). Block x is dirty iff B(x, l) meets A.
std::vector<std::pair<double, double>> dirty_stopping_times(const WalkTrajectory& traj, const SiteSet& A, int l);

}  // namespace pinning
