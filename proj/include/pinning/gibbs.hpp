#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <functional>
#include <exception>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "pinning/lattice.hpp"
#include "pinning/potentials.hpp"
#include "pinning/random.hpp"

namespace pinning {

/// Heights on a region plus the explicit dry-set indicator. Heights vanish
/// outside the region; pinned sites carry height exactly zero.
struct FieldConfig {
  Region region;
  std::vector<double> heights;
  std::vector<std::uint8_t> pinned;

  explicit FieldConfig(Region r)
      : region(std::move(r)), heights(region.size(), 0.0), pinned(region.size(), 0) {}

  double height(Site s) const { return region.contains(s) ? heights[region.index(s)] : 0.0; }
  bool is_pinned(Site s) const { return !region.contains(s) || pinned[region.index(s)] != 0; }

  std::size_t dry_count() const;
  SiteSet dry_set() const;
  /// Mark the sites of A as pinned at zero.
  void pin(const SiteSet& A);
  /// True iff every pinned site has height 0.
  bool valid() const;

  /// Heights of the four neighbours (E, W, N, S) of site `idx`.
  std::array<double, 4> neighbor_heights(std::size_t idx) const;
};

/// Pinning strength. `J` unset means the delta-atom is switched off: sites
/// already pinned stay frozen at zero and every other site is continuous.
struct Pinning {
  std::optional<double> J;

  static Pinning strength(double j) { return {j}; }
  static Pinning disabled() { return {}; }
  bool enabled() const { return J.has_value(); }
};

struct SamplerParams {
  std::size_t sweeps = 1000;
  std::size_t burn_in = 100;
  std::size_t thin = 1;
  std::uint64_t seed = 1;
  std::size_t replicas = 1;
  unsigned threads = 1;
  std::string tag = "sample";

  void validate() const;
  /// Number of snapshots each replica emits.
  std::size_t snapshots_per_replica() const { return (sweeps - burn_in - 1) / thin + 1; }
};

struct QuadratureError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Log of the continuous single-site weight, log W with
/// W = int exp(-sum_j V(t - phi_j)) dt, and the minimiser t*.
struct SiteIntegral {
  double log_w = 0.0;
  double t_star = 0.0;
  double u_star = 0.0;
};

/// Minimiser of U(t) = sum_j V(t - phi_j); U' is strictly increasing.
double conditional_mode(std::span<const double> neighbor_heights, const CertifiedPotential& pot);

/// W by adaptive Simpson on [t* - D, t* + D], D = sqrt(2 c_V 40 / deg).
SiteIntegral site_integral_quadrature(std::span<const double> neighbor_heights,
                                      const CertifiedPotential& pot);

/// W in closed form (gaussian family only).
SiteIntegral site_integral_gaussian(std::span<const double> neighbor_heights, double kappa);

/// Probability that the site is pinned given its neighbours:
/// e^J w(0) / (e^J w(0) + W), w(t) = exp(-sum_j V(t - phi_j)).
double pin_probability(std::span<const double> neighbor_heights, double J, const CertifiedPotential& pot);

/// Same probability with W forced through quadrature, for every family.
double pin_probability_quadrature(std::span<const double> neighbor_heights, double J,
                                  const CertifiedPotential& pot);

/// One draw from the density w(t)/W.
double sample_continuous(std::span<const double> neighbor_heights, const CertifiedPotential& pot,
                         Rng& rng, NormalSource& normal);

/// Systematic raster-scan heat-bath sweep.
void sweep(FieldConfig& config, const Pinning& pinning, const CertifiedPotential& pot, Rng& rng,
           NormalSource& normal);

/// One heat-bath chain with its own engine.
class GibbsChain {
 public:
  GibbsChain(FieldConfig start, Pinning pinning, const CertifiedPotential& pot, Rng rng)
      : config_(std::move(start)), pinning_(pinning), pot_(&pot), rng_(std::move(rng)) {}

  void sweep() { ::pinning::sweep(config_, pinning_, *pot_, rng_, normal_); }
  void sweeps(std::size_t n) {
    for (std::size_t k = 0; k < n; ++k) sweep();
  }
  const FieldConfig& config() const { return config_; }
  FieldConfig& config() { return config_; }

 private:
  FieldConfig config_;
  Pinning pinning_;
  const CertifiedPotential* pot_;
  Rng rng_;
  NormalSource normal_;
};

/// Calls fn(k) for k in [0, n) on up to `threads` threads; the first
/// exception thrown by any task is rethrown after all threads join.
template <class Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
  const auto nthreads = static_cast<unsigned>(std::max<std::size_t>(1, std::min<std::size_t>(threads, n)));
  if (nthreads == 1) {
    for (std::size_t k = 0; k < n; ++k) fn(k);
    return;
  }
  std::vector<std::exception_ptr> errors(nthreads);
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < nthreads; ++t)
      pool.emplace_back([&, t] {
        try {
          for (std::size_t k = t; k < n; k += nthreads) fn(k);
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

/// Runs `params.replicas` independent chains from the all-zero, unpinned
/// configuration (sites of `frozen` start pinned). Replica r is seeded with
/// stream_seed(params.seed, r, params.tag). Every replica owns an observer
/// built by `make_observer(r)`; it is called as observer(sweep_index, config)
/// for sweeps burn_in+1, burn_in+1+thin, ... Observers are returned in
/// replica order, so results do not depend on the thread count.
template <class Observer, class MakeObserver>
std::vector<Observer> run_chain(const SamplerParams& params, const Region& region, const Pinning& pinning,
                                const CertifiedPotential& pot, MakeObserver make_observer,
                                const SiteSet& frozen = {}) {
  params.validate();
  std::vector<Observer> observers;
  observers.reserve(params.replicas);
  for (std::size_t r = 0; r < params.replicas; ++r) observers.push_back(make_observer(r));

  auto run_one = [&](std::size_t r) {
    FieldConfig start(region);
    start.pin(frozen);
    GibbsChain chain(std::move(start), pinning, pot, make_rng(params.seed, r, params.tag));
    for (std::size_t s = 1; s <= params.sweeps; ++s) {
      chain.sweep();
      if (s > params.burn_in && (s - params.burn_in - 1) % params.thin == 0)
        observers[r](s, chain.config());
    }
  };

  parallel_for(params.replicas, params.threads, run_one);
  return observers;
}

}  // namespace pinning
