#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "pinning/gibbs.hpp"
#include "pinning/lattice.hpp"
#include "pinning/potentials.hpp"

namespace pinning {

inline constexpr std::size_t kBatches = 30;

struct Estimate {
  double value = 0.0;
  double se = 0.0;
};

/// Mean of a series with the batch-means standard error. Trailing samples
/// that do not fill a batch are dropped from the SE but kept in the mean.
Estimate batch_means(std::span<const double> series, std::size_t batches = kBatches);

/// Integrated autocorrelation time with Sokal's automatic window (c = 5).
double integrated_autocorr_time(std::span<const double> series);

/// Row-major sample matrix: samples[t][v] is variable v at snapshot t.
using SampleMatrix = std::vector<std::vector<double>>;

/// Empirical covariances of the requested variable pairs; the SE is the
/// spread of the 30 per-batch covariances. Throws when fewer than 30
/// samples are available.
std::vector<Estimate> covariance(const SampleMatrix& samples, std::span<const std::pair<std::size_t, std::size_t>> pairs);

struct CovPoint {
  Site displacement;
  double distance = 0.0;
  double cov = 0.0;
  double se = 0.0;
};

struct CovCurve {
  std::vector<CovPoint> points;
  Norm norm = Norm::Linf;
};

/// Axis (d, 0) and diagonal (d, d) displacements for d = 0..d_max.
std::vector<Site> axis_and_diagonal(int d_max);

/// Streaming covariance estimator for a field on a box, averaged over
/// translations and the two orientations of every displacement class:
/// (d,0) pools (d,0) and (0,d); (d,d) pools (d,d) and (d,-d). Only base
/// sites i with i and i + d inside the central window |.|_inf <= central
/// contribute. The stream is split into 30 contiguous batches by global
/// snapshot index, so per-replica accumulators merge exactly.
class TranslationCovariance {
 public:
  TranslationCovariance(const Region& box, int central, std::vector<Site> displacements, std::size_t total_snapshots);

  void observe(std::size_t global_index, const FieldConfig& config);
  void merge(const TranslationCovariance& other);

  CovCurve curve(Norm norm) const;
  std::size_t count() const;

 private:
  struct Batch {
    std::size_t n = 0;
    std::vector<double> site_sum;   // per window site
    std::vector<double> prod_sum;   // per displacement class
  };

  double estimate(const std::vector<double>& site_sum, const std::vector<double>& prod_sum, std::size_t n,
                  std::size_t cls) const;

  Region box_;
  int central_;
  std::vector<Site> classes_;
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> class_pairs_;  // window index pairs
  std::vector<std::size_t> window_;  // box indices of window sites
  std::size_t total_;
  std::vector<Batch> batches_;
};

struct MassFit {
  double m = 0.0;
  double se = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  double r2 = 0.0;
  double intercept = 0.0;
  std::size_t n_used = 0;
  std::size_t n_excluded = 0;
  bool non_decaying = false;
};

/// Weighted least squares of -log(cov) against distance over [d_min, d_max],
/// weights (cov/se)^2. Nonpositive estimates are excluded and counted.
/// Throws when fewer than 3 points remain.
MassFit fit_mass(const CovCurve& curve, double d_min, double d_max);

struct VarianceRow {
  int N = 0;
  double var = 0.0;
  double se = 0.0;
  bool exact = false;
};

/// Var(phi_0) on Lambda_N for each N. With pinning disabled and the gaussian
/// family the Green function value G_{Lambda_N}(0,0) is returned exactly;
/// otherwise the heat-bath chain is run with `params`.
std::vector<VarianceRow> variance_growth(std::span<const int> Ns, const CertifiedPotential& pot,
                                         const Pinning& pinning, const SamplerParams& params);

/// Least-squares slope of y against x.
double ls_slope(std::span<const double> x, std::span<const double> y);

}  // namespace pinning
