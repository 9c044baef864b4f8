#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "pinning/lattice.hpp"

namespace pinning {

/// Dry sets of a region with at most 25 sites as bit masks; bit b is the site
/// with raster index b.
using DryMask = std::uint32_t;

DryMask mask_of(const Region& region, const SiteSet& A);
SiteSet set_of(const Region& region, DryMask mask);

/// Dirichlet energy of the gaussian gradient model restricted to the free
/// sites: H = (1/2) phi^T Q phi with Q = kappa (4 I - adjacency of free sites).
struct QuadraticForm {
  std::vector<std::size_t> free_sites;  // raster indices, increasing
  Eigen::MatrixXd coefficients;

  static QuadraticForm build(const Region& region, const std::vector<std::uint8_t>& pinned, double kappa);
};

Eigen::SparseMatrix<double> sparse_dirichlet_form(const Region& region, const std::vector<std::uint8_t>& pinned,
                                                  double kappa, std::vector<std::size_t>* free_sites = nullptr);

std::vector<std::uint8_t> pinned_vector(const Region& region, const SiteSet& A);

/// G_A over all region sites (raster order); rows and columns of pinned
/// sites are zero.
Eigen::MatrixXd green(const Region& region, const SiteSet& A, double kappa);

/// Single entry G_A(i, j) through a sparse factorisation, for regions too
/// large for the dense inverse.
double green_entry(const Region& region, const SiteSet& A, double kappa, Site i, Site j);

/// log Z(A) = (n/2) log(2 pi) - (1/2) log det Q, n = number of free sites.
double log_partition(const Region& region, const SiteSet& A, double kappa);
double log_partition(const Region& region, DryMask A, double kappa);

struct EnumerationOptions {
  std::size_t cap = 16;
  unsigned threads = 1;
  /// Sum subsets in reversed site order (consistency check).
  bool reversed = false;
};

inline constexpr std::size_t kEnumerationHardCap = 25;

/// rho(A) = e^{J|A|} Z(A) / Zhat for every dry set of a small region.
class DryWeightTable {
 public:
  const Region& region() const { return region_; }
  double J() const { return J_; }
  double kappa() const { return kappa_; }
  double log_zhat() const { return log_zhat_; }
  std::size_t size() const { return log_z_.size(); }

  double log_z(DryMask A) const { return log_z_[A]; }
  double log_rho(DryMask A) const;
  double rho(DryMask A) const;

  /// Sum of rho over every A.
  double total() const;
  /// E|A| under rho.
  double mean_dry_size() const;
  /// log sum_{A cap B = empty} rho(A).
  double log_clean_probability(DryMask B) const;

  friend DryWeightTable enumerate_rho(const Region& region, double J, double kappa,
                                      const EnumerationOptions& opts);

 private:
  Region region_;
  double J_ = 0.0;
  double kappa_ = 1.0;
  double log_zhat_ = 0.0;
  std::vector<double> log_z_;
};

/// Throws std::invalid_argument naming the cap when the region is too large.
DryWeightTable enumerate_rho(const Region& region, double J, double kappa, const EnumerationOptions& opts = {});

/// sum_A rho(A) G_A over all region sites.
Eigen::MatrixXd exact_covariance_matrix(const DryWeightTable& table, unsigned threads = 1);
double exact_covariance(const DryWeightTable& table, Site i, Site j);

/// sum_{C subset B} e^{J|C|} Z(A u C) / Z(A), accumulated in the log domain.
/// Returns the logarithm.
double log_dry_neighbour_functional(const Region& region, const SiteSet& A, const SiteSet& B, double J,
                                    double kappa, std::size_t cap = 16);

struct PinRatio {
  double ratio = 0.0;       // Z(A u {i}) / Z(A)
  double distance = 0.0;    // d(i, A)
  double scaled = 0.0;      // ratio * sqrt(d(i, A))
};

PinRatio pin_ratio(const Region& region, const SiteSet& A, Site i, double kappa, Norm norm = Norm::Linf);

struct CleanBoundRow {
  std::size_t size = 0;       // |B|
  double neg_log_clean = 0.0; // -log sum_{A cap B = empty} rho(A)
};

struct CleanBoundScan {
  std::vector<CleanBoundRow> rows;
  double slope = 0.0;        // least-squares slope of neg_log_clean against |B|
  bool nondecreasing = true;
};

/// Default nested family: prefixes of the boustrophedon walk through the
/// region, each one connected.
std::vector<SiteSet> snake_family(const Region& region);

CleanBoundScan clean_mass_bound_scan(const DryWeightTable& table, const std::vector<SiteSet>& nested);

/// CSV export: mask,size,logZ,rho.
void write_table_csv(const DryWeightTable& table, std::ostream& out);

}  // namespace pinning
