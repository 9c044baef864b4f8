#include "pinning/gaussian_oracle.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <Eigen/SparseCholesky>

#include "pinning/gibbs.hpp"

namespace pinning {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;  // log(2 pi)

double log_sum_exp(const std::vector<double>& xs) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : xs) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

void check_fits_mask(const Region& region) {
  if (region.size() > 32) throw std::invalid_argument("region too large for dry-set masks");
}

}  // namespace

DryMask mask_of(const Region& region, const SiteSet& A) {
  check_fits_mask(region);
  DryMask m = 0;
  for (Site s : A) {
    if (!region.contains(s)) throw std::invalid_argument("dry set site outside the region");
    m |= DryMask{1} << region.index(s);
  }
  return m;
}

SiteSet set_of(const Region& region, DryMask mask) {
  SiteSet out;
  for (std::size_t b = 0; b < region.size(); ++b)
    if (mask >> b & 1u) out.insert(region.site(b));
  return out;
}

std::vector<std::uint8_t> pinned_vector(const Region& region, const SiteSet& A) {
  std::vector<std::uint8_t> p(region.size(), 0);
  for (Site s : A)
    if (region.contains(s)) p[region.index(s)] = 1;
  return p;
}

QuadraticForm QuadraticForm::build(const Region& region, const std::vector<std::uint8_t>& pinned, double kappa) {
  QuadraticForm q;
  std::vector<std::size_t> pos(region.size(), Region::npos);
  for (std::size_t k = 0; k < region.size(); ++k)
    if (!pinned[k]) {
      pos[k] = q.free_sites.size();
      q.free_sites.push_back(k);
    }
  const auto n = static_cast<Eigen::Index>(q.free_sites.size());
  q.coefficients = Eigen::MatrixXd::Zero(n, n);
  const auto& nbr = region.neighbor_table();
  for (Eigen::Index a = 0; a < n; ++a) {
    const auto k = q.free_sites[a];
    q.coefficients(a, a) = 4.0 * kappa;
    for (auto nb : nbr[k])
      if (nb != Region::npos && pos[nb] != Region::npos) q.coefficients(a, static_cast<Eigen::Index>(pos[nb])) = -kappa;
  }
  return q;
}

Eigen::SparseMatrix<double> sparse_dirichlet_form(const Region& region, const std::vector<std::uint8_t>& pinned,
                                                  double kappa, std::vector<std::size_t>* free_sites) {
  std::vector<std::size_t> pos(region.size(), Region::npos);
  std::vector<std::size_t> free;
  for (std::size_t k = 0; k < region.size(); ++k)
    if (!pinned[k]) {
      pos[k] = free.size();
      free.push_back(k);
    }
  std::vector<Eigen::Triplet<double>> trips;
  const auto& nbr = region.neighbor_table();
  for (std::size_t a = 0; a < free.size(); ++a) {
    trips.emplace_back(a, a, 4.0 * kappa);
    for (auto nb : nbr[free[a]])
      if (nb != Region::npos && pos[nb] != Region::npos) trips.emplace_back(a, pos[nb], -kappa);
  }
  const auto n = static_cast<Eigen::Index>(free.size());
  Eigen::SparseMatrix<double> Q(n, n);
  Q.setFromTriplets(trips.begin(), trips.end());
  if (free_sites) *free_sites = std::move(free);
  return Q;
}

Eigen::MatrixXd green(const Region& region, const SiteSet& A, double kappa) {
  const auto q = QuadraticForm::build(region, pinned_vector(region, A), kappa);
  const auto n = static_cast<Eigen::Index>(region.size());
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(n, n);
  if (q.free_sites.empty()) return G;
  Eigen::LLT<Eigen::MatrixXd> llt(q.coefficients);
  if (llt.info() != Eigen::Success) throw std::runtime_error("green: Dirichlet form is not positive definite");
  const Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(q.coefficients.rows(), q.coefficients.cols()));
  for (Eigen::Index a = 0; a < inv.rows(); ++a)
    for (Eigen::Index b = 0; b < inv.cols(); ++b)
      G(static_cast<Eigen::Index>(q.free_sites[a]), static_cast<Eigen::Index>(q.free_sites[b])) = inv(a, b);
  return G;
}

double green_entry(const Region& region, const SiteSet& A, double kappa, Site i, Site j) {
  if (!region.contains(i) || !region.contains(j)) return 0.0;
  const auto pinned = pinned_vector(region, A);
  if (pinned[region.index(i)] || pinned[region.index(j)]) return 0.0;
  std::vector<std::size_t> free;
  const auto Q = sparse_dirichlet_form(region, pinned, kappa, &free);
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(Q);
  if (ldlt.info() != Eigen::Success) throw std::runtime_error("green_entry: factorisation failed");
  const auto at = [&](Site s) {
    return static_cast<Eigen::Index>(std::lower_bound(free.begin(), free.end(), region.index(s)) - free.begin());
  };
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(Q.rows());
  rhs(at(j)) = 1.0;
  const Eigen::VectorXd col = ldlt.solve(rhs);
  return col(at(i));
}

namespace {

double log_partition_pinned(const Region& region, const std::vector<std::uint8_t>& pinned, double kappa,
                            bool reversed = false) {
  auto q = QuadraticForm::build(region, pinned, kappa);
  const auto n = q.coefficients.rows();
  if (n == 0) return 0.0;
  if (reversed) q.coefficients = q.coefficients.reverse().eval();
  Eigen::LLT<Eigen::MatrixXd> llt(q.coefficients);
  if (llt.info() != Eigen::Success) throw std::runtime_error("log_partition: Dirichlet form is not positive definite");
  double logdet = 0.0;
  const auto& L = llt.matrixLLT();
  for (Eigen::Index k = 0; k < n; ++k) logdet += 2.0 * std::log(L(k, k));
  return 0.5 * static_cast<double>(n) * kLog2Pi - 0.5 * logdet;
}

std::vector<std::uint8_t> pinned_from_mask(const Region& region, DryMask mask) {
  std::vector<std::uint8_t> p(region.size(), 0);
  for (std::size_t b = 0; b < region.size(); ++b) p[b] = static_cast<std::uint8_t>(mask >> b & 1u);
  return p;
}

}  // namespace

double log_partition(const Region& region, const SiteSet& A, double kappa) {
  return log_partition_pinned(region, pinned_vector(region, A), kappa);
}

double log_partition(const Region& region, DryMask A, double kappa) {
  return log_partition_pinned(region, pinned_from_mask(region, A), kappa);
}

double DryWeightTable::log_rho(DryMask A) const {
  return J_ * std::popcount(A) + log_z_[A] - log_zhat_;
}

double DryWeightTable::rho(DryMask A) const { return std::exp(log_rho(A)); }

double DryWeightTable::total() const {
  double s = 0.0;
  for (std::size_t m = 0; m < size(); ++m) s += rho(static_cast<DryMask>(m));
  return s;
}

double DryWeightTable::mean_dry_size() const {
  double s = 0.0;
  for (std::size_t m = 0; m < size(); ++m) s += rho(static_cast<DryMask>(m)) * std::popcount(static_cast<DryMask>(m));
  return s;
}

double DryWeightTable::log_clean_probability(DryMask B) const {
  std::vector<double> terms;
  for (std::size_t m = 0; m < size(); ++m)
    if ((static_cast<DryMask>(m) & B) == 0) terms.push_back(log_rho(static_cast<DryMask>(m)));
  return log_sum_exp(terms);
}

DryWeightTable enumerate_rho(const Region& region, double J, double kappa, const EnumerationOptions& opts) {
  const std::size_t cap = std::min(opts.cap, kEnumerationHardCap);
  if (region.size() > cap) {
    std::ostringstream msg;
    msg << "enumeration cap exceeded: region has " << region.size() << " sites, cap is " << cap
        << " (hard limit " << kEnumerationHardCap << ")";
    throw std::invalid_argument(msg.str());
  }
  DryWeightTable t;
  t.region_ = region;
  t.J_ = J;
  t.kappa_ = kappa;
  const std::size_t count = std::size_t{1} << region.size();
  t.log_z_.assign(count, 0.0);

  constexpr std::size_t chunks = 64;
  parallel_for(chunks, opts.threads, [&](std::size_t c) {
    for (std::size_t m = c; m < count; m += chunks) {
      const auto mask = static_cast<DryMask>(m);
      t.log_z_[m] = log_partition_pinned(region, pinned_from_mask(region, mask), kappa, opts.reversed);
    }
  });

  std::vector<double> logw(count);
  for (std::size_t m = 0; m < count; ++m) {
    const std::size_t at = opts.reversed ? count - 1 - m : m;
    logw[m] = J * std::popcount(static_cast<DryMask>(at)) + t.log_z_[at];
  }
  t.log_zhat_ = log_sum_exp(logw);
  return t;
}

Eigen::MatrixXd exact_covariance_matrix(const DryWeightTable& table, unsigned threads) {
  const auto& region = table.region();
  const auto n = static_cast<Eigen::Index>(region.size());
  constexpr std::size_t chunks = 64;
  std::vector<Eigen::MatrixXd> partial(chunks, Eigen::MatrixXd::Zero(n, n));
  parallel_for(chunks, threads, [&](std::size_t c) {
    for (std::size_t m = c; m < table.size(); m += chunks) {
      const auto mask = static_cast<DryMask>(m);
      const double w = table.rho(mask);
      if (w == 0.0) continue;
      partial[c] += w * green(region, set_of(region, mask), table.kappa());
    }
  });
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(n, n);
  for (const auto& p : partial) C += p;
  return C;
}

double exact_covariance(const DryWeightTable& table, Site i, Site j) {
  const auto& region = table.region();
  if (!region.contains(i) || !region.contains(j)) throw std::invalid_argument("exact_covariance: site outside region");
  const auto C = exact_covariance_matrix(table);
  return C(static_cast<Eigen::Index>(region.index(i)), static_cast<Eigen::Index>(region.index(j)));
}

double log_dry_neighbour_functional(const Region& region, const SiteSet& A, const SiteSet& B, double J,
                                    double kappa, std::size_t cap) {
  if (intersects(A, B)) throw std::invalid_argument("dry_neighbour_functional: A and B must be disjoint");
  if (B.size() > std::min(cap, kEnumerationHardCap)) {
    std::ostringstream msg;
    msg << "subset cap exceeded: |B| = " << B.size() << ", cap is " << std::min(cap, kEnumerationHardCap);
    throw std::invalid_argument(msg.str());
  }
  const std::vector<Site> bs(B.begin(), B.end());
  const auto base = pinned_vector(region, A);
  const double log_za = log_partition_pinned(region, base, kappa);
  std::vector<double> terms;
  terms.reserve(std::size_t{1} << bs.size());
  for (std::size_t c = 0; c < (std::size_t{1} << bs.size()); ++c) {
    auto pinned = base;
    int size = 0;
    for (std::size_t b = 0; b < bs.size(); ++b)
      if (c >> b & 1u) {
        if (region.contains(bs[b])) pinned[region.index(bs[b])] = 1;
        ++size;
      }
    terms.push_back(J * size + log_partition_pinned(region, pinned, kappa) - log_za);
  }
  return log_sum_exp(terms);
}

PinRatio pin_ratio(const Region& region, const SiteSet& A, Site i, double kappa, Norm norm) {
  if (A.empty()) throw std::invalid_argument("pin_ratio: A must be nonempty");
  if (A.contains(i)) throw std::invalid_argument("pin_ratio: i must not belong to A");
  if (!region.contains(i)) throw std::invalid_argument("pin_ratio: i outside the region");
  SiteSet Ai = A;
  Ai.insert(i);
  PinRatio out;
  out.ratio = std::exp(log_partition(region, Ai, kappa) - log_partition(region, A, kappa));
  out.distance = dist(i, A, norm);
  out.scaled = out.ratio * std::sqrt(out.distance);
  return out;
}

std::vector<SiteSet> snake_family(const Region& region) {
  std::vector<Site> order;
  for (int row = 0; row < region.height(); ++row)
    for (int col = 0; col < region.width(); ++col) {
      const int x = row % 2 == 0 ? col : region.width() - 1 - col;
      order.push_back({region.x0() + x, region.y0() + row});
    }
  std::vector<SiteSet> out;
  SiteSet cur;
  out.push_back(cur);
  for (Site s : order) {
    cur.insert(s);
    out.push_back(cur);
  }
  return out;
}

CleanBoundScan clean_mass_bound_scan(const DryWeightTable& table, const std::vector<SiteSet>& nested) {
  CleanBoundScan scan;
  for (std::size_t k = 0; k < nested.size(); ++k) {
    if (k > 0 && !std::includes(nested[k].begin(), nested[k].end(), nested[k - 1].begin(), nested[k - 1].end()))
      throw std::invalid_argument("clean_mass_bound_scan: family is not nested");
    const DryMask B = mask_of(table.region(), nested[k]);
    CleanBoundRow row{nested[k].size(), -table.log_clean_probability(B)};
    if (B == 0) row.neg_log_clean = 0.0;
    if (!scan.rows.empty() && row.neg_log_clean < scan.rows.back().neg_log_clean - 1e-12) scan.nondecreasing = false;
    scan.rows.push_back(row);
  }
  if (scan.rows.size() >= 2) {
    double mx = 0, my = 0;
    for (const auto& r : scan.rows) {
      mx += static_cast<double>(r.size);
      my += r.neg_log_clean;
    }
    mx /= static_cast<double>(scan.rows.size());
    my /= static_cast<double>(scan.rows.size());
    double sxy = 0, sxx = 0;
    for (const auto& r : scan.rows) {
      const double dx = static_cast<double>(r.size) - mx;
      sxy += dx * (r.neg_log_clean - my);
      sxx += dx * dx;
    }
    scan.slope = sxx > 0 ? sxy / sxx : 0.0;
  }
  return scan;
}

void write_table_csv(const DryWeightTable& table, std::ostream& out) {
  out << "mask,size,logZ,rho\n";
  char buf[128];
  for (std::size_t m = 0; m < table.size(); ++m) {
    const auto mask = static_cast<DryMask>(m);
    std::snprintf(buf, sizeof buf, "%zu,%d,%.17g,%.17g\n", m, std::popcount(mask), table.log_z(mask), table.rho(mask));
    out << buf;
  }
}

}  // namespace pinning
