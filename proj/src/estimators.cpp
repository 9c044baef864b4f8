#include "pinning/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "pinning/gaussian_oracle.hpp"

namespace pinning {

namespace {

double mean_of(std::span<const double> xs) {
  return xs.empty() ? 0.0 : std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double se_of_batches(std::span<const double> values) {
  const double n = static_cast<double>(values.size());
  if (values.size() < 2) return 0.0;
  const double m = mean_of(values);
  double ss = 0.0;
  for (double v : values) ss += (v - m) * (v - m);
  return std::sqrt(ss / (n - 1.0) / n);
}

}  // namespace

Estimate batch_means(std::span<const double> series, std::size_t batches) {
  if (series.size() < batches) throw std::invalid_argument("batch_means: fewer samples than batches");
  const std::size_t b = series.size() / batches;
  std::vector<double> means(batches);
  for (std::size_t k = 0; k < batches; ++k) means[k] = mean_of(series.subspan(k * b, b));
  return {mean_of(series), se_of_batches(means)};
}

double integrated_autocorr_time(std::span<const double> series) {
  const std::size_t n = series.size();
  if (n < 4) return 1.0;
  const double m = mean_of(series);
  double c0 = 0.0;
  for (double x : series) c0 += (x - m) * (x - m);
  c0 /= static_cast<double>(n);
  if (c0 <= 0.0) return 1.0;
  double tau = 1.0;
  for (std::size_t lag = 1; lag < n / 2; ++lag) {
    double c = 0.0;
    for (std::size_t t = 0; t + lag < n; ++t) c += (series[t] - m) * (series[t + lag] - m);
    c /= static_cast<double>(n);
    tau += 2.0 * c / c0;
    if (static_cast<double>(lag) >= 5.0 * tau) break;
  }
  return std::max(tau, 1.0);
}

std::vector<Estimate> covariance(const SampleMatrix& samples, std::span<const std::pair<std::size_t, std::size_t>> pairs) {
  const std::size_t n = samples.size();
  if (n < kBatches) throw std::invalid_argument("covariance: insufficient samples (need at least 30)");
  const std::size_t b = n / kBatches;
  auto cov_over = [&](std::size_t from, std::size_t to, std::size_t u, std::size_t v) {
    double su = 0, sv = 0, suv = 0;
    for (std::size_t t = from; t < to; ++t) {
      su += samples[t][u];
      sv += samples[t][v];
      suv += samples[t][u] * samples[t][v];
    }
    const double c = static_cast<double>(to - from);
    return suv / c - (su / c) * (sv / c);
  };
  std::vector<Estimate> out;
  out.reserve(pairs.size());
  for (auto [u, v] : pairs) {
    std::vector<double> per_batch(kBatches);
    for (std::size_t k = 0; k < kBatches; ++k) per_batch[k] = cov_over(k * b, (k + 1) * b, u, v);
    out.push_back({cov_over(0, n, u, v), se_of_batches(per_batch)});
  }
  return out;
}

std::vector<Site> axis_and_diagonal(int d_max) {
  std::vector<Site> out;
  for (int d = 0; d <= d_max; ++d) {
    out.push_back({d, 0});
    if (d > 0) out.push_back({d, d});
  }
  return out;
}

TranslationCovariance::TranslationCovariance(const Region& box, int central, std::vector<Site> displacements,
                                             std::size_t total_snapshots)
    : box_(box), central_(central), classes_(std::move(displacements)), total_(total_snapshots) {
  if (total_ < kBatches) throw std::invalid_argument("covariance: insufficient samples (need at least 30)");
  std::vector<std::size_t> window_pos(box_.size(), Region::npos);
  for (int y = -central; y <= central; ++y)
    for (int x = -central; x <= central; ++x) {
      const Site s{x, y};
      if (!box_.contains(s)) throw std::invalid_argument("covariance: central window exceeds the box");
      window_pos[box_.index(s)] = window_.size();
      window_.push_back(box_.index(s));
    }
  auto in_window = [&](Site s) { return std::max(std::abs(s.x), std::abs(s.y)) <= central; };
  for (Site d : classes_) {
    std::vector<Site> orient{d};
    const Site r{-d.y, d.x};
    if (!(r == d) && !(r == Site{-d.x, -d.y})) orient.push_back(r);
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (Site o : orient)
      for (std::size_t w = 0; w < window_.size(); ++w) {
        const Site i = box_.site(window_[w]);
        const Site j = i + o;
        if (in_window(j)) pairs.emplace_back(w, window_pos[box_.index(j)]);
      }
    if (pairs.empty()) throw std::invalid_argument("covariance: displacement does not fit the central window");
    class_pairs_.push_back(std::move(pairs));
  }
  batches_.resize(kBatches);
  for (auto& b : batches_) {
    b.site_sum.assign(window_.size(), 0.0);
    b.prod_sum.assign(classes_.size(), 0.0);
  }
}

void TranslationCovariance::observe(std::size_t global_index, const FieldConfig& config) {
  if (global_index >= total_) throw std::out_of_range("covariance: snapshot index beyond the declared total");
  auto& b = batches_[global_index * kBatches / total_];
  ++b.n;
  std::vector<double> phi(window_.size());
  for (std::size_t w = 0; w < window_.size(); ++w) {
    phi[w] = config.heights[window_[w]];
    b.site_sum[w] += phi[w];
  }
  for (std::size_t c = 0; c < classes_.size(); ++c) {
    double s = 0.0;
    for (auto [u, v] : class_pairs_[c]) s += phi[u] * phi[v];
    b.prod_sum[c] += s / static_cast<double>(class_pairs_[c].size());
  }
}

void TranslationCovariance::merge(const TranslationCovariance& other) {
  for (std::size_t k = 0; k < kBatches; ++k) {
    auto& a = batches_[k];
    const auto& o = other.batches_[k];
    a.n += o.n;
    for (std::size_t w = 0; w < a.site_sum.size(); ++w) a.site_sum[w] += o.site_sum[w];
    for (std::size_t c = 0; c < a.prod_sum.size(); ++c) a.prod_sum[c] += o.prod_sum[c];
  }
}

std::size_t TranslationCovariance::count() const {
  std::size_t n = 0;
  for (const auto& b : batches_) n += b.n;
  return n;
}

double TranslationCovariance::estimate(const std::vector<double>& site_sum, const std::vector<double>& prod_sum,
                                       std::size_t n, std::size_t cls) const {
  const double dn = static_cast<double>(n);
  double corr = 0.0;
  for (auto [u, v] : class_pairs_[cls]) corr += (site_sum[u] / dn) * (site_sum[v] / dn);
  corr /= static_cast<double>(class_pairs_[cls].size());
  return prod_sum[cls] / dn - corr;
}

CovCurve TranslationCovariance::curve(Norm norm) const {
  for (const auto& b : batches_)
    if (b.n == 0) throw std::invalid_argument("covariance: empty batch, insufficient samples");
  std::vector<double> site_total(window_.size(), 0.0), prod_total(classes_.size(), 0.0);
  std::size_t n = 0;
  for (const auto& b : batches_) {
    n += b.n;
    for (std::size_t w = 0; w < window_.size(); ++w) site_total[w] += b.site_sum[w];
    for (std::size_t c = 0; c < classes_.size(); ++c) prod_total[c] += b.prod_sum[c];
  }
  CovCurve out;
  out.norm = norm;
  for (std::size_t c = 0; c < classes_.size(); ++c) {
    std::vector<double> per_batch;
    for (const auto& b : batches_) per_batch.push_back(estimate(b.site_sum, b.prod_sum, b.n, c));
    out.points.push_back({classes_[c], norm_of(classes_[c], norm), estimate(site_total, prod_total, n, c),
                          se_of_batches(per_batch)});
  }
  return out;
}

MassFit fit_mass(const CovCurve& curve, double d_min, double d_max) {
  MassFit fit;
  std::vector<double> x, y, w;
  for (const auto& p : curve.points) {
    if (p.distance < d_min || p.distance > d_max) continue;
    if (!(p.cov > 0.0) || !(p.se > 0.0)) {
      ++fit.n_excluded;
      continue;
    }
    x.push_back(p.distance);
    y.push_back(-std::log(p.cov));
    w.push_back((p.cov / p.se) * (p.cov / p.se));
  }
  fit.n_used = x.size();
  if (fit.n_used < 3) throw std::invalid_argument("fit_mass: fewer than 3 usable points");

  const double sw = std::accumulate(w.begin(), w.end(), 0.0);
  double xm = 0, ym = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    xm += w[k] * x[k];
    ym += w[k] * y[k];
  }
  xm /= sw;
  ym /= sw;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxx += w[k] * (x[k] - xm) * (x[k] - xm);
    sxy += w[k] * (x[k] - xm) * (y[k] - ym);
    syy += w[k] * (y[k] - ym) * (y[k] - ym);
  }
  if (sxx <= 0) throw std::invalid_argument("fit_mass: all usable points share one distance");
  fit.m = sxy / sxx;
  fit.intercept = ym - fit.m * xm;
  fit.se = 1.0 / std::sqrt(sxx);
  fit.ci_lo = fit.m - 1.959963984540054 * fit.se;
  fit.ci_hi = fit.m + 1.959963984540054 * fit.se;
  double ss_res = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double r = y[k] - (fit.intercept + fit.m * x[k]);
    ss_res += w[k] * r * r;
  }
  fit.r2 = syy > 0 ? 1.0 - ss_res / syy : 0.0;
  fit.non_decaying = !(fit.ci_lo > 0.0);
  return fit;
}

std::vector<VarianceRow> variance_growth(std::span<const int> Ns, const CertifiedPotential& pot,
                                         const Pinning& pinning, const SamplerParams& params) {
  std::vector<VarianceRow> rows;
  for (int N : Ns) {
    const Region box = Region::box(N);
    if (!pinning.enabled() && pot.is_gaussian()) {
      rows.push_back({N, green_entry(box, {}, pot.family().param, {0, 0}, {0, 0}), 0.0, true});
      continue;
    }
    const std::size_t origin = box.index({0, 0});
    struct Series {
      std::vector<double> phi0;
      void operator()(std::size_t, const FieldConfig& c) { phi0.push_back(c.heights[origin_]); }
      std::size_t origin_;
    };
    SamplerParams p = params;
    p.tag = params.tag + "/N=" + std::to_string(N);
    auto series = run_chain<Series>(p, box, pinning, pot, [&](std::size_t) { return Series{{}, origin}; });
    SampleMatrix samples;
    for (const auto& s : series)
      for (double v : s.phi0) samples.push_back({v});
    const std::pair<std::size_t, std::size_t> self{0, 0};
    const auto est = covariance(samples, std::span(&self, 1));
    rows.push_back({N, est[0].value, est[0].se, false});
  }
  return rows;
}

double ls_slope(std::span<const double> x, std::span<const double> y) {
  const double xm = mean_of(x), ym = mean_of(y);
  double sxy = 0, sxx = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxy += (x[k] - xm) * (y[k] - ym);
    sxx += (x[k] - xm) * (x[k] - xm);
  }
  return sxx > 0 ? sxy / sxx : 0.0;
}

}  // namespace pinning
