#include "pinning/gibbs.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace pinning {

std::size_t FieldConfig::dry_count() const {
  std::size_t n = 0;
  for (auto p : pinned) n += p;
  return n;
}

SiteSet FieldConfig::dry_set() const {
  SiteSet out;
  for (std::size_t k = 0; k < pinned.size(); ++k)
    if (pinned[k]) out.insert(region.site(k));
  return out;
}

void FieldConfig::pin(const SiteSet& A) {
  for (Site s : A) {
    if (!region.contains(s)) continue;
    const auto k = region.index(s);
    pinned[k] = 1;
    heights[k] = 0.0;
  }
}

bool FieldConfig::valid() const {
  if (heights.size() != region.size() || pinned.size() != region.size()) return false;
  for (std::size_t k = 0; k < pinned.size(); ++k)
    if (pinned[k] && heights[k] != 0.0) return false;
  return true;
}

std::array<double, 4> FieldConfig::neighbor_heights(std::size_t idx) const {
  const auto& nb = region.neighbor_table()[idx];
  std::array<double, 4> out{};
  for (int d = 0; d < 4; ++d) out[d] = nb[d] == Region::npos ? 0.0 : heights[nb[d]];
  return out;
}

void SamplerParams::validate() const {
  if (!(sweeps > burn_in)) throw std::invalid_argument("sampler: sweeps must exceed burn_in");
  if (thin < 1) throw std::invalid_argument("sampler: thin must be >= 1");
  if (replicas < 1) throw std::invalid_argument("sampler: replicas must be >= 1");
}

namespace {

double energy(std::span<const double> nb, const CertifiedPotential& pot, double t) {
  double u = 0.0;
  for (double p : nb) u += pot.v(t - p);
  return u;
}

}  // namespace

double conditional_mode(std::span<const double> nb, const CertifiedPotential& pot) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (double p : nb) {
    lo = std::min(lo, p);
    hi = std::max(hi, p);
  }
  if (nb.empty()) throw std::invalid_argument("conditional_mode: no neighbours");
  if (lo == hi) return lo;  // V' odd: every term vanishes at the common height

  // Safeguarded Newton on U'(t) = sum_j V'(t - phi_j), bracketed by [lo, hi].
  double t = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    double g = 0.0, h = 0.0;
    for (double p : nb) {
      const auto v = pot.eval(t - p);
      g += v.dv;
      h += v.d2v;
    }
    if (g > 0) hi = t; else lo = t;
    double next = t - g / h;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - t) <= 1e-15 * (1.0 + std::abs(t)) || hi - lo <= 1e-15 * (1.0 + std::abs(t)))
      return next;
    t = next;
  }
  std::ostringstream msg;
  msg << "conditional_mode: no convergence in bracket [" << lo << ", " << hi << "] for "
      << potential_kind_name(pot.family().kind);
  throw std::runtime_error(msg.str());
}

namespace {

template <class F>
struct Simpson {
  const F& f;
  int max_depth;
  int evaluations = 0;
  bool failed = false;

  double eval(double t) {
    ++evaluations;
    return f(t);
  }

  double recurse(double a, double b, double fa, double fm, double fb, double whole, double eps, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = eval(lm), frm = eval(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double diff = left + right - whole;
    if (std::abs(diff) <= 15.0 * eps) return left + right + diff / 15.0;
    if (depth >= max_depth) {
      failed = true;
      return left + right + diff / 15.0;
    }
    return recurse(a, m, fa, flm, fm, left, 0.5 * eps, depth + 1) +
           recurse(m, b, fm, frm, fb, right, 0.5 * eps, depth + 1);
  }
};

}  // namespace

SiteIntegral site_integral_quadrature(std::span<const double> nb, const CertifiedPotential& pot) {
  const double deg = static_cast<double>(nb.size());
  const double t_star = conditional_mode(nb, pot);
  const double u_star = energy(nb, pot, t_star);
  const double half = std::sqrt(2.0 * pot.c_V() * 40.0 / deg);
  const auto f = [&](double t) { return std::exp(-(energy(nb, pot, t) - u_star)); };

  Simpson<decltype(f)> simpson{f, 40};
  constexpr int panels = 16;
  constexpr double eps = 1e-8;
  double total = 0.0;
  const double a0 = t_star - half;
  const double h = 2.0 * half / panels;
  for (int k = 0; k < panels; ++k) {
    const double a = a0 + k * h, b = a + h, m = 0.5 * (a + b);
    const double fa = simpson.eval(a), fm = simpson.eval(m), fb = simpson.eval(b);
    const double whole = h / 6.0 * (fa + 4.0 * fm + fb);
    total += simpson.recurse(a, b, fa, fm, fb, whole, eps / panels, 0);
  }
  if (simpson.failed || !(total > 0) || !std::isfinite(total)) {
    std::ostringstream msg;
    msg << "quadrature did not converge: family=" << potential_kind_name(pot.family().kind)
        << " t*=" << t_star << " interval half-width=" << half << " evaluations=" << simpson.evaluations
        << " partial=" << total;
    throw QuadratureError(msg.str());
  }
  return {std::log(total) - u_star, t_star, u_star};
}

SiteIntegral site_integral_gaussian(std::span<const double> nb, double kappa) {
  const double deg = static_cast<double>(nb.size());
  double mean = 0.0;
  for (double p : nb) mean += p;
  mean /= deg;
  double ss = 0.0;
  for (double p : nb) ss += (p - mean) * (p - mean);
  const double u_star = 0.5 * kappa * ss;
  return {0.5 * std::log(2.0 * std::numbers::pi / (deg * kappa)) - u_star, mean, u_star};
}

namespace {

double pin_probability_from(double log_w, std::span<const double> nb, double J, const CertifiedPotential& pot) {
  const double log_atom = J - energy(nb, pot, 0.0);
  // p = 1 / (1 + W / (e^J w(0)))
  return 1.0 / (1.0 + std::exp(log_w - log_atom));
}

}  // namespace

double pin_probability(std::span<const double> nb, double J, const CertifiedPotential& pot) {
  const auto w = pot.is_gaussian() ? site_integral_gaussian(nb, pot.family().param)
                                   : site_integral_quadrature(nb, pot);
  return pin_probability_from(w.log_w, nb, J, pot);
}

double pin_probability_quadrature(std::span<const double> nb, double J, const CertifiedPotential& pot) {
  return pin_probability_from(site_integral_quadrature(nb, pot).log_w, nb, J, pot);
}

double sample_continuous(std::span<const double> nb, const CertifiedPotential& pot, Rng& rng,
                         NormalSource& normal) {
  const double deg = static_cast<double>(nb.size());
  if (pot.is_gaussian()) {
    double mean = 0.0;
    for (double p : nb) mean += p;
    mean /= deg;
    return mean + normal(rng) / std::sqrt(deg * pot.family().param);
  }
  // Rejection from N(t*, c_V/deg): U(t) >= U(t*) + deg (t - t*)^2 / (2 c_V).
  const double t_star = conditional_mode(nb, pot);
  const double u_star = energy(nb, pot, t_star);
  const double sd = std::sqrt(pot.c_V() / deg);
  const double curv = deg / (2.0 * pot.c_V());
  for (int attempt = 0; attempt < 1'000'000; ++attempt) {
    const double z = normal(rng);
    const double t = t_star + sd * z;
    const double d = t - t_star;
    const double log_accept = -(energy(nb, pot, t) - u_star) + curv * d * d;
    if (std::log(uniform01(rng)) < log_accept) return t;
  }
  throw std::runtime_error("sample_continuous: rejection sampler exhausted its attempts");
}

void sweep(FieldConfig& config, const Pinning& pinning, const CertifiedPotential& pot, Rng& rng,
           NormalSource& normal) {
  const std::size_t n = config.region.size();
  for (std::size_t k = 0; k < n; ++k) {
    const auto nb = config.neighbor_heights(k);
    if (pinning.enabled()) {
      const double p = pin_probability(nb, *pinning.J, pot);
      if (uniform01(rng) < p) {
        config.pinned[k] = 1;
        config.heights[k] = 0.0;
        continue;
      }
      config.pinned[k] = 0;
    } else if (config.pinned[k]) {
      continue;
    }
    config.heights[k] = sample_continuous(nb, pot, rng, normal);
  }
}

}  // namespace pinning
