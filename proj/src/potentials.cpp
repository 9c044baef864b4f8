#include "pinning/potentials.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace pinning {

PotentialKind parse_potential_kind(const std::string& name) {
  if (name == "gaussian") return PotentialKind::Gaussian;
  if (name == "cosine-perturbed" || name == "cosine") return PotentialKind::CosinePerturbed;
  if (name == "log-cosh" || name == "logcosh") return PotentialKind::LogCosh;
  throw std::invalid_argument("unknown potential family '" + name +
                              "' (expected gaussian, cosine-perturbed or log-cosh)");
}

const char* potential_kind_name(PotentialKind kind) {
  switch (kind) {
    case PotentialKind::Gaussian: return "gaussian";
    case PotentialKind::CosinePerturbed: return "cosine-perturbed";
    case PotentialKind::LogCosh: return "log-cosh";
  }
  return "?";
}

double PotentialFamily::natural_c_V(PotentialKind kind, double param) {
  const double inf = std::numeric_limits<double>::infinity();
  switch (kind) {
    case PotentialKind::Gaussian:
      return param > 0 ? std::max(param, 1.0 / param) : inf;
    case PotentialKind::CosinePerturbed: {
      const double b = std::abs(param);
      return b < 1 ? 1.0 / (1.0 - b) : inf;
    }
    case PotentialKind::LogCosh:
      if (param >= 0) return 1.0 + param;
      return param > -1 ? 1.0 / (1.0 + param) : inf;
  }
  return inf;
}

PotentialFamily PotentialFamily::gaussian(double kappa) {
  return {PotentialKind::Gaussian, kappa, natural_c_V(PotentialKind::Gaussian, kappa)};
}

PotentialFamily PotentialFamily::cosine_perturbed(double beta) {
  return {PotentialKind::CosinePerturbed, beta, natural_c_V(PotentialKind::CosinePerturbed, beta)};
}

PotentialFamily PotentialFamily::log_cosh(double lambda) {
  return {PotentialKind::LogCosh, lambda, natural_c_V(PotentialKind::LogCosh, lambda)};
}

namespace {

// log cosh t without overflow
double log_cosh_stable(double t) {
  const double a = std::abs(t);
  return a + std::log1p(std::exp(-2.0 * a)) - std::log(2.0);
}

}  // namespace

PotentialValue PotentialFamily::eval(double t) const {
  switch (kind) {
    case PotentialKind::Gaussian:
      return {0.5 * param * t * t, param * t, param};
    case PotentialKind::CosinePerturbed:
      return {0.5 * t * t - param * (1.0 - std::cos(t)), t - param * std::sin(t),
              1.0 - param * std::cos(t)};
    case PotentialKind::LogCosh: {
      const double th = std::tanh(t);
      return {0.5 * t * t + param * log_cosh_stable(t), t + param * th, 1.0 + param * (1.0 - th * th)};
    }
  }
  return {};
}

double PotentialFamily::v(double t) const {
  switch (kind) {
    case PotentialKind::Gaussian: return 0.5 * param * t * t;
    case PotentialKind::CosinePerturbed: return 0.5 * t * t - param * (1.0 - std::cos(t));
    case PotentialKind::LogCosh: return 0.5 * t * t + param * log_cosh_stable(t);
  }
  return 0.0;
}

double PotentialFamily::d2v(double t) const {
  switch (kind) {
    case PotentialKind::Gaussian: return param;
    case PotentialKind::CosinePerturbed: return 1.0 - param * std::cos(t);
    case PotentialKind::LogCosh: {
      const double th = std::tanh(t);
      return 1.0 + param * (1.0 - th * th);
    }
  }
  return 0.0;
}

namespace {

// Analytic infimum and supremum of V'' over the real line.
std::pair<double, double> analytic_range(const PotentialFamily& f) {
  switch (f.kind) {
    case PotentialKind::Gaussian: return {f.param, f.param};
    case PotentialKind::CosinePerturbed: {
      const double b = std::abs(f.param);
      return {1.0 - b, 1.0 + b};
    }
    case PotentialKind::LogCosh:
      // sech^2 ranges over (0, 1]; the value 1 is attained at t = 0
      return {std::min(1.0, 1.0 + f.param), std::max(1.0, 1.0 + f.param)};
  }
  return {0.0, 0.0};
}

}  // namespace

BoundsReport certify_bounds(const PotentialFamily& family, const CertifyOptions& opts) {
  BoundsReport rep;
  rep.c_V = family.c_V;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  const auto n = static_cast<long>(std::llround(opts.half_width / opts.step));
  for (long k = -n; k <= n; ++k) {
    const double v = family.d2v(static_cast<double>(k) * opts.step);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const auto [alo, ahi] = analytic_range(family);
  rep.min_d2v = std::min(lo, alo);
  rep.max_d2v = std::max(hi, ahi);

  std::ostringstream msg;
  msg << potential_kind_name(family.kind) << "(param=" << family.param << "): V'' in ["
      << rep.min_d2v << ", " << rep.max_d2v << "], c_V=" << family.c_V;
  if (!(family.c_V >= 1.0) || !std::isfinite(family.c_V)) {
    msg << "; c_V must be a finite number >= 1";
  } else if (rep.min_d2v <= 0.0) {
    msg << "; V'' is not strictly positive";
  } else if (1.0 / family.c_V > rep.min_d2v * (1 + 1e-12)) {
    msg << "; lower bound 1/c_V violated";
  } else if (rep.max_d2v > family.c_V * (1 + 1e-12)) {
    msg << "; upper bound c_V violated";
  } else {
    rep.pass = true;
  }
  rep.message = msg.str();
  return rep;
}

CertifiedPotential::CertifiedPotential(const PotentialFamily& family, const CertifyOptions& opts)
    : family_(family), report_(certify_bounds(family, opts)) {
  if (!report_.pass) throw std::invalid_argument("uncertified potential: " + report_.message);
}

}  // namespace pinning
