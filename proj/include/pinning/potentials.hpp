#pragma once

#include <string>

namespace pinning {

enum class PotentialKind { Gaussian, CosinePerturbed, LogCosh };

PotentialKind parse_potential_kind(const std::string& name);
const char* potential_kind_name(PotentialKind kind);

struct PotentialValue {
  double v = 0.0;
  double dv = 0.0;
  double d2v = 0.0;
};

/// An even, smooth nearest-neighbour interaction V with a claimed convexity
/// constant c_V (1/c_V <= V'' <= c_V).
///
///   gaussian          V(t) = kappa t^2 / 2                V'' = kappa
///   cosine-perturbed  V(t) = t^2/2 - beta (1 - cos t)     V'' = 1 - beta cos t
///   log-cosh          V(t) = t^2/2 + lambda log cosh t    V'' = 1 + lambda sech^2 t
struct PotentialFamily {
  PotentialKind kind = PotentialKind::Gaussian;
  double param = 1.0;
  double c_V = 1.0;

  static PotentialFamily gaussian(double kappa);
  static PotentialFamily cosine_perturbed(double beta);
  static PotentialFamily log_cosh(double lambda);

  /// Smallest c_V consistent with the analytic range of V''; +inf when V'' is
  /// not bounded away from zero.
  static double natural_c_V(PotentialKind kind, double param);

  PotentialValue eval(double t) const;
  double v(double t) const;
  double d2v(double t) const;

  bool is_gaussian() const { return kind == PotentialKind::Gaussian; }
};

struct BoundsReport {
  double min_d2v = 0.0;
  double max_d2v = 0.0;
  double c_V = 1.0;
  bool pass = false;
  std::string message;
};

struct CertifyOptions {
  double half_width = 50.0;
  double step = 1e-3;
};

/// Dense grid scan of V'' on [-T, T] combined with the family's analytic extrema.
BoundsReport certify_bounds(const PotentialFamily& family, const CertifyOptions& opts = {});

/// A family whose bounds have been certified. Samplers only accept this type.
class CertifiedPotential {
 public:
  /// Throws std::invalid_argument carrying the failed report's message.
  explicit CertifiedPotential(const PotentialFamily& family, const CertifyOptions& opts = {});

  const PotentialFamily& family() const { return family_; }
  const BoundsReport& report() const { return report_; }
  double c_V() const { return family_.c_V; }
  PotentialValue eval(double t) const { return family_.eval(t); }
  double v(double t) const { return family_.v(t); }
  double d2v(double t) const { return family_.d2v(t); }
  bool is_gaussian() const { return family_.is_gaussian(); }

 private:
  PotentialFamily family_;
  BoundsReport report_;
};

}  // namespace pinning
