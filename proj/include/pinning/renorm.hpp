#pragma once

#include <optional>
#include <ostream>
#include <vector>

#include "pinning/estimators.hpp"
#include "pinning/gibbs.hpp"
#include "pinning/lattice.hpp"

namespace pinning {

/// Dirty/clean labels of the l-blocks B(x, l), x in (2l+1)Z^2, whose
/// renormalized coordinates u = x/(2l+1) satisfy |u|_inf <= r. The ring
/// |u|_inf = r is the target boundary for renormalized paths.
class RenormScene {
 public:
  RenormScene(int l, int r);

  int l() const { return l_; }
  int r() const { return r_; }
  int side() const { return 2 * r_ + 1; }

  bool dirty(Site u) const { return dirty_[index(u)] != 0; }
  void set_dirty(Site u, bool d = true) { dirty_[index(u)] = d ? 1 : 0; }
  bool in_scene(Site u) const { return std::max(std::abs(u.x), std::abs(u.y)) <= r_; }
  std::size_t dirty_count() const;
  /// Renormalized coordinates of every dirty block.
  SiteSet dirty_blocks() const;

  void write_csv(std::ostream& out) const;

 private:
  std::size_t index(Site u) const {
    return static_cast<std::size_t>(u.y + r_) * static_cast<std::size_t>(side()) + static_cast<std::size_t>(u.x + r_);
  }
  int l_;
  int r_;
  std::vector<std::uint8_t> dirty_;
};

/// Block x is dirty iff B(x, l) meets A. With `box` set, every site outside
/// the box counts as dry (zero boundary condition).
RenormScene classify_blocks(const SiteSet& A, int l, int r, const std::optional<Region>& box = std::nullopt);
RenormScene classify_blocks(const FieldConfig& config, int l, int r);

/// Minimum, over nearest-neighbour paths of blocks from the origin to the
/// ring |u|_inf = r, of the number of distinct dirty blocks visited
/// (endpoints included). 0/1 breadth-first search.
int min_dirty_path(const RenormScene& scene);
/// Same search restricted to the sub-scene of radius r <= scene.r().
int min_dirty_path(const RenormScene& scene, int r);

/// min_dirty_path < eps * r.
bool is_clean(const RenormScene& scene, double eps);
bool is_clean(int min_dirty, int r, double eps);

struct AdmissibleTuple {
  std::vector<SiteSet> components;  // B_1..B_n
  std::vector<int> k;               // k_1..k_n
};

struct TupleOptions {
  Norm norm = Norm::Linf;
  int k_cap = 256;
};

/// Greedy construction: k_1 = max{k >= 0 : B_1^(k) n A = 0}, and for m >= 2
/// k_m = max{k > 0 : B_m^(k) n (A u B_1^(k_1) u ... u B_{m-1}^(k_{m-1})) = 0}
/// with max of the empty set = 0. Components come from connected_components(B).
AdmissibleTuple admissible_tuple(const SiteSet& A, const SiteSet& B, const TupleOptions& opts = {});

/// Union of B_m^(k_m).
SiteSet enlarged_union(const AdmissibleTuple& t, Norm norm = Norm::Linf);

/// A n S = 0 and A meets the outer boundary of every component of S, with
/// components and boundaries taken in the adjacency of `norm`.
bool is_dry_neighbour(const SiteSet& A, const SiteSet& S, Norm norm = Norm::Linf);

/// Either k_m = 0 or B_m^(k_m) avoids all earlier enlargements.
bool is_admissible(const AdmissibleTuple& t, Norm norm = Norm::Linf);

/// |B^(k)| >= |B| + sum k_m.
bool satisfies_size_bound(const AdmissibleTuple& t, Norm norm = Norm::Linf);

/// Recomputes each k_m by scanning explicit enlargements and compares.
bool is_maximal_bruteforce(const SiteSet& A, const AdmissibleTuple& t, const TupleOptions& opts = {});

struct CleanRow {
  int r = 0;
  double p_clean = 0.0;
  double se = 0.0;
  std::size_t n_samples = 0;
};

struct CleanCurve {
  std::vector<CleanRow> rows;
  double slope = 0.0;   // least-squares slope of log p_clean against r (rows with p > 0)
  double c2 = 0.0;      // -slope
  bool slope_defined = false;
  bool degenerate_all_clean = false;
  bool degenerate_all_dirty = false;
  /// Some radius needs blocks beyond the sampled box (treated as dirty).
  bool exceeds_box = false;
};

/// Streaming (r, eps)-clean frequencies over a sample stream, batched into 30
/// contiguous batches by global index.
class CleanProbability {
 public:
  CleanProbability(int l, double eps, std::vector<int> radii, std::size_t total_snapshots);

  void observe(std::size_t global_index, const FieldConfig& config);
  void observe(std::size_t global_index, const SiteSet& A, const std::optional<Region>& box = std::nullopt);
  void merge(const CleanProbability& other);

  CleanCurve curve() const;
  /// Fraction of samples in which each block of the largest scene is dirty.
  std::vector<std::pair<Site, double>> block_occupancy() const;

 private:
  void record(std::size_t global_index, const RenormScene& largest, bool exceeds);

  int l_;
  double eps_;
  std::vector<int> radii_;
  std::size_t total_;
  std::vector<std::vector<std::size_t>> clean_counts_;  // [batch][radius]
  std::vector<std::size_t> batch_n_;
  std::vector<std::size_t> dirty_counts_;  // per block of the largest scene
  bool exceeds_ = false;
};

}  // namespace pinning
