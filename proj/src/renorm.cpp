#include "pinning/renorm.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace pinning {

RenormScene::RenormScene(int l, int r) : l_(l), r_(r) {
  if (l < 1) throw std::invalid_argument("renorm: block radius l must be >= 1");
  if (r < 1) throw std::invalid_argument("renorm: renormalized radius r must be >= 1");
  dirty_.assign(static_cast<std::size_t>(side()) * side(), 0);
}

std::size_t RenormScene::dirty_count() const {
  std::size_t n = 0;
  for (auto d : dirty_) n += d;
  return n;
}

SiteSet RenormScene::dirty_blocks() const {
  SiteSet out;
  for (int v = -r_; v <= r_; ++v)
    for (int u = -r_; u <= r_; ++u)
      if (dirty({u, v})) out.insert({u, v});
  return out;
}

void RenormScene::write_csv(std::ostream& out) const {
  const int s = 2 * l_ + 1;
  out << "x,y,dirty\n";
  for (int v = -r_; v <= r_; ++v)
    for (int u = -r_; u <= r_; ++u) out << u * s << ',' << v * s << ',' << (dirty({u, v}) ? 1 : 0) << '\n';
}

namespace {

bool block_inside(const Region& box, Site u, int l) {
  const int s = 2 * l + 1;
  return box.contains({u.x * s - l, u.y * s - l}) && box.contains({u.x * s + l, u.y * s + l});
}

void mark_exterior(RenormScene& scene, const Region& box) {
  for (int v = -scene.r(); v <= scene.r(); ++v)
    for (int u = -scene.r(); u <= scene.r(); ++u)
      if (!block_inside(box, {u, v}, scene.l())) scene.set_dirty({u, v});
}

}  // namespace

RenormScene classify_blocks(const SiteSet& A, int l, int r, const std::optional<Region>& box) {
  RenormScene scene(l, r);
  if (box) mark_exterior(scene, *box);
  for (Site a : A) {
    const Site u = block_coords(a, l);
    if (scene.in_scene(u)) scene.set_dirty(u);
  }
  return scene;
}

RenormScene classify_blocks(const FieldConfig& config, int l, int r) {
  RenormScene scene(l, r);
  mark_exterior(scene, config.region);
  for (std::size_t k = 0; k < config.pinned.size(); ++k) {
    if (!config.pinned[k]) continue;
    const Site u = block_coords(config.region.site(k), l);
    if (scene.in_scene(u)) scene.set_dirty(u);
  }
  return scene;
}

int min_dirty_path(const RenormScene& scene) { return min_dirty_path(scene, scene.r()); }

int min_dirty_path(const RenormScene& scene, int r) {
  if (r < 1 || r > scene.r()) throw std::invalid_argument("min_dirty_path: radius outside the scene");
  const int side = 2 * r + 1;
  auto idx = [&](Site u) { return static_cast<std::size_t>(u.y + r) * side + static_cast<std::size_t>(u.x + r); };
  constexpr int inf = std::numeric_limits<int>::max();
  std::vector<int> best(static_cast<std::size_t>(side) * side, inf);
  std::deque<Site> queue;
  const Site origin{0, 0};
  best[idx(origin)] = scene.dirty(origin) ? 1 : 0;
  queue.push_back(origin);
  int answer = inf;
  while (!queue.empty()) {
    const Site u = queue.front();
    queue.pop_front();
    const int cost = best[idx(u)];
    if (std::max(std::abs(u.x), std::abs(u.y)) == r) {
      answer = std::min(answer, cost);
      continue;  // paths end on the ring
    }
    for (Site n : neighbors(u)) {
      const int w = scene.dirty(n) ? 1 : 0;
      if (cost + w < best[idx(n)]) {
        best[idx(n)] = cost + w;
        if (w == 0) queue.push_front(n); else queue.push_back(n);
      }
    }
  }
  return answer;
}

bool is_clean(int min_dirty, int r, double eps) {
  return static_cast<double>(min_dirty) < eps * static_cast<double>(r);
}

bool is_clean(const RenormScene& scene, double eps) {
  if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("is_clean: eps must lie in (0, 1)");
  return is_clean(min_dirty_path(scene), scene.r(), eps);
}

namespace {

int max_k_below(double d) {
  // largest integer k with k < d
  return static_cast<int>(std::ceil(d)) - 1;
}

}  // namespace

AdmissibleTuple admissible_tuple(const SiteSet& A, const SiteSet& B, const TupleOptions& opts) {
  if (intersects(A, B)) throw std::invalid_argument("admissible_tuple: A and B must be disjoint");
  AdmissibleTuple t;
  t.components = connected_components(B);
  if (t.components.empty()) return t;
  if (A.empty()) throw std::invalid_argument("admissible_tuple: k_1 is unbounded (A is empty and no confining region)");

  auto check_cap = [&](int k) {
    if (k > opts.k_cap) {
      std::ostringstream msg;
      msg << "admissible_tuple: enlargement radius " << k << " exceeds the cap " << opts.k_cap;
      throw std::invalid_argument(msg.str());
    }
  };
  const int k1 = max_k_below(dist(A, t.components[0], opts.norm));
  check_cap(k1);
  t.k.push_back(k1);
  SiteSet obstacles = A;
  {
    const auto e = enlargement(t.components[0], k1, opts.norm);
    obstacles.insert(e.begin(), e.end());
  }
  for (std::size_t m = 1; m < t.components.size(); ++m) {
    const auto& Bm = t.components[m];
    const int km = intersects(Bm, obstacles) ? 0 : std::max(0, max_k_below(dist(Bm, obstacles, opts.norm)));
    check_cap(km);
    t.k.push_back(km);
    const auto e = enlargement(Bm, km, opts.norm);
    obstacles.insert(e.begin(), e.end());
  }
  return t;
}

SiteSet enlarged_union(const AdmissibleTuple& t, Norm norm) {
  SiteSet out;
  for (std::size_t m = 0; m < t.components.size(); ++m) {
    const auto e = enlargement(t.components[m], t.k[m], norm);
    out.insert(e.begin(), e.end());
  }
  return out;
}

bool is_dry_neighbour(const SiteSet& A, const SiteSet& S, Norm norm) {
  if (intersects(A, S)) return false;
  const Norm adjacency = norm == Norm::Linf ? Norm::Linf : Norm::L1;
  for (const auto& C : connected_components(S, adjacency))
    if (!intersects(A, outer_boundary(C, norm))) return false;
  return true;
}

bool is_admissible(const AdmissibleTuple& t, Norm norm) {
  SiteSet prev;
  for (std::size_t m = 0; m < t.components.size(); ++m) {
    if (t.k[m] < 0) return false;
    const auto e = enlargement(t.components[m], t.k[m], norm);
    if (m > 0 && t.k[m] != 0 && intersects(e, prev)) return false;
    prev.insert(e.begin(), e.end());
  }
  return true;
}

bool satisfies_size_bound(const AdmissibleTuple& t, Norm norm) {
  std::size_t base = 0;
  long long sum_k = 0;
  for (std::size_t m = 0; m < t.components.size(); ++m) {
    base += t.components[m].size();
    sum_k += t.k[m];
  }
  return static_cast<long long>(enlarged_union(t, norm).size()) >= static_cast<long long>(base) + sum_k;
}

bool is_maximal_bruteforce(const SiteSet& A, const AdmissibleTuple& t, const TupleOptions& opts) {
  SiteSet obstacles = A;
  for (std::size_t m = 0; m < t.components.size(); ++m) {
    const int kmin = m == 0 ? 0 : 1;
    int best = 0;
    bool any = false;
    for (int k = kmin; k <= t.k[m] + 3; ++k) {
      if (!intersects(enlargement(t.components[m], k, opts.norm), obstacles)) {
        best = k;
        any = true;
      }
    }
    if (!any) best = 0;
    if (best != t.k[m]) return false;
    const auto e = enlargement(t.components[m], t.k[m], opts.norm);
    obstacles.insert(e.begin(), e.end());
  }
  return true;
}

CleanProbability::CleanProbability(int l, double eps, std::vector<int> radii, std::size_t total_snapshots)
    : l_(l), eps_(eps), radii_(std::move(radii)), total_(total_snapshots) {
  if (l < 1) throw std::invalid_argument("clean_probability: l must be >= 1");
  if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("clean_probability: eps must lie in (0, 1)");
  if (radii_.empty()) throw std::invalid_argument("clean_probability: empty radius list");
  for (int r : radii_)
    if (r < 1) throw std::invalid_argument("clean_probability: radii must be >= 1");
  if (total_ < kBatches) throw std::invalid_argument("clean_probability: need at least 30 samples");
  clean_counts_.assign(kBatches, std::vector<std::size_t>(radii_.size(), 0));
  batch_n_.assign(kBatches, 0);
  const int R = *std::max_element(radii_.begin(), radii_.end());
  dirty_counts_.assign(static_cast<std::size_t>(2 * R + 1) * (2 * R + 1), 0);
}

void CleanProbability::record(std::size_t global_index, const RenormScene& largest, bool exceeds) {
  if (global_index >= total_) throw std::out_of_range("clean_probability: index beyond the declared total");
  const std::size_t b = global_index * kBatches / total_;
  ++batch_n_[b];
  for (std::size_t k = 0; k < radii_.size(); ++k)
    if (is_clean(min_dirty_path(largest, radii_[k]), radii_[k], eps_)) ++clean_counts_[b][k];
  const int R = largest.r();
  std::size_t at = 0;
  for (int v = -R; v <= R; ++v)
    for (int u = -R; u <= R; ++u, ++at) dirty_counts_[at] += largest.dirty({u, v}) ? 1 : 0;
  exceeds_ = exceeds_ || exceeds;
}

void CleanProbability::observe(std::size_t global_index, const FieldConfig& config) {
  const int R = *std::max_element(radii_.begin(), radii_.end());
  const int s = 2 * l_ + 1;
  const bool exceeds = !config.region.contains({-R * s - l_, -R * s - l_}) || !config.region.contains({R * s + l_, R * s + l_});
  record(global_index, classify_blocks(config, l_, R), exceeds);
}

void CleanProbability::observe(std::size_t global_index, const SiteSet& A, const std::optional<Region>& box) {
  const int R = *std::max_element(radii_.begin(), radii_.end());
  const int s = 2 * l_ + 1;
  const bool exceeds = box && (!box->contains({-R * s - l_, -R * s - l_}) || !box->contains({R * s + l_, R * s + l_}));
  record(global_index, classify_blocks(A, l_, R, box), exceeds);
}

void CleanProbability::merge(const CleanProbability& other) {
  for (std::size_t b = 0; b < kBatches; ++b) {
    batch_n_[b] += other.batch_n_[b];
    for (std::size_t k = 0; k < radii_.size(); ++k) clean_counts_[b][k] += other.clean_counts_[b][k];
  }
  for (std::size_t k = 0; k < dirty_counts_.size(); ++k) dirty_counts_[k] += other.dirty_counts_[k];
  exceeds_ = exceeds_ || other.exceeds_;
}

CleanCurve CleanProbability::curve() const {
  CleanCurve c;
  c.exceeds_box = exceeds_;
  std::size_t n = 0;
  for (auto bn : batch_n_) n += bn;
  for (std::size_t k = 0; k < radii_.size(); ++k) {
    std::size_t hits = 0;
    std::vector<double> per_batch;
    for (std::size_t b = 0; b < kBatches; ++b) {
      hits += clean_counts_[b][k];
      if (batch_n_[b] > 0) per_batch.push_back(static_cast<double>(clean_counts_[b][k]) / static_cast<double>(batch_n_[b]));
    }
    double se = 0.0;
    if (per_batch.size() >= 2) {
      double m = 0;
      for (double v : per_batch) m += v;
      m /= static_cast<double>(per_batch.size());
      double ss = 0;
      for (double v : per_batch) ss += (v - m) * (v - m);
      se = std::sqrt(ss / static_cast<double>(per_batch.size() - 1) / static_cast<double>(per_batch.size()));
    }
    c.rows.push_back({radii_[k], n ? static_cast<double>(hits) / static_cast<double>(n) : 0.0, se, n});
  }
  c.degenerate_all_clean = std::all_of(c.rows.begin(), c.rows.end(), [](const CleanRow& r) { return r.p_clean == 1.0; });
  c.degenerate_all_dirty = std::all_of(c.rows.begin(), c.rows.end(), [](const CleanRow& r) { return r.p_clean == 0.0; });
  std::vector<double> xs, ys;
  for (const auto& r : c.rows)
    if (r.p_clean > 0.0) {
      xs.push_back(r.r);
      ys.push_back(std::log(r.p_clean));
    }
  if (xs.size() >= 2 && !c.degenerate_all_clean) {
    c.slope = ls_slope(xs, ys);
    c.c2 = -c.slope;
    c.slope_defined = true;
  }
  return c;
}

std::vector<std::pair<Site, double>> CleanProbability::block_occupancy() const {
  const int R = *std::max_element(radii_.begin(), radii_.end());
  std::size_t n = 0;
  for (auto bn : batch_n_) n += bn;
  std::vector<std::pair<Site, double>> out;
  std::size_t at = 0;
  for (int v = -R; v <= R; ++v)
    for (int u = -R; u <= R; ++u, ++at)
      out.emplace_back(Site{u, v}, n ? static_cast<double>(dirty_counts_[at]) / static_cast<double>(n) : 0.0);
  return out;
}

}  // namespace pinning
