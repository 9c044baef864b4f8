#include "pinning/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <deque>
#include <limits>
#include <stdexcept>

namespace pinning {

Norm parse_norm(const std::string& name) {
  if (name == "l1" || name == "L1") return Norm::L1;
  if (name == "l2" || name == "L2") return Norm::L2;
  if (name == "linf" || name == "Linf" || name == "inf") return Norm::Linf;
  throw std::invalid_argument("unknown norm '" + name + "' (expected l1, l2 or linf)");
}

const char* norm_name(Norm norm) {
  switch (norm) {
    case Norm::L1: return "l1";
    case Norm::L2: return "l2";
    case Norm::Linf: return "linf";
  }
  return "?";
}

double norm_of(Site d, Norm norm) {
  const double ax = std::abs(d.x);
  const double ay = std::abs(d.y);
  switch (norm) {
    case Norm::L1: return ax + ay;
    case Norm::L2: return std::sqrt(ax * ax + ay * ay);
    case Norm::Linf: return std::max(ax, ay);
  }
  return 0.0;
}

Region::Region(int x0, int y0, int width, int height)
    : x0_(x0), y0_(y0), width_(width), height_(height) {
  if (width <= 0 || height <= 0) throw std::invalid_argument("region must be nonempty");
  nbr_.resize(size());
  for (std::size_t idx = 0; idx < size(); ++idx) {
    const auto nb = neighbors(site(idx));
    for (int d = 0; d < 4; ++d) nbr_[idx][d] = contains(nb[d]) ? index(nb[d]) : npos;
  }
}

Region Region::box(int N) {
  if (N < 0) throw std::invalid_argument("box radius must be nonnegative");
  return Region(-N, -N, 2 * N + 1, 2 * N + 1);
}

std::vector<Site> Region::sites() const {
  std::vector<Site> out;
  out.reserve(size());
  for (std::size_t idx = 0; idx < size(); ++idx) out.push_back(site(idx));
  return out;
}

std::vector<Site> Region::exterior_boundary() const {
  SiteSet ext;
  for (std::size_t idx = 0; idx < size(); ++idx)
    for (Site n : neighbors(site(idx)))
      if (!contains(n)) ext.insert(n);
  return {ext.begin(), ext.end()};
}

namespace {

int floor_div(int a, int b) {
  int q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

}  // namespace

Site block_coords(Site i, int l) {
  if (l < 1) throw std::invalid_argument("block radius l must be >= 1");
  const int s = 2 * l + 1;
  return {floor_div(i.x + l, s), floor_div(i.y + l, s)};
}

RenormBlock block_of(Site i, int l) {
  const Site u = block_coords(i, l);
  const int s = 2 * l + 1;
  return {{u.x * s, u.y * s}, l};
}

namespace {

std::vector<Site> ball_offsets(int k, Norm norm) {
  std::vector<Site> out;
  for (int dy = -k; dy <= k; ++dy)
    for (int dx = -k; dx <= k; ++dx)
      if (norm_of({dx, dy}, norm) <= k) out.push_back({dx, dy});
  return out;
}

}  // namespace

SiteSet enlargement(const SiteSet& D, int k, Norm norm) {
  if (D.empty()) throw std::invalid_argument("empty set has no enlargement");
  if (k < 0) throw std::invalid_argument("enlargement radius must be nonnegative");
  if (k == 0) return D;
  const auto offsets = ball_offsets(k, norm);
  SiteSet out;
  for (Site s : D)
    for (Site o : offsets) out.insert(s + o);
  return out;
}

std::vector<SiteSet> connected_components(const SiteSet& B) {
  return connected_components(B, Norm::L1);
}

std::vector<SiteSet> connected_components(const SiteSet& B, Norm adjacency) {
  std::vector<Site> steps = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
  if (adjacency == Norm::Linf) {
    steps.insert(steps.end(), {{1, 1}, {1, -1}, {-1, 1}, {-1, -1}});
  }
  std::vector<SiteSet> out;
  SiteSet seen;
  // B is ordered, so the first unseen site is the lexicographic minimum of a new component.
  for (Site start : B) {
    if (seen.contains(start)) continue;
    SiteSet comp;
    std::deque<Site> queue{start};
    seen.insert(start);
    while (!queue.empty()) {
      const Site s = queue.front();
      queue.pop_front();
      comp.insert(s);
      for (Site d : steps) {
        const Site n = s + d;
        if (B.contains(n) && !seen.contains(n)) {
          seen.insert(n);
          queue.push_back(n);
        }
      }
    }
    out.push_back(std::move(comp));
  }
  return out;
}

double dist(Site i, const SiteSet& S, Norm norm) {
  if (S.empty()) throw std::invalid_argument("distance to an empty set is undefined");
  double best = std::numeric_limits<double>::infinity();
  for (Site s : S) best = std::min(best, norm_of(s - i, norm));
  return best;
}

double dist(const SiteSet& S, const SiteSet& T, Norm norm) {
  if (S.empty() || T.empty()) throw std::invalid_argument("distance to an empty set is undefined");
  double best = std::numeric_limits<double>::infinity();
  for (Site s : S) best = std::min(best, dist(s, T, norm));
  return best;
}

SiteSet outer_boundary(const SiteSet& D, Norm norm) {
  SiteSet out;
  for (Site s : enlargement(D, 1, norm))
    if (!D.contains(s)) out.insert(s);
  return out;
}

SiteSet inner_boundary(const SiteSet& A) {
  SiteSet out;
  for (Site s : A)
    for (Site n : neighbors(s))
      if (!A.contains(n)) {
        out.insert(s);
        break;
      }
  return out;
}

bool intersects(const SiteSet& a, const SiteSet& b) {
  const SiteSet& small = a.size() <= b.size() ? a : b;
  const SiteSet& large = a.size() <= b.size() ? b : a;
  for (Site s : small)
    if (large.contains(s)) return true;
  return false;
}

}  // namespace pinning
