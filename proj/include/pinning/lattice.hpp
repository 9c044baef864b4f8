#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

namespace pinning {

/// A site of the square lattice Z^2.
struct Site {
  int x = 0;
  int y = 0;

  friend constexpr auto operator<=>(const Site&, const Site&) = default;
  friend constexpr Site operator+(Site a, Site b) { return {a.x + b.x, a.y + b.y}; }
  friend constexpr Site operator-(Site a, Site b) { return {a.x - b.x, a.y - b.y}; }
};

using SiteSet = std::set<Site>;

enum class Norm { L1, L2, Linf };

Norm parse_norm(const std::string& name);
const char* norm_name(Norm norm);

double norm_of(Site d, Norm norm);

/// The four nearest neighbours in the order E, W, N, S.
constexpr std::array<Site, 4> neighbors(Site i) {
  return {Site{i.x + 1, i.y}, Site{i.x - 1, i.y}, Site{i.x, i.y + 1}, Site{i.x, i.y - 1}};
}

constexpr bool adjacent(Site a, Site b) {
  const int dx = a.x > b.x ? a.x - b.x : b.x - a.x;
  const int dy = a.y > b.y ? a.y - b.y : b.y - a.y;
  return dx + dy == 1;
}

/// A finite rectangular region [x0, x0+width) x [y0, y0+height) of Z^2 with
/// zero boundary condition outside. Sites are indexed in raster order: x runs
/// fastest, rows go from the bottom (y0) up.
class Region {
 public:
  Region() = default;
  Region(int x0, int y0, int width, int height);

  /// The box Lambda_N = [-N, N]^2.
  static Region box(int N);

  int x0() const { return x0_; }
  int y0() const { return y0_; }
  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return static_cast<std::size_t>(width_) * height_; }

  bool contains(Site s) const {
    return s.x >= x0_ && s.x < x0_ + width_ && s.y >= y0_ && s.y < y0_ + height_;
  }
  std::size_t index(Site s) const {
    return static_cast<std::size_t>(s.y - y0_) * width_ + static_cast<std::size_t>(s.x - x0_);
  }
  Site site(std::size_t idx) const {
    return {x0_ + static_cast<int>(idx % width_), y0_ + static_cast<int>(idx / width_)};
  }

  std::vector<Site> sites() const;
  /// Sites of Z^2 outside the region that are adjacent to it.
  std::vector<Site> exterior_boundary() const;

  /// For each site index, the indices of its four neighbours (E, W, N, S);
  /// `npos` marks a neighbour outside the region.
  const std::vector<std::array<std::size_t, 4>>& neighbor_table() const { return nbr_; }

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  friend bool operator==(const Region& a, const Region& b) {
    return a.x0_ == b.x0_ && a.y0_ == b.y0_ && a.width_ == b.width_ && a.height_ == b.height_;
  }

 private:
  int x0_ = 0;
  int y0_ = 0;
  int width_ = 0;
  int height_ = 0;
  std::vector<std::array<std::size_t, 4>> nbr_;
};

/// Center of the l-block containing i: the unique x in (2l+1)Z^2 with
/// |i - x|_inf <= l.
struct RenormBlock {
  Site center;
  int l = 1;

  friend bool operator==(const RenormBlock&, const RenormBlock&) = default;
};

RenormBlock block_of(Site i, int l);

/// Renormalized coordinates of the block containing i (center / (2l+1)).
Site block_coords(Site i, int l);

/// D^(k) = { i : d(i, D) <= k }.
SiteSet enlargement(const SiteSet& D, int k, Norm norm = Norm::Linf);

/// Maximal nearest-neighbour connected components, ordered by the
/// lexicographic minimum of each component.
std::vector<SiteSet> connected_components(const SiteSet& B);

/// Components under the adjacency induced by `norm` (L1: 4-neighbour,
/// Linf: 8-neighbour, L2: same as L1 on Z^2).
std::vector<SiteSet> connected_components(const SiteSet& B, Norm adjacency);

double dist(Site i, const SiteSet& S, Norm norm);
double dist(const SiteSet& S, const SiteSet& T, Norm norm);

/// Outer vertex boundary D^(1) \ D.
SiteSet outer_boundary(const SiteSet& D, Norm norm = Norm::Linf);

/// Sites of A having a nearest neighbour outside A.
SiteSet inner_boundary(const SiteSet& A);

bool intersects(const SiteSet& a, const SiteSet& b);

}  // namespace pinning
