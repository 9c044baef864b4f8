#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <functional>
#include <random>
#include <sstream>

#include "pinning/renorm.hpp"

using namespace pinning;

namespace {

// Exhaustive minimum over simple block paths from the origin to the ring,
// with branch-and-bound pruning.
int brute_min_path(const RenormScene& s, int r) {
  int best = r + 2;
  std::set<Site> on_path;
  std::function<void(Site, int)> dfs = [&](Site u, int cost) {
    if (cost >= best) return;
    if (std::max(std::abs(u.x), std::abs(u.y)) == r) {
      best = cost;
      return;
    }
    for (Site n : neighbors(u)) {
      if (on_path.contains(n)) continue;
      on_path.insert(n);
      dfs(n, cost + (s.dirty(n) ? 1 : 0));
      on_path.erase(n);
    }
  };
  on_path.insert({0, 0});
  dfs({0, 0}, s.dirty({0, 0}) ? 1 : 0);
  return best;
}

RenormScene random_scene(int l, int r, double p, std::mt19937_64& rng) {
  RenormScene s(l, r);
  std::bernoulli_distribution coin(p);
  for (int v = -r; v <= r; ++v)
    for (int u = -r; u <= r; ++u) s.set_dirty({u, v}, coin(rng));
  return s;
}

SiteSet random_set(std::mt19937_64& rng, int N, double p) {
  SiteSet A;
  std::bernoulli_distribution coin(p);
  for (int y = -N; y <= N; ++y)
    for (int x = -N; x <= N; ++x)
      if (coin(rng)) A.insert({x, y});
  return A;
}

}  // namespace

TEST_CASE("classify_blocks examples") {
  CHECK(classify_blocks({}, 2, 3).dirty_count() == 0);
  const auto one = classify_blocks({{3, 0}}, 2, 3);
  CHECK(one.dirty_count() == 1);
  CHECK(one.dirty({1, 0}));
  const Region box = Region::box(17);
  const auto all_sites = box.sites();
  const auto all = classify_blocks(SiteSet(all_sites.begin(), all_sites.end()), 2, 3);
  CHECK(all.dirty_count() == 49);
}

TEST_CASE("blocks outside the sampled box count as dirty") {
  const auto s = classify_blocks({}, 2, 3, Region::box(12));
  CHECK(s.dirty_count() == 24);
  CHECK_FALSE(s.dirty({2, 2}));
  CHECK(s.dirty({3, 0}));
  FieldConfig f(Region::box(17));
  CHECK(classify_blocks(f, 2, 3).dirty_count() == 0);
}

TEST_CASE("min_dirty_path examples") {
  RenormScene s(2, 4);
  CHECK(min_dirty_path(s) == 0);
  s.set_dirty({0, 0});
  CHECK(min_dirty_path(s) == 1);
  for (int v = -4; v <= 4; ++v)
    for (int u = -4; u <= 4; ++u) s.set_dirty({u, v});
  CHECK(min_dirty_path(s) == 5);
  CHECK(min_dirty_path(s, 2) == 3);
}

TEST_CASE("is_clean thresholds") {
  CHECK(is_clean(classify_blocks({}, 1, 5), 0.1));
  RenormScene all(1, 10);
  for (int v = -10; v <= 10; ++v)
    for (int u = -10; u <= 10; ++u) all.set_dirty({u, v});
  CHECK(min_dirty_path(all) == 11);
  CHECK_FALSE(is_clean(all, 0.5));
  CHECK_FALSE(is_clean(2, 4, 0.5));
  CHECK(is_clean(1, 4, 0.5));
  CHECK_FALSE(is_clean(2, 3, 0.5));
  CHECK(is_clean(1, 3, 0.5));
  CHECK_THROWS(is_clean(all, 1.0));
  CHECK_THROWS(is_clean(all, 0.0));
}

TEST_CASE("0/1 search equals the exhaustive minimum") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    const int r = 1 + trial % 3;
    const auto s = random_scene(1, r, 0.2 + 0.6 * (trial % 5) / 4.0, rng);
    CHECK(min_dirty_path(s) == brute_min_path(s, r));
  }
}

TEST_CASE("min_dirty_path bounds and monotonicity") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    SiteSet A = random_set(rng, 12, 0.05);
    int prev = min_dirty_path(classify_blocks(A, 1, 4));
    CHECK(prev <= 5);
    for (int k = 0; k < 10; ++k) {
      A.insert({static_cast<int>(rng() % 25) - 12, static_cast<int>(rng() % 25) - 12});
      const auto s = classify_blocks(A, 1, 4);
      const int cur = min_dirty_path(s);
      CHECK(cur >= prev);
      CHECK(cur <= 5);
      prev = cur;
    }
  }
}

TEST_CASE("scene csv schema") {
  std::ostringstream out;
  classify_blocks({{0, 0}}, 1, 1).write_csv(out);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "x,y,dirty");
  std::getline(in, line);
  CHECK(line == "-3,-3,0");
  CHECK(out.str().find("0,0,1\n") != std::string::npos);
}

TEST_CASE("admissible tuple worked example") {
  const auto t = admissible_tuple({{3, 0}}, {{0, 0}});
  REQUIRE(t.k.size() == 1);
  CHECK(t.k[0] == 2);
  CHECK(enlargement(t.components[0], 3).contains({3, 0}));
  CHECK(enlarged_union(t).size() == 25);
  CHECK(satisfies_size_bound(t));
  CHECK(is_dry_neighbour({{3, 0}}, enlarged_union(t)));
}

TEST_CASE("admissible tuple errors") {
  CHECK_THROWS(admissible_tuple({{0, 0}}, {{0, 0}}));
  CHECK_THROWS_WITH(admissible_tuple({}, {{0, 0}}), doctest::Contains("unbounded"));
  TupleOptions small;
  small.k_cap = 3;
  CHECK_THROWS_WITH(admissible_tuple({{10, 0}}, {{0, 0}}, small), doctest::Contains("cap"));
  CHECK(admissible_tuple({{1, 1}}, {}).components.empty());
}

TEST_CASE("later components get zero radius when blocked") {
  // B_2 touches the enlargement of B_1.
  const SiteSet A{{6, 0}};
  const SiteSet B{{0, 0}, {0, 3}};
  const auto t = admissible_tuple(A, B);
  REQUIRE(t.k.size() == 2);
  CHECK(t.k[0] == 5);
  CHECK(t.k[1] == 0);
  CHECK(is_admissible(t));
  CHECK(is_maximal_bruteforce(A, t));
}

TEST_CASE("random tuples satisfy both properties") {
  std::mt19937_64 rng(13);
  int done = 0;
  while (done < 200) {
    const SiteSet A = random_set(rng, 6, 0.04);
    SiteSet B = random_set(rng, 6, 0.08);
    for (Site a : A) B.erase(a);
    if (A.empty() || B.empty()) continue;
    for (Norm norm : {Norm::Linf, Norm::L1}) {
      TupleOptions opts;
      opts.norm = norm;
      const auto t = admissible_tuple(A, B, opts);
      CHECK(is_admissible(t, norm));
      CHECK(satisfies_size_bound(t, norm));
      CHECK(is_dry_neighbour(A, enlarged_union(t, norm), norm));
      CHECK(is_maximal_bruteforce(A, t, opts));
    }
    ++done;
  }
}

TEST_CASE("the tuple is the only small-radius choice that is admissible and maximal") {
  // Exhaustive over k vectors with entries up to 4 on tiny instances: the
  // greedy tuple is the unique admissible vector whose entries are each
  // maximal given the previous ones.
  std::mt19937_64 rng(99);
  int done = 0;
  while (done < 60) {
    const SiteSet A = random_set(rng, 3, 0.1);
    SiteSet B = random_set(rng, 3, 0.15);
    for (Site a : A) B.erase(a);
    const auto comps = connected_components(B);
    if (A.empty() || comps.empty() || comps.size() > 3) continue;
    const auto t = admissible_tuple(A, B);
    if (*std::max_element(t.k.begin(), t.k.end()) > 4) continue;
    int matches = 0;
    std::vector<int> k(comps.size(), 0);
    std::function<void(std::size_t)> rec = [&](std::size_t m) {
      if (m == comps.size()) {
        AdmissibleTuple c{comps, k};
        if (is_admissible(c) && is_maximal_bruteforce(A, c)) {
          ++matches;
          CHECK(k == t.k);
        }
        return;
      }
      for (int v = 0; v <= 4; ++v) {
        k[m] = v;
        rec(m + 1);
      }
    };
    rec(0);
    CHECK(matches == 1);
    ++done;
  }
}

TEST_CASE("clean probability degenerate streams") {
  // radius 4 with l = 1 reaches |x| = 13
  const Region box = Region::box(13);
  const auto all_sites = box.sites();
  const SiteSet all(all_sites.begin(), all_sites.end());
  CleanProbability dirty(1, 0.5, {2, 4}, 60), clean(1, 0.5, {2, 4}, 60);
  for (std::size_t k = 0; k < 60; ++k) {
    dirty.observe(k, all, box);
    clean.observe(k, SiteSet{}, box);
  }
  const auto d = dirty.curve();
  CHECK(d.degenerate_all_dirty);
  CHECK_FALSE(d.slope_defined);
  for (const auto& r : d.rows) CHECK(r.p_clean == 0.0);
  const auto c = clean.curve();
  CHECK(c.degenerate_all_clean);
  for (const auto& r : c.rows) {
    CHECK(r.p_clean == 1.0);
    CHECK(r.n_samples == 60);
  }
  CHECK_FALSE(c.exceeds_box);
}

TEST_CASE("clean probability merges by batch") {
  std::mt19937_64 rng(3);
  std::vector<SiteSet> stream;
  for (int k = 0; k < 90; ++k) stream.push_back(random_set(rng, 9, 0.02));
  CleanProbability whole(1, 0.5, {1, 2, 3}, 90), a(1, 0.5, {1, 2, 3}, 90), b(1, 0.5, {1, 2, 3}, 90);
  for (std::size_t k = 0; k < 90; ++k) {
    whole.observe(k, stream[k]);
    (k < 45 ? a : b).observe(k, stream[k]);
  }
  a.merge(b);
  const auto x = whole.curve(), y = a.curve();
  for (std::size_t k = 0; k < 3; ++k) {
    CHECK(x.rows[k].p_clean == y.rows[k].p_clean);
    CHECK(x.rows[k].se == y.rows[k].se);
  }
  for (const auto& r : x.rows) {
    CHECK(r.p_clean >= 0.0);
    CHECK(r.p_clean <= 1.0);
  }
  const auto occ = whole.block_occupancy();
  CHECK(occ.size() == 49);
}

TEST_CASE("exceeding the box is flagged") {
  CleanProbability c(2, 0.5, {4}, 30);
  FieldConfig f(Region::box(10));
  for (std::size_t k = 0; k < 30; ++k) c.observe(k, f);
  CHECK(c.curve().exceeds_box);
}
