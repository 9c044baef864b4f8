#include "pinning/hswalk.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "pinning/estimators.hpp"

namespace pinning {

namespace {

constexpr std::size_t kStreams = 16;

std::uint64_t edge_key(Site i, int dir) {
  // Undirected edge: canonical lower endpoint plus orientation bit.
  Site a = i;
  int axis = dir / 2;
  if (dir == 1) a = Site{i.x - 1, i.y};
  if (dir == 3) a = Site{i.x, i.y - 1};
  const auto ux = static_cast<std::uint64_t>(static_cast<std::uint32_t>(a.x));
  const auto uy = static_cast<std::uint64_t>(static_cast<std::uint32_t>(a.y));
  return splitmix64((ux << 32) ^ uy) ^ static_cast<std::uint64_t>(axis);
}

void check_rate(double r, double c_V) {
  const double slack = 1e-12 * c_V;
  if (!(r >= 1.0 / c_V - slack && r <= c_V + slack)) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "rate %.17g outside [1/c_V, c_V] = [%.17g, %.17g]", r, 1.0 / c_V, c_V);
    throw RateContractError(buf);
  }
}

}  // namespace

double SyntheticRates::rate(Site i, int dir, double t) const {
  std::uint64_t epoch = 0;
  if (period_ > 0.0) epoch = static_cast<std::uint64_t>(std::floor(t / period_));
  const std::uint64_t h = splitmix64(seed_ ^ splitmix64(edge_key(i, dir) ^ splitmix64(epoch)));
  const double u = static_cast<double>(h >> 11) * 0x1.0p-53;
  return std::exp(std::log(c_V_) * (2.0 * u - 1.0));
}

double FieldRates::rate(Site i, int dir, double) const {
  const Site j = neighbors(i)[static_cast<std::size_t>(dir)];
  return pot_->d2v(field_->height(i) - field_->height(j));
}

WalkEvent walk_step(Site x, double t, const RateField& rates, Rng& rng) {
  const double c_V = rates.c_V();
  const double t_next = t + exponential(rng, 4.0 * c_V);
  const int dir = std::min(3, static_cast<int>(4.0 * uniform01(rng)));
  const double a = rates.rate(x, dir, t_next);
  check_rate(a, c_V);
  if (uniform01(rng) * c_V < a) return {t_next, neighbors(x)[static_cast<std::size_t>(dir)]};
  return {t_next, x};
}

bool WalkTrajectory::valid() const {
  if (jumps.empty()) return false;
  for (std::size_t k = 1; k < jumps.size(); ++k) {
    if (!(jumps[k].time > jumps[k - 1].time)) return false;
    if (!adjacent(jumps[k].site, jumps[k - 1].site)) return false;
  }
  return death_time >= jumps.back().time;
}

void WalkTrajectory::write_jsonl(std::ostream& out, std::optional<std::size_t> replica) const {
  char buf[160];
  for (const auto& e : jumps) {
    if (replica)
      std::snprintf(buf, sizeof buf, "{\"replica\":%zu,\"time\":%.17g,\"x\":%d,\"y\":%d}\n", *replica, e.time,
                    e.site.x, e.site.y);
    else
      std::snprintf(buf, sizeof buf, "{\"time\":%.17g,\"x\":%d,\"y\":%d}\n", e.time, e.site.x, e.site.y);
    out << buf;
  }
}

WalkTrajectory run_walk(Site start, const RateField& rates, const std::function<bool(Site)>& killed, double horizon,
                        Rng& rng) {
  WalkTrajectory traj;
  traj.jumps.push_back({0.0, start});
  if (killed(start)) {
    traj.killed = true;
    return traj;
  }
  Site x = start;
  double t = 0.0;
  for (;;) {
    const WalkEvent e = walk_step(x, t, rates, rng);
    if (e.time >= horizon) {
      traj.death_time = horizon;
      return traj;
    }
    t = e.time;
    if (e.site == x) continue;
    x = e.site;
    traj.jumps.push_back(e);
    if (killed(x)) {
      traj.killed = true;
      traj.death_time = t;
      return traj;
    }
  }
}

void MalaDiffusion::prepare(const FieldConfig& field) {
  if (field.pinned == pattern_ && !edges_.empty()) return;
  pattern_ = field.pinned;
  free_.clear();
  edges_.clear();
  const auto& nbr = field.region.neighbor_table();
  for (std::size_t k = 0; k < field.region.size(); ++k) {
    if (field.pinned[k]) continue;
    free_.push_back(k);
    for (std::size_t j : nbr[k]) {
      const bool other_free = j != Region::npos && !field.pinned[j];
      if (other_free && j < k) continue;
      edges_.emplace_back(k, other_free ? j : Region::npos);
    }
  }
  x_.clear();
}

double MalaDiffusion::energy_gradient(const std::vector<double>& h, std::vector<double>& grad) const {
  grad.assign(h.size(), 0.0);
  double e = 0.0;
  for (auto [k, j] : edges_) {
    const PotentialValue pv = pot_->eval(h[k] - (j == Region::npos ? 0.0 : h[j]));
    e += pv.v;
    grad[k] += pv.dv;
    if (j != Region::npos) grad[j] -= pv.dv;
  }
  return e;
}

void MalaDiffusion::step(FieldConfig& field, Rng& rng) {
  prepare(field);
  if (free_.empty()) return;
  if (field.heights != x_) {
    x_ = field.heights;
    ex_ = energy_gradient(x_, gx_);
  }
  const double sd = std::sqrt(2.0 * dt_);
  y_ = x_;
  for (std::size_t k : free_) y_[k] = x_[k] - dt_ * gx_[k] + sd * normal_(rng);
  const double ey = energy_gradient(y_, gy_);
  double log_q_fwd = 0.0, log_q_bwd = 0.0;
  for (std::size_t k : free_) {
    const double f = y_[k] - x_[k] + dt_ * gx_[k];
    const double b = x_[k] - y_[k] + dt_ * gy_[k];
    log_q_fwd -= f * f;
    log_q_bwd -= b * b;
  }
  const double log_alpha = ex_ - ey + (log_q_bwd - log_q_fwd) / (4.0 * dt_);
  ++proposals_;
  if (log_alpha >= 0.0 || std::log(uniform01(rng)) < log_alpha) {
    ++accepted_;
    std::swap(x_, y_);
    std::swap(gx_, gy_);
    ex_ = ey;
    field.heights = x_;
  }
}

GaussianExactDiffusion::GaussianExactDiffusion(const Region& region, const SiteSet& A, double kappa, double dt)
    : dt_(dt) {
  for (std::size_t k = 0; k < region.size(); ++k)
    if (!A.contains(region.site(k))) free_.push_back(k);
  const auto m = static_cast<Eigen::Index>(free_.size());
  std::vector<Eigen::Index> pos(region.size(), -1);
  for (Eigen::Index a = 0; a < m; ++a) pos[free_[static_cast<std::size_t>(a)]] = a;
  Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(m, m);
  const auto& nbr = region.neighbor_table();
  for (Eigen::Index a = 0; a < m; ++a) {
    Q(a, a) = 4.0 * kappa;
    for (std::size_t j : nbr[free_[static_cast<std::size_t>(a)]])
      if (j != Region::npos && pos[j] >= 0) Q(a, pos[j]) = -kappa;
  }
  if (m == 0) return;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(Q);
  const auto& lam = eig.eigenvalues();
  const auto& V = eig.eigenvectors();
  Eigen::VectorXd decay(m), spread(m);
  for (Eigen::Index a = 0; a < m; ++a) {
    decay(a) = std::exp(-lam(a) * dt);
    spread(a) = std::sqrt(-std::expm1(-2.0 * lam(a) * dt) / lam(a));
  }
  drift_ = V * decay.asDiagonal() * V.transpose();
  noise_ = V * spread.asDiagonal() * V.transpose();
}

void GaussianExactDiffusion::step(FieldConfig& field, Rng& rng) {
  const auto m = static_cast<Eigen::Index>(free_.size());
  if (m == 0) return;
  Eigen::VectorXd phi(m), xi(m);
  for (Eigen::Index a = 0; a < m; ++a) {
    phi(a) = field.heights[free_[static_cast<std::size_t>(a)]];
    xi(a) = normal_(rng);
  }
  const Eigen::VectorXd next = drift_ * phi + noise_ * xi;
  for (Eigen::Index a = 0; a < m; ++a) field.heights[free_[static_cast<std::size_t>(a)]] = next(a);
}

void diffusion_step(FieldConfig& field, double dt, const CertifiedPotential& pot, Rng& rng, bool exact_gaussian) {
  if (!(dt > 0.0)) throw std::invalid_argument("diffusion_step: dt must be positive");
  if (exact_gaussian) {
    if (!pot.is_gaussian()) throw std::invalid_argument("diffusion_step: exact update needs the gaussian family");
    GaussianExactDiffusion(field.region, field.dry_set(), pot.family().param, dt).step(field, rng);
    return;
  }
  MalaDiffusion(pot, dt).step(field, rng);
}

OccupationResult occupation_time(const Region& region, const SiteSet& A, Site i, const std::vector<Site>& targets,
                                 const CertifiedPotential& pot, const OccupationParams& params) {
  auto is_free = [&](Site s) { return region.contains(s) && !A.contains(s); };
  if (!is_free(i)) throw std::invalid_argument("occupation_time: start site is not free");
  for (Site j : targets)
    if (!is_free(j)) throw std::invalid_argument("occupation_time: target site is not free");
  if (!(params.dt > 0.0)) throw std::invalid_argument("occupation_time: dt must be positive");
  if (!(params.horizon > 0.0)) throw std::invalid_argument("occupation_time: horizon must be positive");
  if (params.replicas < kBatches) throw std::invalid_argument("occupation_time: need at least 30 replicas");

  const std::size_t R = params.replicas;
  const std::size_t T = targets.size();
  const bool dynamic = !pot.is_gaussian();
  std::vector<double> occ(R * T, 0.0), life(R, 0.0);
  std::vector<std::uint8_t> censored(R, 0);
  std::vector<std::size_t> prop(kStreams, 0), acc(kStreams, 0);
  auto killed = [&](Site s) { return !is_free(s); };

  parallel_for(kStreams, params.threads, [&](std::size_t stream) {
    const std::size_t lo = R * stream / kStreams, hi = R * (stream + 1) / kStreams;
    if (lo == hi) return;
    std::optional<GibbsChain> chain;
    std::optional<GaussianExactDiffusion> exact;
    if (dynamic) {
      FieldConfig start(region);
      start.pin(A);
      chain.emplace(std::move(start), Pinning::disabled(), pot, make_rng(params.seed, stream, params.tag + "/field"));
      chain->sweeps(params.prerun_sweeps);
    }
    MalaDiffusion mala(pot, params.dt);
    for (std::size_t r = lo; r < hi; ++r) {
      Rng walk_rng = make_rng(params.seed, r, params.tag + "/walk");
      Rng diff_rng = make_rng(params.seed, r, params.tag + "/diffusion");
      FieldConfig field(region);
      field.pin(A);
      if (dynamic) {
        chain->sweeps(params.between_sweeps);
        field = chain->config();
      }
      const FieldRates rates(field, pot);
      const bool dump = params.dump && r < params.dump_limit;
      WalkTrajectory traj;
      if (dump) traj.jumps.push_back({0.0, i});

      Site x = i;
      double t = 0.0, next_update = params.dt;
      for (;;) {
        double tc = t + exponential(walk_rng, 4.0 * rates.c_V());
        const bool censor = tc >= params.horizon;
        if (censor) tc = params.horizon;
        if (dynamic)
          while (next_update <= tc) {
            mala.step(field, diff_rng);
            next_update += params.dt;
          }
        for (std::size_t k = 0; k < T; ++k)
          if (x == targets[k]) occ[r * T + k] += tc - t;
        t = tc;
        if (censor) {
          censored[r] = 1;
          break;
        }
        const int dir = std::min(3, static_cast<int>(4.0 * uniform01(walk_rng)));
        const double a = rates.rate(x, dir, t);
        check_rate(a, rates.c_V());
        if (!(uniform01(walk_rng) * rates.c_V() < a)) continue;
        x = neighbors(x)[static_cast<std::size_t>(dir)];
        if (dump) traj.jumps.push_back({t, x});
        if (killed(x)) break;
      }
      life[r] = t;
      if (dump) {
        traj.death_time = t;
        traj.killed = !censored[r];
        params.dump(r, traj);
      }
    }
    prop[stream] = mala.proposals();
    acc[stream] = mala.accepted();
  });

  OccupationResult res;
  res.prerun_sweeps = dynamic ? params.prerun_sweeps : 0;
  std::vector<double> series(R);
  for (std::size_t k = 0; k < T; ++k) {
    for (std::size_t r = 0; r < R; ++r) series[r] = occ[r * T + k];
    const Estimate e = batch_means(series);
    res.mean.push_back(e.value);
    res.se.push_back(e.se);
  }
  std::size_t nc = 0;
  double lt = 0.0;
  for (std::size_t r = 0; r < R; ++r) {
    nc += censored[r];
    lt += life[r];
  }
  res.censored_fraction = static_cast<double>(nc) / static_cast<double>(R);
  res.censor_warning = res.censored_fraction > 0.10;
  res.mean_lifetime = lt / static_cast<double>(R);
  if (dynamic) {
    double a = 0.0, p = 0.0;
    for (std::size_t s = 0; s < kStreams; ++s) {
      a += static_cast<double>(acc[s]);
      p += static_cast<double>(prop[s]);
    }
    res.mala_acceptance = p > 0 ? a / p : 1.0;
  }
  return res;
}

double hitting_bound(double c_V, int steps) { return std::pow(1.0 / (3.0 * c_V * c_V + 1.0), steps); }

HittingResult hitting_probability(Site i, Site k, Site center, int l, const RateField& rates, std::size_t replicas,
                                  Rng& rng) {
  auto inside = [&](Site s) { return std::max(std::abs(s.x - center.x), std::abs(s.y - center.y)) <= l; };
  if (!inside(i) || !inside(k)) throw std::invalid_argument("hitting_probability: sites must lie in the box");
  if (replicas == 0) throw std::invalid_argument("hitting_probability: need at least one replica");
  HittingResult res;
  res.steps = std::abs(i.x - k.x) + std::abs(i.y - k.y);
  res.bound = hitting_bound(rates.c_V(), res.steps);
  std::size_t hits = 0;
  for (std::size_t r = 0; r < replicas; ++r) {
    Site x = i;
    double t = 0.0;
    while (!(x == k) && inside(x)) {
      const WalkEvent e = walk_step(x, t, rates, rng);
      t = e.time;
      x = e.site;
    }
    hits += x == k;
  }
  const double n = static_cast<double>(replicas);
  res.p = static_cast<double>(hits) / n;
  res.se = std::sqrt(res.p * (1.0 - res.p) / n);
  return res;
}

double dirty_block_survival_bound(double c_V, int l, int n_blocks) {
  return std::pow(1.0 - hitting_bound(c_V, 2 * l), n_blocks);
}

std::vector<std::pair<double, double>> dirty_stopping_times(const WalkTrajectory& traj, const SiteSet& A, int l) {
  std::vector<std::pair<double, double>> out;
  if (A.empty() || traj.jumps.empty()) return out;
  SiteSet dirty;
  for (Site a : A) dirty.insert(block_of(a, l).center);
  std::size_t n = traj.jumps.size();
  if (traj.killed && n > 1) --n;  // the walk is dead on arrival at the last site
  bool inside = false;
  Site current{};
  for (std::size_t k = 0; k < n; ++k) {
    const Site b = block_of(traj.jumps[k].site, l).center;
    const double t = traj.jumps[k].time;
    if (inside && !(b == current)) {
      out.back().second = t;
      inside = false;
    }
    if (!inside && dirty.contains(b)) {
      out.emplace_back(t, traj.death_time);
      current = b;
      inside = true;
    }
  }
  return out;
}

}  // namespace pinning
