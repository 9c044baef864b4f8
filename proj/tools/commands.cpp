#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>

#include "pinning/estimators.hpp"
#include "pinning/gaussian_oracle.hpp"
#include "pinning/gibbs.hpp"
#include "pinning/hswalk.hpp"
#include "pinning/random.hpp"
#include "pinning/renorm.hpp"

#ifndef PINSIM_VERSION
#define PINSIM_VERSION "0.0.0"
#endif

namespace pinsim {

namespace fs = std::filesystem;
using namespace pinning;

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Non-finite values become null so the JSON stays valid.
Json jnum(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

class Csv {
 public:
  explicit Csv(const std::vector<std::string>& header) { row(header); }
  void row(const std::vector<std::string>& cells) {
    for (std::size_t c = 0; c < cells.size(); ++c) text_ << (c ? "," : "") << cells[c];
    text_ << '\n';
  }
  std::string str() const { return text_.str(); }

 private:
  std::ostringstream text_;
};

struct Context {
  ExperimentConfig cfg;
  CertifiedPotential pot;
  Region box;
  Pinning pinning;
  unsigned threads;
  bool dump;
  fs::path dir;
  std::vector<std::string> files;
  std::vector<std::string> warnings;

  void write(const std::string& name, const std::string& content) {
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + (dir / name).string());
    out << content;
    files.push_back(name);
  }
  void csv(const std::string& name, const Csv& table) {
    if (cfg.outputs.csv()) write(name, table.str());
  }
  void json(const std::string& name, const Json& j) {
    if (cfg.outputs.json()) write(name, j.dump(2) + "\n");
  }
  void warn(const std::string& w) {
    warnings.push_back(w);
    std::cerr << "warning: " << w << '\n';
  }
  SamplerParams sampler(const std::string& tag) const {
    SamplerParams p;
    p.sweeps = cfg.mcmc.sweeps;
    p.burn_in = cfg.mcmc.burn_in;
    p.thin = cfg.mcmc.thin;
    p.seed = cfg.mcmc.seed;
    p.replicas = cfg.mcmc.replicas;
    p.threads = threads;
    p.tag = tag;
    return p;
  }
};

Pinning pinning_of(const std::optional<double>& J) { return J ? Pinning::strength(*J) : Pinning::disabled(); }

std::string j_label(const std::optional<double>& J) { return J ? num(*J) : "disabled"; }

// ---------------------------------------------------------------- sample

void cmd_sample(Context& ctx) {
  struct Row {
    std::size_t sweep;
    double dry_fraction;
    double phi0;
  };
  struct Recorder {
    std::vector<Row> rows;
    void operator()(std::size_t s, const FieldConfig& c) {
      rows.push_back({s, static_cast<double>(c.dry_count()) / static_cast<double>(c.region.size()), c.height({0, 0})});
    }
  };
  const auto params = ctx.sampler("sample");
  const auto recs =
      run_chain<Recorder>(params, ctx.box, ctx.pinning, ctx.pot, [](std::size_t) { return Recorder{}; });

  Csv csv({"replica", "sweep", "dry_fraction", "phi0"});
  std::vector<double> dry, phi, phi2;
  for (std::size_t r = 0; r < recs.size(); ++r)
    for (const auto& row : recs[r].rows) {
      csv.row({std::to_string(r), std::to_string(row.sweep), num(row.dry_fraction), num(row.phi0)});
      dry.push_back(row.dry_fraction);
      phi.push_back(row.phi0);
      phi2.push_back(row.phi0 * row.phi0);
    }
  ctx.csv("stream.csv", csv);

  Json s;
  s["snapshots"] = dry.size();
  if (dry.size() >= kBatches) {
    const auto d = batch_means(dry);
    const auto p = batch_means(phi);
    const auto p2 = batch_means(phi2);
    s["dry_fraction"] = {{"mean", jnum(d.value)}, {"se", jnum(d.se)}};
    s["phi0"] = {{"mean", jnum(p.value)}, {"se", jnum(p.se)}};
    s["phi0_sq"] = {{"mean", jnum(p2.value)}, {"se", jnum(p2.se)}};
    s["tau_int_phi0"] = jnum(integrated_autocorr_time(phi));
  } else {
    ctx.warn("fewer than 30 snapshots: no batch-means summary");
  }
  ctx.json("summary.json", s);
}

// ---------------------------------------------------------------- covariance

CovCurve covariance_curve(Context& ctx, const Pinning& pinning, const std::string& tag) {
  const auto& a = ctx.cfg.analysis;
  const int central = a.central.value_or(ctx.cfg.N / 2);
  const auto params = ctx.sampler(tag);
  const std::size_t spr = params.snapshots_per_replica();
  const std::size_t total = spr * params.replicas;
  const int reach = static_cast<int>(std::ceil(a.d_max));
  if (reach > 2 * central)
    throw ConfigError("config key 'analysis.d_max' must not exceed twice the central window half-width (" +
                      std::to_string(central) + ")");
  const auto displacements = axis_and_diagonal(reach);

  struct Acc {
    TranslationCovariance tc;
    std::size_t next;
    void operator()(std::size_t, const FieldConfig& c) { tc.observe(next++, c); }
  };
  auto accs = run_chain<Acc>(params, ctx.box, pinning, ctx.pot, [&](std::size_t r) {
    return Acc{TranslationCovariance(ctx.box, central, displacements, total), r * spr};
  });
  for (std::size_t r = 1; r < accs.size(); ++r) accs[0].tc.merge(accs[r].tc);
  return accs[0].tc.curve(parse_norm(a.norm));
}

Csv covariance_csv(const CovCurve& curve) {
  Csv csv({"dx", "dy", "distance", "cov", "se"});
  for (const auto& p : curve.points)
    csv.row({std::to_string(p.displacement.x), std::to_string(p.displacement.y), num(p.distance), num(p.cov),
             num(p.se)});
  return csv;
}

void cmd_covariance(Context& ctx) { ctx.csv("covariance.csv", covariance_csv(covariance_curve(ctx, ctx.pinning, "covariance"))); }

// ---------------------------------------------------------------- mass

std::optional<MassFit> try_fit(Context& ctx, const CovCurve& curve, const std::string& label) {
  try {
    auto fit = fit_mass(curve, ctx.cfg.analysis.d_min, ctx.cfg.analysis.d_max);
    if (fit.non_decaying) ctx.warn("J=" + label + ": fitted covariance does not decay");
    if (fit.n_excluded) ctx.warn("J=" + label + ": " + std::to_string(fit.n_excluded) + " nonpositive covariance estimates excluded from the fit");
    return fit;
  } catch (const std::invalid_argument& e) {
    ctx.warn("J=" + label + ": no mass fit (" + e.what() + ")");
    return std::nullopt;
  }
}

std::vector<std::string> mass_row(const std::optional<double>& J, const std::optional<MassFit>& fit) {
  const std::string jl = J ? num(*J) : "";
  if (!fit) return {jl, "nan", "nan", "nan", "nan", "0", "0"};
  return {jl, num(fit->m), num(fit->ci_lo), num(fit->ci_hi), num(fit->r2), std::to_string(fit->n_used),
          std::to_string(fit->n_excluded)};
}

const std::vector<std::string> kMassHeader{"J", "m", "ci_lo", "ci_hi", "r2", "n_points_used", "n_excluded"};

Json fit_json(const std::optional<MassFit>& fit) {
  if (!fit) return nullptr;
  return {{"m", jnum(fit->m)},         {"se", jnum(fit->se)},         {"ci_lo", jnum(fit->ci_lo)},
          {"ci_hi", jnum(fit->ci_hi)}, {"r2", jnum(fit->r2)},         {"intercept", jnum(fit->intercept)},
          {"n_points_used", fit->n_used}, {"n_excluded", fit->n_excluded}, {"non_decaying", fit->non_decaying}};
}

void cmd_mass(Context& ctx) {
  const auto curve = covariance_curve(ctx, ctx.pinning, "mass");
  ctx.csv("covariance.csv", covariance_csv(curve));
  const auto fit = try_fit(ctx, curve, j_label(ctx.cfg.J));
  Csv csv(kMassHeader);
  csv.row(mass_row(ctx.cfg.J, fit));
  ctx.csv("mass.csv", csv);
  Json j = {{"J", ctx.cfg.J ? Json(*ctx.cfg.J) : Json(nullptr)},
            {"d_min", ctx.cfg.analysis.d_min},
            {"d_max", ctx.cfg.analysis.d_max},
            {"fit", fit_json(fit)}};
  ctx.json("mass.json", j);
}

void cmd_mass_scan(Context& ctx) {
  Csv csv(kMassHeader);
  Json rows = Json::array();
  for (double J : ctx.cfg.analysis.J_list) {
    const auto curve = covariance_curve(ctx, Pinning::strength(J), "mass-scan/J=" + num(J));
    const auto fit = try_fit(ctx, curve, num(J));
    csv.row(mass_row(J, fit));
    rows.push_back({{"J", J}, {"fit", fit_json(fit)}});
  }
  ctx.csv("mass.csv", csv);
  ctx.json("mass_scan.json", {{"rows", rows}});
}

// ---------------------------------------------------------------- dryset-stats

void cmd_dryset_stats(Context& ctx) {
  const auto& rn = ctx.cfg.renorm;
  const auto params = ctx.sampler("dryset-stats");
  const std::size_t spr = params.snapshots_per_replica();
  const std::size_t total = spr * params.replicas;
  struct Acc {
    CleanProbability cp;
    std::size_t next;
    void operator()(std::size_t, const FieldConfig& c) { cp.observe(next++, c); }
  };
  auto accs = run_chain<Acc>(params, ctx.box, ctx.pinning, ctx.pot, [&](std::size_t r) {
    return Acc{CleanProbability(rn.l, rn.epsilon, rn.r_list, total), r * spr};
  });
  for (std::size_t r = 1; r < accs.size(); ++r) accs[0].cp.merge(accs[r].cp);
  const auto& cp = accs[0].cp;
  const auto curve = cp.curve();

  Csv csv({"r", "p_clean", "se", "n_samples"});
  for (const auto& row : curve.rows)
    csv.row({std::to_string(row.r), num(row.p_clean), num(row.se), std::to_string(row.n_samples)});
  ctx.csv("cleanprob.csv", csv);

  const int s = 2 * rn.l + 1;
  Csv occ({"u", "v", "x", "y", "dirty_fraction"});
  for (const auto& [u, f] : cp.block_occupancy())
    occ.row({std::to_string(u.x), std::to_string(u.y), std::to_string(u.x * s), std::to_string(u.y * s), num(f)});
  ctx.csv("occupancy.csv", occ);

  if (curve.degenerate_all_clean) ctx.warn("every sample is clean at every radius");
  if (curve.degenerate_all_dirty) ctx.warn("no sample is clean at any radius");
  if (!curve.slope_defined) ctx.warn("log-linear slope undefined (fewer than two radii with p_clean > 0)");
  if (curve.exceeds_box) ctx.warn("some radius reaches blocks outside the box; they count as dirty");
  bool monotone = true;
  for (std::size_t k = 1; k < curve.rows.size(); ++k) {
    const auto &a = curve.rows[k - 1], &b = curve.rows[k];
    if (b.p_clean > a.p_clean + 2 * std::hypot(a.se, b.se)) monotone = false;
  }
  ctx.json("cleanprob.json", {{"l", rn.l},
                              {"epsilon", rn.epsilon},
                              {"slope", curve.slope_defined ? jnum(curve.slope) : Json(nullptr)},
                              {"c2", curve.slope_defined ? jnum(curve.c2) : Json(nullptr)},
                              {"nonincreasing_within_2se", monotone},
                              {"degenerate_all_clean", curve.degenerate_all_clean},
                              {"degenerate_all_dirty", curve.degenerate_all_dirty},
                              {"exceeds_box", curve.exceeds_box}});
}

// ---------------------------------------------------------------- hs-verify

void cmd_hs_verify(Context& ctx) {
  const auto& h = ctx.cfg.hswalk;
  const SiteSet A(h.dry_set.begin(), h.dry_set.end());
  OccupationParams p;
  p.dt = h.dt;
  p.horizon = h.horizon;
  p.replicas = h.replicas;
  p.prerun_sweeps = h.prerun_sweeps;
  p.between_sweeps = h.between_sweeps;
  p.seed = ctx.cfg.mcmc.seed;
  p.tag = "hs-verify";
  p.threads = ctx.threads;
  std::vector<std::string> dumps;
  if (ctx.dump) {
    p.dump_limit = std::min<std::size_t>(1000, h.replicas);
    dumps.resize(p.dump_limit);
    p.dump = [&dumps](std::size_t r, const WalkTrajectory& t) {
      std::ostringstream out;
      t.write_jsonl(out, r);
      dumps[r] = out.str();
    };
  }
  const auto occ = occupation_time(ctx.box, A, h.start, h.targets, ctx.pot, p);

  std::vector<double> ref(h.targets.size()), ref_se(h.targets.size(), 0.0);
  std::string reference;
  if (ctx.pot.is_gaussian()) {
    reference = "green";
    const auto G = green(ctx.box, A, ctx.pot.family().param);
    for (std::size_t t = 0; t < h.targets.size(); ++t)
      ref[t] = G(static_cast<Eigen::Index>(ctx.box.index(h.start)), static_cast<Eigen::Index>(ctx.box.index(h.targets[t])));
  } else {
    reference = "gibbs";
    const auto params = ctx.sampler("hs-verify/reference");
    const std::size_t i0 = ctx.box.index(h.start);
    std::vector<std::size_t> idx{i0};
    for (Site t : h.targets) idx.push_back(ctx.box.index(t));
    struct Rec {
      std::vector<std::size_t> idx;
      SampleMatrix rows;
      void operator()(std::size_t, const FieldConfig& c) {
        std::vector<double> v;
        for (auto k : idx) v.push_back(c.heights[k]);
        rows.push_back(std::move(v));
      }
    };
    auto recs = run_chain<Rec>(params, ctx.box, Pinning::disabled(), ctx.pot, [&](std::size_t) { return Rec{idx, {}}; }, A);
    SampleMatrix all;
    for (auto& r : recs)
      for (auto& row : r.rows) all.push_back(std::move(row));
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t t = 0; t < h.targets.size(); ++t) pairs.emplace_back(0, t + 1);
    const auto est = covariance(all, pairs);
    for (std::size_t t = 0; t < h.targets.size(); ++t) {
      ref[t] = est[t].value;
      ref_se[t] = est[t].se;
    }
  }

  Csv csv({"i_x", "i_y", "j_x", "j_y", "occupation", "se", "reference", "reference_se", "z"});
  Json rows = Json::array();
  for (std::size_t t = 0; t < h.targets.size(); ++t) {
    const double comb = std::hypot(occ.se[t], ref_se[t]);
    const double z = comb > 0 ? (occ.mean[t] - ref[t]) / comb : std::numeric_limits<double>::quiet_NaN();
    csv.row({std::to_string(h.start.x), std::to_string(h.start.y), std::to_string(h.targets[t].x),
             std::to_string(h.targets[t].y), num(occ.mean[t]), num(occ.se[t]), num(ref[t]), num(ref_se[t]), num(z)});
    rows.push_back({{"target", {h.targets[t].x, h.targets[t].y}},
                    {"occupation", jnum(occ.mean[t])},
                    {"se", jnum(occ.se[t])},
                    {"reference", jnum(ref[t])},
                    {"reference_se", jnum(ref_se[t])},
                    {"z", jnum(z)}});
  }
  ctx.csv("hs_verify.csv", csv);
  if (occ.censor_warning) ctx.warn("censored fraction " + num(occ.censored_fraction) + " exceeds 10%");
  if (!ctx.pot.is_gaussian() && (occ.mala_acceptance < 0.6 || occ.mala_acceptance > 0.9))
    ctx.warn("MALA acceptance " + num(occ.mala_acceptance) + " outside the 0.6-0.9 target");
  ctx.json("hs_verify.json", {{"reference", reference},
                              {"rows", rows},
                              {"censored_fraction", occ.censored_fraction},
                              {"mala_acceptance", occ.mala_acceptance},
                              {"prerun_sweeps", occ.prerun_sweeps},
                              {"mean_lifetime", occ.mean_lifetime},
                              {"dt", h.dt}});
  if (ctx.dump) {
    std::string all;
    for (const auto& d : dumps) all += d;
    ctx.write("trajectories.jsonl", all);
  }
}

// ---------------------------------------------------------------- hit-bound

Site random_target(int d, int l, Rng& rng) {
  std::vector<Site> cands;
  for (int x = -l; x <= l; ++x)
    for (int y = -l; y <= l; ++y)
      if (std::abs(x) + std::abs(y) == d) cands.push_back({x, y});
  if (cands.empty()) throw std::runtime_error("no target at distance " + std::to_string(d));
  return cands[static_cast<std::size_t>(uniform01(rng) * static_cast<double>(cands.size()))];
}

void cmd_hit_bound(Context& ctx) {
  const auto& h = ctx.cfg.hswalk;
  const std::uint64_t seed = ctx.cfg.mcmc.seed;
  struct Cell {
    Site k;
    HittingResult res;
  };
  std::vector<std::vector<Cell>> cells(h.fields);
  parallel_for(h.fields, ctx.threads, [&](std::size_t f) {
    const SyntheticRates rates(stream_seed(seed, f, "hit-bound/field"), h.synthetic_c_V);
    auto rng = make_rng(seed, f, "hit-bound/walk");
    for (int d : h.distances) {
      const Site k = random_target(d, h.box_l, rng);
      cells[f].push_back({k, hitting_probability({0, 0}, k, {0, 0}, h.box_l, rates, h.hit_replicas, rng)});
    }
  });
  Csv csv({"field", "distance", "k_x", "k_y", "p", "se", "bound", "ok"});
  std::size_t violations = 0;
  for (std::size_t f = 0; f < h.fields; ++f)
    for (std::size_t c = 0; c < cells[f].size(); ++c) {
      const auto& [k, r] = cells[f][c];
      const bool ok = r.p + 3 * r.se >= r.bound;
      violations += !ok;
      csv.row({std::to_string(f), std::to_string(h.distances[c]), std::to_string(k.x), std::to_string(k.y), num(r.p),
               num(r.se), num(r.bound), ok ? "1" : "0"});
    }
  ctx.csv("hit_bound.csv", csv);
  if (violations) ctx.warn(std::to_string(violations) + " hitting estimates fall below the per-step bound");

  // Survival through dirty blocks: every block of the renormalized lattice
  // holds a dry site at its center.
  const int l = ctx.cfg.renorm.l;
  const int s = 2 * l + 1;
  auto dry = [s](Site x) { return x.x % s == 0 && x.y % s == 0; };
  const SyntheticRates rates(stream_seed(seed, 0, "hit-bound/survival-field"), h.synthetic_c_V);
  const std::size_t walks = h.hit_replicas;
  constexpr int kMaxBlocks = 12;
  std::vector<int> survived(walks);
  parallel_for(walks, ctx.threads, [&](std::size_t w) {
    auto rng = make_rng(seed, w, "hit-bound/survival");
    const auto traj = run_walk({1, 0}, rates, dry, h.horizon, rng);
    SiteSet A;
    for (const auto& e : traj.jumps) A.insert(block_of(e.site, l).center);
    const auto times = dirty_stopping_times(traj, A, l);
    const int exits = static_cast<int>(times.size()) - (traj.killed ? 1 : 0);
    survived[w] = std::max(0, exits);
  });
  Csv surv({"n", "empirical", "bound"});
  for (int n = 0; n <= kMaxBlocks; ++n) {
    const double emp =
        static_cast<double>(std::count_if(survived.begin(), survived.end(), [n](int e) { return e >= n; })) /
        static_cast<double>(walks);
    surv.row({std::to_string(n), num(emp), num(dirty_block_survival_bound(h.synthetic_c_V, l, n))});
  }
  ctx.csv("survival.csv", surv);
  ctx.json("hit_bound.json", {{"fields", h.fields},
                              {"replicas_per_estimate", h.hit_replicas},
                              {"c_V", h.synthetic_c_V},
                              {"violations", violations}});
}

// ---------------------------------------------------------------- enumerate

void cmd_enumerate(Context& ctx) {
  if (!ctx.pot.is_gaussian()) throw ConfigError("config key 'model.family': enumerate requires the gaussian family");
  if (!ctx.cfg.J) throw ConfigError("config key 'pinning': enumerate requires a pinning strength J");
  const auto& e = ctx.cfg.enumeration;
  const Region region = e.region ? Region((*e.region)[0], (*e.region)[1], (*e.region)[2], (*e.region)[3]) : ctx.box;
  EnumerationOptions opts;
  opts.cap = e.cap;
  opts.threads = ctx.threads;
  DryWeightTable table;
  try {
    table = enumerate_rho(region, *ctx.cfg.J, ctx.pot.family().param, opts);
  } catch (const std::invalid_argument& ex) {
    throw ConfigError(std::string("config key 'enumeration': ") + ex.what());
  }
  std::ostringstream t;
  write_table_csv(table, t);
  if (ctx.cfg.outputs.csv()) ctx.write("enumerate.csv", t.str());

  const auto scan = clean_mass_bound_scan(table, snake_family(region));
  Csv csv({"size", "neg_log_clean"});
  for (const auto& r : scan.rows) csv.row({std::to_string(r.size), num(r.neg_log_clean)});
  ctx.csv("clean_mass_scan.csv", csv);
  if (!scan.nondecreasing) ctx.warn("-log P(A cap B = empty) decreases along the nested family");
  if (!(scan.slope > 0)) ctx.warn("fitted clean-mass slope is not positive");

  const Site c{region.x0() + region.width() / 2, region.y0() + region.height() / 2};
  ctx.json("enumerate.json", {{"region", {region.x0(), region.y0(), region.width(), region.height()}},
                              {"J", *ctx.cfg.J},
                              {"kappa", ctx.pot.family().param},
                              {"dry_sets", table.size()},
                              {"mean_dry_size", jnum(table.mean_dry_size())},
                              {"center", {c.x, c.y}},
                              {"var_center", jnum(exact_covariance(table, c, c))},
                              {"slope", jnum(scan.slope)},
                              {"nondecreasing", scan.nondecreasing}});
}

// ---------------------------------------------------------------- tuple-check

void cmd_tuple_check(Context& ctx) {
  const auto& tc = ctx.cfg.tuples;
  const Region region = Region::box(tc.N);
  const Norm norm = parse_norm(tc.norm);
  struct Outcome {
    std::size_t a, b, comps;
    long sum_k;
    bool admissible, size_bound, maximal;
  };
  std::vector<Outcome> out(tc.instances);
  parallel_for(tc.instances, ctx.threads, [&](std::size_t n) {
    auto rng = make_rng(ctx.cfg.mcmc.seed, n, "tuple-check");
    SiteSet A, B;
    for (Site s : region.sites()) {
      if (uniform01(rng) < tc.p_A)
        A.insert(s);
      else if (uniform01(rng) < tc.p_B)
        B.insert(s);
    }
    // zero boundary condition: the exterior ring of the box is dry
    const auto ring = region.exterior_boundary();
    A.insert(ring.begin(), ring.end());
    TupleOptions opts;
    opts.norm = norm;
    const auto t = admissible_tuple(A, B, opts);
    long sum = 0;
    for (int k : t.k) sum += k;
    out[n] = {A.size() - ring.size(), B.size(), t.components.size(), sum, is_admissible(t, norm), satisfies_size_bound(t, norm),
              is_maximal_bruteforce(A, t, opts)};
  });
  Csv csv({"instance", "size_A", "size_B", "components", "sum_k", "admissible", "size_bound", "maximal"});
  std::size_t failures = 0;
  for (std::size_t n = 0; n < out.size(); ++n) {
    const auto& o = out[n];
    failures += !(o.admissible && o.size_bound && o.maximal);
    csv.row({std::to_string(n), std::to_string(o.a), std::to_string(o.b), std::to_string(o.comps),
             std::to_string(o.sum_k), o.admissible ? "1" : "0", o.size_bound ? "1" : "0", o.maximal ? "1" : "0"});
  }
  ctx.csv("tuples.csv", csv);
  if (failures) ctx.warn(std::to_string(failures) + " tuple instances fail a property check");
  ctx.json("tuples.json", {{"instances", tc.instances}, {"norm", tc.norm}, {"failures", failures}});
}

// ---------------------------------------------------------------- deloc-scan

void cmd_deloc_scan(Context& ctx) {
  const auto& Ns = ctx.cfg.analysis.N_list;
  const auto rows = variance_growth(Ns, ctx.pot, ctx.pinning, ctx.sampler("deloc-scan"));
  Csv csv({"N", "var", "se", "exact"});
  std::vector<double> logN, var;
  bool increasing = true;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto& r = rows[k];
    csv.row({std::to_string(r.N), num(r.var), num(r.se), r.exact ? "1" : "0"});
    if (r.N > 0) {
      logN.push_back(std::log(static_cast<double>(r.N)));
      var.push_back(r.var);
    }
    if (k && !(r.var > rows[k - 1].var)) increasing = false;
  }
  ctx.csv("deloc.csv", csv);
  const double slope = logN.size() >= 2 ? ls_slope(logN, var) : std::numeric_limits<double>::quiet_NaN();
  ctx.json("deloc.json", {{"pinning", j_label(ctx.cfg.J)}, {"strictly_increasing", increasing}, {"slope_log_N", jnum(slope)}});
}

using Handler = void (*)(Context&);

const std::map<std::string, Handler>& handlers() {
  static const std::map<std::string, Handler> h{
      {"sample", cmd_sample},           {"covariance", cmd_covariance},   {"mass", cmd_mass},
      {"mass-scan", cmd_mass_scan},     {"dryset-stats", cmd_dryset_stats}, {"hs-verify", cmd_hs_verify},
      {"hit-bound", cmd_hit_bound},     {"enumerate", cmd_enumerate},     {"tuple-check", cmd_tuple_check},
      {"deloc-scan", cmd_deloc_scan}};
  return h;
}

fs::path output_dir(const RunOptions& opts, const ExperimentConfig& cfg) {
  if (opts.out_dir) return *opts.out_dir;
  if (const char* env = std::getenv("PINSIM_OUT_DIR"); env && *env) return env;
  return cfg.outputs.directory;
}

}  // namespace

int run(const RunOptions& opts) {
  try {
    const auto it = handlers().find(opts.subcommand);
    if (it == handlers().end()) throw ConfigError("unknown subcommand '" + opts.subcommand + "'");
    ExperimentConfig cfg = opts.config_path ? load_config(*opts.config_path) : ExperimentConfig{};
    if (opts.seed) cfg.mcmc.seed = *opts.seed;
    validate(cfg);
    if (opts.threads < 1) throw ConfigError("--threads must be >= 1");

    Context ctx{cfg,  CertifiedPotential(cfg.model.resolved()), Region::box(cfg.N), pinning_of(cfg.J), opts.threads,
                opts.dump_trajectories, output_dir(opts, cfg), {}, {}};
    fs::create_directories(ctx.dir);
    it->second(ctx);

    Json manifest = {{"tool", "pinsim"},
                     {"version", PINSIM_VERSION},
                     {"subcommand", opts.subcommand},
                     {"seed", cfg.mcmc.seed},
                     {"config_hash", cfg.hash()},
                     {"config", cfg.to_json()},
                     {"outputs", ctx.files},
                     {"warnings", ctx.warnings}};
    std::ofstream(ctx.dir / "manifest.json", std::ios::binary) << manifest.dump(2) << '\n';
    return kOk;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntime;
  }
}

}  // namespace pinsim
