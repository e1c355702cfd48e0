#include "bvm/harness.hpp"

#include "bvm/distributions.hpp"
#include "bvm/linalg.hpp"
#include "bvm/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace bvm {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Fixed offsets keep the audit and lambda streams apart from the replication streams.
constexpr std::uint64_t kAuditSalt = 0xa0d17;
constexpr std::uint64_t kLambdaSalt = 0x1a3bd;

SearchPlan plan_of(const AuditSpec& a) {
  SearchPlan plan;
  plan.directions = a.directions;
  plan.radii = a.radii;
  plan.polish_steps = a.polish_steps;
  return plan;
}

GeometryOptions geometry_options(const GeometrySpec& s) {
  GeometryOptions g;
  g.x_n = s.x_n;
  g.r0 = s.r0;
  g.normalization = s.normalization;
  return g;
}

AuditOptions audit_options(const ExperimentConfig& cfg, int threads) {
  AuditOptions a;
  a.plan = plan_of(cfg.audit);
  a.mc_budget = cfg.audit.mc_budget;
  a.seed = cfg.seed ^ kAuditSalt;
  a.lambda_points = cfg.audit.lambda_points;
  a.threads = threads;
  return a;
}

ChainConfig chain_config(const PosteriorSpec& s) {
  ChainConfig c;
  c.draws = s.draws;
  c.burn_in = s.burn_in;
  c.chains = s.chains;
  c.initial_scale = s.initial_scale;
  c.target_accept = s.target_accept;
  return c;
}

bool use_exact(const ExperimentConfig& cfg, const QuasiModel& m, const Prior& prior) {
  const bool conjugate = (m.family() == Family::gaussian_mean || m.family() == Family::gaussian_linear) &&
                         prior.kind != PriorKind::custom;
  switch (cfg.posterior.mode) {
    case PosteriorMode::exact:
      if (!conjugate) throw UnsupportedError("posterior.mode = exact needs a Gaussian family");
      return true;
    case PosteriorMode::mcmc: return false;
    case PosteriorMode::automatic: return conjugate;
  }
  return conjugate;
}

std::vector<double> coronary_xs(const ExperimentConfig& cfg, Eigen::Index p) {
  if (!cfg.metrics.coronary_x.empty()) return cfg.metrics.coronary_x;
  const double pd = static_cast<double>(p);
  std::vector<double> xs{std::min(4.0, pd / 2.0), pd / 8.0};
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  return xs;
}

Vector clip_to_box(Vector x, const Box& box) {
  for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = std::clamp(x[i], box.lo[i], box.hi[i]);
  return x;
}

// Posterior-side part of one replication, shared by the exact and sampled paths.
template <typename Post>
void posterior_metrics(ReplicationRecord& rec, const Post& post, const PosteriorSummary& summary,
                       const QuasiModel& m, const LocalGeometry& g, const ScoreState& s,
                       const std::optional<BracketPair>& pair, const ExperimentConfig& cfg,
                       const std::vector<Vector>& lambdas) {
  const Eigen::Index p = g.p();
  BvmReport& b = rec.bvm;
  b.mean_disc = mean_discrepancy(summary, s, g);
  b.mean_disc_restricted = std::isfinite(summary.restricted_mean.sum()) ? mean_discrepancy(summary, s, g, true) : kNaN;
  const CovDiscrepancy cd = cov_discrepancy(summary, g);
  b.cov_disc_op = cd.op_norm;
  b.cov_disc_tr = cd.trace_form;
  b.flags.cov_projected = cd.projected;
  b.cov_disc_op_restricted =
      std::isfinite(summary.restricted_cov.sum()) ? cov_discrepancy(summary, g, true).op_norm : kNaN;

  const std::vector<Estimate> mgf = posterior_mgf(post, g, s, lambdas);
  const MgfDiscrepancy md = mgf_discrepancy(mgf, lambdas);
  b.mgf_disc = md.value;
  b.mgf_argmax = lambdas.empty() ? Vector() : lambdas[md.argmax];
  if (rec.index == 0) {
    rec.lambdas = lambdas;
    rec.log_mgf = mgf;
  }

  const std::vector<ProbeSet> probes = default_probe_sets(p);
  std::vector<Estimate> measured;
  for (const ProbeSet& pr : probes) measured.push_back(set_probability(post, g, s, pr.set));
  b.prob_disc = 0.0;
  for (std::size_t i = 0; i < probes.size(); ++i)
    b.prob_disc = std::max(b.prob_disc, std::abs(measured[i].value - probes[i].set.gaussian_probability()));
  if (b.budget) {
    b.probes = prob_sandwich_check(probes, measured, *b.budget, g, cfg.metrics.slack);
    rec.coronary = coronary_check(post, g, s, *pair, *b.budget, coronary_xs(cfg, p));
  } else {
    for (std::size_t i = 0; i < probes.size(); ++i) {
      ProbRecord r;
      r.label = probes[i].label;
      r.measured = measured[i].value;
      r.measured_se = measured[i].se;
      r.gaussian = probes[i].set.gaussian_probability();
      r.upper = kNaN;
      r.lower = kNaN;
      b.probes.push_back(r);
    }
  }

  const double z = credible_threshold(p, cfg.credible.alpha);
  for (CredibleKind kind : cfg.credible.kinds) {
    CredibleSet set = kind == CredibleKind::oracle      ? oracle_set(g, s, z)
                      : kind == CredibleKind::posterior ? posterior_set(summary, z)
                                                        : plugin_set(m, summary, z);
    set = with_alpha(set, cfg.credible.alpha);
    const Estimate mass = posterior_mass(set, post, g, s);
    rec.credible.push_back({kind, z, mass.value, mass.se, set.contains(g.theta_star), set.projected});
  }

  // noise scales of the headline metrics (zero in closed form)
  if (!summary.exact) {
    const Vector se_std = (g.d0.root() * summary.mean_se.asDiagonal()).colwise().norm().transpose();
    const double tr = se_std.squaredNorm();
    rec.noise.mean_disc = tr + 2.0 * std::sqrt(b.mean_disc * tr);
    const double ess = std::max(summary.ess, 1.0);
    rec.noise.cov_disc_op = std::sqrt(2.0 * static_cast<double>(p) / ess) * (1.0 + b.cov_disc_op);
    rec.noise.mgf_disc = md.max_se;
  }
}

ReplicationRecord run_replication(std::size_t i, const ExperimentConfig& cfg, const QuasiModel& m,
                                  const TrueProcess& truth, const LocalGeometry& g, const Prior& prior,
                                  double rd, double b_upper, const std::vector<Vector>& lambdas) {
  ReplicationRecord rec;
  rec.index = i;
  const RngStream rng(cfg.seed, i);
  rec.seed = rng.seed();
  rec.stream = rng.stream_index();
  RngStream data_rng = rng.child(0);
  const Dataset d = m.sample(truth, data_rng);
  const ScoreState s = score_state(m, d, g);
  rec.xi_norm = s.xi.norm();
  rec.q = s.q;
  const SearchPlan plan = plan_of(cfg.audit);

  const MleResult mle = solve_mle(m, d, clip_to_box(s.theta_circ, m.box()));
  rec.mle_converged = mle.converged;
  rec.bvm.flags.mle_not_converged = !mle.converged;

  std::optional<BracketPair> pair;
  rec.bvm.rd = rd;
  rec.bvm.q = s.q;
  rec.bvm.flags.rd_above_half = rd > 0.5;
  rec.nu = nu_r0(s, g);
  if (rd < 1.0) {
    pair = bracket_pair(g, s, rd);
    rec.brackets = estimate_err_brackets(m, d, g, *pair, plan);
    if (mle.converged) rec.mle_expansion = mle_expansion_check(g, s, *pair, mle);
  } else {
    rec.bvm.flags.budget_omitted = true;
  }

  const bool exact = use_exact(cfg, m, prior);
  rec.exact = exact;
  if (exact) {
    const GaussianPosterior post = exact_gaussian_posterior(m, d, prior);
    const PosteriorSummary summary = posterior_moments(post, g);
    rec.rho_measured = summary.tail_mass;
    if (pair)
      rec.bvm.budget = error_budget(rec.brackets.err_ub, rec.brackets.err_lb, *pair, rec.nu, rec.rho_measured, g);
    rec.ess = summary.ess;
    posterior_metrics(rec, post, summary, m, g, s, pair, cfg, lambdas);
  } else {
    rec.bvm.flags.improper_posterior = !posterior_proper_along_rays(m, d, prior, g);
    PosteriorSample sample = rwm_sample(m, d, prior, g, chain_config(cfg.posterior), rng.child(1), 1);
    const PosteriorSummary summary = posterior_moments(sample, g);
    rec.rho_measured = summary.tail_mass;
    if (pair)
      rec.bvm.budget = error_budget(rec.brackets.err_ub, rec.brackets.err_lb, *pair, rec.nu, rec.rho_measured, g);
    rec.ess = summary.ess;
    rec.acceptance = sample.acceptance();
    rec.draws = summary.draws;
    rec.bvm.flags.low_ess = summary.low_precision;
    rec.bvm.flags.acceptance = !sample.acceptance_ok();
    posterior_metrics(rec, sample, summary, m, g, s, pair, cfg, lambdas);
    if (cfg.output.draw_dump) rec.sample = std::move(sample);
  }

  if (pair && b_upper > 0.0 && std::isfinite(b_upper)) {
    rec.rho_bound = rho_upper_bound(rec.brackets.err_lb, rec.nu, g, b_upper, rd);
    rec.tail = tail_mass_contract(rec.rho_measured, *rec.rho_bound);
    rec.upper_function = upper_function_audit(m, d, g, b_upper, plan);
  }
  return rec;
}

}  // namespace

Quantiles quantiles(std::vector<double> v) {
  v.erase(std::remove_if(v.begin(), v.end(), [](double x) { return !std::isfinite(x); }), v.end());
  Quantiles q;
  if (v.empty()) {
    q.median = q.q25 = q.q75 = kNaN;
    return q;
  }
  std::sort(v.begin(), v.end());
  auto at = [&](double f) {
    const double pos = f * static_cast<double>(v.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
  };
  q.median = at(0.5);
  q.q25 = at(0.25);
  q.q75 = at(0.75);
  return q;
}

int ExperimentResult::exit_code() const {
  if (!reps.empty() && failures == reps.size()) return 1;
  if (flags.any() || static_cast<double>(failures) > 0.05 * static_cast<double>(reps.size())) return 2;
  return 0;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const RunOptions& opt) {
  ExperimentResult res;
  res.config = cfg;
  const std::unique_ptr<QuasiModel> model = build_model(cfg.model);
  const QuasiModel& m = *model;
  res.truth = build_truth(cfg.truth, m);
  res.geometry = local_geometry(m, res.truth, geometry_options(cfg.geometry));
  const LocalGeometry& g = res.geometry;
  const SearchPlan plan = plan_of(cfg.audit);

  if (cfg.rd.source == RdSource::from_conditions) {
    res.conditions = audit_conditions(m, res.truth, g, audit_options(cfg, opt.threads));
    res.rd = res.conditions->rd;
    res.b_exterior = res.conditions->b_exterior;
    res.b_upper = res.conditions->b_upper;
    res.flags.conditions_failed = res.conditions->flags.any();
  } else {
    res.rd = cfg.rd.value;
    res.b_exterior = exterior_b(m, res.truth, g, plan);
    res.b_upper = std::numeric_limits<double>::infinity();
    for (double b : res.b_exterior.value)
      if (std::isfinite(b)) res.b_upper = std::min(res.b_upper, b);
    if (!std::isfinite(res.b_upper)) res.b_upper = 0.0;
  }

  res.prior = build_prior(cfg.prior, g.d0_sq);
  if (res.prior.kind == PriorKind::gaussian) {
    res.prior_check = gaussian_prior_check(res.prior.g_sq, g);
    res.flags.prior_check_failed = !res.prior_check->pass;
  }
  res.prior_regularity = prior_regularity_check(res.prior, g, 0.1, plan);
  res.sandwich = sandwich_matrix(g);

  const std::vector<Vector> lambdas = random_lambdas(g.p(), cfg.metrics.lambdas, cfg.seed ^ kLambdaSalt);
  res.reps.resize(cfg.replications);
  parallel_for(cfg.replications, opt.threads, [&](std::size_t i) {
    try {
      res.reps[i] = run_replication(i, cfg, m, res.truth, g, res.prior, res.rd, res.b_upper, lambdas);
    } catch (const Error& e) {
      ReplicationRecord r;
      r.index = i;
      r.ok = false;
      r.error = e.what();
      res.reps[i] = std::move(r);
    }
  });

  for (const ReplicationRecord& r : res.reps) {
    if (!r.ok) {
      ++res.failures;
      continue;
    }
    res.flags.merge(r.bvm.flags);
  }

  for (std::size_t k = 0; k < cfg.credible.kinds.size(); ++k) {
    std::vector<std::optional<bool>> hits;
    for (const ReplicationRecord& r : res.reps) {
      if (r.ok) hits.emplace_back(r.credible[k].covers_theta_star);
      else hits.emplace_back();
    }
    KindCoverage kc;
    kc.kind = cfg.credible.kinds[k];
    kc.result = tally_coverage(hits, cfg.credible.alpha);
    kc.predicted = kc.kind == CredibleKind::oracle
                       ? sandwich_coverage(res.sandwich, credible_threshold(g.p(), cfg.credible.alpha))
                       : kNaN;
    res.coverage.push_back(kc);
  }
  return res;
}

AuditReport run_audit(const ExperimentConfig& cfg, const RunOptions& opt) {
  AuditReport rep;
  rep.config = cfg;
  const std::unique_ptr<QuasiModel> model = build_model(cfg.model);
  rep.truth = build_truth(cfg.truth, *model);
  rep.geometry = local_geometry(*model, rep.truth, geometry_options(cfg.geometry));
  const AuditOptions ao = audit_options(cfg, opt.threads);
  rep.profile = audit_conditions(*model, rep.truth, rep.geometry, ao);
  rep.ed0 = ed0_check(*model, rep.truth, rep.geometry, ao);
  const Prior prior = build_prior(cfg.prior, rep.geometry.d0_sq);
  if (prior.kind == PriorKind::gaussian) rep.prior_check = gaussian_prior_check(prior.g_sq, rep.geometry);
  const double sqrt_n = std::sqrt(static_cast<double>(cfg.model.n));
  rep.rate = iid_rate_summary(cfg.model.n, cfg.model.p, rep.profile.delta_r0 * sqrt_n / rep.geometry.r0,
                              rep.profile.omega_r0 * sqrt_n / rep.geometry.r0);
  return rep;
}

namespace {

// Keeps a config valid after p changes.
ExperimentConfig resized(ExperimentConfig cfg, Eigen::Index p, std::size_t n, std::size_t reps) {
  if (!cfg.truth.beta.empty() && static_cast<Eigen::Index>(cfg.truth.beta.size()) != p) {
    double s = 0.0;
    for (double b : cfg.truth.beta) s += b * b;
    cfg.truth.beta.clear();
    cfg.truth.beta_norm = std::sqrt(s);
  }
  const double pd = static_cast<double>(p);
  std::erase_if(cfg.metrics.coronary_x, [&](double x) { return x > pd / 2.0; });
  cfg.model.p = p;
  cfg.model.n = n;
  cfg.replications = reps;
  return cfg;
}

}  // namespace

int SweepResult::exit_code() const {
  for (const SweepRow& r : rows)
    if (r.flagged || r.infeasible) return 2;
  return 0;
}

SweepResult sweep_critical_dimension(const ExperimentConfig& base, const std::vector<double>& ratios,
                                     std::size_t reps, const RunOptions& opt) {
  if (ratios.empty()) throw InvalidArgument("sweep needs at least one ratio");
  if (reps < 5) throw InvalidArgument("sweep needs at least 5 replications");
  SweepResult out;
  out.config = base;
  out.config.sweep.ratios = ratios;
  out.config.sweep.reps = reps;
  std::vector<double> sorted = ratios;
  std::sort(sorted.begin(), sorted.end());
  for (double ratio : sorted) {
    if (!(ratio > 0.0)) throw InvalidArgument("sweep ratios must be positive");
    SweepRow row;
    row.target_ratio = ratio;
    row.reps = reps;
    for (Eigen::Index p : base.sweep.p_list) {
      const double pd = static_cast<double>(p);
      const double n = std::round(pd * pd * pd / ratio);
      if (n >= static_cast<double>(std::max<std::size_t>(base.sweep.n_min, 5 * static_cast<std::size_t>(p)))) {
        row.p = p;
        row.n = static_cast<std::size_t>(n);
        break;
      }
    }
    if (row.p == 0) {
      row.infeasible = true;
      row.note = "no p in the list gives n >= max(n_min, 5 p)";
      out.rows.push_back(row);
      continue;
    }
    row.ratio = std::pow(static_cast<double>(row.p), 3) / static_cast<double>(row.n);
    try {
      const ExperimentResult r = run_experiment(resized(base, row.p, row.n, reps), opt);
      row.rd = r.rd;
      row.flagged = r.exit_code() != 0;
      row.flags = r.flags;
      row.failures = r.failures;
      std::vector<double> md, co, mg, pd;
      for (const ReplicationRecord& rec : r.reps) {
        if (!rec.ok) continue;
        md.push_back(rec.bvm.mean_disc);
        co.push_back(rec.bvm.cov_disc_op);
        mg.push_back(rec.bvm.mgf_disc);
        pd.push_back(rec.bvm.prob_disc);
      }
      row.mean_disc = quantiles(md);
      row.cov_disc_op = quantiles(co);
      row.mgf_disc = quantiles(mg);
      row.prob_disc = quantiles(pd);
      row.coverage = r.coverage;
      if (r.failures == r.reps.size()) {
        row.infeasible = true;
        row.note = r.reps.empty() ? "no replications" : r.reps.front().error;
      }
    } catch (const Error& e) {
      row.infeasible = true;
      row.note = e.what();
    }
    out.rows.push_back(row);
  }
  return out;
}

int PriorSweepResult::exit_code() const {
  for (const PriorSweepRow& r : rows)
    if (r.flagged) return 2;
  return 0;
}

PriorSweepResult sweep_gaussian_prior(const ExperimentConfig& base, const std::vector<double>& g_list,
                                      std::size_t reps, const RunOptions& opt) {
  if (g_list.empty()) throw InvalidArgument("prior sweep needs at least one g");
  PriorSweepResult out;
  out.config = base;
  out.config.sweep.g_list = g_list;
  out.config.sweep.reps = reps;
  ExperimentConfig flat_cfg = base;
  flat_cfg.replications = reps;
  flat_cfg.prior.kind = PriorKind::flat;
  flat_cfg.prior.g = 0.0;
  const ExperimentResult flat = run_experiment(flat_cfg, opt);
  if (flat.failures == flat.reps.size()) throw Error("flat-prior baseline failed in every replication");

  for (double gval : g_list) {
    if (!(gval >= 0.0)) throw InvalidArgument("g values must be nonnegative");
    ExperimentConfig cfg = flat_cfg;
    cfg.prior.kind = PriorKind::gaussian;
    cfg.prior.g = gval;
    cfg.prior.scale = base.prior.scale;
    const ExperimentResult res = run_experiment(cfg, opt);
    PriorSweepRow row;
    row.g = gval;
    row.check = res.prior_check.value_or(GaussianPriorCheck{});
    row.flagged = res.exit_code() != 0;
    std::vector<double> md, co, mg, fmd, fco, fmg, dmd, dco, dmg, nmd, nco, nmg;
    for (std::size_t i = 0; i < reps; ++i) {
      const ReplicationRecord& a = res.reps[i];
      const ReplicationRecord& b = flat.reps[i];
      if (!a.ok || !b.ok) continue;
      md.push_back(a.bvm.mean_disc);
      co.push_back(a.bvm.cov_disc_op);
      mg.push_back(a.bvm.mgf_disc);
      fmd.push_back(b.bvm.mean_disc);
      fco.push_back(b.bvm.cov_disc_op);
      fmg.push_back(b.bvm.mgf_disc);
      dmd.push_back(a.bvm.mean_disc - b.bvm.mean_disc);
      dco.push_back(a.bvm.cov_disc_op - b.bvm.cov_disc_op);
      dmg.push_back(a.bvm.mgf_disc - b.bvm.mgf_disc);
      nmd.push_back(std::hypot(a.noise.mean_disc, b.noise.mean_disc));
      nco.push_back(std::hypot(a.noise.cov_disc_op, b.noise.cov_disc_op));
      nmg.push_back(std::hypot(a.noise.mgf_disc, b.noise.mgf_disc));
    }
    row.mean_disc = quantiles(md);
    row.cov_disc_op = quantiles(co);
    row.mgf_disc = quantiles(mg);
    row.flat_mean_disc = quantiles(fmd);
    row.flat_cov_disc_op = quantiles(fco);
    row.flat_mgf_disc = quantiles(fmg);
    row.delta_mean_disc = quantiles(dmd).median;
    row.delta_cov_disc_op = quantiles(dco).median;
    row.delta_mgf_disc = quantiles(dmg).median;
    row.noise_mean_disc = quantiles(nmd).median;
    row.noise_cov_disc_op = quantiles(nco).median;
    row.noise_mgf_disc = quantiles(nmg).median;
    row.within_noise = std::abs(row.delta_mean_disc) <= 3.0 * row.noise_mean_disc &&
                       std::abs(row.delta_cov_disc_op) <= 3.0 * row.noise_cov_disc_op &&
                       std::abs(row.delta_mgf_disc) <= 3.0 * row.noise_mgf_disc;
    out.rows.push_back(row);
  }
  return out;
}

}  // namespace bvm
