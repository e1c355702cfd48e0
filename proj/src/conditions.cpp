#include "bvm/conditions.hpp"

#include "bvm/distributions.hpp"
#include "bvm/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace bvm {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Vector theta_at(const LocalGeometry& g, const Vector& w) { return g.theta_star + g.d0.inv_root() * w; }

void check_grid(const std::vector<double>& r_grid) {
  if (r_grid.empty()) throw InvalidArgument("empty radius grid");
  for (std::size_t i = 0; i < r_grid.size(); ++i) {
    if (!(r_grid[i] > 0.0)) throw InvalidArgument("radius grid must be positive");
    if (i > 0 && !(r_grid[i] > r_grid[i - 1])) throw InvalidArgument("radius grid must increase");
  }
}

Matrix plan_directions(Eigen::Index p, const SearchPlan& plan) {
  return sphere_directions(p, plan.directions ? plan.directions : default_direction_count(p));
}

// log mean exp(t x_i) with the tail-share guard; the mean weight of each draw
// is also returned through `mean_x` (tilted mean) and `se` (delta method).
struct LogMgf {
  double value = 0.0;
  double se = 0.0;
  double tilted_mean = 0.0;
  bool heavy = false;
  bool finite = true;
};

LogMgf log_mgf(const std::vector<double>& x, double t, std::vector<double>& scratch) {
  LogMgf out;
  const std::size_t n = x.size();
  scratch.resize(n);
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    scratch[i] = t * x[i];
    mx = std::max(mx, scratch[i]);
  }
  if (!std::isfinite(mx)) {
    out.finite = false;
    out.value = std::numeric_limits<double>::infinity();
    return out;
  }
  double s = 0.0, s2 = 0.0, sx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = std::exp(scratch[i] - mx);
    scratch[i] = e;
    s += e;
    s2 += e * e;
    sx += e * x[i];
  }
  const double dn = static_cast<double>(n);
  const double mean = s / dn;
  out.value = mx + std::log(mean);
  out.tilted_mean = sx / s;
  const double var = std::max(0.0, s2 / dn - mean * mean);
  out.se = std::sqrt(var / dn) / mean;
  const std::size_t top = std::max<std::size_t>(1, n / 1000);
  std::nth_element(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(top - 1), scratch.end(),
                   std::greater<double>());
  double top_sum = 0.0;
  for (std::size_t i = 0; i < top; ++i) top_sum += scratch[i];
  out.heavy = top_sum > 0.5 * s;
  out.finite = std::isfinite(out.value);
  return out;
}

// Value-only log mean exp(t x_i); the hot path of the omega and ladder searches.
double log_mgf_value(const std::vector<double>& x, double t) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double v : x) mx = std::max(mx, t * v);
  if (!std::isfinite(mx)) return std::numeric_limits<double>::infinity();
  double s = 0.0;
  for (double v : x) s += std::exp(t * v - mx);
  return mx + std::log(s / static_cast<double>(x.size()));
}

struct KDeriv {
  double value = 0.0;
  double slope = 0.0;  // d/dt, the tilted mean
};
KDeriv log_mgf_deriv(const std::vector<double>& x, double t) {
  KDeriv out;
  double mx = -std::numeric_limits<double>::infinity();
  for (double v : x) mx = std::max(mx, t * v);
  if (!std::isfinite(mx)) {
    out.value = std::numeric_limits<double>::infinity();
    return out;
  }
  double s = 0.0, sx = 0.0;
  for (double v : x) {
    const double e = std::exp(t * v - mx);
    s += e;
    sx += e * v;
  }
  out.value = mx + std::log(s / static_cast<double>(x.size()));
  out.slope = sx / s;
  return out;
}

// Centred, V0-standardized gradient draws: s0 = V0^-1 grad zeta(theta*) and
// inc_k = V0^-1 (grad zeta(theta_k) - grad zeta(theta*)), stored column-wise.
struct ScoreDraws {
  Matrix s0;
  std::vector<Matrix> inc;
};

ScoreDraws simulate_scores(const QuasiModel& m, const TrueProcess& truth, const LocalGeometry& g,
                           const std::vector<Vector>& thetas, std::size_t reps, std::uint64_t seed,
                           int threads) {
  if (reps < 1000) throw InvalidArgument("Monte Carlo budget below 1000 replications");
  const Eigen::Index p = g.p();
  SpdMatrix v0(g.v0_sq, "V0^2");
  const Matrix& vinv = v0.inv_root();
  const Vector c0 = m.gradient_centre(truth, g.theta_star);
  std::vector<Vector> ck;
  ck.reserve(thetas.size());
  for (const Vector& t : thetas) ck.push_back(m.gradient_centre(truth, t));
  ScoreDraws out;
  out.s0.resize(p, static_cast<Eigen::Index>(reps));
  out.inc.assign(thetas.size(), Matrix(p, static_cast<Eigen::Index>(reps)));
  parallel_for(reps, threads, [&](std::size_t i) {
    RngStream rng(seed, i);
    const Dataset d = m.sample(truth, rng);
    const Vector z0 = m.score(d, g.theta_star) - c0;
    const auto col = static_cast<Eigen::Index>(i);
    out.s0.col(col) = vinv * z0;
    for (std::size_t k = 0; k < thetas.size(); ++k)
      out.inc[k].col(col) = vinv * (m.score(d, thetas[k]) - ck[k] - z0);
  });
  return out;
}

// Candidate unit vectors u (gamma = V0^-1 u): axes, the principal axes of the
// draws' second moment, then `extra` quasi-random directions.
Matrix gamma_candidates(const Matrix& draws, std::size_t extra) {
  const Eigen::Index p = draws.rows();
  const Matrix second = symmetrize(draws * draws.transpose() / static_cast<double>(draws.cols()));
  Eigen::SelfAdjointEigenSolver<Matrix> eig(second);
  Matrix dirs(p, 2 * p + static_cast<Eigen::Index>(extra));
  dirs.leftCols(p) = Matrix::Identity(p, p);
  dirs.middleCols(p, p) = eig.eigenvectors();
  if (extra > 0) {
    const Matrix q = sphere_directions(p, static_cast<std::size_t>(2 * p) + extra);
    dirs.rightCols(static_cast<Eigen::Index>(extra)) = q.rightCols(static_cast<Eigen::Index>(extra));
  }
  return dirs;
}

std::vector<double> project_draws(const Matrix& draws, const Vector& u) {
  const Vector x = draws.transpose() * u;
  return std::vector<double>(x.data(), x.data() + x.size());
}

struct OmegaFit {
  double omega = 0.0;
  double se = 0.0;
};

// Smallest omega with log_mgf(lambda / omega) <= nu0^2 lambda^2 / 2 on the grid.
OmegaFit fit_omega(const std::vector<double>& x, const std::vector<double>& lams, double nu0_sq,
                   MgfDiagnostics& diag, std::vector<double>& scratch) {
  OmegaFit fit;
  double scale = 0.0;
  for (double v : x) scale = std::max(scale, std::abs(v));
  if (scale == 0.0) return fit;
  // For each lambda the constraint reads t <= t*(lambda) with t = lambda / omega,
  // where t* is where the convex log-MGF along sign(lambda) crosses the level.
  // Newton from the right converges monotonically.
  double sd = 0.0;
  for (double v : x) sd += v * v;
  sd = std::sqrt(sd / static_cast<double>(x.size()));
  double hi = 0.0;
  // warm start from the neighbouring lambda's ratio t*/|lambda|
  double ratio_neg = 0.0, ratio_pos = 0.0;
  for (double l : lams) {
    const double sgn = l > 0.0 ? 1.0 : -1.0, level = nu0_sq * l * l / 2.0;
    double& ratio = l > 0.0 ? ratio_pos : ratio_neg;
    double t = ratio > 0.0 ? 1.05 * ratio * std::abs(l) : std::sqrt(2.0 * level) / std::max(sd, 1e-300);
    int guard = 0;
    KDeriv k = log_mgf_deriv(x, sgn * t);
    while (std::isfinite(k.value) && k.value <= level && guard++ < 200) {
      t *= 2.0;
      k = log_mgf_deriv(x, sgn * t);
    }
    if (std::isfinite(k.value) && k.value <= level) continue;  // never binds
    for (int it = 0; it < 60; ++it) {
      if (!std::isfinite(k.value)) {
        t /= 2.0;
      } else {
        const double slope = sgn * k.slope;
        if (!(slope > 0.0)) break;
        const double step = (k.value - level) / slope;
        t -= step;
        if (step <= 1e-8 * t) break;
      }
      k = log_mgf_deriv(x, sgn * t);
    }
    if (t > 0.0) {
      hi = std::max(hi, std::abs(l) / t);
      ratio = t / std::abs(l);
    }
  }
  fit.omega = hi;
  // delta-method SE at the binding lambda
  double worst = -std::numeric_limits<double>::infinity();
  for (double l : lams) {
    const LogMgf k = log_mgf(x, l / hi, scratch);
    ++diag.estimates;
    if (k.heavy) ++diag.heavy_tail;
    if (!k.finite) ++diag.non_finite;
    const double gap = k.value - nu0_sq * l * l / 2.0;
    if (gap > worst) {
      worst = gap;
      const double dk = std::abs(k.tilted_mean * l / (hi * hi));
      fit.se = dk > 0.0 ? k.se / dk : 0.0;
    }
  }
  return fit;
}

Ed0Result ed0_from_draws(const Matrix& s0, const LocalGeometry& g, const AuditOptions& opt) {
  Ed0Result r;
  const double gmax = opt.g.value_or(g.g_max());
  const std::vector<double> lams = lambda_grid(gmax, opt.lambda_points);
  const Matrix dirs = gamma_candidates(s0, opt.gamma_directions);
  std::vector<double> scratch;
  double best = 1.0, best_se = 0.0;
  for (Eigen::Index j = 0; j < dirs.cols(); ++j) {
    const std::vector<double> x = project_draws(s0, dirs.col(j));
    for (double l : lams) {
      const LogMgf k = log_mgf(x, l, scratch);
      ++r.mgf.estimates;
      if (k.heavy) ++r.mgf.heavy_tail;
      if (!k.finite) {
        ++r.mgf.non_finite;
        continue;
      }
      const double v = 2.0 * k.value / (l * l);
      if (v > best) {
        best = v;
        best_se = 2.0 * k.se / (l * l);
      }
    }
  }
  r.nu0_sq = best;
  r.nu0 = std::sqrt(best);
  r.se = best_se;
  r.pass = r.mgf.non_finite == 0 && std::isfinite(r.nu0) && r.nu0 <= opt.nu0_cap;
  if (r.mgf.non_finite > 0) r.diagnostic = "non-finite MGF estimates (heavy tails)";
  else if (r.nu0 > opt.nu0_cap) r.diagnostic = "nu0 above cap";
  if (r.mgf.heavy_tail > 0) {
    if (!r.diagnostic.empty()) r.diagnostic += "; ";
    r.diagnostic += std::to_string(r.mgf.heavy_tail) + " of " + std::to_string(r.mgf.estimates) +
                    " MGF estimates dominated by the top 0.1% of draws";
  }
  return r;
}

struct ShellPoints {
  std::vector<Vector> thetas;
  std::vector<std::size_t> radius_index;
};

// Points on each shell: w = r u for the coordinate axes, the signal direction
// D0 beta / |D0 beta| and a few quasi-random directions. Points outside the box
// are dropped.
ShellPoints shell_points(const LocalGeometry& g, const TrueProcess& truth, const Box& box,
                         const std::vector<double>& r_grid, std::size_t extra) {
  const Eigen::Index p = g.p();
  std::vector<Vector> dirs;
  for (Eigen::Index j = 0; j < p; ++j) {
    dirs.push_back(Vector::Unit(p, j));
    dirs.push_back(-Vector::Unit(p, j));
  }
  if (truth.beta.size() == p && truth.beta.norm() > 0.0) {
    const Vector b = g.d0.root() * truth.beta;
    dirs.push_back(b / b.norm());
    dirs.push_back(-b / b.norm());
  }
  if (extra > 0) {
    const Matrix q = sphere_directions(p, static_cast<std::size_t>(2 * p) + extra);
    for (Eigen::Index j = 2 * p; j < q.cols(); ++j) dirs.push_back(q.col(j));
  }
  ShellPoints out;
  for (std::size_t k = 0; k < r_grid.size(); ++k) {
    for (const Vector& u : dirs) {
      const Vector t = theta_at(g, r_grid[k] * u);
      if (!box.contains(t)) continue;
      out.thetas.push_back(t);
      out.radius_index.push_back(k);
    }
  }
  return out;
}

OmegaResult omega_from_draws(const ScoreDraws& draws, const ShellPoints& pts,
                             const std::vector<double>& r_grid, const LocalGeometry& g, double nu0,
                             const AuditOptions& opt) {
  const double gmax = opt.g.value_or(g.g_max());
  const std::vector<double> lams = lambda_grid(gmax, opt.lambda_points);
  const double nu0_sq = nu0 * nu0;
  const std::size_t count = pts.thetas.size();
  std::vector<OmegaFit> fits(count);
  std::vector<double> g_reach(count, 0.0);
  std::vector<MgfDiagnostics> diags(count);
  // (Er) lambda ladder: gmax k / 10, k = 1..40
  std::vector<double> ladder;
  for (int k = 1; k <= 40; ++k) ladder.push_back(gmax * k / 10.0);
  parallel_for(count, opt.threads, [&](std::size_t i) {
    std::vector<double> scratch;
    const Matrix& inc = draws.inc[i];
    const Matrix full = draws.s0 + inc;
    const Matrix dirs = gamma_candidates(inc, 0);
    double reach = ladder.back();
    for (Eigen::Index j = 0; j < dirs.cols(); ++j) {
      const std::vector<double> x = project_draws(inc, dirs.col(j));
      const OmegaFit f = fit_omega(x, lams, nu0_sq, diags[i], scratch);
      if (f.omega > fits[i].omega) fits[i] = f;
      const std::vector<double> y = project_draws(full, dirs.col(j));
      double ok = 0.0;
      for (double l : ladder) {
        const double kv = std::max(log_mgf_value(y, l), log_mgf_value(y, -l));
        if (!std::isfinite(kv) || kv > nu0_sq * l * l / 2.0) break;
        ok = l;
      }
      reach = std::min(reach, ok);
    }
    g_reach[i] = reach;
  });
  OmegaResult out;
  out.omega.r = r_grid;
  out.omega.value.assign(r_grid.size(), 0.0);
  out.omega.se.assign(r_grid.size(), 0.0);
  out.g_of_r.r = r_grid;
  out.g_of_r.value.assign(r_grid.size(), ladder.back());
  out.g_of_r.se.assign(r_grid.size(), 0.0);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t k = pts.radius_index[i];
    if (fits[i].omega > out.omega.value[k]) {
      out.omega.value[k] = fits[i].omega;
      out.omega.se[k] = fits[i].se;
    }
    out.g_of_r.value[k] = std::min(out.g_of_r.value[k], g_reach[i]);
    out.mgf.estimates += diags[i].estimates;
    out.mgf.heavy_tail += diags[i].heavy_tail;
    out.mgf.non_finite += diags[i].non_finite;
  }
  // sup over the ball: running max over shells (running min for the reach)
  for (std::size_t k = 1; k < r_grid.size(); ++k) {
    if (out.omega.value[k - 1] > out.omega.value[k]) {
      out.omega.value[k] = out.omega.value[k - 1];
      out.omega.se[k] = out.omega.se[k - 1];
    }
    out.g_of_r.value[k] = std::min(out.g_of_r.value[k], out.g_of_r.value[k - 1]);
  }
  return out;
}

}  // namespace

double SampledFunction::at(double rr) const {
  for (std::size_t i = 0; i < r.size(); ++i)
    if (r[i] >= rr * (1.0 - 1e-12)) return value[i];
  throw InvalidArgument("radius beyond the sampled grid");
}

std::vector<double> lambda_grid(double g, int points) {
  if (!(g > 0.0) || points < 2) throw InvalidArgument("lambda grid needs g > 0 and >= 2 points");
  std::vector<double> out;
  for (int i = 0; i < points; ++i) {
    const double l = -g + 2.0 * g * i / (points - 1);
    if (std::abs(l) > 1e-12 * g) out.push_back(l);
  }
  return out;
}

std::vector<double> radius_grid(double r0, int count) {
  if (!(r0 > 0.0) || count < 1) throw InvalidArgument("radius grid needs r0 > 0");
  std::vector<double> out;
  for (int k = 1; k <= count; ++k) out.push_back(r0 * k / count);
  return out;
}

SampledFunction estimate_delta_of_r(const QuasiModel& m, const TrueProcess& truth,
                                    const LocalGeometry& g, const std::vector<double>& r_grid,
                                    const SearchPlan& plan) {
  check_grid(r_grid);
  const double el0 = m.expected_loglik(truth, g.theta_star).value;
  const Objective f = [&](const Vector& w) {
    const double w2 = w.squaredNorm();
    if (w2 < 1e-20) return kNaN;
    const Vector t = theta_at(g, w);
    if (!m.box().contains(t)) return kNaN;
    const double diff = m.expected_loglik(truth, t).value - el0;
    return std::abs(-2.0 * diff / w2 - 1.0);
  };
  const Matrix dirs = plan_directions(g.p(), plan);
  SampledFunction out;
  out.r = r_grid;
  out.se.assign(r_grid.size(), 0.0);
  double running = 0.0;
  for (double r : r_grid) {
    const SearchResult s = ball_sup(dirs, r, f, plan);
    if (std::isfinite(s.value)) running = std::max(running, s.value);
    out.value.push_back(running);
  }
  return out;
}

SampledFunction estimate_b_of_r(const QuasiModel& m, const TrueProcess& truth, const LocalGeometry& g,
                                const std::vector<double>& r_grid, const SearchPlan& plan) {
  check_grid(r_grid);
  const double el0 = m.expected_loglik(truth, g.theta_star).value;
  const Matrix dirs = plan_directions(g.p(), plan);
  SampledFunction out;
  out.r = r_grid;
  out.se.assign(r_grid.size(), 0.0);
  for (double r : r_grid) {
    const Objective f = [&](const Vector& w) {
      const Vector t = theta_at(g, w);
      if (!m.box().contains(t)) return kNaN;
      return -std::abs(m.expected_loglik(truth, t).value - el0) / (r * r);
    };
    const SearchResult s = sphere_sup(dirs, r, f, plan);
    out.value.push_back(std::isfinite(s.value) ? -s.value : kNaN);
  }
  return out;
}

SampledFunction exterior_b(const QuasiModel& m, const TrueProcess& truth, const LocalGeometry& g,
                           const SearchPlan& plan) {
  std::vector<double> grid;
  for (double f : {1.0, 1.5, 2.0, 3.0, 4.0}) {
    // keep shells that still have a point inside the box along some axis
    const double r = f * g.r0;
    bool inside = false;
    for (Eigen::Index j = 0; j < g.p() && !inside; ++j)
      for (double s : {1.0, -1.0})
        if (m.box().contains(theta_at(g, s * r * Vector::Unit(g.p(), j)))) inside = true;
    if (inside) grid.push_back(r);
  }
  if (grid.empty()) grid.push_back(g.r0);
  return estimate_b_of_r(m, truth, g, grid, plan);
}

Ed0Result ed0_check(const QuasiModel& m, const TrueProcess& truth, const LocalGeometry& g,
                    const AuditOptions& opt) {
  const ScoreDraws draws = simulate_scores(m, truth, g, {}, opt.mc_budget, opt.seed, opt.threads);
  return ed0_from_draws(draws.s0, g, opt);
}

OmegaResult estimate_omega_of_r(const QuasiModel& m, const TrueProcess& truth, const LocalGeometry& g,
                                const std::vector<double>& r_grid, double nu0,
                                const AuditOptions& opt) {
  check_grid(r_grid);
  if (!(nu0 >= 1.0)) throw InvalidArgument("nu0 must be at least 1");
  const ShellPoints pts = shell_points(g, truth, m.box(), r_grid, opt.theta_extra);
  const ScoreDraws draws = simulate_scores(m, truth, g, pts.thetas, opt.mc_budget, opt.seed, opt.threads);
  return omega_from_draws(draws, pts, r_grid, g, nu0, opt);
}

double admissible_rd(double delta_r0, double omega_r0, double nu0, double a_sq) {
  return delta_r0 + 3.0 * nu0 * a_sq * omega_r0;
}

ConditionProfile audit_conditions(const QuasiModel& m, const TrueProcess& truth, const LocalGeometry& g,
                                  const AuditOptions& opt) {
  ConditionProfile prof;
  const std::vector<double> grid = radius_grid(g.r0, 8);
  prof.g_max = opt.g.value_or(g.g_max());
  prof.delta_of_r = estimate_delta_of_r(m, truth, g, grid, opt.plan);
  prof.b_of_r = estimate_b_of_r(m, truth, g, grid, opt.plan);
  prof.b_exterior = exterior_b(m, truth, g, opt.plan);

  const ShellPoints pts = shell_points(g, truth, m.box(), grid, opt.theta_extra);
  const ScoreDraws draws = simulate_scores(m, truth, g, pts.thetas, opt.mc_budget, opt.seed, opt.threads);
  const Ed0Result ed0 = ed0_from_draws(draws.s0, g, opt);
  prof.nu0 = ed0.nu0;
  prof.nu0_se = ed0.nu0 > 0.0 ? ed0.se / (2.0 * ed0.nu0) : 0.0;
  prof.mgf = ed0.mgf;
  const OmegaResult om = omega_from_draws(draws, pts, grid, g, std::isfinite(ed0.nu0) ? ed0.nu0 : 1.0, opt);
  prof.omega_of_r = om.omega;
  prof.g_of_r = om.g_of_r;
  prof.mgf.estimates += om.mgf.estimates;
  prof.mgf.heavy_tail += om.mgf.heavy_tail;
  prof.mgf.non_finite += om.mgf.non_finite;

  prof.delta_r0 = prof.delta_of_r.value.back();
  prof.omega_r0 = prof.omega_of_r.value.back();
  prof.b_r0 = prof.b_of_r.value.back();
  prof.b_upper = std::numeric_limits<double>::infinity();
  for (double b : prof.b_exterior.value)
    if (std::isfinite(b)) prof.b_upper = std::min(prof.b_upper, b);
  if (!std::isfinite(prof.b_upper)) prof.b_upper = prof.b_r0;
  prof.rd = admissible_rd(prof.delta_r0, prof.omega_r0, prof.nu0, g.a_sq);
  prof.flags.delta_violated = prof.delta_r0 > 0.5;
  prof.flags.omega_violated = prof.omega_r0 > 0.5;
  prof.flags.nu0_failed = !ed0.pass;
  prof.flags.rd_violated = !(prof.rd <= 0.5);
  prof.flags.b_failed = !(prof.b_r0 > 0.0);
  return prof;
}

PriorRegularity prior_regularity_check(const Prior& prior, const LocalGeometry& g, double alpha_cap,
                                       const SearchPlan& plan) {
  PriorRegularity out;
  if (prior.kind == PriorKind::flat) return out;
  const double l0 = prior.log_density(g.theta_star);
  if (!std::isfinite(l0)) throw InvalidArgument("prior density vanishes at theta*");
  const Objective f = [&](const Vector& w) {
    return std::abs(std::exp(prior.log_density(theta_at(g, w)) - l0) - 1.0);
  };
  const SearchResult s = ball_sup(plan_directions(g.p(), plan), g.r0, f, plan);
  out.alpha_hat = std::isfinite(s.value) ? s.value : std::numeric_limits<double>::infinity();
  out.pass = out.alpha_hat <= alpha_cap;
  return out;
}

GaussianPriorCheck gaussian_prior_check(const Matrix& g_sq, const LocalGeometry& g, double threshold) {
  GaussianPriorCheck out;
  out.g_theta_star = std::sqrt(std::max(0.0, g.theta_star.dot(g_sq * g.theta_star)));
  const Matrix s = symmetrize(g.d0.inv_root() * g_sq * g.d0.inv_root());
  out.smallness = sym_operator_norm(s) * static_cast<double>(g.p());
  out.pass = out.smallness <= threshold;
  return out;
}

IidRateSummary iid_rate_summary(std::size_t n, Eigen::Index p, double delta_rate, double omega_rate) {
  if (n < 1 || p < 1) throw InvalidArgument("iid_rate_summary needs n, p >= 1");
  IidRateSummary s;
  s.n = n;
  s.p = p;
  s.delta_rate = delta_rate;
  s.omega_rate = omega_rate;
  const double dp = static_cast<double>(p);
  s.critical_ratio = dp * dp * dp / static_cast<double>(n);
  return s;
}

}  // namespace bvm
