#include "bvm/bracketing.hpp"

#include "bvm/distributions.hpp"
#include "bvm/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace bvm {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Matrix plan_directions(Eigen::Index p, const SearchPlan& plan) {
  return sphere_directions(p, plan.directions ? plan.directions : default_direction_count(p));
}

}  // namespace

ErrBrackets estimate_err_brackets(const QuasiModel& m, const Dataset& d, const LocalGeometry& g,
                                  const BracketPair& pair, const SearchPlan& plan) {
  const Matrix dirs = plan_directions(g.p(), plan);
  if (dirs.cols() == 0) throw InvalidArgument("empty sample plan");
  const double l0 = m.log_lik(d, g.theta_star);
  // L(theta, theta*) - Lambda_side(theta, theta*) at w = D0 (theta - theta*)
  auto diff = [&](const Vector& w, Side side) {
    const Vector t = g.theta_star + g.d0.inv_root() * w;
    if (!m.box().contains(t)) return kNaN;
    return (m.log_lik(d, t) - l0) - bracket_quadratic(pair, side, t, g.theta_star);
  };
  ErrBrackets out;
  const SearchResult a = ball_sup(dirs, g.r0, [&](const Vector& w) { return diff(w, Side::upper); }, plan);
  const SearchResult b = ball_sup(dirs, g.r0, [&](const Vector& w) { return -diff(w, Side::lower); }, plan);
  const SearchResult c = ball_sup(dirs, g.r0, [&](const Vector& w) { return -diff(w, Side::upper); }, plan);
  const SearchResult e = ball_sup(dirs, g.r0, [&](const Vector& w) { return diff(w, Side::lower); }, plan);
  // w = 0 belongs to the ball and every difference vanishes there, so the
  // clipped values are the sampled suprema including that point.
  out.err_ub_raw = a.value;
  out.err_lb_raw = b.value;
  out.err_ub = std::max(0.0, a.value);
  out.err_lb = std::max(0.0, b.value);
  out.gap_ub = std::max(0.0, c.value);
  out.gap_lb = std::max(0.0, e.value);
  out.evaluations = a.evaluations + b.evaluations + c.evaluations + e.evaluations;
  return out;
}

double spread_delta(double err_ub, double err_lb, const BracketPair& pair) {
  return err_ub + err_lb + 0.5 * (pair.xi_ub.squaredNorm() - pair.xi_lb.squaredNorm());
}

double nu_r0(const ScoreState& s, const LocalGeometry& g) {
  if (!(g.r0 > 0.0)) throw InvalidArgument("r0 must be positive");
  const double p = static_cast<double>(g.p());
  const double lam = s.xi.squaredNorm();
  const double t = g.r0 * g.r0;
  const double sf = ncchi2_sf(p, lam, t);
  if (sf < 0.5) return -std::log1p(-sf);
  return -std::log(ncchi2_cdf(p, lam, t));
}

Estimate nu_r0_mc_probability(const ScoreState& s, const LocalGeometry& g, std::size_t draws,
                              std::uint64_t seed) {
  RngStream rng(seed, 0);
  std::size_t hits = 0;
  const double t = g.r0 * g.r0;
  for (std::size_t i = 0; i < draws; ++i)
    if ((rng.normal_vector(g.p()) + s.xi).squaredNorm() <= t) ++hits;
  const double ph = static_cast<double>(hits) / static_cast<double>(draws);
  return {ph, std::sqrt(ph * (1.0 - ph) / static_cast<double>(draws))};
}

RhoBound rho_upper_bound(double err_lb, double nu, const LocalGeometry& g, double b, double rd) {
  if (!(b > 0.0)) throw InvalidArgument("rho bound needs b > 0");
  if (!(rd >= 0.0 && rd < 1.0)) throw InvalidArgument("rho bound needs 0 <= rd < 1");
  const double p = static_cast<double>(g.p());
  const double br2 = b * g.r0 * g.r0;
  RhoBound out;
  out.vacuous = br2 <= p;
  const double tail = chi2_sf(p, br2);
  out.value = tail > 0.0 ? std::exp(err_lb + nu + 0.5 * p * std::log((1.0 + rd) / b) + std::log(tail)) : 0.0;
  return out;
}

TailContract tail_mass_contract(double measured, const RhoBound& bound) {
  TailContract c;
  c.measured = measured;
  c.bound = bound.value;
  c.vacuous = bound.vacuous;
  c.ratio = bound.value > 0.0 ? measured / bound.value : (measured > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
  c.pass = measured <= bound.value;
  return c;
}

ErrorBudget error_budget(double err_ub, double err_lb, const BracketPair& pair, double nu, double rho,
                         const LocalGeometry& g) {
  ErrorBudget e;
  const double p = static_cast<double>(g.p());
  const double rd = pair.rd;
  e.rd = rd;
  e.err_ub = err_ub;
  e.err_lb = err_lb;
  e.spread = spread_delta(err_ub, err_lb, pair);
  e.nu_r0 = nu;
  e.rho_r0 = rho;
  e.log_det_correction = 0.5 * p * std::log((1.0 + rd) / (1.0 - rd));
  e.delta_plus = e.spread + e.log_det_correction + nu;
  e.delta_minus = e.spread + e.log_det_correction + rho;
  // |xi| from the bracket pair: xi_ub = xi / sqrt(1 - rd)
  e.xi_norm = pair.xi_ub.norm() * std::sqrt(1.0 - rd);
  e.q = p + e.xi_norm * e.xi_norm;
  e.delta_oplus = e.delta_plus + rd * p + 2.0 * rd * std::sqrt(p) * e.xi_norm;
  e.spread_ratio = rd > 0.0 ? e.spread / (rd * e.q) : kNaN;
  e.err_ub_ratio = rd > 0.0 ? err_ub / (rd * p) : kNaN;
  return e;
}

UpperFunctionReport upper_function_audit(const QuasiModel& m, const Dataset& d, const LocalGeometry& g,
                                         double b, const SearchPlan& plan) {
  if (!(b > 0.0)) throw InvalidArgument("upper-function audit needs b > 0");
  const Matrix dirs = plan_directions(g.p(), plan);
  const double l0 = m.log_lik(d, g.theta_star);
  UpperFunctionReport rep;
  rep.b = b;
  rep.worst_violation = -std::numeric_limits<double>::infinity();
  SearchPlan local = plan;
  local.radii = 1;
  for (double f : {1.25, 1.5, 2.0, 3.0, 4.0, 6.0, 8.0}) {
    const double r = f * g.r0;
    const Objective obj = [&](const Vector& w) {
      const Vector t = g.theta_star + g.d0.inv_root() * w;
      if (!m.box().contains(t)) return kNaN;
      return (m.log_lik(d, t) - l0) + 0.5 * b * w.squaredNorm();
    };
    const SearchResult s = sphere_sup(dirs, r, obj, local);
    rep.n_points += s.evaluations;
    if (std::isfinite(s.value)) rep.worst_violation = std::max(rep.worst_violation, s.value);
  }
  if (!std::isfinite(rep.worst_violation)) rep.worst_violation = 0.0;
  rep.pass = rep.worst_violation <= 0.0;
  return rep;
}

RestrictedMgfBounds gauss_restricted_mgf_bounds(const Vector& lambda, double r, double mu, double x) {
  if (!(mu > 0.0 && mu < 1.0)) throw InvalidArgument("mu must lie in (0, 1)");
  if (!(r > 0.0)) throw InvalidArgument("radius must be positive");
  const double p = static_cast<double>(lambda.size());
  const double l2 = lambda.squaredNorm();
  if (l2 > p * (1.0 + 1e-12)) throw InvalidArgument("lower bound needs |lambda|^2 <= p");
  if (!(x > 0.0)) throw InvalidArgument("x must be positive");
  if (r * r < 4.0 * (p + x) * (1.0 - 1e-12)) throw InvalidArgument("lower bound needs r^2 >= 4 (p + x)");
  RestrictedMgfBounds out;
  out.upper_tail_log_bound = -(1.0 - mu) * r * r / 2.0 + l2 / (2.0 * mu) + 0.5 * p * std::log(1.0 / mu);
  out.lower_restricted_bound = std::exp(l2 / 2.0) * (1.0 - std::exp(-x));
  return out;
}

double gauss_restricted_mgf_inside(const Vector& lambda, double r) {
  const double l2 = lambda.squaredNorm();
  return std::exp(l2 / 2.0) * ncchi2_cdf(static_cast<double>(lambda.size()), l2, r * r);
}

double gauss_restricted_mgf_outside_log(const Vector& lambda, double r) {
  const double l2 = lambda.squaredNorm();
  return l2 / 2.0 + std::log(ncchi2_sf(static_cast<double>(lambda.size()), l2, r * r));
}

}  // namespace bvm
