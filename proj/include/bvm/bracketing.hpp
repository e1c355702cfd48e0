#pragma once

#include "bvm/geometry.hpp"
#include "bvm/search.hpp"

#include <cstdint>

namespace bvm {

/// Sampled bracketing errors over the local ball.
///
/// err_* are the one-sided bracket violations sup (L - Lambda_ub) and
/// sup (Lambda_lb - L), clipped at zero (raw values kept). The gaps measure how
/// loose each bracket is: gap_ub = sup (Lambda_ub - L), gap_lb = sup (L - Lambda_lb).
struct ErrBrackets {
  double err_ub = 0.0;
  double err_lb = 0.0;
  double err_ub_raw = 0.0;
  double err_lb_raw = 0.0;
  double gap_ub = 0.0;
  double gap_lb = 0.0;
  std::size_t evaluations = 0;
};

ErrBrackets estimate_err_brackets(const QuasiModel& m, const Dataset& d, const LocalGeometry& g,
                                  const BracketPair& pair, const SearchPlan& plan = {});

/// err_ub + err_lb + (|xi_ub|^2 - |xi_lb|^2) / 2.
double spread_delta(double err_ub, double err_lb, const BracketPair& pair);

/// -log P(|gamma + xi| <= r0) via the noncentral chi-square CDF.
double nu_r0(const ScoreState& s, const LocalGeometry& g);
/// Monte Carlo cross-check of P(|gamma + xi| <= r0).
Estimate nu_r0_mc_probability(const ScoreState& s, const LocalGeometry& g, std::size_t draws,
                              std::uint64_t seed);

struct RhoBound {
  double value = 0.0;
  bool vacuous = false;  // b r0^2 <= p
};
/// exp(err_lb + nu) ((1 + rd) / b)^{p/2} P(chi2_p >= b r0^2).
RhoBound rho_upper_bound(double err_lb, double nu, const LocalGeometry& g, double b, double rd);

struct TailContract {
  double measured = 0.0;
  double bound = 0.0;
  double ratio = 0.0;
  bool pass = false;
  bool vacuous = false;
};
TailContract tail_mass_contract(double measured_tail_mass, const RhoBound& bound);

struct ErrorBudget {
  double rd = 0.0;
  double err_ub = 0.0;
  double err_lb = 0.0;
  double spread = 0.0;
  double nu_r0 = 0.0;
  double rho_r0 = 0.0;
  double log_det_correction = 0.0;
  double delta_plus = 0.0;
  double delta_minus = 0.0;
  double delta_oplus = 0.0;
  double q = 0.0;
  double xi_norm = 0.0;
  /// spread / (rd q) and err_ub / (rd p). The bounds behind them carry unknown
  /// constants, so the ratios are reported rather than judged. NaN when rd = 0.
  double spread_ratio = 0.0;
  double err_ub_ratio = 0.0;
};

ErrorBudget error_budget(double err_ub, double err_lb, const BracketPair& pair, double nu, double rho,
                         const LocalGeometry& g);

struct UpperFunctionReport {
  double worst_violation = 0.0;  // max of L(theta, theta*) + b |D0 (theta - theta*)|^2 / 2
  std::size_t n_points = 0;
  double b = 0.0;
  bool pass = true;
};

/// Samples shells r0 * {1.25, 1.5, 2, 3, 4, 6, 8} (points inside the box only).
UpperFunctionReport upper_function_audit(const QuasiModel& m, const Dataset& d, const LocalGeometry& g,
                                         double b, const SearchPlan& plan = {});

struct RestrictedMgfBounds {
  double upper_tail_log_bound = 0.0;   // bound on log E[e^{lambda'gamma} 1(|gamma| > r)]
  double lower_restricted_bound = 0.0;  // bound on E[e^{lambda'gamma} 1(|gamma| <= r)]
};

/// Closed-form restricted Gaussian MGF bounds. Requires 0 < mu < 1; the lower
/// bound additionally needs |lambda|^2 <= p and r^2 >= 4 (p + x).
RestrictedMgfBounds gauss_restricted_mgf_bounds(const Vector& lambda, double r, double mu, double x);

/// Exact values by tilting: E[e^{lambda'gamma} 1(|gamma| <= r)] = e^{|lambda|^2/2} P(|gamma + lambda| <= r).
double gauss_restricted_mgf_inside(const Vector& lambda, double r);
double gauss_restricted_mgf_outside_log(const Vector& lambda, double r);

}  // namespace bvm
