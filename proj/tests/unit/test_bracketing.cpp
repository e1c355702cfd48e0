#include "bvm/bracketing.hpp"
#include "bvm/distributions.hpp"
#include "bvm/model.hpp"
#include "bvm/rng.hpp"

#include <doctest.h>

#include <cmath>

using namespace bvm;

namespace {

Vector v1(double x) { return Vector::Constant(1, x); }

LocalGeometry scalar_geometry(double d0_sq, double theta_star = 0.0, std::optional<double> r0 = {}) {
  GeometryOptions opt;
  opt.r0 = r0;
  return make_geometry(v1(theta_star), Matrix::Constant(1, 1, d0_sq), Matrix::Constant(1, 1, d0_sq), opt);
}

}  // namespace

TEST_CASE("score state arithmetic") {
  Matrix y(4, 1);
  y << 1, 2, 3, 2;
  const Dataset d = Dataset::from_observations(y);
  GaussianMeanModel m(1, 1.0, 4);
  const ScoreState a = score_state(m, d, scalar_geometry(4.0, 2.0));
  CHECK(a.xi[0] == doctest::Approx(0.0));
  CHECK(a.theta_circ[0] == doctest::Approx(2.0));
  CHECK(a.q == doctest::Approx(1.0));
  const ScoreState b = score_state(m, d, scalar_geometry(4.0, 1.5));
  CHECK(b.grad[0] == doctest::Approx(2.0));
  CHECK(b.xi[0] == doctest::Approx(1.0));
  CHECK(b.theta_circ[0] == doctest::Approx(2.0));
}

TEST_CASE("degenerate and scalar brackets") {
  const LocalGeometry g = scalar_geometry(4.0);
  const ScoreState s = score_state_from_gradient(g, v1(2.0));
  const BracketPair z = bracket_pair(g, s, 0.0);
  CHECK(z.d_ub_sq(0, 0) == doctest::Approx(4.0));
  CHECK(z.d_lb_sq(0, 0) == doctest::Approx(4.0));
  CHECK(z.theta_ub[0] == doctest::Approx(s.theta_circ[0]));
  CHECK(z.delta_rd_vec.norm() == doctest::Approx(0.0));

  const BracketPair b = bracket_pair(g, s, 0.1);
  CHECK(b.d_ub_sq(0, 0) == doctest::Approx(3.6));
  CHECK(b.xi_ub[0] == doctest::Approx(1.0541).epsilon(1e-4));
  CHECK(b.theta_ub[0] == doctest::Approx(0.5556).epsilon(1e-3));
  CHECK(bracket_quadratic(b, Side::upper, g.theta_star, g.theta_star) == 0.0);
  CHECK(bracket_quadratic(b, Side::upper, b.theta_ub, g.theta_star) == doctest::Approx(b.xi_ub.squaredNorm() / 2));
  CHECK(bracket_quadratic(b, Side::upper, v1(1.0), g.theta_star) == doctest::Approx(0.2001).epsilon(1e-3));
}

TEST_CASE("bracket scaling identities") {
  RngStream rng(3, 0);
  for (int k = 0; k < 20; ++k) {
    const Eigen::Index p = 4;
    Matrix a(p, p);
    for (Eigen::Index j = 0; j < p; ++j) a.col(j) = rng.normal_vector(p);
    const Matrix d0 = a * a.transpose() + Matrix::Identity(p, p);
    const LocalGeometry g = make_geometry(Vector::Zero(p), d0, d0);
    const ScoreState s = score_state_from_gradient(g, rng.normal_vector(p) * 3.0);
    const double xi2 = s.xi.squaredNorm();
    CHECK((g.d0.root() * (s.theta_circ - g.theta_star) - s.xi).norm() < 1e-10 * (1 + s.xi.norm()));
    CHECK(s.q >= static_cast<double>(p));
    for (double rd : {0.05, 0.2, 0.5}) {
      const BracketPair b = bracket_pair(g, s, rd);
      CHECK(std::abs(b.xi_ub.squaredNorm() - xi2 / (1 - rd)) < 1e-12 * (1 + xi2));
      CHECK(std::abs(b.xi_lb.squaredNorm() - xi2 / (1 + rd)) < 1e-12 * (1 + xi2));
      CHECK(b.delta_rd_vec.norm() <= 2 * rd * s.xi.norm() + 1e-12);
      Eigen::SelfAdjointEigenSolver<Matrix> e0(d0), eu(b.d_ub_sq), el(b.d_lb_sq);
      CHECK((eu.eigenvalues() - (1 - rd) * e0.eigenvalues()).norm() < 1e-9 * e0.eigenvalues().norm());
      // d_ub <= D0^2 <= d_lb
      CHECK(Eigen::SelfAdjointEigenSolver<Matrix>(d0 - b.d_ub_sq).eigenvalues().minCoeff() > -1e-9);
      CHECK(Eigen::SelfAdjointEigenSolver<Matrix>(b.d_lb_sq - d0).eigenvalues().minCoeff() > -1e-9);
    }
  }
}

TEST_CASE("spread and budget arithmetic") {
  const LocalGeometry g1 = scalar_geometry(1.0);
  const ScoreState s0 = score_state_from_gradient(g1, v1(0.0));
  CHECK(spread_delta(0, 0, bracket_pair(g1, s0, 0.0)) == 0.0);

  const LocalGeometry g2 = make_geometry(Vector::Zero(2), Matrix::Identity(2, 2), Matrix::Identity(2, 2));
  const ScoreState s2 = score_state_from_gradient(g2, Vector::Ones(2));  // |xi|^2 = 2
  const BracketPair b2 = bracket_pair(g2, s2, 0.1);
  CHECK(spread_delta(0, 0, b2) == doctest::Approx((2 / 0.9 - 2 / 1.1) / 2).epsilon(1e-12));
  CHECK(spread_delta(0, 0, b2) == doctest::Approx(0.2020).epsilon(1e-3));
  const ErrorBudget e2 = error_budget(0.0, 0.0, b2, 0.0, 0.0, g2);
  CHECK(e2.log_det_correction == doctest::Approx(std::log(1.1 / 0.9)).epsilon(1e-12));

  const LocalGeometry g4 = make_geometry(Vector::Zero(4), Matrix::Identity(4, 4), Matrix::Identity(4, 4));
  Vector grad = Vector::Zero(4);
  grad[0] = 1.0;
  const BracketPair b4 = bracket_pair(g4, score_state_from_gradient(g4, grad), 0.1);
  const ErrorBudget e4 = error_budget(0.01, 0.02, b4, 0.03, 0.04, g4);
  CHECK(e4.delta_oplus - e4.delta_plus == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(e4.spread == doctest::Approx(0.03 + (b4.xi_ub.squaredNorm() - b4.xi_lb.squaredNorm()) / 2).epsilon(1e-12));
  CHECK(e4.delta_plus == doctest::Approx(e4.spread + e4.log_det_correction + 0.03).epsilon(1e-12));
  CHECK(e4.delta_minus == doctest::Approx(e4.spread + e4.log_det_correction + 0.04).epsilon(1e-12));

  const ErrorBudget zero = error_budget(0, 0, bracket_pair(g1, s0, 0.0), 0, 0, g1);
  CHECK(zero.delta_plus == 0.0);
  CHECK(zero.delta_minus == 0.0);
  CHECK(zero.delta_oplus == 0.0);
}

TEST_CASE("nu and the tail bound") {
  const LocalGeometry g = scalar_geometry(1.0, 0.0, 3.0);
  const ScoreState s = score_state_from_gradient(g, v1(0.0));
  CHECK(nu_r0(s, g) == doctest::Approx(0.002703).epsilon(1e-3));
  CHECK(nu_r0(s, scalar_geometry(1.0, 0.0, 40.0)) == doctest::Approx(0.0));

  const LocalGeometry g6 = scalar_geometry(1.0, 0.0, 6.0);
  const RhoBound rb = rho_upper_bound(0.0, nu_r0(s, g6), g6, 0.5, 0.0);
  CHECK(rb.value == doctest::Approx(std::sqrt(2.0) * chi2_sf(1, 18.0) * std::exp(nu_r0(s, g6))).epsilon(1e-10));
  CHECK(rb.value == doctest::Approx(3.12e-5).epsilon(0.02));
  const double measured = chi2_sf(1, 36.0) / chi2_cdf(1, 36.0);
  CHECK(tail_mass_contract(measured, rb).pass);
  const LocalGeometry g12 = scalar_geometry(1.0, 0.0, 12.0);
  CHECK(rho_upper_bound(0.0, nu_r0(s, g12), g12, 0.5, 0.0).value < rb.value);

  const LocalGeometry g5 = make_geometry(Vector::Zero(5), Matrix::Identity(5, 5), Matrix::Identity(5, 5),
                                         GeometryOptions{{}, std::sqrt(40.0)});
  Vector grad = Vector::Zero(5);
  grad[0] = 1.0;
  grad[1] = 1.0;
  const ScoreState s5 = score_state_from_gradient(g5, grad);
  const Estimate mc = nu_r0_mc_probability(s5, g5, 2000000, 9);
  CHECK(std::abs(std::exp(-nu_r0(s5, g5)) - mc.value) < 4 * mc.se + 1e-12);
}

TEST_CASE("gaussian brackets are exact") {
  GaussianMeanModel m(2, 1.0, 50);
  TrueProcess t;
  t.beta = Vector::Constant(2, 0.1);
  const LocalGeometry g = local_geometry(m, t);
  RngStream rng(8, 0);
  const Dataset d = m.sample(t, rng);
  const ScoreState s = score_state(m, d, g);
  const ErrBrackets e = estimate_err_brackets(m, d, g, bracket_pair(g, s, 0.0));
  CHECK(e.err_ub < 1e-9);
  CHECK(e.err_lb < 1e-9);
  const MleResult mle = solve_mle(m, d, Vector::Zero(2));
  CHECK(mle_expansion_check(g, s, bracket_pair(g, s, 0.0), mle) < 1e-18);
  CHECK((mle.theta_hat - s.theta_circ).norm() < 1e-12);
}

TEST_CASE("quadratic gap supremum with zero score") {
  // xi = 0, rd = 0.1, r0 = 3: the upper bracket sits rd r^2 / 2 above L at the rim
  GaussianMeanModel m(1, 1.0, 1);
  Matrix y(1, 1);
  y << 0.0;
  const Dataset d = Dataset::from_observations(y);
  const LocalGeometry g = scalar_geometry(1.0, 0.0, 3.0);
  const ScoreState s = score_state(m, d, g);
  CHECK(s.xi.norm() == 0.0);
  const ErrBrackets e = estimate_err_brackets(m, d, g, bracket_pair(g, s, 0.1));
  CHECK(e.gap_ub == doctest::Approx(0.45).epsilon(1e-3));
  CHECK(e.err_ub == doctest::Approx(0.0));
}

TEST_CASE("err estimates shrink as rd grows") {
  LogisticModel m(2, 400);
  TrueProcess t;
  t.generator = Generator::logit;
  t.beta = Vector::Constant(2, 0.4);
  const LocalGeometry g = local_geometry(m, t);
  RngStream rng(12, 0);
  const Dataset d = m.sample(t, rng);
  const ScoreState s = score_state(m, d, g);
  double prev_ub = INFINITY, prev_lb = INFINITY;
  for (double rd : {0.05, 0.1, 0.2}) {
    const ErrBrackets e = estimate_err_brackets(m, d, g, bracket_pair(g, s, rd));
    CHECK(e.err_ub >= 0.0);
    CHECK(e.err_lb >= 0.0);
    CHECK(e.err_ub <= prev_ub + 1e-12);
    CHECK(e.err_lb <= prev_lb + 1e-12);
    prev_ub = e.err_ub;
    prev_lb = e.err_lb;
  }
}

TEST_CASE("upper function audit") {
  GaussianMeanModel m(1, 1.0, 1);
  Matrix y(1, 1);
  y << 0.0;
  const LocalGeometry g = scalar_geometry(1.0, 0.0, 3.0);
  const UpperFunctionReport ok = upper_function_audit(m, Dataset::from_observations(y), g, 0.5);
  CHECK(ok.pass);
  CHECK(ok.worst_violation <= 1e-12);
  y << 20.0;  // extreme sample mean
  CHECK_FALSE(upper_function_audit(m, Dataset::from_observations(y), g, 0.5).pass);
}

TEST_CASE("restricted gaussian mgf bounds") {
  const RestrictedMgfBounds a = gauss_restricted_mgf_bounds(Vector::Zero(1), std::sqrt(12.0), 0.5, 2.0);
  CHECK(a.upper_tail_log_bound == doctest::Approx(-3.0 + 0.5 * std::log(2.0)).epsilon(1e-10));
  CHECK(std::log(chi2_sf(1, 12.0)) <= a.upper_tail_log_bound);
  const RestrictedMgfBounds b = gauss_restricted_mgf_bounds(Vector::Zero(2), std::sqrt(20.0), 0.5, 3.0);
  CHECK(b.lower_restricted_bound == doctest::Approx(1 - std::exp(-3.0)).epsilon(1e-10));
  CHECK(b.lower_restricted_bound <= gauss_restricted_mgf_inside(Vector::Zero(2), std::sqrt(20.0)));
  Vector lam(2);
  lam << 0.6, -0.8;
  const RestrictedMgfBounds big = gauss_restricted_mgf_bounds(lam, 2 * std::sqrt(2.0 + 60.0), 0.5, 60.0);
  CHECK(big.lower_restricted_bound == doctest::Approx(std::exp(0.5)).epsilon(1e-10));
}
