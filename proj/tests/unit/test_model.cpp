#include "bvm/geometry.hpp"
#include "bvm/model.hpp"
#include "bvm/rng.hpp"

#include <doctest.h>

#include <cmath>

using namespace bvm;

namespace {

Dataset toy_data() {
  Matrix y(4, 1);
  y << 1, 2, 3, 2;
  return Dataset::from_observations(y);
}

TrueProcess mean_truth(double mu, double sd = 1.0) {
  TrueProcess t;
  t.beta = Vector::Constant(1, mu);
  t.noise_sd = sd;
  return t;
}

Vector v1(double x) { return Vector::Constant(1, x); }

TrueProcess logit_truth(Eigen::Index p, std::uint64_t seed) {
  TrueProcess t;
  t.generator = Generator::logit;
  RngStream rng(seed, 0);
  t.beta = 0.5 * rng.normal_vector(p);
  return t;
}

}  // namespace

TEST_CASE("gaussian mean closed forms") {
  GaussianMeanModel m(1, 1.0, 4);
  const Dataset d = toy_data();
  CHECK(log_lik_ratio(m, d, v1(2.0), v1(0.0)) == doctest::Approx(8.0));
  CHECK(log_lik_ratio(m, d, v1(1.3), v1(1.3)) == 0.0);
  CHECK(m.score(d, v1(2.0))[0] == doctest::Approx(0.0));
  CHECK(m.score(d, v1(0.0))[0] == doctest::Approx(8.0));
  CHECK(m.observed_hessian(d, v1(-3.0))(0, 0) == doctest::Approx(-4.0));
  CHECK(m.observed_hessian(d, v1(7.0))(0, 0) == doctest::Approx(-4.0));
}

TEST_CASE("gaussian mean expectations") {
  GaussianMeanModel m(1, 1.0, 10);
  const TrueProcess t = mean_truth(0.5);
  const double gap = m.expected_loglik(t, v1(1.5)).value - m.expected_loglik(t, v1(0.5)).value;
  CHECK(gap == doctest::Approx(-5.0));
  CHECK(m.expected_hessian(t, v1(0.2)).value(0, 0) == doctest::Approx(-10.0));
  CHECK(std::abs(m.expected_gradient(t, v1(0.5)).value[0]) < 1e-10);
}

TEST_CASE("stochastic score of the gaussian mean is constant") {
  GaussianMeanModel m(1, 1.0, 4);
  const Dataset d = toy_data();
  CHECK(stochastic_score(m, d, mean_truth(2.0), v1(0.3))[0] == doctest::Approx(0.0));
  CHECK(stochastic_score(m, d, mean_truth(0.0), v1(0.3))[0] == doctest::Approx(8.0));
  CHECK(stochastic_score(m, d, mean_truth(0.0), v1(-1.0))[0] == doctest::Approx(8.0));
}

TEST_CASE("log_lik_ratio is antisymmetric") {
  LogisticModel m(3, 200);
  const TrueProcess t = logit_truth(3, 5);
  RngStream rng(1, 2);
  const Dataset d = m.sample(t, rng);
  RngStream pick(3, 4);
  for (int i = 0; i < 20; ++i) {
    const Vector a = pick.normal_vector(3), b = pick.normal_vector(3);
    CHECK(log_lik_ratio(m, d, a, b) == -log_lik_ratio(m, d, b, a));
  }
}

TEST_CASE("score and hessian agree with finite differences") {
  std::vector<std::unique_ptr<QuasiModel>> models;
  models.push_back(std::make_unique<GaussianMeanModel>(3, 1.5, 30));
  models.push_back(std::make_unique<GaussianLinearModel>(GaussianLinearModel::random_design(40, 3, 7), 1.0));
  models.push_back(std::make_unique<LogisticModel>(3, 60));
  models.push_back(std::make_unique<PoissonModel>(3, 60));
  RngStream pick(99, 0);
  for (const auto& m : models) {
    CAPTURE(m->name());
    TrueProcess t;
    t.generator = m->family() == Family::logistic  ? Generator::logit
                  : m->family() == Family::poisson ? Generator::poisson
                                                   : Generator::gaussian;
    t.beta = Vector::Constant(3, 0.2);
    RngStream rng(5, 1);
    const Dataset d = m->sample(t, rng);
    for (int k = 0; k < 100; ++k) {
      const Vector th = 0.5 * pick.normal_vector(3);
      const Vector s = m->score(d, th);
      const Matrix h = m->observed_hessian(d, th);
      CHECK((h - h.transpose()).norm() == 0.0);
      for (Eigen::Index j = 0; j < 3; ++j) {
        const double step = fd_step(th[j]);
        Vector a = th, b = th;
        a[j] += step;
        b[j] -= step;
        const double fd = (m->log_lik(d, a) - m->log_lik(d, b)) / (2 * step);
        CHECK(std::abs(fd - s[j]) <= 1e-6 * std::max(1.0, std::abs(s[j])));
        const Vector fdh = (m->score(d, a) - m->score(d, b)) / (2 * step);
        CHECK((fdh - h.col(j)).norm() <= 1e-5 * std::max(1.0, h.col(j).norm()));
      }
    }
  }
}

TEST_CASE("well-specified expected gradient vanishes at the truth") {
  LogisticModel lm(3, 100);
  const TrueProcess lt = logit_truth(3, 8);
  CHECK(lm.expected_gradient(lt, lt.beta).value.norm() < 1e-10);
  PoissonModel pm(2, 100);
  TrueProcess pt;
  pt.generator = Generator::poisson;
  pt.beta = Vector::Constant(2, 0.3);
  CHECK(pm.expected_gradient(pt, pt.beta).value.norm() < 1e-10);
}

TEST_CASE("datasets are reproducible and streams differ") {
  LogisticModel m(2, 50);
  const TrueProcess t = logit_truth(2, 1);
  RngStream a(42, 3), b(42, 3), c(42, 4);
  const Dataset da = m.sample(t, a), db = m.sample(t, b), dc = m.sample(t, c);
  CHECK(da.obs == db.obs);
  CHECK(da.design == db.design);
  CHECK(da.obs != dc.obs);
}

TEST_CASE("sample mean oracle") {
  GaussianMeanModel m(1, 1.0, 100000);
  RngStream rng(17, 0);
  const Dataset d = m.sample(mean_truth(0.0), rng);
  CHECK(std::abs(d.obs.mean()) < 4.0 / std::sqrt(1e5));
}

TEST_CASE("stochastic score has mean zero at theta*") {
  LogisticModel m(2, 50);
  const TrueProcess t = logit_truth(2, 3);
  const int reps = 10000;
  Matrix draws(2, reps);
  for (int i = 0; i < reps; ++i) {
    RngStream rng(23, static_cast<std::uint64_t>(i));
    draws.col(i) = stochastic_score(m, m.sample(t, rng), t, t.beta);
  }
  const Vector mean = draws.rowwise().mean();
  for (Eigen::Index j = 0; j < 2; ++j) {
    const double sd = std::sqrt((draws.row(j).array() - mean[j]).square().sum() / (reps - 1));
    CHECK(std::abs(mean[j]) < 4 * sd / std::sqrt(static_cast<double>(reps)));
  }
}

TEST_CASE("evaluations outside the box are rejected") {
  GaussianMeanModel m(1, 1.0, 4);
  CHECK_THROWS_AS(m.log_lik(toy_data(), v1(60.0)), DomainError);
}

TEST_CASE("mle solutions") {
  GaussianMeanModel m(1, 1.0, 4);
  const MleResult r = solve_mle(m, toy_data(), v1(0.0));
  CHECK(r.converged);
  CHECK(r.theta_hat[0] == doctest::Approx(2.0).epsilon(1e-12));

  const Matrix x = GaussianLinearModel::random_design(50, 3, 11);
  GaussianLinearModel lin(x, 1.0);
  TrueProcess t;
  t.beta = Vector::Constant(3, 0.4);
  RngStream rng(2, 0);
  const Dataset d = lin.sample(t, rng);
  const Vector ls = (x.transpose() * x).ldlt().solve(x.transpose() * d.obs.col(0));
  const MleResult rl = solve_mle(lin, d, Vector::Zero(3));
  CHECK(rl.converged);
  CHECK((rl.theta_hat - ls).norm() < 1e-10);

  // separable logistic data: the MLE runs off to the box
  LogisticModel lg(1, 4);
  Matrix obs(4, 1), des(4, 1);
  obs << 0, 0, 1, 1;
  des << -2, -1, 1, 2;
  const MleResult rs = solve_mle(lg, Dataset::from_observations(obs, des), v1(0.0));
  CHECK_FALSE(rs.converged);
}

TEST_CASE("theta* and information matrices") {
  GaussianMeanModel m(1, 1.0, 10);
  CHECK(solve_theta_star(m, mean_truth(2.0)).theta[0] == doctest::Approx(2.0));
  CHECK(solve_theta_star(m, mean_truth(2.0, 3.0)).theta[0] == doctest::Approx(2.0));
  const InfoMatrices a = info_matrices(m, mean_truth(2.0), v1(2.0));
  CHECK(a.d0_sq(0, 0) == doctest::Approx(10.0));
  CHECK(a.v0_sq(0, 0) == doctest::Approx(10.0));
  const InfoMatrices b = info_matrices(m, mean_truth(2.0, 2.0), v1(2.0));
  CHECK(b.d0_sq(0, 0) == doctest::Approx(10.0));
  CHECK(b.v0_sq(0, 0) == doctest::Approx(40.0));

  LogisticModel lg(3, 300);
  const TrueProcess lt = logit_truth(3, 21);
  const ThetaStarResult ts = solve_theta_star(lg, lt);
  CHECK((ts.theta - lt.beta).norm() < 1e-8);
  const ThetaStarResult ts2 = solve_theta_star(lg, lt);
  CHECK(ts.theta == ts2.theta);
  // additivity over observations
  LogisticModel one(3, 1);
  const Matrix f1 = info_matrices(one, lt, ts.theta).d0_sq;
  CHECK((info_matrices(lg, lt, ts.theta).d0_sq - 300.0 * f1).norm() < 1e-10 * f1.norm() * 300.0);
}

TEST_CASE("identifiability constant") {
  CHECK(identifiability_a2(Matrix::Identity(2, 2) * 3.0, Matrix::Identity(2, 2) * 3.0) == doctest::Approx(1.0));
  Matrix v = Matrix::Zero(2, 2);
  v.diagonal() << 4.0, 1.0;
  CHECK(identifiability_a2(Matrix::Identity(2, 2), v) == doctest::Approx(4.0));
  RngStream rng(4, 0);
  for (int k = 0; k < 10; ++k) {
    Matrix a(4, 4), b(4, 4);
    for (Eigen::Index i = 0; i < 4; ++i) {
      a.col(i) = rng.normal_vector(4);
      b.col(i) = rng.normal_vector(4);
    }
    const Matrix d = a * a.transpose() + Matrix::Identity(4, 4), w = b * b.transpose() + Matrix::Identity(4, 4);
    Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> ge(w, d);
    CHECK(identifiability_a2(d, w) == doctest::Approx(ge.eigenvalues().maxCoeff()).epsilon(1e-8));
  }
}
