#include "bvm/geometry.hpp"
#include "bvm/model.hpp"
#include "bvm/posterior.hpp"
#include "bvm/distributions.hpp"

#include <doctest.h>

#include <cmath>

using namespace bvm;

namespace {

Dataset toy_data() {
  Matrix y(4, 1);
  y << 1, 2, 3, 2;
  return Dataset::from_observations(y);
}

LocalGeometry toy_geometry(double r0 = 0.0) {
  GeometryOptions o;
  o.normalization = 1.0;
  if (r0 > 0.0) o.r0 = r0;
  return make_geometry(Vector::Constant(1, 2.0), Matrix::Constant(1, 1, 4.0), Matrix::Constant(1, 1, 4.0), o);
}

ChainConfig chain(std::size_t draws) {
  ChainConfig c;
  c.draws = draws;
  return c;
}

}  // namespace

TEST_CASE("conjugate posterior") {
  GaussianMeanModel m(1, 1.0, 4);
  const GaussianPosterior flat = exact_gaussian_posterior(m, toy_data(), Prior::flat());
  CHECK(flat.mean[0] == doctest::Approx(2.0));
  CHECK(flat.cov(0, 0) == doctest::Approx(0.25));
  const GaussianPosterior g4 = exact_gaussian_posterior(m, toy_data(), Prior::gaussian(Matrix::Constant(1, 1, 4.0)));
  CHECK(g4.mean[0] == doctest::Approx(1.0));
  CHECK(g4.cov(0, 0) == doctest::Approx(0.125));
  const GaussianPosterior tiny = exact_gaussian_posterior(m, toy_data(), Prior::gaussian(Matrix::Constant(1, 1, 1e-14)));
  CHECK(std::abs(tiny.mean[0] - flat.mean[0]) < 1e-12);
  CHECK(std::abs(tiny.cov(0, 0) - flat.cov(0, 0)) < 1e-12);
  LogisticModel lg(1, 10);
  CHECK_THROWS_AS(exact_gaussian_posterior(lg, toy_data(), Prior::flat()), UnsupportedError);
}

TEST_CASE("random walk matches the conjugate posterior") {
  GaussianMeanModel m(1, 1.0, 4);
  const LocalGeometry g = toy_geometry();
  const PosteriorSample s = rwm_sample(m, toy_data(), Prior::flat(), g, chain(200000), RngStream(1, 0));
  CHECK(s.acceptance_ok());
  CHECK(s.acceptance() > 0.0);
  CHECK(s.acceptance() < 1.0);
  const PosteriorSummary sum = posterior_moments(s, g);
  CHECK(std::abs(sum.mean[0] - 2.0) < 4 * std::sqrt(0.25 / sum.ess));
  CHECK(std::abs(sum.mean[0] - 2.0) < 4 * sum.mean_se[0] + 1e-12);
  CHECK(sum.cov(0, 0) == doctest::Approx(0.25).epsilon(0.05));

  const PosteriorSample again = rwm_sample(m, toy_data(), Prior::flat(), g, chain(200000), RngStream(1, 0));
  CHECK(again.draws == s.draws);
}

TEST_CASE("chains do not depend on the thread count") {
  GaussianMeanModel m(2, 1.0, 20);
  TrueProcess t;
  t.beta = Vector::Zero(2);
  RngStream rng(3, 0);
  const Dataset d = m.sample(t, rng);
  const LocalGeometry g = local_geometry(m, t);
  ChainConfig c = chain(5000);
  c.chains = 3;
  const PosteriorSample one = rwm_sample(m, d, Prior::flat(), g, c, RngStream(4, 0), 1);
  const PosteriorSample many = rwm_sample(m, d, Prior::flat(), g, c, RngStream(4, 0), 3);
  CHECK(one.draws == many.draws);
}

TEST_CASE("shifting the log density leaves the posterior unchanged") {
  GaussianMeanModel m(1, 1.0, 4);
  const LocalGeometry g = toy_geometry();
  const PosteriorSample a = rwm_sample(m, toy_data(), Prior::flat(), g, chain(50000), RngStream(2, 0));
  const PosteriorSample b = rwm_sample(m, toy_data(), Prior::custom([](const Vector&) { return 1000.0; }), g,
                                       chain(50000), RngStream(2, 0));
  const PosteriorSummary sa = posterior_moments(a, g), sb = posterior_moments(b, g);
  CHECK(std::abs(sa.mean[0] - sb.mean[0]) < 4 * std::hypot(sa.mean_se[0], sb.mean_se[0]) + 1e-12);
  CHECK(sa.cov(0, 0) == doctest::Approx(sb.cov(0, 0)).epsilon(0.05));
}

TEST_CASE("vanishing gaussian prior recovers the flat chain") {
  GaussianMeanModel m(1, 1.0, 4);
  const LocalGeometry g = toy_geometry();
  const PosteriorSummary a =
      posterior_moments(rwm_sample(m, toy_data(), Prior::flat(), g, chain(50000), RngStream(6, 0)), g);
  const PosteriorSummary b = posterior_moments(
      rwm_sample(m, toy_data(), Prior::gaussian(Matrix::Constant(1, 1, 1e-8)), g, chain(50000), RngStream(6, 1)), g);
  CHECK(std::abs(a.mean[0] - b.mean[0]) <= 5 * std::hypot(a.mean_se[0], b.mean_se[0]));
}

TEST_CASE("exact moments and tail bookkeeping") {
  GaussianMeanModel m(1, 1.0, 4);
  const LocalGeometry g = toy_geometry(1.5);
  const GaussianPosterior post = exact_gaussian_posterior(m, toy_data(), Prior::flat());
  const PosteriorSummary s = posterior_moments(post, g);
  CHECK(s.exact);
  CHECK(std::isinf(s.ess));
  CHECK(s.mean == post.mean);
  CHECK(s.cov == post.cov);
  CHECK(s.restricted_mass == doctest::Approx(chi2_cdf(1, 2.25)).epsilon(1e-12));
  CHECK(s.tail_mass == doctest::Approx((1 - s.restricted_mass) / s.restricted_mass).epsilon(1e-12));

  const PosteriorSummary wide = posterior_moments(post, toy_geometry(60.0));
  CHECK((wide.restricted_mean - wide.mean).norm() < 1e-6);
  CHECK((wide.restricted_cov - wide.cov).norm() < 1e-6);
}

TEST_CASE("posterior mgf") {
  GaussianMeanModel m(3, 1.0, 10);
  TrueProcess t;
  t.beta = Vector::Zero(3);
  RngStream rng(5, 0);
  const Dataset d = m.sample(t, rng);
  const LocalGeometry g = local_geometry(m, t);
  const ScoreState s = score_state(m, d, g);
  const GaussianPosterior post = exact_gaussian_posterior(m, d, Prior::flat());
  Vector lam(3);
  lam << 0.5, -1.0, 0.3;
  const std::vector<Estimate> e = posterior_mgf(post, g, s, {Vector::Zero(3), lam, Vector(-lam)});
  CHECK(e[0].value == 0.0);
  CHECK(e[1].value == doctest::Approx(lam.squaredNorm() / 2).epsilon(1e-12));
  CHECK(e[2].value == doctest::Approx(e[1].value).epsilon(1e-14));

  const PosteriorSample smp = rwm_sample(m, d, Prior::flat(), g, chain(100000), RngStream(7, 0));
  const std::vector<Estimate> mc = posterior_mgf(smp, g, s, {lam});
  CHECK(std::abs(mc[0].value - lam.squaredNorm() / 2) < 4 * mc[0].se);
}

TEST_CASE("set probabilities") {
  GaussianMeanModel m(3, 1.0, 10);
  TrueProcess t;
  t.beta = Vector::Zero(3);
  RngStream rng(5, 0);
  const Dataset d = m.sample(t, rng);
  const LocalGeometry g = local_geometry(m, t);
  const ScoreState s = score_state(m, d, g);
  const GaussianPosterior post = exact_gaussian_posterior(m, d, Prior::flat());
  CHECK(set_probability(post, g, s, SetSpec::full_space()).value == doctest::Approx(1.0));
  CHECK(set_probability(post, g, s, SetSpec::ball(Vector::Zero(3), 4.0)).value ==
        doctest::Approx(chi2_cdf(3, 4.0)).epsilon(1e-12));
  CHECK(set_probability(post, g, s, SetSpec::half_space(Vector::Unit(3, 0), 0.0)).value == doctest::Approx(0.5));
  const SetSpec b = SetSpec::ball(Vector::Constant(3, 0.2), 2.0);
  CHECK(set_probability(post, g, s, b).value + set_probability(post, g, s, b.complemented()).value ==
        doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("ess estimator") {
  std::vector<double> iid(20000);
  RngStream rng(1, 1);
  for (double& x : iid) x = rng.normal();
  CHECK(ess_initial_positive(iid) == doctest::Approx(20000).epsilon(0.15));
  std::vector<double> ar(20000);
  double x = 0.0;
  for (double& v : ar) v = x = 0.9 * x + rng.normal();
  // AR(1) with phi = 0.9: n (1 - phi) / (1 + phi)
  CHECK(ess_initial_positive(ar) == doctest::Approx(20000 * 0.1 / 1.9).epsilon(0.3));
}

TEST_CASE("separable data gives an improper flat posterior") {
  LogisticModel lg(1, 4);
  Matrix obs(4, 1), des(4, 1);
  obs << 0, 0, 1, 1;
  des << -2, -1, 1, 2;
  const LocalGeometry g = make_geometry(Vector::Zero(1), Matrix::Identity(1, 1), Matrix::Identity(1, 1));
  CHECK_FALSE(posterior_proper_along_rays(lg, Dataset::from_observations(obs, des), Prior::flat(), g));
  GaussianMeanModel m(1, 1.0, 4);
  CHECK(posterior_proper_along_rays(m, toy_data(), Prior::flat(), toy_geometry()));
}
