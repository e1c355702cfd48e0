#include "bvm/credible.hpp"
#include "bvm/distributions.hpp"
#include "bvm/model.hpp"

#include <doctest.h>

#include <cmath>

using namespace bvm;

TEST_CASE("set membership and nesting") {
  const LocalGeometry g = make_geometry(Vector::Zero(2), Matrix::Identity(2, 2), Matrix::Identity(2, 2));
  const ScoreState s = score_state_from_gradient(g, Vector::Ones(2));
  const CredibleSet c = oracle_set(g, s, credible_threshold(2, 0.05));
  CHECK(c.contains(c.center));
  CHECK(credible_threshold(2, 0.1) < credible_threshold(2, 0.05));
  CHECK(credible_threshold(2, 0.05) == doctest::Approx(5.99146).epsilon(1e-6));
}

TEST_CASE("plugin interval half-width") {
  GaussianMeanModel m(1, 1.0, 4);
  PosteriorSummary s;
  s.mean = Vector::Constant(1, 2.0);
  s.cov = Matrix::Constant(1, 1, 0.25);
  const CredibleSet c = plugin_set(m, s, 3.8415);
  const double hw = std::sqrt(3.8415 / 4.0);  // 0.97999
  CHECK(c.contains(Vector::Constant(1, 2.0 + hw - 1e-9)));
  CHECK_FALSE(c.contains(Vector::Constant(1, 2.0 + hw + 1e-9)));
}

TEST_CASE("posterior mass of the oracle set") {
  GaussianMeanModel m(3, 1.0, 10);
  TrueProcess t;
  t.beta = Vector::Zero(3);
  RngStream rng(2, 0);
  const Dataset d = m.sample(t, rng);
  const LocalGeometry g = local_geometry(m, t);
  const ScoreState s = score_state(m, d, g);
  const GaussianPosterior post = exact_gaussian_posterior(m, d, Prior::flat());
  CHECK(posterior_mass(oracle_set(g, s, credible_threshold(3, 0.1)), post, g, s).value ==
        doctest::Approx(0.9).epsilon(1e-10));
  CHECK(posterior_mass(oracle_set(g, s, 1e6), post, g, s).value == doctest::Approx(1.0));

  ChainConfig cc;
  cc.draws = 50000;
  const PosteriorSample smp = rwm_sample(m, d, Prior::flat(), g, cc, RngStream(3, 0));
  const Estimate mc = posterior_mass(oracle_set(g, s, credible_threshold(3, 0.1)), smp, g, s);
  CHECK(std::abs(mc.value - 0.9) < 4 * mc.se);
}

TEST_CASE("coverage of the oracle set") {
  GaussianMeanModel m(1, 1.0, 50);
  TrueProcess t;
  t.beta = Vector::Constant(1, 0.2);
  const LocalGeometry g = local_geometry(m, t);
  CoverageScenario sc;
  sc.model = &m;
  sc.truth = t;
  sc.n_reps = 4000;
  sc.seed = 77;
  const CoverageResult r = coverage_mc(sc, g);
  CHECK(r.valid);
  CHECK(std::abs(r.rate - 0.95) < 4 * std::sqrt(0.95 * 0.05 / 4000));

  TrueProcess wide = t;
  wide.noise_sd = std::sqrt(2.0);
  const LocalGeometry gw = local_geometry(m, wide);
  sc.truth = wide;
  const CoverageResult rw = coverage_mc(sc, gw);
  const double pred = sandwich_coverage(sandwich_matrix(gw), credible_threshold(1, 0.05));
  CHECK(pred == doctest::Approx(0.83426).epsilon(1e-4));
  CHECK(std::abs(rw.rate - pred) < 4 * std::sqrt(pred * (1 - pred) / 4000));
  CHECK(rw.rate < 0.95);

  sc.alpha = 1e-12;
  sc.n_reps = 200;
  CHECK(coverage_mc(sc, gw).rate == 1.0);
  sc.n_reps = 10;
  CHECK_THROWS(coverage_mc(sc, gw));
}

TEST_CASE("coverage tally") {
  const std::vector<std::optional<bool>> v{true, false, true, std::nullopt};
  const CoverageResult r = tally_coverage(v, 0.05);
  CHECK(r.n_reps == 3);  // failed replications are excluded
  CHECK(r.covered == 2);
  CHECK(r.failures == 1);
  CHECK(r.rate == doctest::Approx(2.0 / 3.0));
  CHECK(r.rate >= 0.0);
  CHECK(r.rate <= 1.0);
  CHECK_FALSE(r.valid);
}

TEST_CASE("sandwich coverage") {
  const LocalGeometry g = make_geometry(Vector::Zero(2), Matrix::Identity(2, 2), Matrix::Identity(2, 2));
  const SandwichSpec id = sandwich_matrix(g);
  CHECK(id.identity);
  CHECK(sandwich_coverage(id, 3.0) == doctest::Approx(chi2_cdf(2, 3.0)).epsilon(1e-10));
  SandwichSpec two{Matrix::Constant(1, 1, 2.0), false};
  CHECK(sandwich_coverage(two, 3.8415) == doctest::Approx(0.83426).epsilon(1e-4));
  Matrix mm = Matrix::Zero(2, 2);
  mm.diagonal() << 2.0, 0.5;
  const double z = credible_threshold(2, 0.05);
  const double c = sandwich_coverage(SandwichSpec{mm, false}, z);
  CHECK(c > sandwich_coverage(SandwichSpec{Matrix::Identity(2, 2) * 2.0, false}, z));
  CHECK(c < sandwich_coverage(SandwichSpec{Matrix::Identity(2, 2) * 0.5, false}, z));
}
