#include "bvm/distributions.hpp"
#include "bvm/metrics.hpp"
#include "bvm/model.hpp"

#include <doctest.h>

#include <cmath>

using namespace bvm;

namespace {

struct ExactCase {
  LocalGeometry g;
  ScoreState s;
  GaussianPosterior post;
  PosteriorSummary sum;
};

ExactCase linear_case(double scale, Eigen::Index p = 4) {
  const Matrix x = GaussianLinearModel::random_design(60, p, 5) / scale;
  GaussianLinearModel m(x, 1.0);
  TrueProcess t;
  t.beta = Vector::LinSpaced(p, -0.5, 0.5) * scale;
  RngStream rng(9, 0);
  const Dataset d = m.sample(t, rng);
  ExactCase c{local_geometry(m, t), {}, exact_gaussian_posterior(m, d, Prior::flat()), {}};
  c.s = score_state(m, d, c.g);
  c.sum = posterior_moments(c.post, c.g);
  return c;
}

double simpson(const std::function<double(double)>& f, double a, double b, int n) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

}  // namespace

TEST_CASE("exact gaussian discrepancies vanish") {
  const ExactCase c = linear_case(1.0);
  CHECK(mean_discrepancy(c.sum, c.s, c.g) < 1e-12);
  const CovDiscrepancy cd = cov_discrepancy(c.sum, c.g);
  CHECK(cd.op_norm < 1e-10);
  CHECK(cd.trace_form < 1e-18);
  const std::vector<Vector> lams = random_lambdas(4, 50, 3);
  for (const Vector& l : lams) CHECK(l.squaredNorm() <= 4.0 + 1e-12);
  CHECK(mgf_discrepancy(posterior_mgf(c.post, c.g, c.s, lams), lams).value < 1e-10);
  CHECK(mgf_discrepancy(posterior_mgf(c.post, c.g, c.s, {Vector::Zero(4)}), {Vector::Zero(4)}).value == 0.0);
}

TEST_CASE("covariance inflation example") {
  const LocalGeometry g = make_geometry(Vector::Zero(3), Matrix::Identity(3, 3) * 7.0, Matrix::Identity(3, 3) * 7.0);
  PosteriorSummary s;
  s.mean = Vector::Zero(3);
  s.cov = 1.1 * g.d0.inverse();
  const CovDiscrepancy cd = cov_discrepancy(s, g);
  CHECK(cd.op_norm == doctest::Approx(0.1));
  CHECK(cd.trace_form == doctest::Approx(0.03));
}

TEST_CASE("norm sandwich for covariance discrepancies") {
  RngStream rng(2, 0);
  const Eigen::Index p = 5;
  const LocalGeometry g = make_geometry(Vector::Zero(p), Matrix::Identity(p, p), Matrix::Identity(p, p));
  for (int k = 0; k < 50; ++k) {
    Matrix a(p, p);
    for (Eigen::Index j = 0; j < p; ++j) a.col(j) = 0.3 * rng.normal_vector(p);
    PosteriorSummary s;
    s.mean = Vector::Zero(p);
    s.cov = Matrix::Identity(p, p) + (a + a.transpose()) / 2;
    const CovDiscrepancy cd = cov_discrepancy(s, g);
    CHECK(cd.op_norm <= std::sqrt(cd.trace_form) + 1e-12);
    CHECK(std::sqrt(cd.trace_form) <= std::sqrt(static_cast<double>(p)) * cd.op_norm + 1e-12);
  }
}

TEST_CASE("gaussian KL example") {
  const GaussCompare a = gaussian_kl_tv(Matrix::Identity(2, 2), Vector::Zero(2));
  CHECK(a.kl == 0.0);
  CHECK(a.tv_bound == 0.0);
  const GaussCompare b = gaussian_kl_tv(0.9 * Matrix::Identity(2, 2), Vector::Zero(2), 0.1);
  CHECK(b.kl == doctest::Approx(0.005360).epsilon(1e-3));
  CHECK(b.tv_bound == doctest::Approx(0.05177).epsilon(1e-3));
  CHECK(b.tv_bound == doctest::Approx(std::sqrt(b.kl / 2)).epsilon(1e-14));
  REQUIRE(b.lemma_bound.has_value());
  CHECK(*b.lemma_bound == doctest::Approx(0.01));
  CHECK(b.kl <= *b.lemma_bound);
}

TEST_CASE("KL matches quadrature in one dimension") {
  RngStream rng(8, 0);
  for (int k = 0; k < 20; ++k) {
    const double bb = 0.5 + rng.uniform();
    const double dl = rng.normal();
    // P0 = N(0, 1), P = N(dl, 1 / bb)
    auto integrand = [&](double x) {
      const double log_p0 = -0.5 * x * x;
      const double log_p = 0.5 * std::log(bb) - 0.5 * bb * (x - dl) * (x - dl);
      return std::exp(log_p0) / std::sqrt(2 * M_PI) * (log_p0 - log_p);
    };
    const double quad = simpson(integrand, -14.0, 14.0, 40000);
    Matrix b(1, 1);
    b << bb;
    CHECK(std::abs(gaussian_kl_tv(b, Vector::Constant(1, dl)).kl - quad) < 1e-8);
  }
}

TEST_CASE("TV monte carlo stays under Pinsker") {
  Matrix b = Matrix::Identity(2, 2);
  b(0, 0) = 1.3;
  Vector d(2);
  d << 0.2, -0.1;
  const GaussCompare c = gaussian_kl_tv(b, d);
  const Estimate tv = tv_monte_carlo(b, d, 200000, 4);
  CHECK(tv.value >= 0.0);
  CHECK(tv.value <= c.tv_bound + 3 * tv.se);
}

TEST_CASE("coronary concentration") {
  for (Eigen::Index p : {10, 100}) {
    const LocalGeometry g = make_geometry(Vector::Zero(p), Matrix::Identity(p, p), Matrix::Identity(p, p));
    GaussianMeanModel m(p, 1.0, 1);
    TrueProcess t;
    t.beta = Vector::Zero(p);
    RngStream rng(1, static_cast<std::uint64_t>(p));
    const Dataset d = m.sample(t, rng);
    const ScoreState s = score_state(m, d, g);
    const GaussianPosterior post = exact_gaussian_posterior(m, d, Prior::flat());
    const BracketPair pair = bracket_pair(g, s, 0.0);
    const ErrorBudget budget = error_budget(0, 0, pair, nu_r0(s, g), 0.0, g);
    const double pd = static_cast<double>(p);
    const std::vector<CoronaryRecord> recs = coronary_check(post, g, s, pair, budget, {0.0, std::min(4.0, pd / 8), std::max(4.0, pd / 8), pd / 2});
    double prev = INFINITY;
    for (const CoronaryRecord& r : recs) {
      CHECK(r.pass_upper);
      CHECK(r.pass_lower);
      CHECK(r.upper_bound <= prev);
      prev = r.upper_bound;
    }
    CHECK(recs[0].upper_bound >= 1.0);
    const double x1 = std::min(4.0, pd / 8);
    CHECK(recs[1].upper_measured == doctest::Approx(chi2_sf(pd, pd + std::sqrt(2.0 * pd * x1))).epsilon(1e-9));
    CHECK_THROWS(coronary_check(post, g, s, pair, budget, {pd}));
  }
}

TEST_CASE("probability sandwich in exact mode") {
  const ExactCase c = linear_case(1.0);
  const BracketPair pair = bracket_pair(c.g, c.s, 0.0);
  const ErrorBudget budget = error_budget(0, 0, pair, nu_r0(c.s, c.g), c.sum.tail_mass, c.g);
  const std::vector<ProbeSet> probes = default_probe_sets(4);
  std::vector<Estimate> measured;
  for (const ProbeSet& ps : probes) measured.push_back(set_probability(c.post, c.g, c.s, ps.set));
  const std::vector<ProbRecord> recs = prob_sandwich_check(probes, measured, budget, c.g, 1.0);
  for (const ProbRecord& r : recs) {
    CHECK(r.pass_upper);
    CHECK(r.pass_lower);
    CHECK(r.measured == doctest::Approx(r.gaussian).epsilon(1e-9));
  }
  CHECK(recs[0].measured + recs[1].measured == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(recs[2].measured + recs[3].measured == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("metrics are invariant under reparameterization") {
  const ExactCase a = linear_case(1.0), b = linear_case(10.0);
  CHECK(std::abs(mean_discrepancy(a.sum, a.s, a.g) - mean_discrepancy(b.sum, b.s, b.g)) < 1e-10);
  CHECK(std::abs(cov_discrepancy(a.sum, a.g).op_norm - cov_discrepancy(b.sum, b.g).op_norm) < 1e-10);
  CHECK(a.s.xi.isApprox(b.s.xi, 1e-10));
  const std::vector<Vector> lams = random_lambdas(4, 10, 1);
  const auto ma = posterior_mgf(a.post, a.g, a.s, lams), mb = posterior_mgf(b.post, b.g, b.s, lams);
  for (std::size_t i = 0; i < lams.size(); ++i) CHECK(ma[i].value == doctest::Approx(mb[i].value).epsilon(1e-10));
}
