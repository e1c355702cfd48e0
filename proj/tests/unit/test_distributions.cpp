#include "bvm/distributions.hpp"
#include "bvm/linalg.hpp"
#include "bvm/rng.hpp"

#include <doctest.h>

#include <cmath>

using namespace bvm;

TEST_CASE("chi-square quantiles") {
  CHECK(chi2_quantile(2, 0.05) == doctest::Approx(5.99146).epsilon(1e-6));
  CHECK(chi2_quantile(1, 0.05) == doctest::Approx(3.84146).epsilon(1e-6));
  CHECK(chi2_quantile(2, 0.5) == doctest::Approx(1.38629).epsilon(1e-5));
}

TEST_CASE("chi2_quantile inverts the cdf") {
  for (double p : {1.0, 2.0, 5.0, 20.0, 100.0})
    for (double a : {0.01, 0.05, 0.1, 0.5}) {
      CAPTURE(p);
      CAPTURE(a);
      CHECK(std::abs(chi2_cdf(p, chi2_quantile(p, a)) - (1.0 - a)) < 1e-9);
    }
}

TEST_CASE("incomplete gamma complements") {
  for (double a : {0.5, 1.0, 3.5, 40.0})
    for (double x : {0.1, 1.0, 10.0, 60.0}) CHECK(gamma_p(a, x) + gamma_q(a, x) == doctest::Approx(1.0).epsilon(1e-12));
  // p = 2: exponential cdf
  CHECK(chi2_cdf(2, 3.0) == doctest::Approx(1.0 - std::exp(-1.5)).epsilon(1e-13));
}

TEST_CASE("noncentral chi-square against Monte Carlo") {
  RngStream rng(11, 0);
  const int p = 5;
  Vector shift = Vector::Zero(p);
  shift[0] = 1.0;
  shift[1] = 1.0;  // |shift|^2 = 2
  const double z = 40.0 / 4.0;
  const int n = 400000;
  int hit = 0;
  for (int i = 0; i < n; ++i) hit += (rng.normal_vector(p) + shift).squaredNorm() <= z;
  const double mc = static_cast<double>(hit) / n;
  const double se = std::sqrt(mc * (1 - mc) / n);
  CHECK(std::abs(ncchi2_cdf(p, 2.0, z) - mc) < 4 * se);
  CHECK(ncchi2_cdf(p, 0.0, z) == doctest::Approx(chi2_cdf(p, z)).epsilon(1e-12));
  CHECK(ncchi2_cdf(p, 2.0, z) + ncchi2_sf(p, 2.0, z) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("quadratic form cdf") {
  Vector w = Vector::Ones(3);
  CHECK(quadform_cdf(w, 4.0) == doctest::Approx(chi2_cdf(3, 4.0)).epsilon(1e-10));
  Vector w1(1);
  w1 << 2.0;
  CHECK(quadform_cdf(w1, 3.841458820694124) == doctest::Approx(0.83426).epsilon(1e-4));

  // unequal weights against Monte Carlo
  Vector w3(3);
  w3 << 2.0, 0.5, 1.3;
  RngStream rng(21, 0);
  const int n = 400000;
  int hit = 0;
  for (int i = 0; i < n; ++i) {
    const Vector g = rng.normal_vector(3);
    hit += w3.dot(g.cwiseAbs2()) <= 5.0;
  }
  const double mc = static_cast<double>(hit) / n;
  CHECK(std::abs(quadform_cdf(w3, 5.0) - mc) < 4 * std::sqrt(mc * (1 - mc) / n));
}

TEST_CASE("normal tails") {
  CHECK(normal_cdf(0.0) == doctest::Approx(0.5));
  CHECK(normal_cdf(1.3) + normal_sf(1.3) == doctest::Approx(1.0).epsilon(1e-15));
  // nu for xi = 0, p = 1, r0 = 3
  CHECK(-std::log(chi2_cdf(1, 9.0)) == doctest::Approx(0.002703).epsilon(1e-3));
}

TEST_CASE("operator norm and psd projection") {
  Matrix m(2, 2);
  m << 2.0, 0.0, 0.0, -3.0;
  CHECK(sym_operator_norm(m) == doctest::Approx(3.0));
  bool projected = false;
  const Matrix q = project_psd(m, &projected);
  CHECK(projected);
  CHECK(q(1, 1) >= 0.0);
  const Matrix s = psd_sqrt(Matrix::Identity(3, 3) * 4.0);
  CHECK((s - 2.0 * Matrix::Identity(3, 3)).norm() < 1e-12);
}
