#include "bvm/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace bvm {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr double kTiny = 1e-300;

double log_prefactor(double a, double x) { return -x + a * std::log(x) - std::lgamma(a); }

// Series for P(a, x); converges quickly for x < a.
double gamma_p_series(double a, double x) {
  double ap = a;
  double del = 1.0 / a;
  double sum = del;
  for (int n = 0; n < 100000; ++n) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::abs(del) < std::abs(sum) * kEps) break;
  }
  return sum * std::exp(log_prefactor(a, x));
}

// Modified Lentz continued fraction for Q(a, x); used for x >= a.
double gamma_q_cf(double a, double x) {
  double b = x + 1.0 - a;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 100000; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) break;
  }
  return std::exp(log_prefactor(a, x)) * h;
}

void check_gamma_args(double a, double x) {
  if (!(a > 0.0) || !(x >= 0.0) || std::isnan(x))
    throw InvalidArgument("incomplete gamma requires a > 0 and x >= 0");
}

// Sum over j of Poisson(j; mu) * f(j), walking outward from the mode until the
// remaining Poisson mass cannot move the result by more than tol.
template <typename F>
double poisson_mixture(double mu, F&& f, double tol) {
  if (mu <= 0.0) return f(0);
  const long mode = static_cast<long>(std::floor(mu));
  auto log_pmf = [mu](long j) {
    return static_cast<double>(j) * std::log(mu) - mu - std::lgamma(static_cast<double>(j) + 1.0);
  };
  double total = 0.0;
  double mass = 0.0;
  for (long j = mode; j >= 0; --j) {
    const double w = std::exp(log_pmf(j));
    total += w * f(j);
    mass += w;
    if (w < tol * 1e-3 && j < mode - 10) break;
  }
  for (long j = mode + 1;; ++j) {
    const double w = std::exp(log_pmf(j));
    total += w * f(j);
    mass += w;
    if ((w < tol * 1e-3 && j > mode + 10) || 1.0 - mass < tol * 1e-3) break;
    if (j > mode + 100000) break;
  }
  return total;
}

}  // namespace

double gamma_p(double a, double x) {
  check_gamma_args(a, x);
  if (x == 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  return x < a ? gamma_p_series(a, x) : 1.0 - gamma_q_cf(a, x);
}

double gamma_q(double a, double x) {
  check_gamma_args(a, x);
  if (x == 0.0) return 1.0;
  if (std::isinf(x)) return 0.0;
  return x < a ? 1.0 - gamma_p_series(a, x) : gamma_q_cf(a, x);
}

double chi2_cdf(double dof, double x) { return x <= 0.0 ? 0.0 : gamma_p(0.5 * dof, 0.5 * x); }
double chi2_sf(double dof, double x) { return x <= 0.0 ? 1.0 : gamma_q(0.5 * dof, 0.5 * x); }

double chi2_pdf(double dof, double x) {
  if (x < 0.0) return 0.0;
  if (x == 0.0) return dof == 2.0 ? 0.5 : (dof < 2.0 ? std::numeric_limits<double>::infinity() : 0.0);
  const double k = 0.5 * dof;
  return std::exp((k - 1.0) * std::log(x) - 0.5 * x - k * std::log(2.0) - std::lgamma(k));
}

double chi2_quantile(double dof, double alpha) {
  if (!(dof > 0.0)) throw InvalidArgument("chi2_quantile requires dof > 0");
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("chi2_quantile requires 0 < alpha < 1");
  // Work on whichever tail is smaller for accuracy.
  const bool upper = alpha < 0.5;
  auto resid = [&](double z) { return upper ? chi2_sf(dof, z) - alpha : chi2_cdf(dof, z) - (1.0 - alpha); };
  // resid is decreasing in z for the upper tail and increasing for the lower one.
  double lo = 0.0, hi = std::max(1.0, dof);
  auto above = [&](double z) { return upper ? resid(z) > 0.0 : resid(z) < 0.0; };
  while (above(hi)) {
    lo = hi;
    hi *= 2.0;
  }
  for (int i = 0; i < 200 && hi - lo > 1e-6 * std::max(1.0, hi); ++i) {
    const double mid = 0.5 * (lo + hi);
    (above(mid) ? lo : hi) = mid;
  }
  double z = 0.5 * (lo + hi);
  for (int i = 0; i < 50; ++i) {
    const double f = resid(z);
    const double slope = upper ? -chi2_pdf(dof, z) : chi2_pdf(dof, z);
    if (slope == 0.0 || !std::isfinite(slope)) break;
    double next = z - f / slope;
    if (next <= lo || next >= hi) next = 0.5 * (lo + hi);
    if (above(next)) lo = next; else hi = next;
    const double step = std::abs(next - z);
    z = next;
    if (step <= 1e-15 * std::max(1.0, z)) break;
  }
  return z;
}

double ncchi2_cdf(double dof, double lambda, double x) {
  if (lambda < 0.0) throw InvalidArgument("noncentrality must be nonnegative");
  if (x <= 0.0) return 0.0;
  return poisson_mixture(0.5 * lambda, [&](long j) { return chi2_cdf(dof + 2.0 * j, x); }, 1e-15);
}

double ncchi2_sf(double dof, double lambda, double x) {
  if (lambda < 0.0) throw InvalidArgument("noncentrality must be nonnegative");
  if (x <= 0.0) return 1.0;
  return poisson_mixture(0.5 * lambda, [&](long j) { return chi2_sf(dof + 2.0 * j, x); }, 1e-15);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }
double normal_sf(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

double quadform_cdf(const Vector& weights, double z, double tol) {
  std::vector<double> w;
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    if (weights[i] < 0.0) throw InvalidArgument("quadform_cdf requires nonnegative weights");
    if (weights[i] > 0.0) w.push_back(weights[i]);
  }
  if (z <= 0.0) return 0.0;
  if (w.empty()) return 1.0;
  const double beta = *std::min_element(w.begin(), w.end());
  const double p = static_cast<double>(w.size());
  std::vector<double> ratio(w.size());
  double log_c0 = 0.0;
  for (std::size_t j = 0; j < w.size(); ++j) {
    ratio[j] = 1.0 - beta / w[j];
    log_c0 += 0.5 * std::log(beta / w[j]);
  }
  std::vector<double> c{std::exp(log_c0)};
  std::vector<double> g{0.0};
  double acc = c[0] * chi2_cdf(p, z / beta);
  double csum = c[0];
  for (std::size_t k = 1; k < 5000; ++k) {
    double gk = 0.0;
    for (double r : ratio) gk += std::pow(r, static_cast<double>(k));
    g.push_back(gk);
    double ck = 0.0;
    for (std::size_t r = 0; r < k; ++r) ck += g[k - r] * c[r];
    ck /= 2.0 * static_cast<double>(k);
    c.push_back(ck);
    csum += ck;
    const double fk = chi2_cdf(p + 2.0 * k, z / beta);
    acc += ck * fk;
    // Later terms carry at most the leftover mixture mass times a smaller cdf.
    if ((1.0 - csum) * fk < tol || 1.0 - csum < tol) break;
  }
  return std::clamp(acc, 0.0, 1.0);
}

double log_mean_exp(std::span<const double> v) {
  if (v.empty()) throw InvalidArgument("log_mean_exp of empty range");
  const double m = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s / static_cast<double>(v.size()));
}

RestrictedGaussMoments restricted_gauss_moments(const Vector& m, double t) {
  const double p = static_cast<double>(m.size());
  const double lam = m.squaredNorm();
  RestrictedGaussMoments out;
  out.mass = ncchi2_cdf(p, lam, t);
  const double f2 = ncchi2_cdf(p + 2.0, lam, t);
  const double f4 = ncchi2_cdf(p + 4.0, lam, t);
  out.first = m * f2;
  out.second = Matrix::Identity(m.size(), m.size()) * f2 + m * m.transpose() * f4;
  return out;
}

}  // namespace bvm
