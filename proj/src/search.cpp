#include "bvm/search.hpp"

#include "bvm/model.hpp"

#include <boost/math/special_functions/erf.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

namespace bvm {

namespace {

std::vector<int> first_primes(Eigen::Index count) {
  std::vector<int> primes;
  for (int c = 2; static_cast<Eigen::Index>(primes.size()) < count; ++c) {
    bool prime = true;
    for (int q : primes) {
      if (q * q > c) break;
      if (c % q == 0) {
        prime = false;
        break;
      }
    }
    if (prime) primes.push_back(c);
  }
  return primes;
}

double radical_inverse(std::size_t i, int base) {
  double f = 1.0, r = 0.0;
  while (i > 0) {
    f /= base;
    r += f * static_cast<double>(i % static_cast<std::size_t>(base));
    i /= static_cast<std::size_t>(base);
  }
  return r;
}

enum class Domain { ball, sphere };

Vector project(const Vector& w, double r, Domain dom) {
  const double nw = w.norm();
  if (dom == Domain::sphere) return nw > 0.0 ? Vector(w * (r / nw)) : w;
  return nw > r ? Vector(w * (r / nw)) : w;
}

double eval(const Objective& f, const Vector& w, std::size_t& count) {
  ++count;
  const double v = f(w);
  return std::isfinite(v) ? v : -std::numeric_limits<double>::infinity();
}

void polish(SearchResult& best, double r, const Objective& f, int steps, Domain dom) {
  if (!std::isfinite(best.value) || steps <= 0) return;
  const Eigen::Index p = best.w.size();
  Vector x = best.w;
  double fx = best.value;
  for (int s = 0; s < steps; ++s) {
    Vector g(p);
    bool ok = true;
    for (Eigen::Index j = 0; j < p && ok; ++j) {
      const double h = fd_step(x[j]);
      Vector a = x, b = x;
      a[j] += h;
      b[j] -= h;
      const double fa = eval(f, a, best.evaluations), fb = eval(f, b, best.evaluations);
      if (!std::isfinite(fa) || !std::isfinite(fb)) ok = false;
      g[j] = (fa - fb) / (2.0 * h);
    }
    if (!ok || g.norm() == 0.0) break;
    Vector d;
    if (p <= 8) {
      Matrix hess(p, p);
      for (Eigen::Index j = 0; j < p; ++j) {
        for (Eigen::Index k = j; k < p; ++k) {
          const double hj = fd_step(x[j]) * 10.0, hk = fd_step(x[k]) * 10.0;
          Vector pp = x, pm = x, mp = x, mm = x;
          pp[j] += hj; pp[k] += hk;
          pm[j] += hj; pm[k] -= hk;
          mp[j] -= hj; mp[k] += hk;
          mm[j] -= hj; mm[k] -= hk;
          const double v = (eval(f, pp, best.evaluations) - eval(f, pm, best.evaluations) -
                            eval(f, mp, best.evaluations) + eval(f, mm, best.evaluations)) /
                           (4.0 * hj * hk);
          hess(j, k) = hess(k, j) = v;
        }
      }
      Eigen::LLT<Matrix> llt(-hess);
      if (llt.info() == Eigen::Success && hess.allFinite()) d = llt.solve(g);
    }
    if (d.size() == 0 || !d.allFinite()) d = g * (0.1 * std::max(r, 1e-12) / g.norm());
    bool improved = false;
    double t = 1.0;
    for (int k = 0; k < 20; ++k, t *= 0.5) {
      const Vector c = project(x + t * d, r, dom);
      const double fc = eval(f, c, best.evaluations);
      if (fc > fx) {
        x = c;
        fx = fc;
        improved = true;
        break;
      }
    }
    if (!improved) break;
  }
  if (fx > best.value) {
    best.value = fx;
    best.w = x;
  }
}

SearchResult grid_search(const Matrix& dirs, double r, const Objective& f, const SearchPlan& plan,
                         Domain dom) {
  if (dirs.cols() == 0) throw InvalidArgument("empty search plan");
  if (!(r >= 0.0)) throw InvalidArgument("search radius must be nonnegative");
  SearchResult best;
  best.w = Vector::Zero(dirs.rows());
  const int nr = dom == Domain::ball ? std::max(1, plan.radii) : 1;
  for (int k = 1; k <= nr; ++k) {
    const double rad = dom == Domain::ball ? r * k / nr : r;
    for (Eigen::Index j = 0; j < dirs.cols(); ++j) {
      const Vector w = rad * dirs.col(j);
      const double v = eval(f, w, best.evaluations);
      if (v > best.value) {
        best.value = v;
        best.w = w;
      }
    }
  }
  polish(best, r, f, plan.polish_steps, dom);
  return best;
}

}  // namespace

std::size_t default_direction_count(Eigen::Index p) {
  if (p == 1) return 2;
  return std::min<std::size_t>(static_cast<std::size_t>(2 * p * 64), 4096);
}

Matrix sphere_directions(Eigen::Index p, std::size_t count) {
  if (p < 1) throw InvalidArgument("sphere_directions needs p >= 1");
  count = std::max<std::size_t>(count, static_cast<std::size_t>(2 * p));
  Matrix dirs(p, static_cast<Eigen::Index>(count));
  Eigen::Index c = 0;
  for (Eigen::Index j = 0; j < p; ++j) {
    dirs.col(c++) = Vector::Unit(p, j);
    dirs.col(c++) = -Vector::Unit(p, j);
  }
  const std::vector<int> primes = first_primes(p);
  for (std::size_t i = 20; c < dirs.cols(); ++i) {
    Vector v(p);
    for (Eigen::Index j = 0; j < p; ++j) {
      const double u = radical_inverse(i, primes[static_cast<std::size_t>(j)]);
      v[j] = std::numbers::sqrt2 * boost::math::erf_inv(2.0 * u - 1.0);
    }
    const double nv = v.norm();
    if (nv == 0.0 || !std::isfinite(nv)) continue;
    dirs.col(c++) = v / nv;
  }
  return dirs;
}

SearchResult ball_sup(const Matrix& dirs, double r, const Objective& f, const SearchPlan& plan) {
  return grid_search(dirs, r, f, plan, Domain::ball);
}

SearchResult sphere_sup(const Matrix& dirs, double r, const Objective& f, const SearchPlan& plan) {
  return grid_search(dirs, r, f, plan, Domain::sphere);
}

}  // namespace bvm
