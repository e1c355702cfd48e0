#pragma once

#include "bvm/core.hpp"

#include <span>
#include <vector>

namespace bvm {

/// Regularized lower incomplete gamma P(a, x).
double gamma_p(double a, double x);
/// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x), computed directly.
double gamma_q(double a, double x);

double chi2_cdf(double dof, double x);
double chi2_sf(double dof, double x);
double chi2_pdf(double dof, double x);
/// z with P(chi2_dof > z) = alpha.
double chi2_quantile(double dof, double alpha);

/// Noncentral chi-square with noncentrality lambda (sum of squared means).
double ncchi2_cdf(double dof, double lambda, double x);
double ncchi2_sf(double dof, double lambda, double x);

double normal_cdf(double x);
double normal_sf(double x);

/// P(sum_j w_j g_j^2 <= z) for independent standard normals g_j and w_j >= 0.
/// Ruben's chi-square mixture expansion; zero weights are dropped.
double quadform_cdf(const Vector& weights, double z, double tol = 1e-13);

/// log(mean(exp(v))) with max shift.
double log_mean_exp(std::span<const double> v);

/// Moments of a Gaussian vector restricted to a ball.
///
/// For u ~ N(m, I_p) and t >= 0: mass = P(|u|^2 <= t), first = E[u 1{|u|^2 <= t}],
/// second = E[u u^T 1{|u|^2 <= t}].
struct RestrictedGaussMoments {
  double mass = 0.0;
  Vector first;
  Matrix second;
};
RestrictedGaussMoments restricted_gauss_moments(const Vector& m, double t);

}  // namespace bvm
