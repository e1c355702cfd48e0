#pragma once

#include "bvm/linalg.hpp"
#include "bvm/model.hpp"

#include <optional>

namespace bvm {

struct NewtonOptions {
  int max_iter = 200;
  double armijo = 1e-4;
  double grad_tol = 1e-10;
};

struct ThetaStarResult {
  Vector theta;
  bool on_boundary = false;
  int iterations = 0;
  double grad_norm = 0.0;
};

/// Maximiser of E L over the domain box. A maximiser pinned to the box
/// boundary is returned with on_boundary set.
ThetaStarResult solve_theta_star(const QuasiModel& m, const TrueProcess& truth,
                                 const NewtonOptions& opt = {});

struct MleResult {
  Vector theta_hat;
  bool converged = false;
  double grad_norm = 0.0;
  int iterations = 0;
};

/// Local maximiser of L from `init`. Divergence (e.g. separable logistic data)
/// yields converged == false together with the last iterate.
MleResult solve_mle(const QuasiModel& m, const Dataset& d, const Vector& init,
                    const NewtonOptions& opt = {});

struct InfoMatrices {
  Matrix d0_sq;
  Matrix v0_sq;
  Matrix v0_se;
};
/// D0^2 = -Hess E L(theta*), V0^2 = Var grad L(theta*). Throws
/// NotPositiveDefiniteError (with the spectrum) if D0^2 is not positive definite.
InfoMatrices info_matrices(const QuasiModel& m, const TrueProcess& truth, const Vector& theta_star);

/// Smallest a^2 with a^2 D0^2 >= V0^2: the top eigenvalue of D0^-1 V0^2 D0^-1.
double identifiability_a2(const Matrix& d0_sq, const Matrix& v0_sq);

struct GeometryOptions {
  std::optional<double> x_n;  // default p
  std::optional<double> r0;   // default sqrt(normalization (1 + a^2)(p + x_n))
  double normalization = 4.0;
  NewtonOptions newton;
};

struct LocalGeometry {
  Vector theta_star;
  Matrix d0_sq;
  Matrix v0_sq;
  SpdMatrix d0;
  double a_sq = 1.0;
  double r0 = 0.0;
  double x_n = 0.0;
  double q_star = 0.0;
  double normalization = 4.0;
  bool theta_star_on_boundary = false;

  Eigen::Index p() const { return theta_star.size(); }
  /// Sandwich matrix D0^-1 V0^2 D0^-1.
  Matrix sandwich() const;
  /// g = sqrt(p + x_n), the default moment range.
  double g_max() const;
};

LocalGeometry local_geometry(const QuasiModel& m, const TrueProcess& truth,
                             const GeometryOptions& opt = {});

/// Geometry from explicit matrices.
LocalGeometry make_geometry(const Vector& theta_star, const Matrix& d0_sq, const Matrix& v0_sq,
                            const GeometryOptions& opt = {});

struct ScoreState {
  Vector grad;  // grad L(theta*)
  Vector xi;
  Vector theta_circ;
  double q = 0.0;
};

ScoreState score_state(const QuasiModel& m, const Dataset& d, const LocalGeometry& g);
ScoreState score_state_from_gradient(const LocalGeometry& g, const Vector& grad);

enum class Side { upper, lower };

struct BracketPair {
  double rd = 0.0;
  Matrix d_ub_sq;
  Matrix d_lb_sq;
  Vector xi_ub;
  Vector xi_lb;
  Vector theta_ub;
  Vector theta_lb;
  Vector delta_rd_vec;  // D0 (theta_circ - theta_ub)
  Vector delta_lb_vec;  // D0 (theta_circ - theta_lb)
  Vector grad;
  Matrix d0_root;
  Vector theta_star;
};

BracketPair bracket_pair(const LocalGeometry& g, const ScoreState& s, double rd);

/// Lambda(theta, theta*) = xi_s' D_s (theta - theta*) - |D_s (theta - theta*)|^2 / 2.
double bracket_quadratic(const BracketPair& pair, Side side, const Vector& theta,
                         const Vector& theta_star);

/// |D0 (theta - theta*)|.
double local_radius(const LocalGeometry& g, const Vector& theta);
bool local_membership(const LocalGeometry& g, const Vector& theta);

/// |D_ub (theta_hat - theta*) - xi_ub|^2, to be compared with 2 * spread.
double mle_expansion_check(const LocalGeometry& g, const ScoreState& s, const BracketPair& pair,
                           const MleResult& mle);

/// D^2(theta): negative expected Hessian under the family's own law at theta.
Matrix plugin_fisher(const QuasiModel& m, const Vector& theta);

}  // namespace bvm
