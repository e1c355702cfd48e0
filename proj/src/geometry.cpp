#include "bvm/geometry.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace bvm {

namespace {

struct NewtonOutcome {
  Vector x;
  bool converged = false;
  bool on_boundary = false;
  int iterations = 0;
  double grad_norm = 0.0;
};

bool at_boundary(const Vector& x, const Box& box) {
  for (Eigen::Index i = 0; i < x.size(); ++i)
    if (x[i] <= box.lo[i] || x[i] >= box.hi[i]) return true;
  return false;
}

// Box-constrained damped Newton ascent with Armijo backtracking (halving).
template <typename F, typename G, typename H>
NewtonOutcome newton_max(F&& f, G&& grad, H&& hess, Vector x, const Box& box,
                         const NewtonOptions& opt) {
  NewtonOutcome out;
  const Eigen::Index p = x.size();
  for (int it = 0; it <= opt.max_iter; ++it) {
    out.iterations = it;
    const double fx = f(x);
    Vector g = grad(x);
    // Coordinates pinned at a bound with the gradient pointing outward are frozen.
    std::vector<bool> frozen(static_cast<std::size_t>(p), false);
    Vector gfree = g;
    for (Eigen::Index i = 0; i < p; ++i) {
      if ((x[i] <= box.lo[i] && g[i] < 0.0) || (x[i] >= box.hi[i] && g[i] > 0.0)) {
        frozen[static_cast<std::size_t>(i)] = true;
        gfree[i] = 0.0;
      }
    }
    out.grad_norm = g.norm();
    const double tol = opt.grad_tol * (1.0 + std::abs(fx));
    if (out.grad_norm <= tol) {
      out.x = x;
      out.converged = true;
      out.on_boundary = at_boundary(x, box);
      return out;
    }
    if (gfree.norm() <= tol) {
      out.x = x;
      out.on_boundary = true;
      return out;
    }
    if (it == opt.max_iter) break;
    Matrix negh = -hess(x);
    for (Eigen::Index i = 0; i < p; ++i) {
      if (!frozen[static_cast<std::size_t>(i)]) continue;
      negh.row(i).setZero();
      negh.col(i).setZero();
      negh(i, i) = 1.0;
    }
    Vector d;
    bool newton = false;
    Eigen::LLT<Matrix> llt(negh);
    if (llt.info() == Eigen::Success) {
      d = llt.solve(gfree);
      newton = true;
    } else {
      const double scale = std::max(negh.diagonal().cwiseAbs().maxCoeff(), 1e-300);
      d = gfree / scale;
    }
    double slope = g.dot(d);
    if (!(slope > 0.0)) {
      d = gfree;
      slope = g.dot(d);
      newton = false;
    }
    // Newton decrement at rounding level of f: Armijo can no longer tell, so
    // the full step is taken.
    const bool tiny = newton && slope <= 1e-10 * (1.0 + std::abs(fx));
    double tmax = 1.0;
    for (Eigen::Index i = 0; i < p; ++i) {
      if (d[i] > 0.0) tmax = std::min(tmax, (box.hi[i] - x[i]) / d[i]);
      else if (d[i] < 0.0) tmax = std::min(tmax, (box.lo[i] - x[i]) / d[i]);
    }
    double t = tmax;
    bool accepted = false;
    Vector next;
    for (int k = 0; k < 60; ++k) {
      next = x + t * d;
      if (t == tmax && tmax < 1.0) {
        for (Eigen::Index i = 0; i < p; ++i) next[i] = std::clamp(next[i], box.lo[i], box.hi[i]);
      }
      const double fn = f(next);
      if (std::isfinite(fn) && (fn >= fx + opt.armijo * t * slope || (tiny && t == 1.0))) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) break;
    x = next;
  }
  out.x = x;
  out.on_boundary = at_boundary(x, box);
  return out;
}

Vector box_start(const Box& box) {
  Vector x = Vector::Zero(box.lo.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = std::clamp(0.0, box.lo[i], box.hi[i]);
  return x;
}

}  // namespace

ThetaStarResult solve_theta_star(const QuasiModel& m, const TrueProcess& truth,
                                 const NewtonOptions& opt) {
  auto f = [&](const Vector& t) { return m.expected_loglik(truth, t).value; };
  auto g = [&](const Vector& t) { return m.expected_gradient(truth, t).value; };
  auto h = [&](const Vector& t) { return m.expected_hessian(truth, t).value; };
  NewtonOutcome o = newton_max(f, g, h, box_start(m.box()), m.box(), opt);
  if (!o.converged && !o.on_boundary)
    throw ConvergenceError("theta* search did not converge", o.x);
  ThetaStarResult r;
  r.theta = o.x;
  r.on_boundary = o.on_boundary;
  r.iterations = o.iterations;
  r.grad_norm = o.grad_norm;
  return r;
}

MleResult solve_mle(const QuasiModel& m, const Dataset& d, const Vector& init,
                    const NewtonOptions& opt) {
  m.box().check(init);
  auto f = [&](const Vector& t) { return m.log_lik(d, t); };
  auto g = [&](const Vector& t) { return m.score(d, t); };
  auto h = [&](const Vector& t) { return m.observed_hessian(d, t); };
  NewtonOutcome o = newton_max(f, g, h, init, m.box(), opt);
  MleResult r;
  r.theta_hat = o.x;
  r.converged = o.converged && !o.on_boundary;
  if (r.converged) {
    // A vanishing gradient on a flat ridge (separable data) is not a maximiser.
    const Eigen::SelfAdjointEigenSolver<Matrix> at_init(symmetrize(-h(init)), Eigen::EigenvaluesOnly);
    const Eigen::SelfAdjointEigenSolver<Matrix> at_hat(symmetrize(-h(o.x)), Eigen::EigenvaluesOnly);
    const double scale = std::max(1.0, at_init.eigenvalues().cwiseAbs().maxCoeff());
    if (!(at_hat.eigenvalues().minCoeff() > 1e-8 * scale)) r.converged = false;
  }
  r.grad_norm = o.grad_norm;
  r.iterations = o.iterations;
  return r;
}

InfoMatrices info_matrices(const QuasiModel& m, const TrueProcess& truth, const Vector& theta_star) {
  InfoMatrices out;
  out.d0_sq = symmetrize(-m.expected_hessian(truth, theta_star).value);
  SpdMatrix check(out.d0_sq, "D0^2");
  MatrixEstimate v = m.score_covariance(truth, theta_star);
  out.v0_sq = symmetrize(v.value);
  out.v0_se = v.se;
  return out;
}

double identifiability_a2(const Matrix& d0_sq, const Matrix& v0_sq) {
  SpdMatrix d0(d0_sq, "D0^2");
  const Matrix s = symmetrize(d0.inv_root() * v0_sq * d0.inv_root());
  PowerIterationResult pw = power_iteration(s, 1e-10, 10000);
  double value = pw.value;
  if (s.rows() <= 64) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(s, Eigen::EigenvaluesOnly);
    const double dense = eig.eigenvalues().maxCoeff();
    // Power iteration stalls on near-ties; the dense value is authoritative then.
    if (!pw.converged || std::abs(dense - value) > 1e-9 * std::max(1.0, std::abs(dense))) value = dense;
  }
  return std::max(0.0, value);
}

Matrix LocalGeometry::sandwich() const {
  return symmetrize(d0.inv_root() * v0_sq * d0.inv_root());
}

double LocalGeometry::g_max() const { return std::sqrt(static_cast<double>(p()) + x_n); }

LocalGeometry make_geometry(const Vector& theta_star, const Matrix& d0_sq, const Matrix& v0_sq,
                            const GeometryOptions& opt) {
  LocalGeometry g;
  g.theta_star = theta_star;
  g.d0 = SpdMatrix(d0_sq, "D0^2");
  g.d0_sq = g.d0.matrix();
  g.v0_sq = symmetrize(v0_sq);
  g.a_sq = identifiability_a2(g.d0_sq, g.v0_sq);
  const double p = static_cast<double>(theta_star.size());
  g.normalization = opt.normalization;
  g.x_n = opt.x_n.value_or(p);
  if (!(g.x_n > 0.0)) throw InvalidArgument("x_n must be positive");
  const double floor_sq = g.normalization * (1.0 + g.a_sq) * p;
  if (opt.r0) {
    g.r0 = *opt.r0;
    if (!(g.r0 > 0.0)) throw InvalidArgument("r0 must be positive");
    if (g.r0 * g.r0 < floor_sq * (1.0 - 1e-12)) {
      std::ostringstream os;
      os << "r0^2 = " << g.r0 * g.r0 << " is below normalization (1 + a^2) p = " << floor_sq;
      throw InvalidArgument(os.str());
    }
  } else {
    g.r0 = std::sqrt(g.normalization * (1.0 + g.a_sq) * (p + g.x_n));
  }
  g.q_star = p + g.sandwich().trace();
  return g;
}

LocalGeometry local_geometry(const QuasiModel& m, const TrueProcess& truth, const GeometryOptions& opt) {
  ThetaStarResult ts = solve_theta_star(m, truth, opt.newton);
  InfoMatrices info = info_matrices(m, truth, ts.theta);
  LocalGeometry g = make_geometry(ts.theta, info.d0_sq, info.v0_sq, opt);
  g.theta_star_on_boundary = ts.on_boundary;
  return g;
}

ScoreState score_state_from_gradient(const LocalGeometry& g, const Vector& grad) {
  ScoreState s;
  s.grad = grad;
  s.xi = g.d0.inv_root() * grad;
  s.theta_circ = g.theta_star + g.d0.inv_root() * s.xi;
  s.q = static_cast<double>(g.p()) + s.xi.squaredNorm();
  return s;
}

ScoreState score_state(const QuasiModel& m, const Dataset& d, const LocalGeometry& g) {
  return score_state_from_gradient(g, m.score(d, g.theta_star));
}

BracketPair bracket_pair(const LocalGeometry& g, const ScoreState& s, double rd) {
  if (!(rd >= 0.0 && rd < 1.0)) throw InvalidArgument("bracketing constant must satisfy 0 <= rd < 1");
  BracketPair b;
  b.rd = rd;
  b.d_ub_sq = (1.0 - rd) * g.d0_sq;
  b.d_lb_sq = (1.0 + rd) * g.d0_sq;
  // Scalar multiples of D0 keep every identity exact up to rounding.
  b.xi_ub = s.xi / std::sqrt(1.0 - rd);
  b.xi_lb = s.xi / std::sqrt(1.0 + rd);
  const Vector shift = s.theta_circ - g.theta_star;
  b.theta_ub = g.theta_star + shift / (1.0 - rd);
  b.theta_lb = g.theta_star + shift / (1.0 + rd);
  b.delta_rd_vec = -s.xi * (rd / (1.0 - rd));
  b.delta_lb_vec = s.xi * (rd / (1.0 + rd));
  b.grad = s.grad;
  b.d0_root = g.d0.root();
  b.theta_star = g.theta_star;
  return b;
}

double bracket_quadratic(const BracketPair& pair, Side side, const Vector& theta,
                         const Vector& theta_star) {
  const double c = side == Side::upper ? 1.0 - pair.rd : 1.0 + pair.rd;
  const Vector u = pair.d0_root * (theta - theta_star);
  // (theta - theta*)' grad L - c |D0 (theta - theta*)|^2 / 2
  return (theta - theta_star).dot(pair.grad) - 0.5 * c * u.squaredNorm();
}

double local_radius(const LocalGeometry& g, const Vector& theta) {
  return (g.d0.root() * (theta - g.theta_star)).norm();
}

bool local_membership(const LocalGeometry& g, const Vector& theta) {
  return local_radius(g, theta) <= g.r0;
}

double mle_expansion_check(const LocalGeometry& g, const ScoreState&, const BracketPair& pair,
                           const MleResult& mle) {
  const Vector u = std::sqrt(1.0 - pair.rd) * (g.d0.root() * (mle.theta_hat - g.theta_star));
  return (u - pair.xi_ub).squaredNorm();
}

Matrix plugin_fisher(const QuasiModel& m, const Vector& theta) {
  TrueProcess t;
  t.beta = theta;
  switch (m.family()) {
    case Family::gaussian_mean:
      t.generator = Generator::gaussian;
      t.noise_sd = static_cast<const GaussianMeanModel&>(m).sigma();
      break;
    case Family::gaussian_linear:
      t.generator = Generator::gaussian;
      t.noise_sd = static_cast<const GaussianLinearModel&>(m).sigma();
      break;
    case Family::logistic: t.generator = Generator::logit; break;
    case Family::poisson: t.generator = Generator::poisson; break;
    case Family::user:
      throw UnsupportedError("plug-in Fisher information needs a built-in family");
  }
  return symmetrize(-m.expected_hessian(t, theta).value);
}

}  // namespace bvm
