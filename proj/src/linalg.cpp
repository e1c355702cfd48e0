#include "bvm/linalg.hpp"

#include <cmath>
#include <limits>

namespace bvm {

Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

SpdMatrix::SpdMatrix(const Matrix& m, const std::string& name) : m_(symmetrize(m)) {
  if (m_.rows() != m_.cols() || m_.rows() == 0)
    throw InvalidArgument(name + " must be a non-empty square matrix");
  if (!m_.allFinite()) throw InvalidArgument(name + " has non-finite entries");
  Eigen::SelfAdjointEigenSolver<Matrix> eig(m_);
  evals_ = eig.eigenvalues();
  evecs_ = eig.eigenvectors();
  llt_.compute(m_);
  if (llt_.info() != Eigen::Success || evals_.minCoeff() <= 0.0)
    throw NotPositiveDefiniteError(name + " is not positive definite", evals_);
  root_ = evecs_ * evals_.cwiseSqrt().asDiagonal() * evecs_.transpose();
  inv_root_ = evecs_ * evals_.cwiseSqrt().cwiseInverse().asDiagonal() * evecs_.transpose();
}

Vector SpdMatrix::solve(const Vector& b) const { return llt_.solve(b); }
Matrix SpdMatrix::solve(const Matrix& b) const { return llt_.solve(b); }

Matrix SpdMatrix::inverse() const {
  return symmetrize(llt_.solve(Matrix::Identity(dim(), dim())));
}

double SpdMatrix::log_det() const {
  const Matrix& l = llt_.matrixLLT();
  double s = 0.0;
  for (Eigen::Index i = 0; i < l.rows(); ++i) s += std::log(l(i, i));
  return 2.0 * s;
}

PowerIterationResult power_iteration(const Matrix& m, double tol, int max_iter) {
  PowerIterationResult out;
  const Eigen::Index p = m.rows();
  Vector v = Vector::Ones(p) / std::sqrt(static_cast<double>(p));
  // Deterministic, non-symmetric start to avoid orthogonality with the top vector.
  for (Eigen::Index i = 0; i < p; ++i) v[i] += 1e-3 * static_cast<double>(i + 1) / p;
  v.normalize();
  double lambda = 0.0;
  for (int it = 1; it <= max_iter; ++it) {
    Vector w = m * v;
    const double norm = w.norm();
    if (norm == 0.0) {
      out.value = 0.0;
      out.iterations = it;
      out.converged = true;
      return out;
    }
    const double next = v.dot(w);
    w /= norm;
    const bool done = std::abs(next - lambda) <= tol * std::max(1.0, std::abs(next));
    lambda = next;
    v = w;
    if (done && it > 1) {
      out.value = lambda;
      out.iterations = it;
      out.converged = true;
      return out;
    }
  }
  out.value = lambda;
  out.iterations = max_iter;
  return out;
}

double sym_operator_norm(const Matrix& m) {
  const Matrix s = symmetrize(m);
  if (s.rows() <= 64) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(s, Eigen::EigenvaluesOnly);
    return eig.eigenvalues().cwiseAbs().maxCoeff();
  }
  // ||S|| = sqrt(lambda_max(S^2)).
  return std::sqrt(power_iteration(s * s, 1e-12, 100000).value);
}

Matrix project_psd(const Matrix& m, bool* projected) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetrize(m));
  Vector ev = eig.eigenvalues();
  bool clipped = false;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev[i] < 0.0) {
      ev[i] = 0.0;
      clipped = true;
    }
  }
  if (projected) *projected = clipped;
  if (!clipped) return symmetrize(m);
  return eig.eigenvectors() * ev.asDiagonal() * eig.eigenvectors().transpose();
}

Matrix psd_sqrt(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetrize(m));
  Vector ev = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * ev.asDiagonal() * eig.eigenvectors().transpose();
}

}  // namespace bvm
