#pragma once

#include "bvm/core.hpp"

#include <string>

namespace bvm {

/// Symmetric positive-definite matrix with cached factorizations.
///
/// Solves go through a Cholesky factorization; the symmetric square root and
/// its inverse come from the eigendecomposition. Construction fails hard on a
/// non-positive-definite input: there is no pseudo-inverse fallback.
class SpdMatrix {
 public:
  SpdMatrix() = default;
  explicit SpdMatrix(const Matrix& m, const std::string& name = "matrix");

  Eigen::Index dim() const noexcept { return m_.rows(); }
  const Matrix& matrix() const noexcept { return m_; }
  /// Symmetric root D with D * D == matrix().
  const Matrix& root() const noexcept { return root_; }
  const Matrix& inv_root() const noexcept { return inv_root_; }
  const Vector& eigenvalues() const noexcept { return evals_; }
  const Matrix& eigenvectors() const noexcept { return evecs_; }

  Vector solve(const Vector& b) const;
  Matrix solve(const Matrix& b) const;
  Matrix inverse() const;
  double log_det() const;
  double min_eigenvalue() const { return evals_.minCoeff(); }
  double max_eigenvalue() const { return evals_.maxCoeff(); }

 private:
  Matrix m_;
  Matrix root_;
  Matrix inv_root_;
  Vector evals_;
  Matrix evecs_;
  Eigen::LLT<Matrix> llt_;
};

Matrix symmetrize(const Matrix& m);

/// Largest absolute eigenvalue of a symmetric matrix. Dense eigensolver for
/// p <= 64, power iteration beyond.
double sym_operator_norm(const Matrix& m);

/// Nearest positive-semidefinite matrix in Frobenius norm (eigenvalue clipping).
/// Sets *projected when any eigenvalue had to be clipped.
Matrix project_psd(const Matrix& m, bool* projected = nullptr);

/// Largest eigenvalue of a symmetric PSD matrix by power iteration.
struct PowerIterationResult {
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};
PowerIterationResult power_iteration(const Matrix& m, double tol = 1e-10, int max_iter = 10000);

/// Symmetric square root of a PSD matrix.
Matrix psd_sqrt(const Matrix& m);

}  // namespace bvm
