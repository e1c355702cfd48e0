#include "bvm/prior.hpp"

#include "bvm/linalg.hpp"

namespace bvm {

std::string to_string(PriorKind k) {
  switch (k) {
    case PriorKind::flat: return "flat";
    case PriorKind::gaussian: return "gaussian";
    case PriorKind::custom: return "custom";
  }
  return "?";
}

PriorKind prior_kind_from_string(const std::string& s) {
  for (PriorKind k : {PriorKind::flat, PriorKind::gaussian, PriorKind::custom})
    if (to_string(k) == s) return k;
  throw InvalidArgument("unknown prior kind '" + s + "'");
}

Prior Prior::gaussian(Matrix g_sq) {
  if (g_sq.rows() != g_sq.cols()) throw InvalidArgument("prior precision must be square");
  bool clipped = false;
  const Matrix s = symmetrize(g_sq);
  project_psd(s, &clipped);
  if (clipped) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(s, Eigen::EigenvaluesOnly);
    // allow rounding-level negatives
    if (eig.eigenvalues().minCoeff() < -1e-12 * std::max(1.0, eig.eigenvalues().cwiseAbs().maxCoeff()))
      throw InvalidArgument("prior precision G^2 must be positive semidefinite");
  }
  Prior p;
  p.kind = PriorKind::gaussian;
  p.g_sq = s;
  return p;
}

Prior Prior::custom(std::function<double(const Vector&)> log_density) {
  if (!log_density) throw InvalidArgument("custom prior needs a log density");
  Prior p;
  p.kind = PriorKind::custom;
  p.custom_log_density = std::move(log_density);
  return p;
}

double Prior::log_density(const Vector& theta) const {
  switch (kind) {
    case PriorKind::flat: return 0.0;
    case PriorKind::gaussian: return -0.5 * theta.dot(g_sq * theta);
    case PriorKind::custom: return custom_log_density(theta);
  }
  return 0.0;
}

}  // namespace bvm
