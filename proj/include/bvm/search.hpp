#pragma once

#include "bvm/core.hpp"

#include <functional>
#include <limits>

namespace bvm {

/// Sampling plan for sup/inf estimation over balls and spheres in the
/// standardized coordinates w = D0 (theta - theta*).
struct SearchPlan {
  std::size_t directions = 0;  // 0: min(2 p 64, 4096)
  int radii = 16;
  int polish_steps = 10;
};

std::size_t default_direction_count(Eigen::Index p);

/// Unit directions as columns: the 2p coordinate axes, then a Halton point set
/// pushed through the normal quantile and normalized.
Matrix sphere_directions(Eigen::Index p, std::size_t count);

struct SearchResult {
  double value = -std::numeric_limits<double>::infinity();
  Vector w;
  std::size_t evaluations = 0;
};

/// Objective in standardized coordinates. Non-finite values mark inadmissible
/// points and are skipped.
using Objective = std::function<double(const Vector&)>;

/// sup of f over {|w| <= r}: directions x radii r k / radii, k = 1..radii,
/// followed by local polish of the best point.
SearchResult ball_sup(const Matrix& dirs, double r, const Objective& f, const SearchPlan& plan);

/// sup of f over the sphere {|w| = r}.
SearchResult sphere_sup(const Matrix& dirs, double r, const Objective& f, const SearchPlan& plan);

}  // namespace bvm
