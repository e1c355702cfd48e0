#pragma once

#include "bvm/core.hpp"

#include <functional>
#include <string>

namespace bvm {

enum class PriorKind { flat, gaussian, custom };

std::string to_string(PriorKind k);
PriorKind prior_kind_from_string(const std::string& s);

/// Prior on theta. The gaussian kind is N(0, G^-2) with precision G_sq.
struct Prior {
  PriorKind kind = PriorKind::flat;
  Matrix g_sq;
  std::function<double(const Vector&)> custom_log_density;

  static Prior flat() { return {}; }
  static Prior gaussian(Matrix g_sq);
  static Prior custom(std::function<double(const Vector&)> log_density);

  /// Log density up to a constant.
  double log_density(const Vector& theta) const;
};

}  // namespace bvm
