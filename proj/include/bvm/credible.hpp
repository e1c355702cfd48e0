#pragma once

#include "bvm/posterior.hpp"

#include <string>

namespace bvm {

enum class CredibleKind { oracle, posterior, plugin };
std::string to_string(CredibleKind k);
CredibleKind credible_kind_from_string(const std::string& s);

/// {theta : |scale (theta - center)|^2 <= z}, scale the symmetric root of scale_sq.
struct CredibleSet {
  CredibleKind kind = CredibleKind::oracle;
  Vector center;
  Matrix scale_sq;
  double z = 0.0;
  double alpha = 0.0;  // NaN when built from z directly
  bool projected = false;
  bool contains(const Vector& theta) const;
  /// Same set in v = D0 (theta - theta_circ) coordinates.
  SetSpec standardized(const LocalGeometry& g, const ScoreState& s) const;
};

/// Threshold for level alpha: chi2_quantile(p, alpha).
double credible_threshold(Eigen::Index p, double alpha);

/// center theta_circ, scale D0^2.
CredibleSet oracle_set(const LocalGeometry& g, const ScoreState& s, double z);
/// center posterior mean, scale the inverse posterior covariance (PSD-projected).
CredibleSet posterior_set(const PosteriorSummary& summary, double z);
/// center posterior mean, scale the family's Fisher matrix D^2(mean).
CredibleSet plugin_set(const QuasiModel& m, const PosteriorSummary& summary, double z);
CredibleSet with_alpha(CredibleSet set, double alpha);

Estimate posterior_mass(const CredibleSet& set, const GaussianPosterior& post, const LocalGeometry& g,
                        const ScoreState& s);
Estimate posterior_mass(const CredibleSet& set, const PosteriorSample& sample, const LocalGeometry& g,
                        const ScoreState& s);

struct CoverageResult {
  std::size_t n_reps = 0;
  std::size_t covered = 0;
  std::size_t failures = 0;
  double rate = 0.0;
  double binomial_se = 0.0;
  double target = 0.0;
  bool valid = true;  // failures <= 5% of replications
};

/// Tally of theta* membership over replications. `covered[i]` is empty for a
/// failed replication.
CoverageResult tally_coverage(const std::vector<std::optional<bool>>& covered, double alpha);

struct CoverageScenario {
  const QuasiModel* model = nullptr;
  TrueProcess truth;
  Prior prior;
  CredibleKind kind = CredibleKind::oracle;
  double alpha = 0.05;
  std::size_t n_reps = 1000;
  ChainConfig chain;  // used when the posterior has no closed form
  std::uint64_t seed = 1;
  int threads = 1;
};

/// Dataset -> score -> posterior -> set, counting theta* in the set. Replication i
/// draws from RngStream(seed, i) regardless of the thread count.
CoverageResult coverage_mc(const CoverageScenario& scenario, const LocalGeometry& g);

struct SandwichSpec {
  Matrix m;  // D0^-1 V0^2 D0^-1
  bool identity = false;
};
SandwichSpec sandwich_matrix(const LocalGeometry& g);
/// P(|m^{1/2} gamma|^2 <= z).
double sandwich_coverage(const SandwichSpec& spec, double z);

}  // namespace bvm
