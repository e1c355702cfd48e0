#pragma once

#include "bvm/conditions.hpp"
#include "bvm/config.hpp"
#include "bvm/metrics.hpp"

#include <optional>
#include <string>
#include <vector>

namespace bvm {

struct CredibleRecord {
  CredibleKind kind = CredibleKind::oracle;
  double z = 0.0;
  double posterior_mass = 0.0;
  double posterior_mass_se = 0.0;
  bool covers_theta_star = false;
  bool projected = false;
};

/// Noise scales of the headline metrics, used for paired comparisons.
struct MetricNoise {
  double mean_disc = 0.0;
  double cov_disc_op = 0.0;
  double mgf_disc = 0.0;
};

struct ReplicationRecord {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  bool ok = true;
  std::string error;
  bool exact = false;
  double xi_norm = 0.0;
  double q = 0.0;
  bool mle_converged = true;
  double mle_expansion = 0.0;  // |D_ub (theta_hat - theta*) - xi_ub|^2
  ErrBrackets brackets;
  double nu = 0.0;
  double rho_measured = 0.0;
  std::optional<RhoBound> rho_bound;
  std::optional<TailContract> tail;
  std::optional<UpperFunctionReport> upper_function;
  BvmReport bvm;
  MetricNoise noise;
  double ess = 0.0;
  double acceptance = 1.0;
  std::size_t draws = 0;
  std::vector<CredibleRecord> credible;
  std::vector<CoronaryRecord> coronary;
  std::vector<Vector> lambdas;  // only kept for replication 0
  std::vector<Estimate> log_mgf;
  PosteriorSample sample;  // only kept when draws are dumped
};

struct Quantiles {
  double median = 0.0;
  double q25 = 0.0;
  double q75 = 0.0;
  double iqr() const { return q75 - q25; }
};
/// Linear-interpolation quantiles of the finite values (NaN when none).
Quantiles quantiles(std::vector<double> v);

struct KindCoverage {
  CredibleKind kind = CredibleKind::oracle;
  CoverageResult result;
  double predicted = 0.0;  // sandwich prediction for the oracle set
};

struct ExperimentResult {
  ExperimentConfig config;
  TrueProcess truth;
  LocalGeometry geometry;
  Prior prior;
  double rd = 0.0;
  std::optional<ConditionProfile> conditions;
  SampledFunction b_exterior;
  double b_upper = 0.0;
  std::optional<GaussianPriorCheck> prior_check;
  PriorRegularity prior_regularity;
  SandwichSpec sandwich;
  std::vector<ReplicationRecord> reps;
  std::vector<KindCoverage> coverage;
  ApplicabilityFlags flags;  // or-ed over replications
  std::size_t failures = 0;
  int exit_code() const;
};

struct RunOptions {
  int threads = 1;
};

/// Geometry, conditions, then per replication: data, brackets and budget,
/// posterior, metrics and credible sets. Replication i uses RngStream(seed, i).
ExperimentResult run_experiment(const ExperimentConfig& cfg, const RunOptions& opt = {});

struct AuditReport {
  ExperimentConfig config;
  TrueProcess truth;
  LocalGeometry geometry;
  ConditionProfile profile;
  Ed0Result ed0;
  std::optional<GaussianPriorCheck> prior_check;
  IidRateSummary rate;
  int exit_code() const { return profile.flags.any() ? 2 : 0; }
};
AuditReport run_audit(const ExperimentConfig& cfg, const RunOptions& opt = {});

struct SweepRow {
  double target_ratio = 0.0;
  Eigen::Index p = 0;
  std::size_t n = 0;
  double ratio = 0.0;  // p^3 / n actually used
  double rd = 0.0;
  bool flagged = false;
  ApplicabilityFlags flags;
  bool infeasible = false;
  std::string note;
  Quantiles mean_disc, cov_disc_op, mgf_disc, prob_disc;
  std::vector<KindCoverage> coverage;
  std::size_t reps = 0;
  std::size_t failures = 0;
};

struct SweepResult {
  ExperimentConfig config;
  std::vector<SweepRow> rows;  // sorted by ratio
  int exit_code() const;
};

/// p is the smallest entry of the p list with n = round(p^3 / ratio) >= max(n_min, 5 p).
SweepResult sweep_critical_dimension(const ExperimentConfig& base, const std::vector<double>& ratios,
                                     std::size_t reps, const RunOptions& opt = {});

struct PriorSweepRow {
  double g = 0.0;
  GaussianPriorCheck check;
  Quantiles mean_disc, cov_disc_op, mgf_disc;
  Quantiles flat_mean_disc, flat_cov_disc_op, flat_mgf_disc;
  /// Medians of paired differences (gaussian - flat) and of their joint noise.
  double delta_mean_disc = 0.0, delta_cov_disc_op = 0.0, delta_mgf_disc = 0.0;
  double noise_mean_disc = 0.0, noise_cov_disc_op = 0.0, noise_mgf_disc = 0.0;
  bool within_noise = true;  // every |delta| <= 3 noise
  bool flagged = false;
};

struct PriorSweepResult {
  ExperimentConfig config;
  std::vector<PriorSweepRow> rows;
  int exit_code() const;
};

/// Paired runs with common random numbers: the flat baseline and the Gaussian
/// prior use identical datasets and chain streams.
PriorSweepResult sweep_gaussian_prior(const ExperimentConfig& base, const std::vector<double>& g_list,
                                      std::size_t reps, const RunOptions& opt = {});

}  // namespace bvm
