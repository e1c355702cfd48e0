#pragma once

#include "bvm/bracketing.hpp"
#include "bvm/posterior.hpp"

#include <optional>
#include <string>
#include <vector>

namespace bvm {

/// |D0 (mean - theta_circ)|^2, with the full or the ball-restricted posterior mean.
double mean_discrepancy(const PosteriorSummary& summary, const ScoreState& s, const LocalGeometry& g,
                        bool restricted = false);

struct CovDiscrepancy {
  double op_norm = 0.0;     // |D0 S D0 - I|_inf
  double trace_form = 0.0;  // |D0 S D0 - I|_F^2
  bool projected = false;   // S was clipped to PSD first
};
CovDiscrepancy cov_discrepancy(const PosteriorSummary& summary, const LocalGeometry& g,
                               bool restricted = false);

struct MgfDiscrepancy {
  double value = 0.0;
  std::size_t argmax = 0;
  double se_at_max = 0.0;
  double max_se = 0.0;
};
/// max over lambda of |log MGF(lambda) - |lambda|^2 / 2|.
MgfDiscrepancy mgf_discrepancy(const std::vector<Estimate>& log_mgf, const std::vector<Vector>& lambdas);

/// `count` lambdas uniform in the ball |lambda|^2 <= p, reproducible from `seed`.
std::vector<Vector> random_lambdas(Eigen::Index p, std::size_t count, std::uint64_t seed);

struct ProbRecord {
  std::string label;
  double measured = 0.0;
  double measured_se = 0.0;
  double gaussian = 0.0;
  double upper = 0.0;  // e^{D+} (P + slack rd sqrt(q)) + e^{-x_n}
  double lower = 0.0;  // e^{-D-} (P - slack rd sqrt(q)) - e^{-x_n}
  bool pass_upper = true;
  bool pass_lower = true;
};

struct ProbeSet {
  std::string label;
  SetSpec set;
};

/// Default probes: central balls at Gaussian mass 0.5 and 0.9, their complements,
/// and the half-space on the first coordinate at 0.
std::vector<ProbeSet> default_probe_sets(Eigen::Index p);

/// Two-sided probability sandwich for each probe. `measured` holds the posterior
/// probabilities of the probes in the same order.
std::vector<ProbRecord> prob_sandwich_check(const std::vector<ProbeSet>& probes,
                                            const std::vector<Estimate>& measured,
                                            const ErrorBudget& budget, const LocalGeometry& g,
                                            double slack = 3.0);

struct GaussCompare {
  Matrix b;
  Vector delta;
  double kl = 0.0;
  double tv_bound = 0.0;
  std::optional<double> lemma_bound;  // (rd^2 p + (1 + rd) |delta|^2) / 2
};
/// KL(N(0, I) | N(delta, B^-1)) by the eigenvalue form and its Pinsker TV bound.
/// The lemma bound is attached when rd is given with |B - I|_inf <= rd <= 1/2.
GaussCompare gaussian_kl_tv(const Matrix& b, const Vector& delta, std::optional<double> rd = {});

/// E_0 [1 - min(1, dP/dP_0)] over N(0, I) draws: an unbiased TV estimate.
Estimate tv_monte_carlo(const Matrix& b, const Vector& delta, std::size_t draws, std::uint64_t seed);

struct CoronaryRecord {
  double x = 0.0;
  double upper_measured = 0.0;  // P(|D_ub (v - theta_ub)|^2 - p > sqrt(2 p x))
  double lower_measured = 0.0;  // P(|D_ub (v - theta_ub)|^2 - p < -sqrt(2 p x))
  double upper_bound = 0.0;     // exp(-x/4 + D+)
  double lower_bound = 0.0;     // exp(-x/2 + D+)
  bool pass_upper = true;
  bool pass_lower = true;
};
/// Probability of leaving the coronary set around theta_ub. Needs x <= p/2.
std::vector<CoronaryRecord> coronary_check(const GaussianPosterior& post, const LocalGeometry& g,
                                           const ScoreState& s, const BracketPair& pair,
                                           const ErrorBudget& budget, const std::vector<double>& xs);
std::vector<CoronaryRecord> coronary_check(const PosteriorSample& sample, const LocalGeometry& g,
                                           const ScoreState& s, const BracketPair& pair,
                                           const ErrorBudget& budget, const std::vector<double>& xs);

struct ApplicabilityFlags {
  bool rd_above_half = false;
  bool low_ess = false;
  bool acceptance = false;
  bool cov_projected = false;
  bool improper_posterior = false;
  bool budget_omitted = false;  // rd >= 1
  bool mle_not_converged = false;
  bool conditions_failed = false;
  bool prior_check_failed = false;
  bool any() const {
    return rd_above_half || low_ess || acceptance || cov_projected || improper_posterior || budget_omitted ||
           mle_not_converged || conditions_failed || prior_check_failed;
  }
  void merge(const ApplicabilityFlags& o) {
    rd_above_half |= o.rd_above_half;
    low_ess |= o.low_ess;
    acceptance |= o.acceptance;
    cov_projected |= o.cov_projected;
    improper_posterior |= o.improper_posterior;
    budget_omitted |= o.budget_omitted;
    mle_not_converged |= o.mle_not_converged;
    conditions_failed |= o.conditions_failed;
    prior_check_failed |= o.prior_check_failed;
  }
};

struct BvmReport {
  double mean_disc = 0.0;
  double mean_disc_restricted = 0.0;
  double cov_disc_op = 0.0;
  double cov_disc_tr = 0.0;
  double cov_disc_op_restricted = 0.0;
  double mgf_disc = 0.0;
  Vector mgf_argmax;
  double prob_disc = 0.0;
  double rd = 0.0;
  double q = 0.0;
  std::optional<ErrorBudget> budget;
  std::vector<ProbRecord> probes;
  ApplicabilityFlags flags;
};

}  // namespace bvm
