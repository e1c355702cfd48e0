#pragma once

#include "bvm/geometry.hpp"
#include "bvm/prior.hpp"
#include "bvm/search.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace bvm {

/// A function sampled on a radius grid. `se` is zero for deterministic profiles.
struct SampledFunction {
  std::vector<double> r;
  std::vector<double> value;
  std::vector<double> se;

  /// Value at the smallest grid radius >= r (within 1e-12 relative). Throws if
  /// r lies beyond the grid.
  double at(double r) const;
};

struct AuditOptions {
  SearchPlan plan;
  std::size_t mc_budget = 4000;
  std::uint64_t seed = 0x5eed;
  int lambda_points = 21;
  std::optional<double> g;  // default sqrt(p + x_n)
  double nu0_cap = 4.0;
  std::size_t gamma_directions = 64;  // quasi-random gamma per MGF check
  std::size_t theta_extra = 4;        // quasi-random shell points per radius for omega
  int threads = 1;
};

/// Symmetric lambda grid on [-g, g] without 0.
std::vector<double> lambda_grid(double g, int points);

/// Default radius grid r0 k / count, k = 1..count.
std::vector<double> radius_grid(double r0, int count = 8);

/// delta(r): sup over the ball of |-2 E L(theta, theta*) / |D0 (theta - theta*)|^2 - 1|.
/// Reported as a running maximum, so the profile is nondecreasing.
SampledFunction estimate_delta_of_r(const QuasiModel& m, const TrueProcess& truth,
                                    const LocalGeometry& g, const std::vector<double>& r_grid,
                                    const SearchPlan& plan = {});

/// b(r): inf over the shell |D0 (theta - theta*)| = r of |E L(theta, theta*)| / r^2.
SampledFunction estimate_b_of_r(const QuasiModel& m, const TrueProcess& truth,
                                const LocalGeometry& g, const std::vector<double>& r_grid,
                                const SearchPlan& plan = {});

struct MgfDiagnostics {
  std::size_t estimates = 0;
  std::size_t heavy_tail = 0;  // estimates where the top 0.1% of draws carry > 50% of the mean
  std::size_t non_finite = 0;
};

struct Ed0Result {
  double nu0 = 1.0;
  double nu0_sq = 1.0;
  double se = 0.0;  // of nu0_sq at the binding (gamma, lambda)
  bool pass = false;
  MgfDiagnostics mgf;
  std::string diagnostic;
};

/// Smallest nu0 >= 1 with 2 log E exp(lambda X) / lambda^2 <= nu0^2 over the
/// sampled gamma and lambda grid, X = gamma' grad zeta(theta*) / |V0 gamma|.
Ed0Result ed0_check(const QuasiModel& m, const TrueProcess& truth, const LocalGeometry& g,
                    const AuditOptions& opt = {});

struct OmegaResult {
  SampledFunction omega;
  /// (Er): largest lambda with the MGF bound holding at every lambda up to it,
  /// for all sampled theta within radius r.
  SampledFunction g_of_r;
  MgfDiagnostics mgf;
};

/// omega(r): smallest scale with log E exp(lambda X / omega) <= nu0^2 lambda^2 / 2
/// over the lambda grid, X = gamma' (grad zeta(theta) - grad zeta(theta*)) / |V0 gamma|,
/// sup over sampled theta on shells up to r and sampled gamma.
OmegaResult estimate_omega_of_r(const QuasiModel& m, const TrueProcess& truth,
                                const LocalGeometry& g, const std::vector<double>& r_grid,
                                double nu0, const AuditOptions& opt = {});

/// rd = delta(r0) + 3 nu0 a^2 omega(r0).
double admissible_rd(double delta_r0, double omega_r0, double nu0, double a_sq);

struct ConditionFlags {
  bool delta_violated = false;  // delta(r0) > 1/2
  bool omega_violated = false;  // omega(r0) > 1/2
  bool nu0_failed = false;      // nu0 above cap or non-finite
  bool rd_violated = false;     // rd > 1/2
  bool b_failed = false;        // b(r0) <= 0
  bool any() const { return delta_violated || omega_violated || nu0_failed || rd_violated || b_failed; }
};

struct ConditionProfile {
  SampledFunction delta_of_r;
  SampledFunction omega_of_r;
  SampledFunction g_of_r;
  SampledFunction b_of_r;
  SampledFunction b_exterior;  // b on exterior shells, see exterior_b
  double nu0 = 1.0;
  double nu0_se = 0.0;
  double g_max = 0.0;
  double delta_r0 = 0.0;
  double omega_r0 = 0.0;
  double b_r0 = 0.0;
  double b_upper = 0.0;  // min of b_exterior, used by the upper-function audit
  double rd = 0.0;
  ConditionFlags flags;
  MgfDiagnostics mgf;
};

/// Full audit on the grid radius_grid(r0). b is additionally sampled on
/// exterior shells for the upper-function audit.
ConditionProfile audit_conditions(const QuasiModel& m, const TrueProcess& truth,
                                  const LocalGeometry& g, const AuditOptions& opt = {});

/// min of b(r) over exterior shells r0 * {1, 1.5, 2, 3, 4} kept inside the box.
SampledFunction exterior_b(const QuasiModel& m, const TrueProcess& truth, const LocalGeometry& g,
                           const SearchPlan& plan = {});

struct PriorRegularity {
  double alpha_hat = 0.0;
  bool pass = true;
};
/// sup over the local ball of |pi(theta) / pi(theta*) - 1|.
PriorRegularity prior_regularity_check(const Prior& prior, const LocalGeometry& g,
                                       double alpha_cap = 0.1, const SearchPlan& plan = {});

struct GaussianPriorCheck {
  double g_theta_star = 0.0;  // |G theta*|
  double smallness = 0.0;     // |D0^-1 G^2 D0^-1|_inf p
  bool pass = true;
};
GaussianPriorCheck gaussian_prior_check(const Matrix& g_sq, const LocalGeometry& g,
                                        double threshold = 0.05);

struct IidRateSummary {
  std::size_t n = 0;
  Eigen::Index p = 0;
  double delta_rate = 0.0;  // delta(r0) sqrt(n) / r0
  double omega_rate = 0.0;
  double critical_ratio = 0.0;
};
IidRateSummary iid_rate_summary(std::size_t n, Eigen::Index p, double delta_rate, double omega_rate);

}  // namespace bvm
