#pragma once

#include "bvm/geometry.hpp"
#include "bvm/prior.hpp"
#include "bvm/rng.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace bvm {

/// Closed-form Gaussian posterior of a quadratic quasi log-likelihood
/// (Gaussian mean and Gaussian linear families).
struct GaussianPosterior {
  Vector mean;
  Matrix cov;
  Matrix precision;
};

/// Flat prior: precision D^2 = -Hess L, mean the qMLE. Gaussian prior: precision
/// D^2 + G^2 and the matching mean. Throws UnsupportedError for other families.
GaussianPosterior exact_gaussian_posterior(const QuasiModel& m, const Dataset& d, const Prior& prior);

struct ChainConfig {
  std::size_t draws = 20000;
  std::optional<std::size_t> burn_in;  // default max(draws / 5, 5000)
  double initial_scale = 2.38;
  double target_accept = 0.234;
  std::size_t chains = 1;
  std::optional<Vector> init;  // default theta_circ clipped to the box
  std::size_t burn_in_for(std::size_t draws) const;
};

struct ChainMeta {
  double acceptance = 0.0;  // post burn-in
  double step_scale = 0.0;  // frozen s
  std::size_t burn_in = 0;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  bool acceptance_ok = true;  // within [0.05, 0.7]
};

/// Post burn-in draws, one column per draw, chains concatenated in index order.
struct PosteriorSample {
  Matrix draws;
  std::vector<std::size_t> chain_offsets;
  std::vector<ChainMeta> chains;
  bool acceptance_ok() const;
  double acceptance() const;
};

/// Random-walk Metropolis targeting exp(L) pi with proposals N(0, (s^2 / p) D0^-2).
/// log s is adapted by Robbins-Monro towards the target acceptance during burn-in
/// and frozen afterwards. Chain k uses rng.child(k).
PosteriorSample rwm_sample(const QuasiModel& m, const Dataset& d, const Prior& prior,
                           const LocalGeometry& g, const ChainConfig& cfg, const RngStream& rng,
                           int threads = 1);

/// Unnormalized log posterior density; -inf outside the box.
double log_posterior(const QuasiModel& m, const Dataset& d, const Prior& prior, const Vector& theta);

/// Rays from theta* along +-axes of the local frame: the log density at the box
/// boundary must sit below its value at theta* by `margin`. False flags an
/// (effectively) improper flat-prior posterior such as separable logistic data.
bool posterior_proper_along_rays(const QuasiModel& m, const Dataset& d, const Prior& prior,
                                 const LocalGeometry& g, double margin = 10.0);

/// Geyer initial positive sequence estimate of the effective sample size.
double ess_initial_positive(const std::vector<double>& x);

struct PosteriorSummary {
  bool exact = false;
  Vector mean;
  Matrix cov;
  bool cov_projected = false;
  Vector mean_se;  // batch means, zero in exact mode
  /// Moments conditional on the local ball Theta0(r0).
  Vector restricted_mean;
  Matrix restricted_cov;
  double restricted_mass = 1.0;
  double tail_mass = 0.0;  // (1 - mass) / mass
  double ess = 0.0;        // +inf in exact mode
  bool low_precision = false;  // ess < 100
  std::size_t draws = 0;
};

PosteriorSummary posterior_moments(const GaussianPosterior& post, const LocalGeometry& g);
PosteriorSummary posterior_moments(const PosteriorSample& sample, const LocalGeometry& g);

/// Event in the standardized coordinates v = D0 (theta - theta_circ).
struct SetSpec {
  enum class Kind { full, ball, ellipsoid, half_space } kind = Kind::full;
  Vector center;   // ball / ellipsoid
  Matrix shape;    // ellipsoid: |shape (v - center)|^2 <= z
  double z = 0.0;  // ball / ellipsoid threshold (squared radius)
  Vector normal;   // half-space: normal' v > offset
  double offset = 0.0;
  bool complement = false;

  static SetSpec full_space();
  static SetSpec ball(const Vector& center, double z);
  static SetSpec ellipsoid(const Vector& center, const Matrix& shape, double z);
  static SetSpec half_space(const Vector& normal, double offset);
  SetSpec complemented() const;
  bool contains(const Vector& v) const;
  /// P(gamma in set) for a standard normal gamma.
  double gaussian_probability() const;
};

/// Posterior probability with SE (batch means in MC mode, 0 when exact).
Estimate set_probability(const GaussianPosterior& post, const LocalGeometry& g, const ScoreState& s,
                         const SetSpec& set);
Estimate set_probability(const PosteriorSample& sample, const LocalGeometry& g, const ScoreState& s,
                         const SetSpec& set);

/// log E exp(lambda' D0 (theta - theta_circ)) over the posterior. Each |lambda|^2
/// must be at most p.
std::vector<Estimate> posterior_mgf(const GaussianPosterior& post, const LocalGeometry& g,
                                    const ScoreState& s, const std::vector<Vector>& lambdas);
std::vector<Estimate> posterior_mgf(const PosteriorSample& sample, const LocalGeometry& g,
                                    const ScoreState& s, const std::vector<Vector>& lambdas);

}  // namespace bvm
