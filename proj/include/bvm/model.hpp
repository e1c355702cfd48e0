#pragma once

#include "bvm/core.hpp"
#include "bvm/rng.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace bvm {

enum class Family { gaussian_mean, gaussian_linear, logistic, poisson, user };

enum class Generator { gaussian, logit, probit, poisson, negbin, user };

enum class NoiseKind { normal, student_t, cauchy };

std::string to_string(Family f);
std::string to_string(Generator g);
std::string to_string(NoiseKind k);
Family family_from_string(const std::string& s);
Generator generator_from_string(const std::string& s);
NoiseKind noise_from_string(const std::string& s);

/// Law of the data.
///
/// `beta` is the location (Gaussian mean, regression coefficient or linear
/// index coefficient). Gaussian noise has standard deviation `noise_sd` for the
/// normal and Student kinds and scale `noise_sd` for Cauchy. `dispersion` is the
/// negative-binomial shape k (variance mu + mu^2 / k).
struct TrueProcess {
  Generator generator = Generator::gaussian;
  Vector beta;
  NoiseKind noise = NoiseKind::normal;
  double noise_sd = 1.0;
  double student_dof = 5.0;
  double dispersion = 1.0;
  bool matches_model = true;
};

/// Immutable observations. `obs` holds one row per observation, `design` the
/// covariate rows when the family has them.
struct Dataset {
  std::size_t n = 0;
  Matrix obs;
  Matrix design;
  std::optional<std::uint64_t> seed;
  std::uint64_t stream = 0;

  static Dataset from_observations(Matrix obs, Matrix design = Matrix());
};

struct Box {
  Vector lo;
  Vector hi;
  static Box uniform(Eigen::Index p, double half_width = 50.0);
  bool contains(const Vector& theta) const;
  /// Throws DomainError naming the first offending coordinate.
  void check(const Vector& theta) const;
};

struct VectorEstimate {
  Vector value;
  Vector se;
};
struct MatrixEstimate {
  Matrix value;
  Matrix se;
};

inline constexpr std::size_t kDefaultMcReps = 100000;

/// Quasi log-likelihood L(theta) for a fixed sample size n.
///
/// L is defined up to theta-independent constants. Expected quantities are
/// taken under a TrueProcess; built-in families provide them analytically, user
/// families fall back to Monte Carlo over replicated datasets with common
/// random numbers (so the estimate is a smooth function of theta).
class QuasiModel {
 public:
  QuasiModel(Family family, Eigen::Index p, std::size_t n, Box box);
  virtual ~QuasiModel() = default;

  Family family() const noexcept { return family_; }
  Eigen::Index p() const noexcept { return p_; }
  std::size_t n() const noexcept { return n_; }
  const Box& box() const noexcept { return box_; }
  virtual std::string name() const;

  std::size_t mc_budget() const noexcept { return mc_reps_; }
  void set_mc_budget(std::size_t reps, std::uint64_t seed = 0x5eed);

  double log_lik(const Dataset& d, const Vector& theta) const;
  Vector score(const Dataset& d, const Vector& theta) const;
  Matrix observed_hessian(const Dataset& d, const Vector& theta) const;

  Dataset sample(const TrueProcess& truth, RngStream& rng) const;

  /// Whether expected quantities under `truth` are available in closed form.
  virtual bool has_analytic(const TrueProcess& truth) const;
  /// Whether `truth` is a member of this family.
  virtual bool is_member(const TrueProcess& truth) const;

  Estimate expected_loglik(const TrueProcess& truth, const Vector& theta) const;
  VectorEstimate expected_gradient(const TrueProcess& truth, const Vector& theta) const;
  MatrixEstimate expected_hessian(const TrueProcess& truth, const Vector& theta) const;
  /// Var(grad L(theta)) under `truth`.
  MatrixEstimate score_covariance(const TrueProcess& truth, const Vector& theta) const;

  /// Hook for truths that have a symmetric centre but no expectation (Cauchy):
  /// the centred gradient is still defined. Defaults to expected_gradient.
  virtual Vector gradient_centre(const TrueProcess& truth, const Vector& theta) const;

 protected:
  virtual double log_lik_impl(const Dataset& d, const Vector& theta) const = 0;
  virtual Vector score_impl(const Dataset& d, const Vector& theta) const = 0;
  virtual Matrix hessian_impl(const Dataset& d, const Vector& theta) const = 0;
  virtual Dataset sample_impl(const TrueProcess& truth, RngStream& rng) const = 0;

  virtual double analytic_loglik(const TrueProcess& truth, const Vector& theta) const;
  virtual Vector analytic_gradient(const TrueProcess& truth, const Vector& theta) const;
  virtual Matrix analytic_hessian(const TrueProcess& truth, const Vector& theta) const;
  virtual Matrix analytic_score_cov(const TrueProcess& truth, const Vector& theta) const;

 private:
  void check_dims(const Vector& theta) const;
  Dataset mc_dataset(const TrueProcess& truth, std::size_t rep) const;

  Family family_;
  Eigen::Index p_;
  std::size_t n_;
  Box box_;
  std::size_t mc_reps_ = 0;
  std::uint64_t mc_seed_ = 0x5eed;
};

using ModelPtr = std::shared_ptr<const QuasiModel>;

/// y_i in R^p, L = -sum |y_i - theta|^2 / (2 sigma^2).
class GaussianMeanModel final : public QuasiModel {
 public:
  GaussianMeanModel(Eigen::Index p, double sigma, std::size_t n, Box box);
  GaussianMeanModel(Eigen::Index p, double sigma, std::size_t n)
      : GaussianMeanModel(p, sigma, n, Box::uniform(p)) {}
  double sigma() const noexcept { return sigma_; }
  bool has_analytic(const TrueProcess& truth) const override;
  bool is_member(const TrueProcess& truth) const override;
  Vector gradient_centre(const TrueProcess& truth, const Vector& theta) const override;

 protected:
  double log_lik_impl(const Dataset& d, const Vector& theta) const override;
  Vector score_impl(const Dataset& d, const Vector& theta) const override;
  Matrix hessian_impl(const Dataset& d, const Vector& theta) const override;
  Dataset sample_impl(const TrueProcess& truth, RngStream& rng) const override;
  double analytic_loglik(const TrueProcess& truth, const Vector& theta) const override;
  Vector analytic_gradient(const TrueProcess& truth, const Vector& theta) const override;
  Matrix analytic_hessian(const TrueProcess& truth, const Vector& theta) const override;
  Matrix analytic_score_cov(const TrueProcess& truth, const Vector& theta) const override;

 private:
  double sigma_;
};

/// y = X theta + noise with a fixed design, L = -|y - X theta|^2 / (2 sigma^2).
/// Expectations are conditional on the design.
class GaussianLinearModel final : public QuasiModel {
 public:
  GaussianLinearModel(Matrix design, double sigma, Box box);
  explicit GaussianLinearModel(Matrix design, double sigma = 1.0)
      : GaussianLinearModel(design, sigma, Box::uniform(design.cols())) {}
  /// Design with i.i.d. N(0, scale^2) entries drawn from `design_seed`.
  static Matrix random_design(std::size_t n, Eigen::Index p, std::uint64_t design_seed,
                              double scale = 1.0);
  const Matrix& design() const noexcept { return *design_; }
  double sigma() const noexcept { return sigma_; }
  bool has_analytic(const TrueProcess& truth) const override;
  bool is_member(const TrueProcess& truth) const override;
  Vector gradient_centre(const TrueProcess& truth, const Vector& theta) const override;

 protected:
  double log_lik_impl(const Dataset& d, const Vector& theta) const override;
  Vector score_impl(const Dataset& d, const Vector& theta) const override;
  Matrix hessian_impl(const Dataset& d, const Vector& theta) const override;
  Dataset sample_impl(const TrueProcess& truth, RngStream& rng) const override;
  double analytic_loglik(const TrueProcess& truth, const Vector& theta) const override;
  Vector analytic_gradient(const TrueProcess& truth, const Vector& theta) const override;
  Matrix analytic_hessian(const TrueProcess& truth, const Vector& theta) const override;
  Matrix analytic_score_cov(const TrueProcess& truth, const Vector& theta) const override;

 private:
  std::shared_ptr<const Matrix> design_;
  Matrix gram_;
  double sigma_;
};

/// Logistic regression with i.i.d. N(0, I_p) covariates.
/// Truths: logit (member) and probit (misspecified link).
class LogisticModel final : public QuasiModel {
 public:
  LogisticModel(Eigen::Index p, std::size_t n, Box box);
  LogisticModel(Eigen::Index p, std::size_t n) : LogisticModel(p, n, Box::uniform(p)) {}
  bool has_analytic(const TrueProcess& truth) const override;
  bool is_member(const TrueProcess& truth) const override;

 protected:
  double log_lik_impl(const Dataset& d, const Vector& theta) const override;
  Vector score_impl(const Dataset& d, const Vector& theta) const override;
  Matrix hessian_impl(const Dataset& d, const Vector& theta) const override;
  Dataset sample_impl(const TrueProcess& truth, RngStream& rng) const override;
  double analytic_loglik(const TrueProcess& truth, const Vector& theta) const override;
  Vector analytic_gradient(const TrueProcess& truth, const Vector& theta) const override;
  Matrix analytic_hessian(const TrueProcess& truth, const Vector& theta) const override;
  Matrix analytic_score_cov(const TrueProcess& truth, const Vector& theta) const override;
};

/// Poisson log-linear regression with i.i.d. N(0, I_p) covariates.
/// Truths: poisson (member) and negbin (overdispersed).
class PoissonModel final : public QuasiModel {
 public:
  PoissonModel(Eigen::Index p, std::size_t n, Box box);
  PoissonModel(Eigen::Index p, std::size_t n) : PoissonModel(p, n, Box::uniform(p)) {}
  bool has_analytic(const TrueProcess& truth) const override;
  bool is_member(const TrueProcess& truth) const override;

 protected:
  double log_lik_impl(const Dataset& d, const Vector& theta) const override;
  Vector score_impl(const Dataset& d, const Vector& theta) const override;
  Matrix hessian_impl(const Dataset& d, const Vector& theta) const override;
  Dataset sample_impl(const TrueProcess& truth, RngStream& rng) const override;
  double analytic_loglik(const TrueProcess& truth, const Vector& theta) const override;
  Vector analytic_gradient(const TrueProcess& truth, const Vector& theta) const override;
  Matrix analytic_hessian(const TrueProcess& truth, const Vector& theta) const override;
  Matrix analytic_score_cov(const TrueProcess& truth, const Vector& theta) const override;
};

/// L(theta) - L(theta_ref). Both points are checked against the box.
double log_lik_ratio(const QuasiModel& m, const Dataset& d, const Vector& theta,
                     const Vector& theta_ref);

/// grad L(theta) - grad E L(theta), the gradient of the stochastic component.
Vector stochastic_score(const QuasiModel& m, const Dataset& d, const TrueProcess& truth,
                        const Vector& theta);

/// Dataset of the model's size under `truth`; the seed record is the stream's.
Dataset sample_dataset(const QuasiModel& m, const TrueProcess& truth, RngStream& rng);

/// Finite-difference step max(1, |t|) * eps^(1/3).
double fd_step(double t);

}  // namespace bvm
