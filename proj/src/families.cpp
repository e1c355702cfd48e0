#include "bvm/model.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <functional>
#include <numbers>

namespace bvm {

namespace {

double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

double softplus(double t) { return std::max(t, 0.0) + std::log1p(std::exp(-std::abs(t))); }

double dsigmoid(double t) {
  const double s = sigmoid(t);
  return s * (1.0 - s);
}

double phi(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }
double Phi(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

// E f(Z) for Z ~ N(0, 1). The mass beyond |z| = 13 is below 1e-37.
double normal_expect(const std::function<double(double)>& f) {
  using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
  auto g = [&](double z) { return f(z) * phi(z); };
  return GK::integrate(g, -13.0, 0.0, 12, 1e-14) + GK::integrate(g, 0.0, 13.0, 12, 1e-14);
}

void require_beta(const TrueProcess& t, Eigen::Index p) {
  if (t.beta.size() != p) throw InvalidArgument("true-process parameter has the wrong dimension");
}

double draw_noise(const TrueProcess& t, RngStream& rng) {
  switch (t.noise) {
    case NoiseKind::normal:
      return t.noise_sd * rng.normal();
    case NoiseKind::student_t: {
      if (!(t.student_dof > 2.0)) throw InvalidArgument("student_t noise needs dof > 2");
      std::student_t_distribution<double> st(t.student_dof);
      return t.noise_sd * st(rng.engine()) * std::sqrt((t.student_dof - 2.0) / t.student_dof);
    }
    case NoiseKind::cauchy: {
      std::cauchy_distribution<double> c(0.0, t.noise_sd);
      return c(rng.engine());
    }
  }
  return 0.0;
}

Matrix normal_design(std::size_t n, Eigen::Index p, RngStream& rng) {
  Matrix x(static_cast<Eigen::Index>(n), p);
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = 0; j < p; ++j) x(i, j) = rng.normal();
  return x;
}

bool gaussian_analytic(const TrueProcess& t, Eigen::Index p) {
  return t.generator == Generator::gaussian && t.noise != NoiseKind::cauchy && t.beta.size() == p;
}

}  // namespace

// ---------------------------------------------------------------- Gaussian mean

GaussianMeanModel::GaussianMeanModel(Eigen::Index p, double sigma, std::size_t n, Box box)
    : QuasiModel(Family::gaussian_mean, p, n, std::move(box)), sigma_(sigma) {
  if (!(sigma > 0.0)) throw InvalidArgument("gaussian_mean needs sigma > 0");
}

bool GaussianMeanModel::has_analytic(const TrueProcess& t) const { return gaussian_analytic(t, p()); }

bool GaussianMeanModel::is_member(const TrueProcess& t) const {
  return gaussian_analytic(t, p()) && t.noise == NoiseKind::normal && t.noise_sd == sigma_ &&
         box().contains(t.beta);
}

double GaussianMeanModel::log_lik_impl(const Dataset& d, const Vector& theta) const {
  double s = 0.0;
  for (Eigen::Index i = 0; i < d.obs.rows(); ++i) s += (d.obs.row(i).transpose() - theta).squaredNorm();
  return -0.5 * s / (sigma_ * sigma_);
}

Vector GaussianMeanModel::score_impl(const Dataset& d, const Vector& theta) const {
  Vector s = d.obs.colwise().sum().transpose() - static_cast<double>(d.n) * theta;
  return s / (sigma_ * sigma_);
}

Matrix GaussianMeanModel::hessian_impl(const Dataset& d, const Vector&) const {
  return -static_cast<double>(d.n) / (sigma_ * sigma_) * Matrix::Identity(p(), p());
}

Dataset GaussianMeanModel::sample_impl(const TrueProcess& t, RngStream& rng) const {
  if (t.generator != Generator::gaussian) throw UnsupportedError("gaussian_mean samples gaussian truths only");
  require_beta(t, p());
  Matrix y(static_cast<Eigen::Index>(n()), p());
  for (Eigen::Index i = 0; i < y.rows(); ++i)
    for (Eigen::Index j = 0; j < p(); ++j) y(i, j) = t.beta[j] + draw_noise(t, rng);
  return Dataset::from_observations(std::move(y));
}

double GaussianMeanModel::analytic_loglik(const TrueProcess& t, const Vector& theta) const {
  const double nn = static_cast<double>(n());
  return -0.5 * nn * ((theta - t.beta).squaredNorm() + static_cast<double>(p()) * t.noise_sd * t.noise_sd) /
         (sigma_ * sigma_);
}

Vector GaussianMeanModel::analytic_gradient(const TrueProcess& t, const Vector& theta) const {
  return static_cast<double>(n()) * (t.beta - theta) / (sigma_ * sigma_);
}

Matrix GaussianMeanModel::analytic_hessian(const TrueProcess&, const Vector&) const {
  return -static_cast<double>(n()) / (sigma_ * sigma_) * Matrix::Identity(p(), p());
}

Matrix GaussianMeanModel::analytic_score_cov(const TrueProcess& t, const Vector&) const {
  const double s2 = t.noise_sd * t.noise_sd;
  return static_cast<double>(n()) * s2 / std::pow(sigma_, 4) * Matrix::Identity(p(), p());
}

Vector GaussianMeanModel::gradient_centre(const TrueProcess& t, const Vector& theta) const {
  // Symmetric noise: the centred score is defined even without a mean (Cauchy).
  require_beta(t, p());
  return static_cast<double>(n()) * (t.beta - theta) / (sigma_ * sigma_);
}

// -------------------------------------------------------------- Gaussian linear

GaussianLinearModel::GaussianLinearModel(Matrix design, double sigma, Box box)
    : QuasiModel(Family::gaussian_linear, design.cols(), static_cast<std::size_t>(design.rows()),
                 std::move(box)),
      design_(std::make_shared<const Matrix>(std::move(design))),
      sigma_(sigma) {
  if (!(sigma > 0.0)) throw InvalidArgument("gaussian_linear needs sigma > 0");
  gram_ = design_->transpose() * (*design_);
}

Matrix GaussianLinearModel::random_design(std::size_t n, Eigen::Index p, std::uint64_t design_seed,
                                          double scale) {
  RngStream rng(design_seed, 0);
  return scale * normal_design(n, p, rng);
}

bool GaussianLinearModel::has_analytic(const TrueProcess& t) const { return gaussian_analytic(t, p()); }

bool GaussianLinearModel::is_member(const TrueProcess& t) const {
  return gaussian_analytic(t, p()) && t.noise == NoiseKind::normal && t.noise_sd == sigma_ &&
         box().contains(t.beta);
}

double GaussianLinearModel::log_lik_impl(const Dataset& d, const Vector& theta) const {
  return -0.5 * (d.obs.col(0) - (*design_) * theta).squaredNorm() / (sigma_ * sigma_);
}

Vector GaussianLinearModel::score_impl(const Dataset& d, const Vector& theta) const {
  return design_->transpose() * (d.obs.col(0) - (*design_) * theta) / (sigma_ * sigma_);
}

Matrix GaussianLinearModel::hessian_impl(const Dataset&, const Vector&) const {
  return -gram_ / (sigma_ * sigma_);
}

Dataset GaussianLinearModel::sample_impl(const TrueProcess& t, RngStream& rng) const {
  if (t.generator != Generator::gaussian) throw UnsupportedError("gaussian_linear samples gaussian truths only");
  require_beta(t, p());
  Vector mean = (*design_) * t.beta;
  Matrix y(mean.size(), 1);
  for (Eigen::Index i = 0; i < mean.size(); ++i) y(i, 0) = mean[i] + draw_noise(t, rng);
  return Dataset::from_observations(std::move(y));
}

double GaussianLinearModel::analytic_loglik(const TrueProcess& t, const Vector& theta) const {
  const Vector d = theta - t.beta;
  return -0.5 * (d.dot(gram_ * d) + static_cast<double>(n()) * t.noise_sd * t.noise_sd) / (sigma_ * sigma_);
}

Vector GaussianLinearModel::analytic_gradient(const TrueProcess& t, const Vector& theta) const {
  return gram_ * (t.beta - theta) / (sigma_ * sigma_);
}

Matrix GaussianLinearModel::analytic_hessian(const TrueProcess&, const Vector&) const {
  return -gram_ / (sigma_ * sigma_);
}

Matrix GaussianLinearModel::analytic_score_cov(const TrueProcess& t, const Vector&) const {
  return t.noise_sd * t.noise_sd * gram_ / std::pow(sigma_, 4);
}

Vector GaussianLinearModel::gradient_centre(const TrueProcess& t, const Vector& theta) const {
  require_beta(t, p());
  return gram_ * (t.beta - theta) / (sigma_ * sigma_);
}

// --------------------------------------------------------------------- Logistic

LogisticModel::LogisticModel(Eigen::Index p, std::size_t n, Box box)
    : QuasiModel(Family::logistic, p, n, std::move(box)) {}

bool LogisticModel::has_analytic(const TrueProcess& t) const {
  return (t.generator == Generator::logit || t.generator == Generator::probit) && t.beta.size() == p();
}

bool LogisticModel::is_member(const TrueProcess& t) const {
  return t.generator == Generator::logit && t.beta.size() == p() && box().contains(t.beta);
}

double LogisticModel::log_lik_impl(const Dataset& d, const Vector& theta) const {
  const Vector eta = d.design * theta;
  double s = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) s += d.obs(i, 0) * eta[i] - softplus(eta[i]);
  return s;
}

Vector LogisticModel::score_impl(const Dataset& d, const Vector& theta) const {
  const Vector eta = d.design * theta;
  Vector r(eta.size());
  for (Eigen::Index i = 0; i < eta.size(); ++i) r[i] = d.obs(i, 0) - sigmoid(eta[i]);
  return d.design.transpose() * r;
}

Matrix LogisticModel::hessian_impl(const Dataset& d, const Vector& theta) const {
  const Vector eta = d.design * theta;
  Vector w(eta.size());
  for (Eigen::Index i = 0; i < eta.size(); ++i) w[i] = dsigmoid(eta[i]);
  return -(d.design.transpose() * w.asDiagonal() * d.design);
}

Dataset LogisticModel::sample_impl(const TrueProcess& t, RngStream& rng) const {
  if (t.generator != Generator::logit && t.generator != Generator::probit)
    throw UnsupportedError("logistic samples logit or probit truths only");
  require_beta(t, p());
  Matrix x = normal_design(n(), p(), rng);
  Matrix y(x.rows(), 1);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double s = x.row(i).dot(t.beta);
    const double prob = t.generator == Generator::logit ? sigmoid(s) : Phi(s);
    y(i, 0) = rng.uniform() < prob ? 1.0 : 0.0;
  }
  return Dataset::from_observations(std::move(y), std::move(x));
}

namespace {

// Slope E m'(|beta| Z) of the true response curve along beta.
double link_slope(const TrueProcess& t) {
  const double b = t.beta.norm();
  if (t.generator == Generator::probit) return 1.0 / std::sqrt(2.0 * std::numbers::pi * (1.0 + b * b));
  return normal_expect([b](double z) { return dsigmoid(b * z); });
}

double response(const TrueProcess& t, double s) {
  return t.generator == Generator::logit ? sigmoid(s) : Phi(s);
}

}  // namespace

double LogisticModel::analytic_loglik(const TrueProcess& t, const Vector& theta) const {
  const double r = theta.norm();
  const double lin = theta.dot(t.beta) * link_slope(t);
  const double sp = normal_expect([r](double z) { return softplus(r * z); });
  return static_cast<double>(n()) * (lin - sp);
}

Vector LogisticModel::analytic_gradient(const TrueProcess& t, const Vector& theta) const {
  const double r = theta.norm();
  const double curv = normal_expect([r](double z) { return dsigmoid(r * z); });
  return static_cast<double>(n()) * (t.beta * link_slope(t) - theta * curv);
}

Matrix LogisticModel::analytic_hessian(const TrueProcess&, const Vector& theta) const {
  const double r = theta.norm();
  const double e0 = normal_expect([r](double z) { return dsigmoid(r * z); });
  Matrix h = e0 * Matrix::Identity(p(), p());
  if (r > 0.0) {
    const double e2 = normal_expect([r](double z) { return z * z * dsigmoid(r * z); });
    const Vector u = theta / r;
    h += (e2 - e0) * u * u.transpose();
  }
  return -static_cast<double>(n()) * h;
}

Matrix LogisticModel::analytic_score_cov(const TrueProcess& t, const Vector& theta) const {
  // Both theta and beta live in a plane; x = z1 e1 + z2 e2 + (orthogonal part).
  const Eigen::Index p = this->p();
  Vector e1, e2;
  const double r = theta.norm();
  const double b = t.beta.norm();
  if (r > 0.0) e1 = theta / r;
  else if (b > 0.0) e1 = t.beta / b;
  else e1 = Vector::Unit(p, 0);
  const Vector rest = t.beta - e1 * e1.dot(t.beta);
  const double rn = rest.norm();
  const bool planar = rn > 1e-12 * std::max(1.0, b) && p >= 2;
  if (planar) e2 = rest / rn;
  const double th1 = theta.dot(e1);
  const double b1 = t.beta.dot(e1), b2 = planar ? t.beta.dot(e2) : 0.0;
  // h(z1, z2) = E[(y - sigmoid(x'theta))^2 | x].
  auto h = [&](double z1, double z2) {
    const double m = response(t, b1 * z1 + b2 * z2);
    const double s = sigmoid(th1 * z1);
    return m * (1.0 - 2.0 * s) + s * s;
  };
  double eh, e11, e12 = 0.0, e22 = 0.0;
  if (!planar) {
    eh = normal_expect([&](double z) { return h(z, 0.0); });
    e11 = normal_expect([&](double z) { return z * z * h(z, 0.0); });
    e22 = eh;
  } else {
    auto inner = [&](double z1, int k) {
      return normal_expect([&, z1, k](double z2) {
        const double v = h(z1, z2);
        return k == 0 ? v : (k == 1 ? z2 * v : z2 * z2 * v);
      });
    };
    eh = normal_expect([&](double z1) { return inner(z1, 0); });
    e11 = normal_expect([&](double z1) { return z1 * z1 * inner(z1, 0); });
    e12 = normal_expect([&](double z1) { return z1 * inner(z1, 1); });
    e22 = normal_expect([&](double z1) { return inner(z1, 2); });
  }
  Matrix proj = e1 * e1.transpose();
  if (planar) proj += e2 * e2.transpose();
  Matrix m = eh * (Matrix::Identity(p, p) - proj) + e11 * e1 * e1.transpose();
  if (planar) {
    m += e12 * (e1 * e2.transpose() + e2 * e1.transpose());
    m += e22 * e2 * e2.transpose();
  }
  const Vector g = analytic_gradient(t, theta) / static_cast<double>(n());
  return static_cast<double>(n()) * (m - g * g.transpose());
}

// ---------------------------------------------------------------------- Poisson

PoissonModel::PoissonModel(Eigen::Index p, std::size_t n, Box box)
    : QuasiModel(Family::poisson, p, n, std::move(box)) {}

bool PoissonModel::has_analytic(const TrueProcess& t) const {
  return (t.generator == Generator::poisson || t.generator == Generator::negbin) && t.beta.size() == p();
}

bool PoissonModel::is_member(const TrueProcess& t) const {
  return t.generator == Generator::poisson && t.beta.size() == p() && box().contains(t.beta);
}

double PoissonModel::log_lik_impl(const Dataset& d, const Vector& theta) const {
  const Vector eta = d.design * theta;
  double s = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) s += d.obs(i, 0) * eta[i] - std::exp(eta[i]);
  return s;
}

Vector PoissonModel::score_impl(const Dataset& d, const Vector& theta) const {
  const Vector eta = d.design * theta;
  Vector r(eta.size());
  for (Eigen::Index i = 0; i < eta.size(); ++i) r[i] = d.obs(i, 0) - std::exp(eta[i]);
  return d.design.transpose() * r;
}

Matrix PoissonModel::hessian_impl(const Dataset& d, const Vector& theta) const {
  const Vector w = (d.design * theta).array().exp();
  return -(d.design.transpose() * w.asDiagonal() * d.design);
}

Dataset PoissonModel::sample_impl(const TrueProcess& t, RngStream& rng) const {
  if (t.generator != Generator::poisson && t.generator != Generator::negbin)
    throw UnsupportedError("poisson samples poisson or negbin truths only");
  if (t.generator == Generator::negbin && !(t.dispersion > 0.0))
    throw InvalidArgument("negbin truth needs dispersion > 0");
  require_beta(t, p());
  Matrix x = normal_design(n(), p(), rng);
  Matrix y(x.rows(), 1);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    double mu = std::exp(x.row(i).dot(t.beta));
    if (t.generator == Generator::negbin) {
      std::gamma_distribution<double> g(t.dispersion, mu / t.dispersion);
      mu = g(rng.engine());
    }
    std::poisson_distribution<long long> pois(mu);
    y(i, 0) = mu > 0.0 ? static_cast<double>(pois(rng.engine())) : 0.0;
  }
  return Dataset::from_observations(std::move(y), std::move(x));
}

double PoissonModel::analytic_loglik(const TrueProcess& t, const Vector& theta) const {
  const double nn = static_cast<double>(n());
  return nn * (theta.dot(t.beta) * std::exp(0.5 * t.beta.squaredNorm()) -
               std::exp(0.5 * theta.squaredNorm()));
}

Vector PoissonModel::analytic_gradient(const TrueProcess& t, const Vector& theta) const {
  const double nn = static_cast<double>(n());
  return nn * (t.beta * std::exp(0.5 * t.beta.squaredNorm()) - theta * std::exp(0.5 * theta.squaredNorm()));
}

Matrix PoissonModel::analytic_hessian(const TrueProcess&, const Vector& theta) const {
  const Eigen::Index p = this->p();
  return -static_cast<double>(n()) * std::exp(0.5 * theta.squaredNorm()) *
         (Matrix::Identity(p, p) + theta * theta.transpose());
}

Matrix PoissonModel::analytic_score_cov(const TrueProcess& t, const Vector& theta) const {
  // E[x x' exp(a'x)] = (I + a a') exp(|a|^2 / 2).
  const Eigen::Index p = this->p();
  auto tilt = [p](const Vector& a) {
    return ((Matrix::Identity(p, p) + a * a.transpose()) * std::exp(0.5 * a.squaredNorm())).eval();
  };
  const double c = t.generator == Generator::negbin ? 1.0 / t.dispersion : 0.0;
  // E[(y - e^{x'theta})^2 | x] = mu + (1 + c) mu^2 - 2 mu e^{x'theta} + e^{2 x'theta}.
  Matrix m = tilt(t.beta) + (1.0 + c) * tilt(2.0 * t.beta) - 2.0 * tilt(t.beta + theta) + tilt(2.0 * theta);
  const Vector g = analytic_gradient(t, theta) / static_cast<double>(n());
  return static_cast<double>(n()) * (m - g * g.transpose());
}

}  // namespace bvm
