#include "bvm/model.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace bvm {

std::string to_string(Family f) {
  switch (f) {
    case Family::gaussian_mean: return "gaussian_mean";
    case Family::gaussian_linear: return "gaussian_linear";
    case Family::logistic: return "logistic";
    case Family::poisson: return "poisson";
    case Family::user: return "user";
  }
  return "unknown";
}

std::string to_string(Generator g) {
  switch (g) {
    case Generator::gaussian: return "gaussian";
    case Generator::logit: return "logit";
    case Generator::probit: return "probit";
    case Generator::poisson: return "poisson";
    case Generator::negbin: return "negbin";
    case Generator::user: return "user";
  }
  return "unknown";
}

std::string to_string(NoiseKind k) {
  switch (k) {
    case NoiseKind::normal: return "normal";
    case NoiseKind::student_t: return "student_t";
    case NoiseKind::cauchy: return "cauchy";
  }
  return "unknown";
}

Family family_from_string(const std::string& s) {
  for (Family f : {Family::gaussian_mean, Family::gaussian_linear, Family::logistic, Family::poisson})
    if (to_string(f) == s) return f;
  throw InvalidArgument("unknown model family '" + s + "'");
}

Generator generator_from_string(const std::string& s) {
  for (Generator g : {Generator::gaussian, Generator::logit, Generator::probit, Generator::poisson,
                      Generator::negbin})
    if (to_string(g) == s) return g;
  throw InvalidArgument("unknown true-process generator '" + s + "'");
}

NoiseKind noise_from_string(const std::string& s) {
  for (NoiseKind k : {NoiseKind::normal, NoiseKind::student_t, NoiseKind::cauchy})
    if (to_string(k) == s) return k;
  throw InvalidArgument("unknown noise kind '" + s + "'");
}

Dataset Dataset::from_observations(Matrix obs, Matrix design) {
  if (obs.rows() == 0) throw InvalidArgument("dataset needs at least one observation");
  if (design.size() > 0 && design.rows() != obs.rows())
    throw InvalidArgument("design and observations disagree on n");
  Dataset d;
  d.n = static_cast<std::size_t>(obs.rows());
  d.obs = std::move(obs);
  d.design = std::move(design);
  return d;
}

Box Box::uniform(Eigen::Index p, double half_width) {
  return Box{Vector::Constant(p, -half_width), Vector::Constant(p, half_width)};
}

bool Box::contains(const Vector& theta) const {
  if (theta.size() != lo.size()) return false;
  for (Eigen::Index i = 0; i < theta.size(); ++i)
    if (!(theta[i] >= lo[i] && theta[i] <= hi[i])) return false;
  return true;
}

void Box::check(const Vector& theta) const {
  for (Eigen::Index i = 0; i < theta.size(); ++i)
    if (!(theta[i] >= lo[i] && theta[i] <= hi[i]))
      throw DomainError(static_cast<std::size_t>(i), theta[i], lo[i], hi[i]);
}

QuasiModel::QuasiModel(Family family, Eigen::Index p, std::size_t n, Box box)
    : family_(family), p_(p), n_(n), box_(std::move(box)) {
  if (p < 1) throw InvalidArgument("model dimension p must be >= 1");
  if (n < 1) throw InvalidArgument("sample size n must be >= 1");
  if (box_.lo.size() != p || box_.hi.size() != p)
    throw InvalidArgument("domain box dimension differs from p");
  if (((box_.hi - box_.lo).array() <= 0.0).any())
    throw InvalidArgument("domain box has an empty coordinate interval");
}

std::string QuasiModel::name() const { return to_string(family_); }

void QuasiModel::set_mc_budget(std::size_t reps, std::uint64_t seed) {
  mc_reps_ = reps;
  mc_seed_ = seed;
}

void QuasiModel::check_dims(const Vector& theta) const {
  if (theta.size() != p_) {
    std::ostringstream os;
    os << "parameter has dimension " << theta.size() << ", model expects " << p_;
    throw InvalidArgument(os.str());
  }
  if (!theta.allFinite()) throw InvalidArgument("parameter has non-finite entries");
  box_.check(theta);
}

double QuasiModel::log_lik(const Dataset& d, const Vector& theta) const {
  check_dims(theta);
  return log_lik_impl(d, theta);
}

Vector QuasiModel::score(const Dataset& d, const Vector& theta) const {
  check_dims(theta);
  return score_impl(d, theta);
}

Matrix QuasiModel::observed_hessian(const Dataset& d, const Vector& theta) const {
  check_dims(theta);
  Matrix h = hessian_impl(d, theta);
  // Exact symmetry by construction.
  return 0.5 * (h + h.transpose());
}

Dataset QuasiModel::sample(const TrueProcess& truth, RngStream& rng) const {
  Dataset d = sample_impl(truth, rng);
  d.seed = rng.seed();
  d.stream = rng.stream_index();
  return d;
}

bool QuasiModel::has_analytic(const TrueProcess&) const { return false; }
bool QuasiModel::is_member(const TrueProcess&) const { return false; }

double QuasiModel::analytic_loglik(const TrueProcess&, const Vector&) const {
  throw UnsupportedError(name() + ": no analytic expectation for this true process");
}
Vector QuasiModel::analytic_gradient(const TrueProcess&, const Vector&) const {
  throw UnsupportedError(name() + ": no analytic expectation for this true process");
}
Matrix QuasiModel::analytic_hessian(const TrueProcess&, const Vector&) const {
  throw UnsupportedError(name() + ": no analytic expectation for this true process");
}
Matrix QuasiModel::analytic_score_cov(const TrueProcess&, const Vector&) const {
  throw UnsupportedError(name() + ": no analytic score covariance for this true process");
}

Dataset QuasiModel::mc_dataset(const TrueProcess& truth, std::size_t rep) const {
  RngStream rng(mc_seed_, rep);
  return sample(truth, rng);
}

namespace {
void require_budget(const QuasiModel& m, std::size_t reps) {
  if (reps == 0)
    throw UnsupportedError(m.name() +
                           ": expectation is not analytic and no Monte Carlo budget was declared");
}
}  // namespace

Estimate QuasiModel::expected_loglik(const TrueProcess& truth, const Vector& theta) const {
  check_dims(theta);
  if (has_analytic(truth)) return {analytic_loglik(truth, theta), 0.0};
  require_budget(*this, mc_reps_);
  double mean = 0.0, m2 = 0.0;
  for (std::size_t r = 0; r < mc_reps_; ++r) {
    const double v = log_lik_impl(mc_dataset(truth, r), theta);
    const double delta = v - mean;
    mean += delta / static_cast<double>(r + 1);
    m2 += delta * (v - mean);
  }
  const double reps = static_cast<double>(mc_reps_);
  return {mean, reps > 1 ? std::sqrt(m2 / (reps - 1.0) / reps) : 0.0};
}

VectorEstimate QuasiModel::expected_gradient(const TrueProcess& truth, const Vector& theta) const {
  check_dims(theta);
  if (has_analytic(truth)) return {analytic_gradient(truth, theta), Vector::Zero(p_)};
  require_budget(*this, mc_reps_);
  Vector mean = Vector::Zero(p_), sq = Vector::Zero(p_);
  for (std::size_t r = 0; r < mc_reps_; ++r) {
    const Vector g = score_impl(mc_dataset(truth, r), theta);
    mean += g;
    sq += g.cwiseProduct(g);
  }
  const double reps = static_cast<double>(mc_reps_);
  mean /= reps;
  Vector var = (sq / reps - mean.cwiseProduct(mean)).cwiseMax(0.0) * (reps / std::max(1.0, reps - 1.0));
  return {mean, (var / reps).cwiseSqrt()};
}

MatrixEstimate QuasiModel::expected_hessian(const TrueProcess& truth, const Vector& theta) const {
  check_dims(theta);
  if (has_analytic(truth)) {
    Matrix h = analytic_hessian(truth, theta);
    return {0.5 * (h + h.transpose()), Matrix::Zero(p_, p_)};
  }
  require_budget(*this, mc_reps_);
  Matrix mean = Matrix::Zero(p_, p_), sq = Matrix::Zero(p_, p_);
  for (std::size_t r = 0; r < mc_reps_; ++r) {
    const Matrix h = hessian_impl(mc_dataset(truth, r), theta);
    mean += h;
    sq += h.cwiseProduct(h);
  }
  const double reps = static_cast<double>(mc_reps_);
  mean /= reps;
  Matrix var = (sq / reps - mean.cwiseProduct(mean)).cwiseMax(0.0) * (reps / std::max(1.0, reps - 1.0));
  return {0.5 * (mean + mean.transpose()), (var / reps).cwiseSqrt()};
}

MatrixEstimate QuasiModel::score_covariance(const TrueProcess& truth, const Vector& theta) const {
  check_dims(theta);
  if (has_analytic(truth)) {
    Matrix v = analytic_score_cov(truth, theta);
    return {0.5 * (v + v.transpose()), Matrix::Zero(p_, p_)};
  }
  require_budget(*this, mc_reps_);
  std::vector<Vector> scores;
  scores.reserve(mc_reps_);
  Vector mean = Vector::Zero(p_);
  for (std::size_t r = 0; r < mc_reps_; ++r) {
    scores.push_back(score_impl(mc_dataset(truth, r), theta));
    mean += scores.back();
  }
  const double reps = static_cast<double>(mc_reps_);
  mean /= reps;
  Matrix cov = Matrix::Zero(p_, p_), sq = Matrix::Zero(p_, p_);
  for (const Vector& g : scores) {
    const Matrix o = (g - mean) * (g - mean).transpose();
    cov += o;
    sq += o.cwiseProduct(o);
  }
  cov /= std::max(1.0, reps - 1.0);
  Matrix var = (sq / reps - cov.cwiseProduct(cov)).cwiseMax(0.0);
  return {0.5 * (cov + cov.transpose()), (var / reps).cwiseSqrt()};
}

Vector QuasiModel::gradient_centre(const TrueProcess& truth, const Vector& theta) const {
  return expected_gradient(truth, theta).value;
}

double log_lik_ratio(const QuasiModel& m, const Dataset& d, const Vector& theta,
                     const Vector& theta_ref) {
  return m.log_lik(d, theta) - m.log_lik(d, theta_ref);
}

Vector stochastic_score(const QuasiModel& m, const Dataset& d, const TrueProcess& truth,
                        const Vector& theta) {
  return m.score(d, theta) - m.gradient_centre(truth, theta);
}

Dataset sample_dataset(const QuasiModel& m, const TrueProcess& truth, RngStream& rng) {
  return m.sample(truth, rng);
}

double fd_step(double t) {
  return std::max(1.0, std::abs(t)) * std::cbrt(std::numeric_limits<double>::epsilon());
}

}  // namespace bvm
