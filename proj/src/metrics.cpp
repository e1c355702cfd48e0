#include "bvm/metrics.hpp"

#include "bvm/distributions.hpp"
#include "bvm/linalg.hpp"
#include "bvm/rng.hpp"

#include <algorithm>
#include <cmath>

namespace bvm {

double mean_discrepancy(const PosteriorSummary& summary, const ScoreState& s, const LocalGeometry& g,
                        bool restricted) {
  const Vector& mean = restricted ? summary.restricted_mean : summary.mean;
  return (g.d0.root() * (mean - s.theta_circ)).squaredNorm();
}

CovDiscrepancy cov_discrepancy(const PosteriorSummary& summary, const LocalGeometry& g, bool restricted) {
  CovDiscrepancy out;
  Matrix cov = restricted ? summary.restricted_cov : summary.cov;
  out.projected = restricted ? false : summary.cov_projected;
  bool clipped = false;
  cov = project_psd(symmetrize(cov), &clipped);
  out.projected = out.projected || clipped;
  const Matrix dev = symmetrize(g.d0.root() * cov * g.d0.root()) - Matrix::Identity(g.p(), g.p());
  out.op_norm = sym_operator_norm(dev);
  out.trace_form = dev.squaredNorm();
  return out;
}

MgfDiscrepancy mgf_discrepancy(const std::vector<Estimate>& log_mgf, const std::vector<Vector>& lambdas) {
  if (log_mgf.size() != lambdas.size()) throw InvalidArgument("mgf estimates and lambdas differ in length");
  MgfDiscrepancy out;
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    const double d = std::abs(log_mgf[i].value - 0.5 * lambdas[i].squaredNorm());
    out.max_se = std::max(out.max_se, log_mgf[i].se);
    if (d > out.value) {
      out.value = d;
      out.argmax = i;
      out.se_at_max = log_mgf[i].se;
    }
  }
  return out;
}

std::vector<Vector> random_lambdas(Eigen::Index p, std::size_t count, std::uint64_t seed) {
  RngStream rng(seed, 0x1a4bdau);
  std::vector<Vector> out;
  out.reserve(count);
  const double radius = std::sqrt(static_cast<double>(p));
  for (std::size_t i = 0; i < count; ++i) {
    Vector z = rng.normal_vector(p);
    const double nz = z.norm();
    if (nz == 0.0) z = Vector::Unit(p, 0);
    else z /= nz;
    const double r = radius * std::pow(rng.uniform(), 1.0 / static_cast<double>(p));
    out.push_back(z * r);
  }
  return out;
}

std::vector<ProbeSet> default_probe_sets(Eigen::Index p) {
  const Vector c = Vector::Zero(p);
  const double pd = static_cast<double>(p);
  std::vector<ProbeSet> out;
  const SetSpec b50 = SetSpec::ball(c, chi2_quantile(pd, 0.5));
  const SetSpec b90 = SetSpec::ball(c, chi2_quantile(pd, 0.1));
  out.push_back({"ball50", b50});
  out.push_back({"ball50_complement", b50.complemented()});
  out.push_back({"ball90", b90});
  out.push_back({"ball90_complement", b90.complemented()});
  out.push_back({"half_space_e1", SetSpec::half_space(Vector::Unit(p, 0), 0.0)});
  return out;
}

std::vector<ProbRecord> prob_sandwich_check(const std::vector<ProbeSet>& probes,
                                            const std::vector<Estimate>& measured,
                                            const ErrorBudget& budget, const LocalGeometry& g,
                                            double slack) {
  if (probes.size() != measured.size()) throw InvalidArgument("probe and measurement counts differ");
  std::vector<ProbRecord> out;
  const double term = slack * budget.rd * std::sqrt(budget.q);
  const double tail = std::exp(-g.x_n);
  for (std::size_t i = 0; i < probes.size(); ++i) {
    ProbRecord r;
    r.label = probes[i].label;
    r.measured = measured[i].value;
    r.measured_se = measured[i].se;
    r.gaussian = probes[i].set.gaussian_probability();
    r.upper = std::exp(budget.delta_plus) * (r.gaussian + term) + tail;
    r.lower = std::exp(-budget.delta_minus) * (r.gaussian - term) - tail;
    r.pass_upper = r.measured <= r.upper;
    r.pass_lower = r.measured >= r.lower;
    out.push_back(r);
  }
  return out;
}

GaussCompare gaussian_kl_tv(const Matrix& b, const Vector& delta, std::optional<double> rd) {
  if (b.rows() != b.cols() || b.rows() != delta.size()) throw InvalidArgument("B and delta dimensions differ");
  const Eigen::Index p = b.rows();
  const Matrix bs = symmetrize(b);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(bs - Matrix::Identity(p, p), Eigen::EigenvaluesOnly);
  const Vector a = eig.eigenvalues();
  if (a.minCoeff() <= -1.0) throw InvalidArgument("B - I has an eigenvalue <= -1, B is not positive definite");
  double two_kl = 0.0;
  for (Eigen::Index j = 0; j < p; ++j) two_kl += a[j] - std::log1p(a[j]);
  two_kl += delta.dot(bs * delta);
  GaussCompare out;
  out.b = bs;
  out.delta = delta;
  out.kl = std::max(0.0, 0.5 * two_kl);
  out.tv_bound = std::sqrt(out.kl / 2.0);
  if (rd && *rd <= 0.5 && a.cwiseAbs().maxCoeff() <= *rd * (1.0 + 1e-12))
    out.lemma_bound = 0.5 * ((*rd) * (*rd) * static_cast<double>(p) + (1.0 + *rd) * delta.squaredNorm());
  return out;
}

Estimate tv_monte_carlo(const Matrix& b, const Vector& delta, std::size_t draws, std::uint64_t seed) {
  if (draws < 2) throw InvalidArgument("TV estimate needs at least two draws");
  const Eigen::Index p = b.rows();
  const SpdMatrix bm(symmetrize(b), "B");
  const double half_log_det = 0.5 * bm.log_det();
  RngStream rng(seed, 0x7e);
  double sum = 0.0;
  double sum_sq = 0.0;
  for (std::size_t i = 0; i < draws; ++i) {
    const Vector gam = rng.normal_vector(p);
    const Vector d = gam - delta;
    const double log_ratio = half_log_det - 0.5 * d.dot(bm.matrix() * d) + 0.5 * gam.squaredNorm();
    const double v = log_ratio >= 0.0 ? 0.0 : -std::expm1(log_ratio);
    sum += v;
    sum_sq += v * v;
  }
  const double n = static_cast<double>(draws);
  const double mean = sum / n;
  const double var = std::max(0.0, (sum_sq - n * mean * mean) / (n - 1.0));
  return {mean, std::sqrt(var / n)};
}

namespace {

template <typename Post>
std::vector<CoronaryRecord> coronary_impl(const Post& post, const LocalGeometry& g, const ScoreState& s,
                                          const BracketPair& pair, const ErrorBudget& budget,
                                          const std::vector<double>& xs) {
  const Eigen::Index p = g.p();
  const double pd = static_cast<double>(p);
  // In v = D0 (theta - theta_circ): D_ub (theta - theta_ub) = sqrt(1 - rd) (v - c),
  // c = D0 (theta_ub - theta_circ).
  const Vector c = -pair.delta_rd_vec;
  const Matrix shape = std::sqrt(1.0 - pair.rd) * Matrix::Identity(p, p);
  std::vector<CoronaryRecord> out;
  for (double x : xs) {
    if (!(x >= 0.0)) throw InvalidArgument("coronary check needs x >= 0");
    if (x > pd / 2.0 * (1.0 + 1e-12)) throw InvalidArgument("coronary check needs x <= p/2");
    CoronaryRecord r;
    r.x = x;
    const double w = std::sqrt(2.0 * pd * x);
    r.upper_measured = set_probability(post, g, s, SetSpec::ellipsoid(c, shape, pd + w).complemented()).value;
    r.lower_measured = pd - w > 0.0 ? set_probability(post, g, s, SetSpec::ellipsoid(c, shape, pd - w)).value : 0.0;
    r.upper_bound = std::exp(-x / 4.0 + budget.delta_plus);
    r.lower_bound = std::exp(-x / 2.0 + budget.delta_plus);
    r.pass_upper = r.upper_measured <= r.upper_bound;
    r.pass_lower = r.lower_measured <= r.lower_bound;
    out.push_back(r);
  }
  return out;
}

}  // namespace

std::vector<CoronaryRecord> coronary_check(const GaussianPosterior& post, const LocalGeometry& g,
                                           const ScoreState& s, const BracketPair& pair,
                                           const ErrorBudget& budget, const std::vector<double>& xs) {
  return coronary_impl(post, g, s, pair, budget, xs);
}

std::vector<CoronaryRecord> coronary_check(const PosteriorSample& sample, const LocalGeometry& g,
                                           const ScoreState& s, const BracketPair& pair,
                                           const ErrorBudget& budget, const std::vector<double>& xs) {
  return coronary_impl(sample, g, s, pair, budget, xs);
}

}  // namespace bvm
