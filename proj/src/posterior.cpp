#include "bvm/posterior.hpp"

#include "bvm/distributions.hpp"
#include "bvm/linalg.hpp"
#include "bvm/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace bvm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// SE of the mean of f by non-overlapping batch means (floor(sqrt(n)) batches).
double batch_means_se(const std::vector<double>& f) {
  const std::size_t n = f.size();
  if (n < 4) return 0.0;
  const std::size_t nb = std::max<std::size_t>(2, static_cast<std::size_t>(std::sqrt(static_cast<double>(n))));
  const std::size_t len = n / nb;
  std::vector<double> means(nb, 0.0);
  for (std::size_t b = 0; b < nb; ++b) {
    double s = 0.0;
    for (std::size_t i = b * len; i < (b + 1) * len; ++i) s += f[i];
    means[b] = s / static_cast<double>(len);
  }
  const double mu = std::accumulate(means.begin(), means.end(), 0.0) / static_cast<double>(nb);
  double v = 0.0;
  for (double m : means) v += (m - mu) * (m - mu);
  v /= static_cast<double>(nb - 1);
  return std::sqrt(v / static_cast<double>(nb));
}

Vector clip_to_box(Vector x, const Box& box) {
  for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = std::clamp(x[i], box.lo[i], box.hi[i]);
  return x;
}

// v = D0 (theta - theta_circ) for every draw.
Matrix standardized(const PosteriorSample& s, const LocalGeometry& g, const ScoreState& st) {
  return g.d0.root() * (s.draws.colwise() - st.theta_circ);
}

bool near_identity(const Matrix& s, double tol = 1e-10) {
  return (s - Matrix::Identity(s.rows(), s.cols())).cwiseAbs().maxCoeff() <= tol;
}

// Probability that v ~ N(c, S) lies in the set.
Estimate gaussian_set_probability(const Vector& c, const Matrix& s, const SetSpec& set) {
  const Eigen::Index p = c.size();
  double prob = 0.0;
  double se = 0.0;
  switch (set.kind) {
    case SetSpec::Kind::full: prob = 1.0; break;
    case SetSpec::Kind::half_space: {
      const double mu = set.normal.dot(c);
      const double sd = std::sqrt(set.normal.dot(s * set.normal));
      if (sd == 0.0) prob = mu > set.offset ? 1.0 : 0.0;
      else prob = normal_sf((set.offset - mu) / sd);
      break;
    }
    case SetSpec::Kind::ball:
    case SetSpec::Kind::ellipsoid: {
      const Matrix a = set.kind == SetSpec::Kind::ball ? Matrix::Identity(p, p) : set.shape;
      const Vector shift = c - set.center;
      const double a2 = a(0, 0) * a(0, 0);
      const double s0 = s(0, 0);
      const bool isotropic = a2 > 0.0 && s0 > 0.0 && near_identity(a / a(0, 0), 1e-12) &&
                             near_identity(s / s0, 1e-10);
      if (isotropic) {
        // |a (c + sqrt(s0) g - centre)|^2 <= z  <=>  |g + shift / sqrt(s0)|^2 <= z / (a^2 s0)
        prob = ncchi2_cdf(static_cast<double>(p), shift.squaredNorm() / s0, set.z / (a2 * s0));
      } else if (shift.norm() <= 1e-14 * std::max(1.0, c.norm())) {
        const Matrix root = psd_sqrt(s);
        Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetrize(root * a.transpose() * a * root),
                                                  Eigen::EigenvaluesOnly);
        prob = quadform_cdf(eig.eigenvalues().cwiseMax(0.0), set.z);
      } else {
        // no closed form at hand: fixed-seed Monte Carlo
        const Matrix root = psd_sqrt(s);
        RngStream rng(0x5e7u, 0);
        const std::size_t draws = 1u << 20;
        std::size_t hits = 0;
        SetSpec plain = set;
        plain.complement = false;
        for (std::size_t i = 0; i < draws; ++i)
          if (plain.contains(c + root * rng.normal_vector(p))) ++hits;
        prob = static_cast<double>(hits) / static_cast<double>(draws);
        se = std::sqrt(prob * (1.0 - prob) / static_cast<double>(draws));
      }
      break;
    }
  }
  if (set.complement) prob = 1.0 - prob;
  return {prob, se};
}

}  // namespace

GaussianPosterior exact_gaussian_posterior(const QuasiModel& m, const Dataset& d, const Prior& prior) {
  if (m.family() != Family::gaussian_mean && m.family() != Family::gaussian_linear)
    throw UnsupportedError("exact posterior needs a Gaussian mean or Gaussian linear model");
  if (prior.kind == PriorKind::custom) throw UnsupportedError("exact posterior needs a flat or Gaussian prior");
  const Eigen::Index p = m.p();
  const Vector ref = clip_to_box(Vector::Zero(p), m.box());
  const Matrix h = symmetrize(-m.observed_hessian(d, ref));
  Matrix prec = h;
  Vector rhs = m.score(d, ref) + h * ref;  // grad L(0) for a quadratic L
  if (prior.kind == PriorKind::gaussian) prec += prior.g_sq;
  prec = symmetrize(prec);
  SpdMatrix sp(prec, "posterior precision");
  GaussianPosterior out;
  out.precision = prec;
  out.mean = sp.solve(rhs);
  out.cov = symmetrize(sp.inverse());
  return out;
}

std::size_t ChainConfig::burn_in_for(std::size_t n) const {
  return burn_in.value_or(std::max<std::size_t>(n / 5, 5000));
}

bool PosteriorSample::acceptance_ok() const {
  return std::all_of(chains.begin(), chains.end(), [](const ChainMeta& c) { return c.acceptance_ok; });
}

double PosteriorSample::acceptance() const {
  if (chains.empty()) return 0.0;
  double s = 0.0;
  for (const ChainMeta& c : chains) s += c.acceptance;
  return s / static_cast<double>(chains.size());
}

double log_posterior(const QuasiModel& m, const Dataset& d, const Prior& prior, const Vector& theta) {
  if (!m.box().contains(theta)) return -kInf;
  const double v = m.log_lik(d, theta) + prior.log_density(theta);
  return std::isfinite(v) ? v : -kInf;
}

PosteriorSample rwm_sample(const QuasiModel& m, const Dataset& d, const Prior& prior,
                           const LocalGeometry& g, const ChainConfig& cfg, const RngStream& rng,
                           int threads) {
  if (cfg.draws == 0 || cfg.chains == 0) throw InvalidArgument("chain needs draws > 0 and chains > 0");
  const Eigen::Index p = g.p();
  Vector init;
  if (cfg.init) init = *cfg.init;
  else init = clip_to_box(score_state(m, d, g).theta_circ, m.box());
  if (!std::isfinite(log_posterior(m, d, prior, init)))
    throw InvalidArgument("log posterior is not finite at the chain's initial point");
  const std::size_t burn = cfg.burn_in_for(cfg.draws);
  const Matrix chol = g.d0.inv_root();
  const double root_p = std::sqrt(static_cast<double>(p));

  PosteriorSample out;
  out.draws.resize(p, static_cast<Eigen::Index>(cfg.draws * cfg.chains));
  out.chains.resize(cfg.chains);
  for (std::size_t c = 0; c < cfg.chains; ++c) out.chain_offsets.push_back(c * cfg.draws);

  parallel_for(cfg.chains, threads, [&](std::size_t c) {
    RngStream r = rng.child(c);
    Vector x = init;
    double lp = log_posterior(m, d, prior, x);
    double log_s = std::log(cfg.initial_scale);
    std::size_t accepted = 0;
    for (std::size_t it = 0; it < burn + cfg.draws; ++it) {
      const double s = std::exp(log_s);
      const Vector y = x + (s / root_p) * (chol * r.normal_vector(p));
      const double lq = log_posterior(m, d, prior, y);
      const double log_u = std::log(r.uniform());
      const double log_alpha = std::isfinite(lq) ? std::min(0.0, lq - lp) : -kInf;
      const bool accept = log_u < log_alpha;
      if (accept) {
        x = y;
        lp = lq;
      }
      if (it < burn) {
        const double gain = 1.0 / std::pow(static_cast<double>(it + 1), 0.6);
        log_s += gain * (std::exp(log_alpha) - cfg.target_accept);
        log_s = std::clamp(log_s, -20.0, 5.0);
      } else {
        if (accept) ++accepted;
        out.draws.col(static_cast<Eigen::Index>(c * cfg.draws + (it - burn))) = x;
      }
    }
    ChainMeta& meta = out.chains[c];
    meta.acceptance = static_cast<double>(accepted) / static_cast<double>(cfg.draws);
    meta.step_scale = std::exp(log_s);
    meta.burn_in = burn;
    meta.seed = r.seed();
    meta.stream = r.stream_index();
    meta.acceptance_ok = meta.acceptance >= 0.05 && meta.acceptance <= 0.7;
  });
  return out;
}

bool posterior_proper_along_rays(const QuasiModel& m, const Dataset& d, const Prior& prior,
                                 const LocalGeometry& g, double margin) {
  const double l0 = log_posterior(m, d, prior, g.theta_star);
  const Eigen::Index p = g.p();
  for (Eigen::Index j = 0; j < p; ++j) {
    for (double sign : {1.0, -1.0}) {
      const Vector dir = sign * (g.d0.inv_root() * Vector::Unit(p, j));
      // largest t with theta* + t dir in the box
      double t = kInf;
      for (Eigen::Index i = 0; i < p; ++i) {
        if (dir[i] > 0.0) t = std::min(t, (m.box().hi[i] - g.theta_star[i]) / dir[i]);
        else if (dir[i] < 0.0) t = std::min(t, (m.box().lo[i] - g.theta_star[i]) / dir[i]);
      }
      if (!std::isfinite(t)) continue;
      const double le = log_posterior(m, d, prior, g.theta_star + t * (1.0 - 1e-12) * dir);
      if (!(le < l0 - margin)) return false;
    }
  }
  return true;
}

double ess_initial_positive(const std::vector<double>& x) {
  const std::size_t n = x.size();
  if (n < 4) return static_cast<double>(n);
  const double mu = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
  auto autocov = [&](std::size_t lag) {
    double s = 0.0;
    for (std::size_t i = 0; i + lag < n; ++i) s += (x[i] - mu) * (x[i + lag] - mu);
    return s / static_cast<double>(n);
  };
  const double c0 = autocov(0);
  if (c0 <= 0.0) return static_cast<double>(n);
  // sum of Gamma_k = rho_{2k} + rho_{2k+1}, stopped at the first non-positive pair
  double tau = -1.0;
  for (std::size_t k = 0; 2 * k + 1 < n; ++k) {
    const double pair = (autocov(2 * k) + autocov(2 * k + 1)) / c0;
    if (pair <= 0.0) break;
    tau += 2.0 * pair;
  }
  tau = std::max(tau, 1.0 / static_cast<double>(n));
  return std::min(static_cast<double>(n) / tau, static_cast<double>(n) * std::log10(static_cast<double>(n)));
}

PosteriorSummary posterior_moments(const GaussianPosterior& post, const LocalGeometry& g) {
  PosteriorSummary s;
  const Eigen::Index p = g.p();
  s.exact = true;
  s.mean = post.mean;
  s.cov = post.cov;
  s.mean_se = Vector::Zero(p);
  s.ess = kInf;
  s.draws = 0;
  // u = D0 (theta - theta*) ~ N(a, S)
  const Vector a = g.d0.root() * (post.mean - g.theta_star);
  const Matrix sc = symmetrize(g.d0.root() * post.cov * g.d0.root());
  const double t = g.r0 * g.r0;
  Vector first;
  Matrix second;
  if (near_identity(sc)) {
    const RestrictedGaussMoments rm = restricted_gauss_moments(a, t);
    s.restricted_mass = rm.mass;
    first = rm.first;
    second = rm.second;
  } else {
    // full moments minus a Monte Carlo estimate of the (small) exterior part
    const Matrix root = psd_sqrt(sc);
    RngStream rng(0x7e57u, 0);
    const std::size_t draws = 1u << 17;
    double out_mass = 0.0;
    Vector out_first = Vector::Zero(p);
    Matrix out_second = Matrix::Zero(p, p);
    for (std::size_t i = 0; i < draws; ++i) {
      const Vector u = a + root * rng.normal_vector(p);
      if (u.squaredNorm() > t) {
        out_mass += 1.0;
        out_first += u;
        out_second += u * u.transpose();
      }
    }
    const double dn = static_cast<double>(draws);
    s.restricted_mass = 1.0 - out_mass / dn;
    first = a - out_first / dn;
    second = sc + a * a.transpose() - out_second / dn;
  }
  const Vector mu_u = first / s.restricted_mass;
  const Matrix cov_u = symmetrize(second / s.restricted_mass - mu_u * mu_u.transpose());
  s.restricted_mean = g.theta_star + g.d0.inv_root() * mu_u;
  s.restricted_cov = symmetrize(g.d0.inv_root() * cov_u * g.d0.inv_root());
  s.tail_mass = (1.0 - s.restricted_mass) / s.restricted_mass;
  return s;
}

PosteriorSummary posterior_moments(const PosteriorSample& sample, const LocalGeometry& g) {
  PosteriorSummary s;
  const Eigen::Index p = g.p();
  const Eigen::Index n = sample.draws.cols();
  if (n < 2) throw InvalidArgument("posterior moments need at least two draws");
  s.draws = static_cast<std::size_t>(n);
  s.mean = sample.draws.rowwise().mean();
  const Matrix centred = sample.draws.colwise() - s.mean;
  s.cov = symmetrize(centred * centred.transpose() / static_cast<double>(n - 1));
  s.cov = project_psd(s.cov, &s.cov_projected);
  s.mean_se.resize(p);
  s.ess = kInf;
  for (Eigen::Index j = 0; j < p; ++j) {
    std::vector<double> row(sample.draws.row(j).data(), sample.draws.row(j).data() + 0);
    row.resize(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) row[static_cast<std::size_t>(i)] = sample.draws(j, i);
    s.mean_se[j] = batch_means_se(row);
    // ESS summed over chains
    double ess = 0.0;
    for (std::size_t c = 0; c < sample.chain_offsets.size(); ++c) {
      const std::size_t lo = sample.chain_offsets[c];
      const std::size_t hi = c + 1 < sample.chain_offsets.size() ? sample.chain_offsets[c + 1]
                                                                  : static_cast<std::size_t>(n);
      ess += ess_initial_positive(std::vector<double>(row.begin() + static_cast<std::ptrdiff_t>(lo),
                                                      row.begin() + static_cast<std::ptrdiff_t>(hi)));
    }
    if (sample.chain_offsets.empty()) ess = ess_initial_positive(row);
    s.ess = std::min(s.ess, ess);
  }
  s.low_precision = s.ess < 100.0;
  // restriction to the local ball
  const Matrix u = g.d0.root() * (sample.draws.colwise() - g.theta_star);
  const double t = g.r0 * g.r0;
  Vector sum = Vector::Zero(p);
  std::vector<Eigen::Index> inside;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (u.col(i).squaredNorm() <= t) {
      inside.push_back(i);
      sum += sample.draws.col(i);
    }
  }
  s.restricted_mass = static_cast<double>(inside.size()) / static_cast<double>(n);
  if (inside.empty()) {
    s.restricted_mean = Vector::Constant(p, std::numeric_limits<double>::quiet_NaN());
    s.restricted_cov = Matrix::Constant(p, p, std::numeric_limits<double>::quiet_NaN());
    s.tail_mass = kInf;
    return s;
  }
  s.restricted_mean = sum / static_cast<double>(inside.size());
  Matrix rc = Matrix::Zero(p, p);
  for (Eigen::Index i : inside) {
    const Vector d = sample.draws.col(i) - s.restricted_mean;
    rc += d * d.transpose();
  }
  s.restricted_cov = symmetrize(rc / std::max<double>(1.0, static_cast<double>(inside.size()) - 1.0));
  s.tail_mass = (1.0 - s.restricted_mass) / s.restricted_mass;
  return s;
}

SetSpec SetSpec::full_space() { return {}; }

SetSpec SetSpec::ball(const Vector& center, double z) {
  if (!(z >= 0.0)) throw InvalidArgument("ball threshold must be nonnegative");
  SetSpec s;
  s.kind = Kind::ball;
  s.center = center;
  s.z = z;
  return s;
}

SetSpec SetSpec::ellipsoid(const Vector& center, const Matrix& shape, double z) {
  if (!(z >= 0.0)) throw InvalidArgument("ellipsoid threshold must be nonnegative");
  if (shape.rows() != center.size() || shape.cols() != center.size())
    throw InvalidArgument("ellipsoid shape does not match the centre");
  SetSpec s;
  s.kind = Kind::ellipsoid;
  s.center = center;
  s.shape = shape;
  s.z = z;
  return s;
}

SetSpec SetSpec::half_space(const Vector& normal, double offset) {
  if (normal.norm() == 0.0) throw InvalidArgument("half-space normal must be nonzero");
  SetSpec s;
  s.kind = Kind::half_space;
  s.normal = normal;
  s.offset = offset;
  return s;
}

SetSpec SetSpec::complemented() const {
  SetSpec s = *this;
  s.complement = !complement;
  return s;
}

bool SetSpec::contains(const Vector& v) const {
  bool in = true;
  switch (kind) {
    case Kind::full: in = true; break;
    case Kind::ball: in = (v - center).squaredNorm() <= z; break;
    case Kind::ellipsoid: in = (shape * (v - center)).squaredNorm() <= z; break;
    case Kind::half_space: in = normal.dot(v) > offset; break;
  }
  return complement ? !in : in;
}

double SetSpec::gaussian_probability() const {
  Eigen::Index p = 0;
  if (kind == Kind::ball || kind == Kind::ellipsoid) p = center.size();
  else if (kind == Kind::half_space) p = normal.size();
  else p = 1;
  return gaussian_set_probability(Vector::Zero(p), Matrix::Identity(p, p), *this).value;
}

Estimate set_probability(const GaussianPosterior& post, const LocalGeometry& g, const ScoreState& s,
                         const SetSpec& set) {
  const Vector c = g.d0.root() * (post.mean - s.theta_circ);
  const Matrix sc = symmetrize(g.d0.root() * post.cov * g.d0.root());
  return gaussian_set_probability(c, sc, set);
}

Estimate set_probability(const PosteriorSample& sample, const LocalGeometry& g, const ScoreState& s,
                         const SetSpec& set) {
  const Matrix v = standardized(sample, g, s);
  std::vector<double> ind(static_cast<std::size_t>(v.cols()));
  for (Eigen::Index i = 0; i < v.cols(); ++i) ind[static_cast<std::size_t>(i)] = set.contains(v.col(i)) ? 1.0 : 0.0;
  const double prob = std::accumulate(ind.begin(), ind.end(), 0.0) / static_cast<double>(ind.size());
  return {prob, batch_means_se(ind)};
}

namespace {
void check_lambdas(const std::vector<Vector>& lambdas, Eigen::Index p) {
  for (const Vector& l : lambdas) {
    if (l.size() != p) throw InvalidArgument("lambda has the wrong dimension");
    if (l.squaredNorm() > static_cast<double>(p) * (1.0 + 1e-12))
      throw InvalidArgument("lambda outside |lambda|^2 <= p");
  }
}
}  // namespace

std::vector<Estimate> posterior_mgf(const GaussianPosterior& post, const LocalGeometry& g,
                                    const ScoreState& s, const std::vector<Vector>& lambdas) {
  check_lambdas(lambdas, g.p());
  const Vector c = g.d0.root() * (post.mean - s.theta_circ);
  const Matrix sc = symmetrize(g.d0.root() * post.cov * g.d0.root());
  std::vector<Estimate> out;
  for (const Vector& l : lambdas) out.push_back({l.dot(c) + 0.5 * l.dot(sc * l), 0.0});
  return out;
}

std::vector<Estimate> posterior_mgf(const PosteriorSample& sample, const LocalGeometry& g,
                                    const ScoreState& s, const std::vector<Vector>& lambdas) {
  check_lambdas(lambdas, g.p());
  const Matrix v = standardized(sample, g, s);
  std::vector<Estimate> out;
  std::vector<double> e(static_cast<std::size_t>(v.cols()));
  for (const Vector& l : lambdas) {
    const Vector t = v.transpose() * l;
    const double mx = t.maxCoeff();
    for (Eigen::Index i = 0; i < t.size(); ++i) e[static_cast<std::size_t>(i)] = std::exp(t[i] - mx);
    const double mean = std::accumulate(e.begin(), e.end(), 0.0) / static_cast<double>(e.size());
    out.push_back({mx + std::log(mean), batch_means_se(e) / mean});
  }
  return out;
}

}  // namespace bvm
