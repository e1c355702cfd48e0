#include "bvm/credible.hpp"

#include "bvm/distributions.hpp"
#include "bvm/linalg.hpp"
#include "bvm/parallel.hpp"

#include <cmath>
#include <limits>

namespace bvm {

std::string to_string(CredibleKind k) {
  switch (k) {
    case CredibleKind::oracle: return "oracle";
    case CredibleKind::posterior: return "posterior";
    case CredibleKind::plugin: return "plugin";
  }
  return "oracle";
}

CredibleKind credible_kind_from_string(const std::string& s) {
  if (s == "oracle") return CredibleKind::oracle;
  if (s == "posterior") return CredibleKind::posterior;
  if (s == "plugin") return CredibleKind::plugin;
  throw InvalidArgument("unknown credible set kind '" + s + "' (oracle, posterior, plugin)");
}

bool CredibleSet::contains(const Vector& theta) const {
  const Vector d = theta - center;
  return d.dot(scale_sq * d) <= z;
}

SetSpec CredibleSet::standardized(const LocalGeometry& g, const ScoreState& s) const {
  // theta = theta_circ + D0^-1 v
  const Matrix shape = psd_sqrt(scale_sq) * g.d0.inv_root();
  return SetSpec::ellipsoid(g.d0.root() * (center - s.theta_circ), shape, z);
}

double credible_threshold(Eigen::Index p, double alpha) {
  return chi2_quantile(static_cast<double>(p), alpha);
}

namespace {
CredibleSet make_set(CredibleKind kind, Vector center, Matrix scale_sq, double z) {
  if (!(z >= 0.0)) throw InvalidArgument("credible threshold must be nonnegative");
  CredibleSet c;
  c.kind = kind;
  c.center = std::move(center);
  c.scale_sq = project_psd(symmetrize(scale_sq), &c.projected);
  c.z = z;
  c.alpha = std::numeric_limits<double>::quiet_NaN();
  return c;
}
}  // namespace

CredibleSet oracle_set(const LocalGeometry& g, const ScoreState& s, double z) {
  return make_set(CredibleKind::oracle, s.theta_circ, g.d0_sq, z);
}

CredibleSet posterior_set(const PosteriorSummary& summary, double z) {
  bool clipped = false;
  const Matrix cov = project_psd(symmetrize(summary.cov), &clipped);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
  const Vector ev = eig.eigenvalues();
  const double floor = std::max(ev.maxCoeff(), 1e-300) * 1e-14;
  const Vector inv = ev.unaryExpr([&](double x) { return 1.0 / std::max(x, floor); });
  CredibleSet c = make_set(CredibleKind::posterior, summary.mean,
                           eig.eigenvectors() * inv.asDiagonal() * eig.eigenvectors().transpose(), z);
  c.projected = c.projected || clipped || summary.cov_projected;
  return c;
}

CredibleSet plugin_set(const QuasiModel& m, const PosteriorSummary& summary, double z) {
  return make_set(CredibleKind::plugin, summary.mean, plugin_fisher(m, summary.mean), z);
}

CredibleSet with_alpha(CredibleSet set, double alpha) {
  set.alpha = alpha;
  return set;
}

Estimate posterior_mass(const CredibleSet& set, const GaussianPosterior& post, const LocalGeometry& g,
                        const ScoreState& s) {
  return set_probability(post, g, s, set.standardized(g, s));
}

Estimate posterior_mass(const CredibleSet& set, const PosteriorSample& sample, const LocalGeometry& g,
                        const ScoreState& s) {
  return set_probability(sample, g, s, set.standardized(g, s));
}

CoverageResult tally_coverage(const std::vector<std::optional<bool>>& covered, double alpha) {
  CoverageResult r;
  r.target = 1.0 - alpha;
  for (const auto& c : covered) {
    if (!c) {
      ++r.failures;
      continue;
    }
    ++r.n_reps;
    if (*c) ++r.covered;
  }
  if (r.n_reps > 0) {
    r.rate = static_cast<double>(r.covered) / static_cast<double>(r.n_reps);
    r.binomial_se = std::sqrt(r.rate * (1.0 - r.rate) / static_cast<double>(r.n_reps));
  }
  r.valid = r.n_reps > 0 && static_cast<double>(r.failures) <= 0.05 * static_cast<double>(covered.size());
  return r;
}

CoverageResult coverage_mc(const CoverageScenario& sc, const LocalGeometry& g) {
  if (!sc.model) throw InvalidArgument("coverage scenario has no model");
  if (sc.n_reps < 100) throw InvalidArgument("coverage needs at least 100 replications");
  const QuasiModel& m = *sc.model;
  const double z = credible_threshold(g.p(), sc.alpha);
  const bool closed_form = (m.family() == Family::gaussian_mean || m.family() == Family::gaussian_linear) &&
                           sc.prior.kind != PriorKind::custom;
  std::vector<std::optional<bool>> hit(sc.n_reps);
  parallel_for(sc.n_reps, sc.threads, [&](std::size_t i) {
    try {
      RngStream rng(sc.seed, i);
      RngStream data_rng = rng.child(0);
      const Dataset d = m.sample(sc.truth, data_rng);
      const ScoreState s = score_state(m, d, g);
      CredibleSet set;
      if (sc.kind == CredibleKind::oracle) {
        set = oracle_set(g, s, z);
      } else {
        PosteriorSummary summary;
        if (closed_form) {
          summary = posterior_moments(exact_gaussian_posterior(m, d, sc.prior), g);
        } else {
          summary = posterior_moments(rwm_sample(m, d, sc.prior, g, sc.chain, rng.child(1), 1), g);
        }
        set = sc.kind == CredibleKind::posterior ? posterior_set(summary, z) : plugin_set(m, summary, z);
      }
      hit[i] = set.contains(g.theta_star);
    } catch (const Error&) {
      hit[i].reset();
    }
  });
  return tally_coverage(hit, sc.alpha);
}

SandwichSpec sandwich_matrix(const LocalGeometry& g) {
  SandwichSpec s;
  s.m = symmetrize(g.sandwich());
  s.identity = (s.m - Matrix::Identity(g.p(), g.p())).cwiseAbs().maxCoeff() <= 1e-10;
  return s;
}

double sandwich_coverage(const SandwichSpec& spec, double z) {
  if (spec.m.rows() == 1) return chi2_cdf(1.0, z / spec.m(0, 0));
  Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetrize(spec.m), Eigen::EigenvaluesOnly);
  return quadform_cdf(eig.eigenvalues().cwiseMax(0.0), z);
}

}  // namespace bvm
