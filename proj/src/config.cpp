#include "bvm/config.hpp"

#define TOML_EXCEPTIONS 1
#include <toml.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace bvm {

ConfigError::ConfigError(const std::string& field, const std::string& message, int line)
    : Error("config: " + (line > 0 ? "line " + std::to_string(line) + ": " : std::string()) + field + ": " +
            message),
      field_(field),
      line_(line) {}

std::string to_string(PriorScale s) { return s == PriorScale::absolute ? "absolute" : "smallness"; }
std::string to_string(RdSource s) { return s == RdSource::fixed ? "fixed" : "from-conditions"; }
std::string to_string(PosteriorMode m) {
  switch (m) {
    case PosteriorMode::automatic: return "auto";
    case PosteriorMode::exact: return "exact";
    case PosteriorMode::mcmc: return "mcmc";
  }
  return "auto";
}

namespace {

int line_of(const toml::node& n) { return static_cast<int>(n.source().begin.line); }

// One TOML table; every key must be consumed, leftovers are schema errors.
class Section {
 public:
  Section(const toml::table* t, std::string path) : t_(t), path_(std::move(path)) {}

  bool present() const { return t_ != nullptr; }

  template <typename F>
  void with(const std::string& key, F&& f) {
    if (!t_) return;
    const toml::node* n = t_->get(key);
    if (!n) return;
    used_.insert(key);
    f(*n, field(key));
  }

  double real(const std::string& key, double def) {
    double out = def;
    with(key, [&](const toml::node& n, const std::string& f) { out = as_real(n, f); });
    return out;
  }
  std::optional<double> opt_real(const std::string& key) {
    std::optional<double> out;
    with(key, [&](const toml::node& n, const std::string& f) { out = as_real(n, f); });
    return out;
  }
  std::int64_t integer(const std::string& key, std::int64_t def, std::int64_t lo = 0) {
    std::int64_t out = def;
    with(key, [&](const toml::node& n, const std::string& f) {
      const auto v = n.value<std::int64_t>();
      if (!n.is_integer() || !v) throw ConfigError(f, "expected an integer", line_of(n));
      if (*v < lo) throw ConfigError(f, "must be >= " + std::to_string(lo), line_of(n));
      out = *v;
    });
    return out;
  }
  std::string string(const std::string& key, const std::string& def) {
    std::string out = def;
    with(key, [&](const toml::node& n, const std::string& f) {
      const auto v = n.value<std::string>();
      if (!v) throw ConfigError(f, "expected a string", line_of(n));
      out = *v;
    });
    return out;
  }
  bool boolean(const std::string& key, bool def) {
    bool out = def;
    with(key, [&](const toml::node& n, const std::string& f) {
      const auto v = n.value<bool>();
      if (!v) throw ConfigError(f, "expected a boolean", line_of(n));
      out = *v;
    });
    return out;
  }
  std::vector<double> reals(const std::string& key, std::vector<double> def) {
    with(key, [&](const toml::node& n, const std::string& f) {
      const toml::array* a = n.as_array();
      if (!a) throw ConfigError(f, "expected an array of numbers", line_of(n));
      def.clear();
      for (const toml::node& e : *a) def.push_back(as_real(e, f));
    });
    return def;
  }
  std::vector<std::string> strings(const std::string& key, std::vector<std::string> def) {
    with(key, [&](const toml::node& n, const std::string& f) {
      const toml::array* a = n.as_array();
      if (!a) throw ConfigError(f, "expected an array of strings", line_of(n));
      def.clear();
      for (const toml::node& e : *a) {
        const auto v = e.value<std::string>();
        if (!v) throw ConfigError(f, "expected an array of strings", line_of(e));
        def.push_back(*v);
      }
    });
    return def;
  }

  int line(const std::string& key) const {
    if (!t_) return 0;
    const toml::node* n = t_->get(key);
    return n ? line_of(*n) : line_of(*t_);
  }
  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void finish(const std::set<std::string>& subsections = {}) const {
    if (!t_) return;
    for (const auto& [k, v] : *t_) {
      const std::string key(k.str());
      if (!used_.count(key) && !subsections.count(key)) throw ConfigError(field(key), "unknown key", line_of(v));
    }
  }

 private:
  static double as_real(const toml::node& n, const std::string& f) {
    if (!n.is_number()) throw ConfigError(f, "expected a number", line_of(n));
    const double v = *n.value<double>();
    if (!std::isfinite(v)) throw ConfigError(f, "must be finite", line_of(n));
    return v;
  }

  const toml::table* t_;
  std::string path_;
  std::set<std::string> used_;
};

Section sub(const toml::table& root, const std::string& key) {
  const toml::node* n = root.get(key);
  if (!n) return Section(nullptr, key);
  if (!n->is_table()) throw ConfigError(key, "expected a table", line_of(*n));
  return Section(n->as_table(), key);
}

template <typename F>
auto enum_field(Section& s, const std::string& key, const std::string& def, F&& parse) {
  const std::string v = s.string(key, def);
  try {
    return parse(v);
  } catch (const Error& e) {
    throw ConfigError(s.field(key), e.what(), s.line(key));
  }
}

void require(bool ok, Section& s, const std::string& key, const std::string& message) {
  if (!ok) throw ConfigError(s.field(key), message, s.line(key));
}

}  // namespace

ExperimentConfig parse_config(const std::string& text, const std::string& source) {
  toml::table root;
  try {
    root = toml::parse(text, source);
  } catch (const toml::parse_error& e) {
    throw ConfigError("<syntax>", std::string(e.description()), static_cast<int>(e.source().begin.line));
  }
  ExperimentConfig c;
  Section top(&root, "");
  c.schema_version = static_cast<int>(top.integer("schema_version", kSchemaVersion, 1));
  require(c.schema_version == kSchemaVersion, top, "schema_version",
          "unsupported schema version (expected " + std::to_string(kSchemaVersion) + ")");
  c.scenario = top.string("scenario", c.scenario);
  c.seed = static_cast<std::uint64_t>(top.integer("seed", static_cast<std::int64_t>(c.seed)));
  c.replications = static_cast<std::size_t>(top.integer("replications", 1, 1));

  Section m = sub(root, "model");
  c.model.family = enum_field(m, "family", to_string(c.model.family), family_from_string);
  require(c.model.family != Family::user, m, "family", "user families register through the library only");
  c.model.p = static_cast<Eigen::Index>(m.integer("p", c.model.p, 1));
  c.model.n = static_cast<std::size_t>(m.integer("n", static_cast<std::int64_t>(c.model.n), 1));
  c.model.sigma = m.real("sigma", c.model.sigma);
  require(c.model.sigma > 0.0, m, "sigma", "must be positive");
  c.model.design_seed = static_cast<std::uint64_t>(m.integer("design_seed", static_cast<std::int64_t>(c.model.design_seed)));
  c.model.design_scale = m.real("design_scale", c.model.design_scale);
  require(c.model.design_scale > 0.0, m, "design_scale", "must be positive");
  c.model.box_half_width = m.real("box_half_width", c.model.box_half_width);
  require(c.model.box_half_width > 0.0, m, "box_half_width", "must be positive");
  m.finish();

  Section t = sub(root, "truth");
  const std::string default_gen = c.model.family == Family::logistic  ? "logit"
                                  : c.model.family == Family::poisson ? "poisson"
                                                                      : "gaussian";
  c.truth.generator = enum_field(t, "generator", default_gen, generator_from_string);
  t.with("beta", [&](const toml::node& n, const std::string& f) {
    if (n.is_number()) {
      const double v = *n.value<double>();
      c.truth.beta.assign(static_cast<std::size_t>(c.model.p), v);
    } else if (const toml::array* a = n.as_array()) {
      for (const toml::node& e : *a) {
        if (!e.is_number()) throw ConfigError(f, "expected numbers", line_of(e));
        c.truth.beta.push_back(*e.value<double>());
      }
      if (static_cast<Eigen::Index>(c.truth.beta.size()) != c.model.p)
        throw ConfigError(f, "length " + std::to_string(c.truth.beta.size()) + " does not match model.p", line_of(n));
    } else {
      throw ConfigError(f, "expected a number or an array", line_of(n));
    }
  });
  c.truth.beta_norm = t.real("beta_norm", 0.0);
  require(c.truth.beta.empty() || c.truth.beta_norm == 0.0, t, "beta_norm", "give either beta or beta_norm");
  c.truth.noise = enum_field(t, "noise", to_string(c.truth.noise), noise_from_string);
  c.truth.noise_sd = t.real("noise_sd", c.truth.noise_sd);
  require(c.truth.noise_sd > 0.0, t, "noise_sd", "must be positive");
  c.truth.student_dof = t.real("student_dof", c.truth.student_dof);
  require(c.truth.student_dof > 2.0, t, "student_dof", "must exceed 2");
  c.truth.dispersion = t.real("dispersion", c.truth.dispersion);
  require(c.truth.dispersion > 0.0, t, "dispersion", "must be positive");
  t.finish();

  Section pr = sub(root, "prior");
  c.prior.kind = enum_field(pr, "kind", "flat", prior_kind_from_string);
  require(c.prior.kind != PriorKind::custom, pr, "kind", "custom priors register through the library only");
  c.prior.g = pr.real("g", 0.0);
  require(c.prior.g >= 0.0, pr, "g", "must be nonnegative");
  c.prior.scale = enum_field(pr, "scale", "absolute", [](const std::string& s) {
    if (s == "absolute") return PriorScale::absolute;
    if (s == "smallness") return PriorScale::smallness;
    throw InvalidArgument("expected absolute or smallness");
  });
  pr.finish();

  Section g = sub(root, "geometry");
  c.geometry.normalization = g.real("normalization", c.geometry.normalization);
  require(c.geometry.normalization > 0.0, g, "normalization", "must be positive");
  c.geometry.x_n = g.opt_real("x_n");
  require(!c.geometry.x_n || *c.geometry.x_n > 0.0, g, "x_n", "must be positive");
  c.geometry.r0 = g.opt_real("r0");
  require(!c.geometry.r0 || *c.geometry.r0 > 0.0, g, "r0", "must be positive");
  g.finish();

  Section rd = sub(root, "rd");
  c.rd.source = enum_field(rd, "source", "fixed", [](const std::string& s) {
    if (s == "fixed") return RdSource::fixed;
    if (s == "from-conditions") return RdSource::from_conditions;
    throw InvalidArgument("expected fixed or from-conditions");
  });
  c.rd.value = rd.real("value", c.rd.value);
  require(c.rd.value >= 0.0 && c.rd.value < 1.0, rd, "value", "must lie in [0, 1)");
  rd.finish();

  Section po = sub(root, "posterior");
  c.posterior.mode = enum_field(po, "mode", "auto", [](const std::string& s) {
    if (s == "auto") return PosteriorMode::automatic;
    if (s == "exact") return PosteriorMode::exact;
    if (s == "mcmc") return PosteriorMode::mcmc;
    throw InvalidArgument("expected auto, exact or mcmc");
  });
  c.posterior.draws = static_cast<std::size_t>(po.integer("draws", static_cast<std::int64_t>(c.posterior.draws), 100));
  po.with("burn_in", [&](const toml::node& n, const std::string& f) {
    const auto v = n.value<std::int64_t>();
    if (!n.is_integer() || !v || *v < 0) throw ConfigError(f, "expected a nonnegative integer", line_of(n));
    c.posterior.burn_in = static_cast<std::size_t>(*v);
  });
  c.posterior.chains = static_cast<std::size_t>(po.integer("chains", 1, 1));
  c.posterior.initial_scale = po.real("initial_scale", c.posterior.initial_scale);
  require(c.posterior.initial_scale > 0.0, po, "initial_scale", "must be positive");
  c.posterior.target_accept = po.real("target_accept", c.posterior.target_accept);
  require(c.posterior.target_accept > 0.0 && c.posterior.target_accept < 1.0, po, "target_accept",
          "must lie in (0, 1)");
  po.finish();

  Section me = sub(root, "metrics");
  c.metrics.lambdas = static_cast<std::size_t>(me.integer("lambdas", static_cast<std::int64_t>(c.metrics.lambdas), 1));
  c.metrics.slack = me.real("slack", c.metrics.slack);
  require(c.metrics.slack >= 0.0, me, "slack", "must be nonnegative");
  c.metrics.coronary_x = me.reals("coronary_x", {});
  for (double x : c.metrics.coronary_x)
    require(x >= 0.0 && x <= static_cast<double>(c.model.p) / 2.0, me, "coronary_x", "each x must lie in [0, p/2]");
  me.finish();

  Section cr = sub(root, "credible");
  c.credible.alpha = cr.real("alpha", c.credible.alpha);
  require(c.credible.alpha > 0.0 && c.credible.alpha < 1.0, cr, "alpha", "must lie in (0, 1)");
  {
    std::vector<std::string> names;
    for (CredibleKind k : c.credible.kinds) names.push_back(to_string(k));
    names = cr.strings("kinds", names);
    c.credible.kinds.clear();
    for (const std::string& s : names) {
      try {
        c.credible.kinds.push_back(credible_kind_from_string(s));
      } catch (const Error& e) {
        throw ConfigError(cr.field("kinds"), e.what(), cr.line("kinds"));
      }
    }
  }
  cr.finish();

  Section au = sub(root, "audit");
  c.audit.mc_budget = static_cast<std::size_t>(au.integer("mc_budget", static_cast<std::int64_t>(c.audit.mc_budget), 1000));
  c.audit.directions = static_cast<std::size_t>(au.integer("directions", 0));
  c.audit.radii = static_cast<int>(au.integer("radii", c.audit.radii, 1));
  c.audit.polish_steps = static_cast<int>(au.integer("polish_steps", c.audit.polish_steps));
  c.audit.lambda_points = static_cast<int>(au.integer("lambda_points", c.audit.lambda_points, 2));
  au.finish();

  Section sw = sub(root, "sweep");
  c.sweep.ratios = sw.reals("ratios", c.sweep.ratios);
  for (double r : c.sweep.ratios) require(r > 0.0, sw, "ratios", "ratios must be positive");
  {
    std::vector<double> ps(c.sweep.p_list.begin(), c.sweep.p_list.end());
    ps = sw.reals("p_list", ps);
    c.sweep.p_list.clear();
    for (double v : ps) {
      require(v >= 1.0 && v == std::floor(v), sw, "p_list", "entries must be positive integers");
      c.sweep.p_list.push_back(static_cast<Eigen::Index>(v));
    }
    std::sort(c.sweep.p_list.begin(), c.sweep.p_list.end());
  }
  c.sweep.n_min = static_cast<std::size_t>(sw.integer("n_min", static_cast<std::int64_t>(c.sweep.n_min), 1));
  c.sweep.reps = static_cast<std::size_t>(sw.integer("reps", static_cast<std::int64_t>(c.sweep.reps), 1));
  c.sweep.g_list = sw.reals("g_list", c.sweep.g_list);
  for (double v : c.sweep.g_list) require(v >= 0.0, sw, "g_list", "entries must be nonnegative");
  sw.finish();

  Section out = sub(root, "output");
  c.output.dir = out.string("dir", c.output.dir);
  c.output.draw_dump = out.boolean("draw_dump", false);
  out.finish();

  top.finish({"model", "truth", "prior", "geometry", "rd", "posterior", "metrics", "credible", "audit", "sweep",
              "output"});
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

nlohmann::json to_json(const ExperimentConfig& c) {
  using nlohmann::json;
  json j;
  j["schema_version"] = c.schema_version;
  j["scenario"] = c.scenario;
  j["seed"] = c.seed;
  j["replications"] = c.replications;
  j["model"] = {{"family", to_string(c.model.family)}, {"p", c.model.p},
                {"n", c.model.n},
                {"sigma", c.model.sigma},
                {"design_seed", c.model.design_seed},
                {"design_scale", c.model.design_scale},
                {"box_half_width", c.model.box_half_width}};
  j["truth"] = {{"generator", to_string(c.truth.generator)},
                {"beta", c.truth.beta},
                {"beta_norm", c.truth.beta_norm},
                {"noise", to_string(c.truth.noise)},
                {"noise_sd", c.truth.noise_sd},
                {"student_dof", c.truth.student_dof},
                {"dispersion", c.truth.dispersion}};
  j["prior"] = {{"kind", to_string(c.prior.kind)}, {"g", c.prior.g}, {"scale", to_string(c.prior.scale)}};
  j["geometry"] = {{"normalization", c.geometry.normalization},
                   {"x_n", c.geometry.x_n ? json(*c.geometry.x_n) : json(nullptr)},
                   {"r0", c.geometry.r0 ? json(*c.geometry.r0) : json(nullptr)}};
  j["rd"] = {{"source", to_string(c.rd.source)}, {"value", c.rd.value}};
  j["posterior"] = {{"mode", to_string(c.posterior.mode)},
                    {"draws", c.posterior.draws},
                    {"burn_in", c.posterior.burn_in ? json(*c.posterior.burn_in) : json(nullptr)},
                    {"chains", c.posterior.chains},
                    {"initial_scale", c.posterior.initial_scale},
                    {"target_accept", c.posterior.target_accept}};
  j["metrics"] = {{"lambdas", c.metrics.lambdas}, {"slack", c.metrics.slack}, {"coronary_x", c.metrics.coronary_x}};
  json kinds = json::array();
  for (CredibleKind k : c.credible.kinds) kinds.push_back(to_string(k));
  j["credible"] = {{"alpha", c.credible.alpha}, {"kinds", kinds}};
  j["audit"] = {{"mc_budget", c.audit.mc_budget},
                {"directions", c.audit.directions},
                {"radii", c.audit.radii},
                {"polish_steps", c.audit.polish_steps},
                {"lambda_points", c.audit.lambda_points}};
  j["sweep"] = {{"ratios", c.sweep.ratios},
                {"p_list", c.sweep.p_list},
                {"n_min", c.sweep.n_min},
                {"reps", c.sweep.reps},
                {"g_list", c.sweep.g_list}};
  j["output"] = {{"dir", c.output.dir}, {"draw_dump", c.output.draw_dump}};
  return j;
}

std::unique_ptr<QuasiModel> build_model(const ModelSpec& s) {
  const Box box = Box::uniform(s.p, s.box_half_width);
  switch (s.family) {
    case Family::gaussian_mean: return std::make_unique<GaussianMeanModel>(s.p, s.sigma, s.n, box);
    case Family::gaussian_linear:
      return std::make_unique<GaussianLinearModel>(
          GaussianLinearModel::random_design(s.n, s.p, s.design_seed, s.design_scale), s.sigma, box);
    case Family::logistic: return std::make_unique<LogisticModel>(s.p, s.n, box);
    case Family::poisson: return std::make_unique<PoissonModel>(s.p, s.n, box);
    case Family::user: break;
  }
  throw UnsupportedError("no built-in model for family " + to_string(s.family));
}

TrueProcess build_truth(const TruthSpec& s, const QuasiModel& m) {
  TrueProcess t;
  t.generator = s.generator;
  if (!s.beta.empty()) {
    if (static_cast<Eigen::Index>(s.beta.size()) != m.p())
      throw ConfigError("truth.beta", "length does not match the model dimension");
    t.beta = Eigen::Map<const Vector>(s.beta.data(), m.p());
  } else {
    t.beta = Vector::Constant(m.p(), s.beta_norm / std::sqrt(static_cast<double>(m.p())));
  }
  t.noise = s.noise;
  t.noise_sd = s.noise_sd;
  t.student_dof = s.student_dof;
  t.dispersion = s.dispersion;
  t.matches_model = m.is_member(t);
  return t;
}

Prior build_prior(const PriorSpec& s, const Matrix& d0_sq) {
  if (s.kind == PriorKind::flat) return Prior::flat();
  if (s.kind != PriorKind::gaussian) throw UnsupportedError("config priors are flat or gaussian");
  const Eigen::Index p = d0_sq.rows();
  if (s.scale == PriorScale::absolute) return Prior::gaussian(s.g * s.g * Matrix::Identity(p, p));
  return Prior::gaussian((s.g / static_cast<double>(p)) * d0_sq);
}

}  // namespace bvm
