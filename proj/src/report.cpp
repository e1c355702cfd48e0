#include "bvm/report.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

namespace bvm {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json vec(const Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(num(v[i]));
  return a;
}

json mat(const Matrix& m) {
  json a = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) a.push_back(vec(m.row(i).transpose()));
  return a;
}

json sampled(const SampledFunction& f) {
  json a = json::array();
  for (std::size_t i = 0; i < f.r.size(); ++i)
    a.push_back({{"r", num(f.r[i])}, {"value", num(f.value[i])}, {"se", num(i < f.se.size() ? f.se[i] : 0.0)}});
  return a;
}

json quant(const Quantiles& q) { return {{"median", num(q.median)}, {"q25", num(q.q25)}, {"q75", num(q.q75)}}; }

json flags_json(const ApplicabilityFlags& f) {
  return {{"rd_above_half", f.rd_above_half},         {"low_ess", f.low_ess},
          {"acceptance", f.acceptance},               {"cov_projected", f.cov_projected},
          {"improper_posterior", f.improper_posterior}, {"budget_omitted", f.budget_omitted},
          {"mle_not_converged", f.mle_not_converged}, {"conditions_failed", f.conditions_failed},
          {"prior_check_failed", f.prior_check_failed}, {"any", f.any()}};
}

json budget_json(const ErrorBudget& b) {
  return {{"rd", num(b.rd)},
          {"err_ub", num(b.err_ub)},
          {"err_lb", num(b.err_lb)},
          {"spread", num(b.spread)},
          {"nu_r0", num(b.nu_r0)},
          {"rho_r0", num(b.rho_r0)},
          {"log_det_correction", num(b.log_det_correction)},
          {"delta_plus", num(b.delta_plus)},
          {"delta_minus", num(b.delta_minus)},
          {"delta_oplus", num(b.delta_oplus)},
          {"q", num(b.q)},
          {"xi_norm", num(b.xi_norm)},
          {"spread_ratio", num(b.spread_ratio)},
          {"err_ub_ratio", num(b.err_ub_ratio)}};
}

json geometry_json(const LocalGeometry& g) {
  return {{"theta_star", vec(g.theta_star)},
          {"d0_sq", mat(g.d0_sq)},
          {"v0_sq", mat(g.v0_sq)},
          {"a_sq", num(g.a_sq)},
          {"r0", num(g.r0)},
          {"x_n", num(g.x_n)},
          {"q_star", num(g.q_star)},
          {"normalization", num(g.normalization)},
          {"theta_star_on_boundary", g.theta_star_on_boundary},
          {"sandwich", mat(g.sandwich())}};
}

json truth_json(const TrueProcess& t) {
  return {{"generator", to_string(t.generator)},
          {"beta", vec(t.beta)},
          {"noise", to_string(t.noise)},
          {"noise_sd", num(t.noise_sd)},
          {"student_dof", num(t.student_dof)},
          {"dispersion", num(t.dispersion)},
          {"matches_model", t.matches_model}};
}

json mgf_diag(const MgfDiagnostics& d) {
  return {{"estimates", d.estimates}, {"heavy_tail", d.heavy_tail}, {"non_finite", d.non_finite}};
}

json conditions_json(const ConditionProfile& c) {
  return {{"delta_of_r", sampled(c.delta_of_r)},
          {"omega_of_r", sampled(c.omega_of_r)},
          {"g_of_r", sampled(c.g_of_r)},
          {"b_of_r", sampled(c.b_of_r)},
          {"b_exterior", sampled(c.b_exterior)},
          {"nu0", num(c.nu0)},
          {"nu0_se", num(c.nu0_se)},
          {"g_max", num(c.g_max)},
          {"delta_r0", num(c.delta_r0)},
          {"omega_r0", num(c.omega_r0)},
          {"b_r0", num(c.b_r0)},
          {"b_upper", num(c.b_upper)},
          {"rd", num(c.rd)},
          {"flags",
           {{"delta_violated", c.flags.delta_violated},
            {"omega_violated", c.flags.omega_violated},
            {"nu0_failed", c.flags.nu0_failed},
            {"rd_violated", c.flags.rd_violated},
            {"b_failed", c.flags.b_failed}}},
          {"mgf_diagnostics", mgf_diag(c.mgf)}};
}

json coverage_json(const std::vector<KindCoverage>& cov) {
  json a = json::array();
  for (const KindCoverage& k : cov)
    a.push_back({{"kind", to_string(k.kind)},
                 {"n_reps", k.result.n_reps},
                 {"covered", k.result.covered},
                 {"failures", k.result.failures},
                 {"rate", num(k.result.rate)},
                 {"binomial_se", num(k.result.binomial_se)},
                 {"target", num(k.result.target)},
                 {"valid", k.result.valid},
                 {"predicted", num(k.predicted)}});
  return a;
}

json rep_json(const ReplicationRecord& r) {
  json j;
  j["index"] = r.index;
  j["seed"] = r.seed;
  j["stream"] = r.stream;
  j["ok"] = r.ok;
  if (!r.ok) {
    j["error"] = r.error;
    return j;
  }
  j["exact"] = r.exact;
  j["xi_norm"] = num(r.xi_norm);
  j["q"] = num(r.q);
  j["mle_converged"] = r.mle_converged;
  j["mle_expansion"] = num(r.mle_expansion);
  j["brackets"] = {{"err_ub", num(r.brackets.err_ub)},         {"err_lb", num(r.brackets.err_lb)},
                   {"err_ub_raw", num(r.brackets.err_ub_raw)}, {"err_lb_raw", num(r.brackets.err_lb_raw)},
                   {"gap_ub", num(r.brackets.gap_ub)},         {"gap_lb", num(r.brackets.gap_lb)},
                   {"evaluations", r.brackets.evaluations}};
  j["nu_r0"] = num(r.nu);
  j["rho_measured"] = num(r.rho_measured);
  if (r.rho_bound) j["rho_bound"] = {{"value", num(r.rho_bound->value)}, {"vacuous", r.rho_bound->vacuous}};
  if (r.tail)
    j["tail_contract"] = {{"measured", num(r.tail->measured)}, {"bound", num(r.tail->bound)},
                          {"ratio", num(r.tail->ratio)},       {"pass", r.tail->pass},
                          {"vacuous", r.tail->vacuous}};
  if (r.upper_function)
    j["upper_function"] = {{"worst_violation", num(r.upper_function->worst_violation)},
                           {"n_points", r.upper_function->n_points},
                           {"b", num(r.upper_function->b)},
                           {"pass", r.upper_function->pass}};
  const BvmReport& b = r.bvm;
  json bvm = {{"mean_disc", num(b.mean_disc)},
              {"mean_disc_restricted", num(b.mean_disc_restricted)},
              {"cov_disc_op", num(b.cov_disc_op)},
              {"cov_disc_tr", num(b.cov_disc_tr)},
              {"cov_disc_op_restricted", num(b.cov_disc_op_restricted)},
              {"mgf_disc", num(b.mgf_disc)},
              {"mgf_argmax", vec(b.mgf_argmax)},
              {"prob_disc", num(b.prob_disc)},
              {"rd", num(b.rd)},
              {"q", num(b.q)},
              {"flags", flags_json(b.flags)}};
  if (b.rd > 0.0 && b.q > 0.0) {
    const double s = b.rd * b.q;
    bvm["ratios_to_rd_q"] = {{"mean_disc", num(b.mean_disc / s)},
                             {"cov_disc_op", num(b.cov_disc_op / s)},
                             {"mgf_disc", num(b.mgf_disc / s)}};
  }
  if (b.budget) bvm["budget"] = budget_json(*b.budget);
  json probes = json::array();
  for (const ProbRecord& p : b.probes)
    probes.push_back({{"label", p.label},         {"measured", num(p.measured)},  {"measured_se", num(p.measured_se)},
                      {"gaussian", num(p.gaussian)}, {"upper", num(p.upper)},    {"lower", num(p.lower)},
                      {"pass_upper", p.pass_upper}, {"pass_lower", p.pass_lower}});
  bvm["probes"] = probes;
  j["bvm"] = bvm;
  j["noise"] = {{"mean_disc", num(r.noise.mean_disc)},
                {"cov_disc_op", num(r.noise.cov_disc_op)},
                {"mgf_disc", num(r.noise.mgf_disc)}};
  j["posterior"] = {{"ess", num(r.ess)}, {"acceptance", num(r.acceptance)}, {"draws", r.draws}};
  json cred = json::array();
  for (const CredibleRecord& c : r.credible)
    cred.push_back({{"kind", to_string(c.kind)},
                    {"z", num(c.z)},
                    {"posterior_mass", num(c.posterior_mass)},
                    {"posterior_mass_se", num(c.posterior_mass_se)},
                    {"covers_theta_star", c.covers_theta_star},
                    {"projected", c.projected}});
  j["credible"] = cred;
  json cor = json::array();
  for (const CoronaryRecord& c : r.coronary)
    cor.push_back({{"x", num(c.x)},
                   {"upper_measured", num(c.upper_measured)},
                   {"upper_bound", num(c.upper_bound)},
                   {"lower_measured", num(c.lower_measured)},
                   {"lower_bound", num(c.lower_bound)},
                   {"pass_upper", c.pass_upper},
                   {"pass_lower", c.pass_lower}});
  j["coronary"] = cor;
  return j;
}

std::string fmt(double v) {
  if (!std::isfinite(v)) return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string short_fmt(double v) {
  if (!std::isfinite(v)) return fmt(v);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << content;
  if (!out) throw Error("write failed for '" + path.string() + "'");
}

void make_dirs(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir / "tables", ec);
  if (ec) throw Error("cannot create '" + (dir / "tables").string() + "': " + ec.message());
}

class Csv {
 public:
  explicit Csv(std::initializer_list<std::string> header) {
    bool first = true;
    for (const auto& h : header) {
      if (!first) ss_ << ',';
      ss_ << h;
      first = false;
    }
    ss_ << '\n';
  }
  Csv& operator<<(double v) { return cell(fmt(v)); }
  Csv& operator<<(const std::string& s) { return cell(s); }
  Csv& operator<<(const char* s) { return cell(s); }
  Csv& operator<<(std::size_t v) { return cell(std::to_string(v)); }
  Csv& operator<<(long v) { return cell(std::to_string(v)); }
  Csv& operator<<(bool v) { return cell(v ? "1" : "0"); }
  void end() {
    ss_ << '\n';
    open_ = false;
  }
  std::string str() const { return ss_.str(); }

 private:
  Csv& cell(const std::string& s) {
    if (open_) ss_ << ',';
    ss_ << s;
    open_ = true;
    return *this;
  }
  std::ostringstream ss_;
  bool open_ = false;
};

std::string verdict(bool pass) { return pass ? "PASS" : "FAIL"; }

}  // namespace

std::string dump_json(const json& j) { return j.dump(2) + "\n"; }

json to_json(const ExperimentResult& r) {
  json j;
  j["kind"] = "run";
  j["config"] = to_json(r.config);
  j["truth"] = truth_json(r.truth);
  j["geometry"] = geometry_json(r.geometry);
  j["rd"] = num(r.rd);
  j["rd_source"] = to_string(r.config.rd.source);
  if (r.conditions) j["conditions"] = conditions_json(*r.conditions);
  j["b_exterior"] = sampled(r.b_exterior);
  j["b_upper"] = num(r.b_upper);
  j["prior"] = {{"kind", to_string(r.prior.kind)},
                {"alpha_hat", num(r.prior_regularity.alpha_hat)},
                {"regularity_pass", r.prior_regularity.pass}};
  if (r.prior_check)
    j["prior"]["gaussian_check"] = {{"g_theta_star", num(r.prior_check->g_theta_star)},
                                    {"smallness", num(r.prior_check->smallness)},
                                    {"pass", r.prior_check->pass}};
  j["sandwich"] = {{"matrix", mat(r.sandwich.m)}, {"identity", r.sandwich.identity}};
  json reps = json::array();
  for (const ReplicationRecord& rec : r.reps) reps.push_back(rep_json(rec));
  j["replications"] = reps;

  // headline block: replication 0 for single runs, medians otherwise
  json bvm = json::object();
  std::vector<double> md, co, ct, mg, pd;
  for (const ReplicationRecord& rec : r.reps) {
    if (!rec.ok) continue;
    md.push_back(rec.bvm.mean_disc);
    co.push_back(rec.bvm.cov_disc_op);
    ct.push_back(rec.bvm.cov_disc_tr);
    mg.push_back(rec.bvm.mgf_disc);
    pd.push_back(rec.bvm.prob_disc);
  }
  if (!md.empty()) {
    bvm["mean_disc"] = quant(quantiles(md));
    bvm["cov_disc_op"] = quant(quantiles(co));
    bvm["cov_disc_tr"] = quant(quantiles(ct));
    bvm["mgf_disc"] = quant(quantiles(mg));
    bvm["prob_disc"] = quant(quantiles(pd));
  }
  j["bvm"] = bvm;
  if (!r.reps.empty() && r.reps.front().ok) {
    json trace = json::array();
    const ReplicationRecord& r0 = r.reps.front();
    for (std::size_t i = 0; i < r0.lambdas.size(); ++i)
      trace.push_back({{"lambda", vec(r0.lambdas[i])}, {"log_mgf", num(r0.log_mgf[i].value)},
                       {"se", num(r0.log_mgf[i].se)}});
    j["mgf_trace_rep0"] = trace;
  }
  j["coverage"] = coverage_json(r.coverage);
  j["flags"] = flags_json(r.flags);
  j["failures"] = r.failures;
  j["exit_code"] = r.exit_code();
  return j;
}

json to_json(const AuditReport& r) {
  json j;
  j["kind"] = "audit";
  j["config"] = to_json(r.config);
  j["truth"] = truth_json(r.truth);
  j["geometry"] = geometry_json(r.geometry);
  j["conditions"] = conditions_json(r.profile);
  j["ed0"] = {{"nu0", num(r.ed0.nu0)},          {"nu0_sq", num(r.ed0.nu0_sq)}, {"se", num(r.ed0.se)},
              {"pass", r.ed0.pass},             {"diagnostic", r.ed0.diagnostic},
              {"mgf_diagnostics", mgf_diag(r.ed0.mgf)}};
  if (r.prior_check)
    j["gaussian_prior_check"] = {{"g_theta_star", num(r.prior_check->g_theta_star)},
                                 {"smallness", num(r.prior_check->smallness)},
                                 {"pass", r.prior_check->pass}};
  j["iid_rate"] = {{"n", r.rate.n},
                   {"p", r.rate.p},
                   {"delta_rate", num(r.rate.delta_rate)},
                   {"omega_rate", num(r.rate.omega_rate)},
                   {"critical_ratio", num(r.rate.critical_ratio)}};
  j["exit_code"] = r.exit_code();
  return j;
}

json to_json(const SweepResult& r) {
  json j;
  j["kind"] = "sweep-critical";
  j["config"] = to_json(r.config);
  json rows = json::array();
  for (const SweepRow& row : r.rows)
    rows.push_back({{"target_ratio", num(row.target_ratio)},
                    {"p", row.p},
                    {"n", row.n},
                    {"ratio", num(row.ratio)},
                    {"rd", num(row.rd)},
                    {"flagged", row.flagged},
                    {"flags", flags_json(row.flags)},
                    {"infeasible", row.infeasible},
                    {"note", row.note},
                    {"reps", row.reps},
                    {"failures", row.failures},
                    {"mean_disc", quant(row.mean_disc)},
                    {"cov_disc_op", quant(row.cov_disc_op)},
                    {"mgf_disc", quant(row.mgf_disc)},
                    {"prob_disc", quant(row.prob_disc)},
                    {"coverage", coverage_json(row.coverage)}});
  j["rows"] = rows;
  j["exit_code"] = r.exit_code();
  return j;
}

json to_json(const PriorSweepResult& r) {
  json j;
  j["kind"] = "sweep-prior";
  j["config"] = to_json(r.config);
  json rows = json::array();
  for (const PriorSweepRow& row : r.rows)
    rows.push_back({{"g", num(row.g)},
                    {"g_theta_star", num(row.check.g_theta_star)},
                    {"smallness", num(row.check.smallness)},
                    {"prior_check_pass", row.check.pass},
                    {"mean_disc", quant(row.mean_disc)},
                    {"cov_disc_op", quant(row.cov_disc_op)},
                    {"mgf_disc", quant(row.mgf_disc)},
                    {"flat_mean_disc", quant(row.flat_mean_disc)},
                    {"flat_cov_disc_op", quant(row.flat_cov_disc_op)},
                    {"flat_mgf_disc", quant(row.flat_mgf_disc)},
                    {"delta", {{"mean_disc", num(row.delta_mean_disc)},
                               {"cov_disc_op", num(row.delta_cov_disc_op)},
                               {"mgf_disc", num(row.delta_mgf_disc)}}},
                    {"noise", {{"mean_disc", num(row.noise_mean_disc)},
                               {"cov_disc_op", num(row.noise_cov_disc_op)},
                               {"mgf_disc", num(row.noise_mgf_disc)}}},
                    {"within_noise", row.within_noise},
                    {"flagged", row.flagged}});
  j["rows"] = rows;
  j["exit_code"] = r.exit_code();
  return j;
}

std::string summary_text(const ExperimentResult& r) {
  std::ostringstream o;
  const ExperimentConfig& c = r.config;
  o << "scenario " << c.scenario << ": " << to_string(c.model.family) << " p=" << c.model.p << " n=" << c.model.n
    << " prior=" << to_string(r.prior.kind) << " replications=" << c.replications << " seed=" << c.seed << "\n";
  o << "truth matches model: " << (r.truth.matches_model ? "yes" : "no") << ", a^2 = " << short_fmt(r.geometry.a_sq)
    << ", r0 = " << short_fmt(r.geometry.r0) << ", x_n = " << short_fmt(r.geometry.x_n) << "\n";
  o << "rd = " << short_fmt(r.rd) << " (" << to_string(c.rd.source) << ")";
  if (r.conditions)
    o << "; delta(r0) = " << short_fmt(r.conditions->delta_r0) << ", omega(r0) = " << short_fmt(r.conditions->omega_r0)
      << ", nu0 = " << short_fmt(r.conditions->nu0);
  o << "\n\n";

  std::size_t ok = 0;
  std::size_t tail_pass = 0, tail_n = 0, uf_pass = 0, uf_n = 0, pu = 0, pl = 0, pn = 0, cu = 0, cl = 0, cn = 0;
  std::size_t exp_pass = 0, exp_n = 0;
  for (const ReplicationRecord& rec : r.reps) {
    if (!rec.ok) continue;
    ++ok;
    if (rec.tail) {
      ++tail_n;
      tail_pass += rec.tail->pass;
    }
    if (rec.upper_function) {
      ++uf_n;
      uf_pass += rec.upper_function->pass;
    }
    for (const ProbRecord& p : rec.bvm.probes) {
      if (!std::isfinite(p.upper)) continue;
      ++pn;
      pu += p.pass_upper;
      pl += p.pass_lower;
    }
    for (const CoronaryRecord& cr : rec.coronary) {
      ++cn;
      cu += cr.pass_upper;
      cl += cr.pass_lower;
    }
    if (rec.bvm.budget && rec.mle_converged) {
      ++exp_n;
      exp_pass += rec.mle_expansion <= 2.0 * rec.bvm.budget->spread + 1e-12;
    }
  }
  o << "check                                   measured / bound                     verdict\n";
  auto line = [&](const std::string& name, const std::string& value, const std::string& v) {
    o << name;
    for (std::size_t k = name.size(); k < 40; ++k) o << ' ';
    o << value;
    for (std::size_t k = value.size(); k < 37; ++k) o << ' ';
    o << ' ' << v << "\n";
  };
  auto count = [](std::size_t a, std::size_t b) { return std::to_string(a) + "/" + std::to_string(b); };
  if (!r.reps.empty() && r.reps.front().ok) {
    const ReplicationRecord& r0 = r.reps.front();
    if (r0.bvm.budget) {
      const ErrorBudget& b = *r0.bvm.budget;
      line("budget (rep 0) D+ / D- / Doplus", short_fmt(b.delta_plus) + " / " + short_fmt(b.delta_minus) + " / " +
                                                  short_fmt(b.delta_oplus),
           "info");
      line("spread / (rd q) (rep 0)", short_fmt(b.spread_ratio), "info");
    }
    if (r0.tail)
      line("posterior tail rho <= bound (rep 0)", short_fmt(r0.tail->measured) + " / " + short_fmt(r0.tail->bound),
           verdict(r0.tail->pass) + (r0.tail->vacuous ? " (vacuous)" : ""));
  }
  if (tail_n) line("posterior tail rho <= bound", count(tail_pass, tail_n), verdict(tail_pass == tail_n));
  if (uf_n) line("upper function L + b|u|^2/2 <= 0", count(uf_pass, uf_n), verdict(uf_pass == uf_n));
  if (exp_n) line("qMLE expansion <= 2 spread", count(exp_pass, exp_n), verdict(exp_pass == exp_n));
  if (pn) {
    line("probability sandwich upper", count(pu, pn), verdict(pu == pn));
    line("probability sandwich lower", count(pl, pn), verdict(pl == pn));
  }
  if (cn) {
    line("coronary upper tail <= e^{-x/4+D+}", count(cu, cn), verdict(cu == cn));
    line("coronary lower tail <= e^{-x/2+D+}", count(cl, cn), verdict(cl == cn));
  }
  if (r.prior_check)
    line("gaussian prior smallness <= 0.05", short_fmt(r.prior_check->smallness) + " / 0.05",
         verdict(r.prior_check->pass));
  if (r.prior.kind != PriorKind::flat)
    line("prior regularity alpha <= 0.1", short_fmt(r.prior_regularity.alpha_hat) + " / 0.1",
         verdict(r.prior_regularity.pass));
  o << "\nBvM metrics over " << ok << " replication(s): median [q25, q75]\n";
  std::vector<double> md, co, mg, pd;
  for (const ReplicationRecord& rec : r.reps) {
    if (!rec.ok) continue;
    md.push_back(rec.bvm.mean_disc);
    co.push_back(rec.bvm.cov_disc_op);
    mg.push_back(rec.bvm.mgf_disc);
    pd.push_back(rec.bvm.prob_disc);
  }
  auto qline = [&](const std::string& name, const std::vector<double>& v) {
    const Quantiles q = quantiles(v);
    line(name, short_fmt(q.median) + " [" + short_fmt(q.q25) + ", " + short_fmt(q.q75) + "]", "info");
  };
  qline("mean_disc", md);
  qline("cov_disc_op", co);
  qline("mgf_disc", mg);
  qline("prob_disc", pd);
  if (!r.coverage.empty()) {
    o << "\ncredible sets (alpha = " << short_fmt(c.credible.alpha) << ")\n";
    for (const KindCoverage& k : r.coverage) {
      std::string v = short_fmt(k.result.rate) + " +- " + short_fmt(k.result.binomial_se);
      if (std::isfinite(k.predicted)) v += " (pred " + short_fmt(k.predicted) + ")";
      line("coverage " + to_string(k.kind), v, k.result.valid ? "info" : "INVALID");
    }
  }
  o << "\nflags:";
  const ApplicabilityFlags& f = r.flags;
  if (!f.any()) o << " none";
  if (f.rd_above_half) o << " rd>1/2";
  if (f.budget_omitted) o << " rd>=1(budget omitted)";
  if (f.conditions_failed) o << " conditions";
  if (f.low_ess) o << " low-ess";
  if (f.acceptance) o << " acceptance";
  if (f.cov_projected) o << " cov-projected";
  if (f.improper_posterior) o << " improper-posterior";
  if (f.mle_not_converged) o << " mle-not-converged";
  if (f.prior_check_failed) o << " prior-check";
  o << "\nfailures: " << r.failures << "\nexit code: " << r.exit_code() << "\n";
  return o.str();
}

std::string summary_text(const AuditReport& r) {
  std::ostringstream o;
  o << "audit " << r.config.scenario << ": " << to_string(r.config.model.family) << " p=" << r.config.model.p
    << " n=" << r.config.model.n << "\n";
  const ConditionProfile& c = r.profile;
  auto line = [&](const std::string& name, double v, double bound, bool pass) {
    o << name;
    for (std::size_t k = name.size(); k < 34; ++k) o << ' ';
    o << short_fmt(v) << " / " << short_fmt(bound) << "  " << verdict(pass) << "\n";
  };
  line("delta(r0) <= 1/2", c.delta_r0, 0.5, !c.flags.delta_violated);
  line("omega(r0) <= 1/2", c.omega_r0, 0.5, !c.flags.omega_violated);
  line("nu0 <= cap", c.nu0, 4.0, !c.flags.nu0_failed);
  line("rd <= 1/2", c.rd, 0.5, !c.flags.rd_violated);
  line("b(r0) > 0", c.b_r0, 0.0, !c.flags.b_failed);
  o << "a^2 = " << short_fmt(r.geometry.a_sq) << ", r0 = " << short_fmt(r.geometry.r0)
    << ", ed0 nu0^2 = " << short_fmt(r.ed0.nu0_sq) << " (" << r.ed0.diagnostic << ")\n";
  o << "iid rates: delta " << short_fmt(r.rate.delta_rate) << ", omega " << short_fmt(r.rate.omega_rate)
    << ", p^3/n " << short_fmt(r.rate.critical_ratio) << "\n";
  if (r.prior_check) line("gaussian prior smallness <= 0.05", r.prior_check->smallness, 0.05, r.prior_check->pass);
  o << "exit code: " << r.exit_code() << "\n";
  return o.str();
}

std::string summary_text(const SweepResult& r) {
  std::ostringstream o;
  o << "critical-dimension sweep " << r.config.scenario << " (" << to_string(r.config.model.family) << ", "
    << r.config.sweep.reps << " reps per row)\n";
  o << "ratio    p  n       rd        mean_disc    cov_disc_op  mgf_disc     flagged\n";
  for (const SweepRow& row : r.rows) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-8.3g %-2ld %-7zu %-9.3g %-12.4g %-12.4g %-12.4g %s%s\n", row.target_ratio,
                  static_cast<long>(row.p), row.n, row.rd, row.mean_disc.median, row.cov_disc_op.median,
                  row.mgf_disc.median, row.flagged ? "yes" : "no", row.infeasible ? " (infeasible)" : "");
    o << buf;
  }
  o << "exit code: " << r.exit_code() << "\n";
  return o.str();
}

std::string summary_text(const PriorSweepResult& r) {
  std::ostringstream o;
  o << "gaussian-prior sweep " << r.config.scenario << " (" << r.config.sweep.reps << " paired reps per g, scale "
    << to_string(r.config.prior.scale) << ")\n";
  o << "g          smallness  check  d_mean_disc  noise        d_cov_op     noise        within\n";
  for (const PriorSweepRow& row : r.rows) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-10.4g %-10.4g %-6s %-12.4g %-12.4g %-12.4g %-12.4g %s\n", row.g,
                  row.check.smallness, row.check.pass ? "pass" : "fail", row.delta_mean_disc, row.noise_mean_disc,
                  row.delta_cov_disc_op, row.noise_cov_disc_op, row.within_noise ? "yes" : "no");
    o << buf;
  }
  o << "exit code: " << r.exit_code() << "\n";
  return o.str();
}

void write_draw_dump(const PosteriorSample& s, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  const Eigen::Index p = s.draws.rows();
  const Eigen::Index n = s.draws.cols();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) {
      std::uint64_t bits = std::bit_cast<std::uint64_t>(s.draws(j, i));
      if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
      char bytes[8];
      for (int k = 0; k < 8; ++k) bytes[k] = static_cast<char>((bits >> (8 * k)) & 0xff);
      out.write(bytes, 8);
    }
  }
  if (!out) throw Error("write failed for '" + path + "'");
  json side = {{"dtype", "float64"},
               {"byte_order", "little"},
               {"layout", "draw-major: draw i occupies values [i p, (i + 1) p)"},
               {"p", p},
               {"draws", n},
               {"chain_offsets", s.chain_offsets}};
  json chains = json::array();
  for (const ChainMeta& c : s.chains)
    chains.push_back({{"acceptance", num(c.acceptance)},
                      {"step_scale", num(c.step_scale)},
                      {"burn_in", c.burn_in},
                      {"seed", c.seed},
                      {"stream", c.stream}});
  side["chains"] = chains;
  write_file(path + ".json", dump_json(side));
}

void emit_report(const ExperimentResult& r, const std::string& dir_s) {
  const fs::path dir(dir_s);
  make_dirs(dir);
  write_file(dir / "report.json", dump_json(to_json(r)));
  write_file(dir / "summary.txt", summary_text(r));

  Csv reps({"rep", "ok", "mean_disc", "mean_disc_restricted", "cov_disc_op", "cov_disc_tr", "mgf_disc", "prob_disc",
            "rd", "q", "xi_norm", "err_ub", "err_lb", "spread", "nu_r0", "rho_r0", "delta_plus", "delta_minus",
            "delta_oplus", "ess", "acceptance", "flagged"});
  Csv probes({"rep", "label", "measured", "measured_se", "gaussian", "lower", "upper", "pass_lower", "pass_upper"});
  Csv cred({"rep", "kind", "z", "posterior_mass", "posterior_mass_se", "covers_theta_star"});
  Csv cor({"rep", "x", "upper_measured", "upper_bound", "lower_measured", "lower_bound", "pass_upper", "pass_lower"});
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (const ReplicationRecord& rec : r.reps) {
    const ErrorBudget b = rec.bvm.budget.value_or(ErrorBudget{nan, nan, nan, nan, nan, nan, nan, nan, nan, nan,
                                                              nan, nan, nan, nan});
    reps << rec.index << rec.ok << rec.bvm.mean_disc << rec.bvm.mean_disc_restricted << rec.bvm.cov_disc_op
         << rec.bvm.cov_disc_tr << rec.bvm.mgf_disc << rec.bvm.prob_disc << rec.bvm.rd << rec.q << rec.xi_norm
         << rec.brackets.err_ub << rec.brackets.err_lb << b.spread << rec.nu << rec.rho_measured << b.delta_plus
         << b.delta_minus << b.delta_oplus << rec.ess << rec.acceptance << rec.bvm.flags.any();
    reps.end();
    for (const ProbRecord& p : rec.bvm.probes) {
      probes << rec.index << p.label << p.measured << p.measured_se << p.gaussian << p.lower << p.upper
             << p.pass_lower << p.pass_upper;
      probes.end();
    }
    for (const CredibleRecord& c : rec.credible) {
      cred << rec.index << to_string(c.kind) << c.z << c.posterior_mass << c.posterior_mass_se << c.covers_theta_star;
      cred.end();
    }
    for (const CoronaryRecord& c : rec.coronary) {
      cor << rec.index << c.x << c.upper_measured << c.upper_bound << c.lower_measured << c.lower_bound
          << c.pass_upper << c.pass_lower;
      cor.end();
    }
  }
  write_file(dir / "tables" / "replications.csv", reps.str());
  write_file(dir / "tables" / "probes.csv", probes.str());
  write_file(dir / "tables" / "credible.csv", cred.str());
  write_file(dir / "tables" / "coronary.csv", cor.str());

  Csv cov({"scenario", "kind", "alpha", "n_reps", "rate", "se", "predicted"});
  for (const KindCoverage& k : r.coverage) {
    cov << r.config.scenario << to_string(k.kind) << r.config.credible.alpha << k.result.n_reps << k.result.rate
        << k.result.binomial_se << k.predicted;
    cov.end();
  }
  write_file(dir / "tables" / "coverage.csv", cov.str());

  if (!r.reps.empty() && r.reps.front().ok) {
    Csv mgf({"index", "lambda_sq_norm", "log_mgf", "se", "discrepancy"});
    const ReplicationRecord& r0 = r.reps.front();
    for (std::size_t i = 0; i < r0.lambdas.size(); ++i) {
      const double l2 = r0.lambdas[i].squaredNorm();
      mgf << i << l2 << r0.log_mgf[i].value << r0.log_mgf[i].se << std::abs(r0.log_mgf[i].value - 0.5 * l2);
      mgf.end();
    }
    write_file(dir / "tables" / "mgf_rep0.csv", mgf.str());
  }
  if (r.conditions) {
    Csv prof({"r", "delta", "omega", "g", "b"});
    const ConditionProfile& c = *r.conditions;
    for (std::size_t i = 0; i < c.delta_of_r.r.size(); ++i) {
      prof << c.delta_of_r.r[i] << c.delta_of_r.value[i] << c.omega_of_r.value[i] << c.g_of_r.value[i]
           << c.b_of_r.value[i];
      prof.end();
    }
    write_file(dir / "tables" / "conditions.csv", prof.str());
  }
  if (r.config.output.draw_dump) {
    std::error_code ec;
    fs::create_directories(dir / "draws", ec);
    if (ec) throw Error("cannot create '" + (dir / "draws").string() + "'");
    for (const ReplicationRecord& rec : r.reps)
      if (rec.ok && rec.sample.draws.size() > 0)
        write_draw_dump(rec.sample, (dir / "draws" / ("rep_" + std::to_string(rec.index) + ".bin")).string());
  }
}

void emit_report(const AuditReport& r, const std::string& dir_s) {
  const fs::path dir(dir_s);
  make_dirs(dir);
  write_file(dir / "report.json", dump_json(to_json(r)));
  write_file(dir / "summary.txt", summary_text(r));
  Csv prof({"r", "delta", "omega", "g", "b"});
  const ConditionProfile& c = r.profile;
  for (std::size_t i = 0; i < c.delta_of_r.r.size(); ++i) {
    prof << c.delta_of_r.r[i] << c.delta_of_r.value[i] << c.omega_of_r.value[i] << c.g_of_r.value[i]
         << c.b_of_r.value[i];
    prof.end();
  }
  write_file(dir / "tables" / "conditions.csv", prof.str());
  Csv ext({"r", "b"});
  for (std::size_t i = 0; i < c.b_exterior.r.size(); ++i) {
    ext << c.b_exterior.r[i] << c.b_exterior.value[i];
    ext.end();
  }
  write_file(dir / "tables" / "b_exterior.csv", ext.str());
}

void emit_report(const SweepResult& r, const std::string& dir_s) {
  const fs::path dir(dir_s);
  make_dirs(dir);
  write_file(dir / "report.json", dump_json(to_json(r)));
  write_file(dir / "summary.txt", summary_text(r));
  Csv t({"target_ratio", "p", "n", "ratio", "rd", "mean_disc_median", "mean_disc_iqr", "cov_disc_op_median",
         "cov_disc_op_iqr", "mgf_disc_median", "mgf_disc_iqr", "prob_disc_median", "prob_disc_iqr", "flagged",
         "infeasible"});
  for (const SweepRow& row : r.rows) {
    t << row.target_ratio << static_cast<long>(row.p) << row.n << row.ratio << row.rd << row.mean_disc.median
      << row.mean_disc.iqr() << row.cov_disc_op.median << row.cov_disc_op.iqr() << row.mgf_disc.median
      << row.mgf_disc.iqr() << row.prob_disc.median << row.prob_disc.iqr() << row.flagged << row.infeasible;
    t.end();
  }
  write_file(dir / "tables" / "sweep.csv", t.str());
  Csv cov({"target_ratio", "kind", "alpha", "n_reps", "rate", "se", "predicted"});
  for (const SweepRow& row : r.rows)
    for (const KindCoverage& k : row.coverage) {
      cov << row.target_ratio << to_string(k.kind) << r.config.credible.alpha << k.result.n_reps << k.result.rate
          << k.result.binomial_se << k.predicted;
      cov.end();
    }
  write_file(dir / "tables" / "coverage.csv", cov.str());
}

void emit_report(const PriorSweepResult& r, const std::string& dir_s) {
  const fs::path dir(dir_s);
  make_dirs(dir);
  write_file(dir / "report.json", dump_json(to_json(r)));
  write_file(dir / "summary.txt", summary_text(r));
  Csv t({"g", "smallness", "g_theta_star", "prior_check_pass", "mean_disc_median", "flat_mean_disc_median",
         "delta_mean_disc", "noise_mean_disc", "cov_disc_op_median", "flat_cov_disc_op_median", "delta_cov_disc_op",
         "noise_cov_disc_op", "mgf_disc_median", "flat_mgf_disc_median", "delta_mgf_disc", "noise_mgf_disc",
         "within_noise"});
  for (const PriorSweepRow& row : r.rows) {
    t << row.g << row.check.smallness << row.check.g_theta_star << row.check.pass << row.mean_disc.median
      << row.flat_mean_disc.median << row.delta_mean_disc << row.noise_mean_disc << row.cov_disc_op.median
      << row.flat_cov_disc_op.median << row.delta_cov_disc_op << row.noise_cov_disc_op << row.mgf_disc.median
      << row.flat_mgf_disc.median << row.delta_mgf_disc << row.noise_mgf_disc << row.within_noise;
    t.end();
  }
  write_file(dir / "tables" / "prior_sweep.csv", t.str());
}

}  // namespace bvm
