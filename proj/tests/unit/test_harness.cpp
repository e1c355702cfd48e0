#include "bvm/report.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace bvm;

namespace {

const char* kExact = R"(
schema_version = 1
scenario = "unit-exact"
seed = 5
replications = 3

[model]
family = "gaussian_linear"
p = 3
n = 40

[truth]
beta = [0.5, -0.2, 0.1]

[posterior]
mode = "exact"

[metrics]
coronary_x = [1.0]
)";

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t count_lines(const std::string& s) {
  std::size_t n = 0;
  for (char c : s) n += c == '\n';
  return n;
}

}  // namespace

TEST_CASE("config errors name the field and line") {
  try {
    parse_config("seed = 1\n[model]\nfamily = \"gaussian_mean\"\np = -3\n");
    FAIL("expected a config error");
  } catch (const ConfigError& e) {
    CHECK(e.field() == "model.p");
    CHECK(e.line() == 4);
  }
  try {
    parse_config("seed = 1\n[model]\nbogus = 2\n");
    FAIL("expected a config error");
  } catch (const ConfigError& e) {
    CHECK(e.field() == "model.bogus");
    CHECK(e.line() == 3);
  }
  CHECK_THROWS_AS(parse_config("[posterior]\ndraws = 10\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[rd]\nvalue = 1.5\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[model]\nfamily = \"weibull\"\n"), ConfigError);
}

TEST_CASE("resolved config echoes defaults") {
  const ExperimentConfig c = parse_config(kExact);
  const nlohmann::json j = to_json(c);
  CHECK(j["credible"]["alpha"] == 0.05);
  CHECK(j["audit"]["mc_budget"] == 4000);
  CHECK(j["prior"]["kind"] == "flat");
  CHECK(j["model"]["p"] == 3);
}

TEST_CASE("exact run report") {
  const ExperimentConfig c = parse_config(kExact);
  const ExperimentResult r = run_experiment(c);
  CHECK(r.exit_code() == 0);
  for (const ReplicationRecord& rec : r.reps) {
    CHECK(rec.ok);
    CHECK(rec.bvm.mean_disc <= 1e-10);
    CHECK(rec.bvm.cov_disc_op <= 1e-10);
    CHECK(rec.bvm.mgf_disc <= 1e-10);
    CHECK(rec.bvm.cov_disc_op <= std::sqrt(rec.bvm.cov_disc_tr) + 1e-15);
  }

  const std::string text = dump_json(to_json(r));
  const nlohmann::json parsed = nlohmann::json::parse(text);
  CHECK(dump_json(parsed) == text);
  CHECK(parsed["config"]["seed"] == 5);

  const std::filesystem::path dir = std::filesystem::temp_directory_path() / "bvm_unit_report";
  std::filesystem::remove_all(dir);
  emit_report(r, dir.string());
  CHECK(std::filesystem::exists(dir / "report.json"));
  CHECK(std::filesystem::exists(dir / "summary.txt"));
  CHECK(count_lines(slurp(dir / "tables" / "replications.csv")) == 1 + c.replications);
  std::filesystem::remove_all(dir);
}

TEST_CASE("runs are deterministic across thread counts") {
  ExperimentConfig c = parse_config(kExact);
  c.posterior.mode = PosteriorMode::mcmc;
  c.posterior.draws = 2000;
  c.replications = 4;
  const std::string a = dump_json(to_json(run_experiment(c, RunOptions{1})));
  const std::string b = dump_json(to_json(run_experiment(c, RunOptions{3})));
  const std::string again = dump_json(to_json(run_experiment(c, RunOptions{1})));
  CHECK(a == b);
  CHECK(a == again);
}

TEST_CASE("zero prior scale equals the flat prior") {
  ExperimentConfig c = parse_config(kExact);
  const ExperimentResult flat = run_experiment(c);
  c.prior.kind = PriorKind::gaussian;
  c.prior.g = 0.0;
  const ExperimentResult zero = run_experiment(c);
  for (std::size_t i = 0; i < flat.reps.size(); ++i) {
    CHECK(std::abs(flat.reps[i].bvm.mean_disc - zero.reps[i].bvm.mean_disc) <= 1e-12);
    CHECK(std::abs(flat.reps[i].bvm.cov_disc_op - zero.reps[i].bvm.cov_disc_op) <= 1e-12);
  }
}

TEST_CASE("single-ratio sweep reproduces the run") {
  ExperimentConfig c = parse_config(R"(
seed = 3
replications = 5
[model]
family = "logistic"
p = 2
n = 80
[truth]
beta_norm = 1.0
[posterior]
mode = "mcmc"
draws = 2000
[sweep]
p_list = [2]
)");
  const SweepResult s = sweep_critical_dimension(c, {0.1}, 5);
  REQUIRE(s.rows.size() == 1);
  CHECK(s.rows[0].p == 2);
  CHECK(s.rows[0].n == 80);
  const ExperimentResult r = run_experiment(c);
  std::vector<double> md;
  for (const ReplicationRecord& rec : r.reps) md.push_back(rec.bvm.mean_disc);
  CHECK(s.rows[0].mean_disc.median == quantiles(md).median);
}
