// bvmlab: command-line front end of the BvM laboratory.
#include "bvm/report.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <optional>
#include <thread>

namespace {

// --threads wins, then BVMLAB_THREADS, then the hardware count. Results never
// depend on the choice.
int resolve_threads(std::optional<int> flag) {
  if (flag) return std::max(1, *flag);
  if (const char* env = std::getenv("BVMLAB_THREADS")) {
    try {
      return std::max(1, std::stoi(env));
    } catch (const std::exception&) {
      std::cerr << "warning: ignoring BVMLAB_THREADS='" << env << "'\n";
    }
  }
  return static_cast<int>(std::max(1u, std::min(8u, std::thread::hardware_concurrency())));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Finite-sample Bernstein-von Mises laboratory"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<std::string> out_dir;
  std::vector<double> ratios;
  std::vector<double> g_values;
  std::optional<std::size_t> reps;

  auto common = [&](CLI::App* sub) {
    sub->add_option("config", config_path, "experiment config (TOML)")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "override the config seed");
    sub->add_option("--threads", threads, "worker threads (BVMLAB_THREADS if absent)");
    sub->add_option("--out", out_dir, "output directory (config output.dir if absent)");
  };
  CLI::App* run = app.add_subcommand("run", "run one experiment");
  common(run);
  CLI::App* sweep_c = app.add_subcommand("sweep-critical", "critical-dimension sweep over p^3/n");
  common(sweep_c);
  sweep_c->add_option("--ratios", ratios, "target p^3/n ratios")->delimiter(',');
  sweep_c->add_option("--reps", reps, "replications per ratio");
  CLI::App* sweep_p = app.add_subcommand("sweep-prior", "paired Gaussian-prior sweep");
  common(sweep_p);
  sweep_p->add_option("--g", g_values, "prior scales")->delimiter(',');
  sweep_p->add_option("--reps", reps, "paired replications per g");
  CLI::App* audit = app.add_subcommand("audit", "condition audit only");
  common(audit);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    bvm::ExperimentConfig cfg = bvm::load_config(config_path);
    if (seed) cfg.seed = *seed;
    if (out_dir) cfg.output.dir = *out_dir;
    const bvm::RunOptions opt{resolve_threads(threads)};
    int code = 0;
    if (run->parsed()) {
      const bvm::ExperimentResult r = bvm::run_experiment(cfg, opt);
      bvm::emit_report(r, cfg.output.dir);
      std::cout << bvm::summary_text(r);
      code = r.exit_code();
    } else if (sweep_c->parsed()) {
      if (!ratios.empty()) cfg.sweep.ratios = ratios;
      if (reps) cfg.sweep.reps = *reps;
      const bvm::SweepResult r = bvm::sweep_critical_dimension(cfg, cfg.sweep.ratios, cfg.sweep.reps, opt);
      bvm::emit_report(r, cfg.output.dir);
      std::cout << bvm::summary_text(r);
      code = r.exit_code();
    } else if (sweep_p->parsed()) {
      if (!g_values.empty()) cfg.sweep.g_list = g_values;
      if (reps) cfg.sweep.reps = *reps;
      const bvm::PriorSweepResult r = bvm::sweep_gaussian_prior(cfg, cfg.sweep.g_list, cfg.sweep.reps, opt);
      bvm::emit_report(r, cfg.output.dir);
      std::cout << bvm::summary_text(r);
      code = r.exit_code();
    } else if (audit->parsed()) {
      const bvm::AuditReport r = bvm::run_audit(cfg, opt);
      bvm::emit_report(r, cfg.output.dir);
      std::cout << bvm::summary_text(r);
      code = r.exit_code();
    }
    return code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
