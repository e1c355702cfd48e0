#pragma once

#include "bvm/credible.hpp"
#include "bvm/model.hpp"
#include "bvm/prior.hpp"

#include <json.hpp>

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace bvm {

inline constexpr int kSchemaVersion = 1;

/// Schema violation with the offending field and source line (0 when unknown).
class ConfigError : public Error {
 public:
  ConfigError(const std::string& field, const std::string& message, int line = 0);
  const std::string& field() const noexcept { return field_; }
  int line() const noexcept { return line_; }

 private:
  std::string field_;
  int line_;
};

struct ModelSpec {
  Family family = Family::gaussian_mean;
  Eigen::Index p = 1;
  std::size_t n = 100;
  double sigma = 1.0;
  std::uint64_t design_seed = 7;
  double design_scale = 1.0;
  double box_half_width = 50.0;
};

struct TruthSpec {
  Generator generator = Generator::gaussian;
  /// Explicit coefficients, or a constant vector with |beta| = beta_norm.
  std::vector<double> beta;
  double beta_norm = 0.0;
  NoiseKind noise = NoiseKind::normal;
  double noise_sd = 1.0;
  double student_dof = 5.0;
  double dispersion = 1.0;
};

enum class PriorScale { absolute, smallness };

struct PriorSpec {
  PriorKind kind = PriorKind::flat;
  /// absolute: G = g I. smallness: G^2 = (g / p) D0^2, so |D0^-1 G^2 D0^-1|_inf p = g.
  double g = 0.0;
  PriorScale scale = PriorScale::absolute;
};

struct GeometrySpec {
  double normalization = 4.0;
  std::optional<double> x_n;
  std::optional<double> r0;
};

enum class RdSource { fixed, from_conditions };

struct RdSpec {
  RdSource source = RdSource::fixed;
  double value = 0.1;
};

enum class PosteriorMode { automatic, exact, mcmc };

struct PosteriorSpec {
  PosteriorMode mode = PosteriorMode::automatic;
  std::size_t draws = 20000;
  std::optional<std::size_t> burn_in;
  std::size_t chains = 1;
  double initial_scale = 2.38;
  double target_accept = 0.234;
};

struct MetricsSpec {
  std::size_t lambdas = 50;
  double slack = 3.0;
  std::vector<double> coronary_x;  // empty: {min(4, p/2), p/8}
};

struct CredibleSpec {
  double alpha = 0.05;
  std::vector<CredibleKind> kinds{CredibleKind::oracle, CredibleKind::posterior, CredibleKind::plugin};
};

struct AuditSpec {
  std::size_t mc_budget = 4000;
  std::size_t directions = 0;  // 0: default for p
  int radii = 16;
  int polish_steps = 10;
  int lambda_points = 21;
};

struct SweepSpec {
  std::vector<double> ratios{0.01, 0.1, 1.0, 10.0};
  std::vector<Eigen::Index> p_list{2, 3, 8};
  std::size_t n_min = 20;
  std::size_t reps = 20;
  std::vector<double> g_list{0.0, 0.005, 0.05, 0.5, 5.0};
};

struct OutputSpec {
  std::string dir = "out";
  bool draw_dump = false;
};

struct ExperimentConfig {
  int schema_version = kSchemaVersion;
  std::string scenario = "unnamed";
  std::uint64_t seed = 1;
  std::size_t replications = 1;
  ModelSpec model;
  TruthSpec truth;
  PriorSpec prior;
  GeometrySpec geometry;
  RdSpec rd;
  PosteriorSpec posterior;
  MetricsSpec metrics;
  CredibleSpec credible;
  AuditSpec audit;
  SweepSpec sweep;
  OutputSpec output;
};

ExperimentConfig parse_config(const std::string& text, const std::string& source = "<string>");
ExperimentConfig load_config(const std::string& path);

/// Every field, defaults included.
nlohmann::json to_json(const ExperimentConfig& cfg);

std::string to_string(PriorScale s);
std::string to_string(RdSource s);
std::string to_string(PosteriorMode m);

/// Builds the model and the true process a config describes.
std::unique_ptr<QuasiModel> build_model(const ModelSpec& spec);
/// matches_model is taken from the model's membership test.
TrueProcess build_truth(const TruthSpec& spec, const QuasiModel& m);
/// Prior for the config, given D0^2 for the smallness scale.
Prior build_prior(const PriorSpec& spec, const Matrix& d0_sq);

}  // namespace bvm
