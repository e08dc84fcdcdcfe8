#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "supplybandit/core.hpp"
#include "supplybandit/reward.hpp"
#include "supplybandit/sim.hpp"

namespace supplybandit {

using Json = nlohmann::json;

/// One problem found in a config document. `field` is a dotted path such as
/// "environment.lambda" or "policies[1].kind".
struct Diagnostic {
  std::string field;
  std::string message;
};

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<Diagnostic> diagnostics);
  const std::vector<Diagnostic>& diagnostics() const { return diagnostics_; }

 private:
  std::vector<Diagnostic> diagnostics_;
};

enum class EnvironmentSource { synthetic, table, interactions };
enum class EstimatorKind { exact, noise, ridge };
enum class EvaluationMethod { monte_carlo, enumerate };
enum class HarnessPolicy { greedy, opls, opls_mixed, optimal };

std::string to_string(EnvironmentSource s);
std::string to_string(EstimatorKind k);
std::string to_string(EvaluationMethod m);
std::string to_string(HarnessPolicy p);

struct EnvironmentConfig {
  EnvironmentSource source = EnvironmentSource::synthetic;
  std::size_t users = 200;     // pool size, or subsample size for interactions (0 = all)
  std::size_t actions = 100;   // action count, or subsample size for interactions (0 = all)
  std::size_t feature_dim = 10;
  double lambda = 0.5;
  SupplyScheme supply_scheme = SupplyScheme::random;
  std::int64_t s_max = 20;
  std::vector<std::int64_t> stock;   // explicit initial stock; overrides the scheme
  std::optional<std::size_t> horizon;  // empty = 20 x total initial stock
  ArrivalMode arrival = ArrivalMode::iid;
  RewardNoise noise_kind = RewardNoise::normal;
  double reward_sigma = 3.0;
  Matrix table;  // q for the table source (q_c = 1, q_r = table)
  std::vector<std::string> labels;
  std::filesystem::path ratings_path;
  std::filesystem::path features_path;
};

struct EstimatorConfig {
  EstimatorKind kind = EstimatorKind::exact;
  double sigma = 0.0;
  double penalty = 1.0;
  RidgeTarget target = RidgeTarget::product;
};

struct LoggingConfig {
  double beta = -1.0;
  double noise_sigma = 0.0;  // q_hat = q + N(0, noise_sigma) inside the logging policy
  std::size_t episodes = 1;
};

struct PolicyConfig {
  std::string name;
  HarnessPolicy kind = HarnessPolicy::greedy;
  double beta = 1.0;  // fairness weight for opls
};

struct EvaluationConfig {
  EvaluationMethod method = EvaluationMethod::monte_carlo;
  std::size_t n_sims = 1;
};

struct SweepConfig {
  std::string parameter;     // dotted path, empty when there is no sweep
  std::vector<Json> values;
};

struct SeedConfig {
  std::size_t count = 100;
  std::uint64_t base = 0;
};

struct OutputConfig {
  std::filesystem::path dir = "results";
  bool trace = false;
  std::vector<std::size_t> allocation_checkpoints;
};

struct ExperimentConfig {
  std::string name = "experiment";
  EnvironmentConfig environment;
  EstimatorConfig estimator;
  LoggingConfig logging;
  bool has_logging_block = false;
  std::vector<PolicyConfig> policies;
  EvaluationConfig evaluation;
  SweepConfig sweep;
  SeedConfig seeds;
  OutputConfig output;
  Json document;  // the validated source document
  std::filesystem::path base_dir;  // relative data paths resolve against this
};

/// Sweepable parameters (dotted paths into the document).
const std::vector<std::string>& sweepable_parameters();

/// Schema, range and cross-field checks. Relative data paths resolve against
/// `base_dir`. Returns an empty list for a valid document.
std::vector<Diagnostic> validate_config(const Json& doc,
                                        const std::filesystem::path& base_dir = {});

/// Reads and validates a file. Throws std::runtime_error when the file cannot
/// be read or is not JSON.
std::vector<Diagnostic> validate_config_file(const std::filesystem::path& path);

/// Throws ConfigError with every diagnostic when the document is invalid.
ExperimentConfig parse_config(const Json& doc, const std::filesystem::path& base_dir = {});

ExperimentConfig load_config(const std::filesystem::path& path);

/// The document with the sweep parameter set to `value` and the sweep removed.
Json with_sweep_value(const Json& doc, const std::string& parameter, const Json& value);

/// Built-in small-scale demonstration config (3 users, 5 actions).
Json default_demo_config();

}  // namespace supplybandit
