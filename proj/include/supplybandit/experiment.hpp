#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "supplybandit/config.hpp"
#include "supplybandit/core.hpp"

namespace supplybandit {

struct RunOptions {
  std::optional<std::filesystem::path> out_dir;  // overrides output.dir
  std::optional<std::uint64_t> seed;             // overrides seeds.base
  std::size_t jobs = 1;
};

struct PolicyOutcome {
  std::string policy;
  double value = 0.0;
  double std_error = 0.0;
  double relative_to_greedy = 0.0;
  double depleted_fraction = 0.0;
  std::vector<double> trace;   // mean cumulative value per time step
  std::vector<Matrix> shares;  // consumed / initial stock, one J x K matrix per checkpoint
};

struct CellOutcome {
  Json sweep_value;  // null without a sweep
  std::uint64_t seed = 0;
  std::size_t horizon = 0;
  std::vector<std::int64_t> initial_stock;
  std::vector<PolicyOutcome> policies;
  std::vector<std::string> warnings;
};

struct ExperimentResult {
  std::string sweep_parameter;
  std::vector<std::size_t> checkpoints;  // sorted
  std::vector<CellOutcome> cells;        // sweep-major, then seed
  std::vector<std::filesystem::path> files;
};

/// Runs every (sweep value, seed) cell without touching the filesystem. The
/// result depends only on the config and the seed override, never on jobs.
ExperimentResult compute_experiment(const ExperimentConfig& cfg, const RunOptions& options = {});

/// compute_experiment plus results.csv, summary.csv, trace.csv (with
/// output.trace), allocation.csv (with output.allocation_checkpoints) and
/// manifest.json. Files written before a failure are removed.
ExperimentResult run_experiment(const ExperimentConfig& cfg, const RunOptions& options = {});

/// run_experiment plus seed-averaged demo_trace.csv and demo_allocation.csv.
ExperimentResult run_small_scale_demo(const ExperimentConfig& cfg, const RunOptions& options = {});

/// 64-bit FNV-1a of the compact JSON dump, as 16 hex digits.
std::string config_hash(const Json& doc);

}  // namespace supplybandit
