#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "supplybandit/core.hpp"
#include "supplybandit/policies.hpp"
#include "supplybandit/reward.hpp"

namespace supplybandit {

/// How users are drawn at each step.
///  - iid: x_t ~ p(x) independently.
///  - permutation: uniformly random permutations of the pool, one after the
///    other, so every user arrives once per pass (p(x) is ignored).
///  - scripted: cycles through EnvironmentSpec::arrival_script.
enum class ArrivalMode { iid, permutation, scripted };

enum class RewardNoise { normal, truncated_normal };

enum class SupplyScheme { proportional, inverse_proportional, random };

std::string to_string(ArrivalMode m);
std::string to_string(RewardNoise n);
std::string to_string(SupplyScheme s);

struct EnvironmentSpec {
  UserPopulation population;
  std::shared_ptr<const RewardModel> model;
  std::size_t horizon = 1;
  InventoryState initial_supply{};
  double reward_noise_sigma = 0.0;
  RewardNoise noise_kind = RewardNoise::normal;
  ArrivalMode arrival = ArrivalMode::iid;
  std::vector<UserIndex> arrival_script{};

  /// Throws std::invalid_argument on inconsistent shapes or ranges.
  void validate() const;
};

/// Starting stock per action from the demand statistics E_{p(x)}[q(x, a)]:
///  - proportional:          s_max * E[q(.,a)] / max_a E[q(.,a)]
///  - inverse_proportional:  s_max * min_a E[q(.,a)] / sqrt(E[q(.,a)])
///  - random:                uniform integer in [1, s_max]
/// Real values are rounded to nearest and floored at 1.
InventoryState initial_supply(SupplyScheme scheme, std::int64_t s_max, const RewardModel& model,
                              const UserPopulation& users, Rng& rng);

struct EpisodeOptions {
  bool keep_tuples = false;
  bool keep_actions = false;
  /// Time steps (1-based) at which to snapshot per-(user, action) consumption counts.
  std::vector<std::size_t> checkpoints;
};

struct EpisodeResult {
  double realized_value = 0.0;
  std::vector<double> step_values;   // c_t * r_t for each executed step
  std::vector<UserIndex> users;      // arrivals per step, with keep_actions
  std::vector<ActionIndex> actions;  // choices per step, with keep_actions
  std::vector<Matrix> allocations;   // one J x K count matrix per checkpoint
  InventoryState final_stock;
  Trajectory trajectory;             // filled only with keep_tuples
};

/// One episode. Arrivals, consumption draws, reward noise and policy
/// randomness come from four streams derived from (seed, episode), so two
/// policies run with the same (seed, episode) see the same arrivals and the
/// same per-step noise. Stops early once every action is out of stock.
EpisodeResult simulate_episode(const EnvironmentSpec& env, const PolicySpec& policy,
                               std::uint64_t seed, std::uint64_t episode,
                               const EpisodeOptions& options = {});

Trajectory run_episode(const EnvironmentSpec& env, const PolicySpec& policy, std::uint64_t seed);
Trajectory run_episode(const EnvironmentSpec& env, const PolicySpec& policy, Rng& rng);

struct ValueEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t n_sims = 0;
  std::vector<double> per_timestep_cumulative;  // length = horizon
  std::vector<double> episode_values;
  double depleted_fraction = 0.0;       // share of episodes ending with no stock
  std::vector<Matrix> mean_allocations; // mean consumption counts per checkpoint
};

struct EvaluationOptions {
  std::size_t jobs = 1;
  std::vector<std::size_t> checkpoints;
};

/// Monte Carlo estimate of V(pi) over `n_sims` episodes 0..n_sims-1. The
/// result does not depend on `options.jobs`.
ValueEstimate estimate_policy_value(const EnvironmentSpec& env, const PolicySpec& policy,
                                    std::size_t n_sims, std::uint64_t seed,
                                    const EvaluationOptions& options = {});

struct RelativeValue {
  double ratio = 0.0;
  ValueEstimate numerator;
  ValueEstimate denominator;
};

/// V(a) / V(b) with both estimates drawn on common random numbers.
/// Throws std::domain_error when the denominator estimate is <= 0.
RelativeValue relative_policy_value(const EnvironmentSpec& env, const PolicySpec& policy_a,
                                    const PolicySpec& policy_b, std::size_t n_sims,
                                    std::uint64_t seed, const EvaluationOptions& options = {});

/// CSV with header t,user,action,consumed,reward,stock_json.
void write_trajectory_csv(std::ostream& out, const Trajectory& traj);

}  // namespace supplybandit
