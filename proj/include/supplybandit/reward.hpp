#pragma once

#include <span>
#include <string>

#include "supplybandit/core.hpp"

namespace supplybandit {

/// Tabular expected consumption q_c, expected reward magnitude q_r and their
/// elementwise product q = q_c * q_r over users x actions.
class RewardModel {
 public:
  /// q_c is clamped to [0, 1]. Throws on shape mismatch, non-finite entries
  /// or negative q_r.
  RewardModel(Matrix consumption, Matrix reward);

  const Matrix& consumption() const { return consumption_; }
  const Matrix& reward() const { return reward_; }
  const Matrix& product() const { return product_; }
  std::size_t users() const { return static_cast<std::size_t>(product_.rows()); }
  std::size_t actions() const { return static_cast<std::size_t>(product_.cols()); }

  /// E_{p(x)}[q(x, a)] for every action.
  Vector expected_product(std::span<const double> weights) const;

 private:
  Matrix consumption_;
  Matrix reward_;
  Matrix product_;
};

enum class EstimateSource { exact, noise, ridge };

std::string to_string(EstimateSource s);

/// An estimate q_hat of the product q together with how it was produced.
struct RewardEstimate {
  Matrix q_hat;
  EstimateSource source = EstimateSource::exact;
  double parameter = 0.0;  // noise sigma or ridge penalty
};

/// lambda * f + (1 - lambda) * g.
Matrix mix_components(const Matrix& f, const Matrix& g, double lambda);

/// Rows of Uniform(0, max_value) draws, each row sorted in descending order,
/// so that every user ranks the actions identically.
Matrix sorted_baseline(Rng& rng, std::size_t users, std::size_t actions, double max_value);

enum class FeatureRewardKind { logistic, linear };

/// Context-dependent reward surface: per-action coefficients w_a ~ N(0, I)
/// and intercept b_a ~ N(0, 1) give a score x.w_a + b_a. The logistic kind
/// returns sigmoid(score); the linear kind returns score - min(score).
Matrix synth_feature_reward(const UserPopulation& users, std::size_t actions, Rng& rng,
                            FeatureRewardKind kind);

/// Full synthetic construction: f_c (logistic), f_r (linear), sorted
/// baselines g_c, g_r with range [0, max f], then the lambda mixture.
RewardModel make_synthetic_model(const UserPopulation& users, std::size_t actions,
                                 double lambda, Rng& rng);

RewardEstimate exact_estimate(const RewardModel& model);

/// q_hat = q + N(0, sigma) i.i.d. per entry. sigma = 0 returns q untouched.
RewardEstimate noisy_estimate(const RewardModel& model, double sigma, Rng& rng);

enum class RidgeTarget { reward, product };

/// Per-action ridge regression of the logged target on user features, with
/// an unpenalized intercept. Actions never observed in the log fall back to
/// the global mean of observed targets.
RewardEstimate ridge_fit(std::span<const Trajectory> dataset, const UserPopulation& users,
                         std::size_t actions, double penalty, RidgeTarget target);

}  // namespace supplybandit
