#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "supplybandit/core.hpp"
#include "supplybandit/reward.hpp"

namespace supplybandit {

enum class PolicyKind { greedy, opls, opls_mixed, softmax_logging };

std::string to_string(PolicyKind kind);

/// Split of the action set into items forecast to sell out by the horizon
/// and items forecast to keep stock.
struct SupplyPartition {
  std::vector<bool> sold;

  std::vector<ActionIndex> sold_actions() const;
  std::vector<ActionIndex> unsold_actions() const;
};

/// Immutable description of a decision rule. Build it with one of the
/// make_* helpers below so that the population means stay consistent with
/// the estimate.
struct PolicySpec {
  PolicyKind kind = PolicyKind::greedy;
  double beta_fairness = 1.0;
  double beta_logging = 0.0;
  std::shared_ptr<const RewardEstimate> estimate;
  Vector population_means;  // m_a = sum_j p(x_j) q_hat(x_j, a)
  std::optional<SupplyPartition> partition;

  const Matrix& q_hat() const { return estimate->q_hat; }
};

Vector population_means(const Matrix& q_hat, std::span<const double> weights);

PolicySpec make_greedy(std::shared_ptr<const RewardEstimate> estimate,
                       std::span<const double> weights);
PolicySpec make_opls(std::shared_ptr<const RewardEstimate> estimate,
                     std::span<const double> weights, double beta_fairness = 1.0);
PolicySpec make_opls_mixed(std::shared_ptr<const RewardEstimate> estimate,
                           std::span<const double> weights, SupplyPartition partition);
PolicySpec make_softmax_logging(std::shared_ptr<const RewardEstimate> estimate,
                                std::span<const double> weights, double beta_logging);

// The selection rules below break ties toward the lowest action index and
// throw std::logic_error when no action has stock.

/// argmax over available a of q_hat(x, a).
ActionIndex greedy_select(const PolicySpec& spec, UserIndex user, const InventoryState& s);

/// argmax over available a of q_hat(x, a) - beta * m_a.
ActionIndex opls_select(const PolicySpec& spec, UserIndex user, const InventoryState& s);

/// Naive depletion forecast assuming uniform item selection at every step:
/// s_T^a = s_0^a - T * (1/K) * sum_j p(x_j) q_c(x_j, a). Items whose forecast
/// reaches zero are marked sold.
SupplyPartition partition_by_depletion(const InventoryState& initial, std::size_t horizon,
                                       const Matrix& consumption, std::span<const double> weights);

/// Relative-gap candidate among sold items, absolute candidate among unsold
/// items, then whichever candidate has the larger q_hat (unsold wins ties).
ActionIndex opls_mixed_select(const PolicySpec& spec, UserIndex user, const InventoryState& s);

/// Softmax over available actions of beta_logging * q_hat(x, a). Entries for
/// unavailable actions are zero.
std::vector<double> softmax_probabilities(const PolicySpec& spec, UserIndex user,
                                          const InventoryState& s);

ActionIndex softmax_logging_select(const PolicySpec& spec, UserIndex user,
                                   const InventoryState& s, Rng& rng);

/// Dispatches on spec.kind. Only the softmax rule draws from `rng`.
ActionIndex select_action(const PolicySpec& spec, UserIndex user, const InventoryState& s,
                          Rng& rng);

}  // namespace supplybandit
