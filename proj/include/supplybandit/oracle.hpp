#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "supplybandit/core.hpp"

namespace supplybandit {

/// J users, K actions holding one unit each, every consumption certain
/// (q_c = 1) so that q is the reward of an allocation.
class UnitSupplyInstance {
 public:
  UnitSupplyInstance(Matrix q, std::vector<double> weights);
  static UnitSupplyInstance uniform(Matrix q);

  const Matrix& q() const { return q_; }
  const std::vector<double>& weights() const { return weights_; }
  std::size_t users() const { return static_cast<std::size_t>(q_.rows()); }
  std::size_t actions() const { return static_cast<std::size_t>(q_.cols()); }

  /// True when one ordering of the actions is non-increasing in every row.
  bool shared_order() const { return order_.has_value(); }

  /// Actions from most to least preferred. Throws std::logic_error when the
  /// rows do not share one preference order.
  const std::vector<ActionIndex>& preference_order() const;

  /// E_{p(x)}[q(x, a)].
  double expected_q(ActionIndex a) const;

 private:
  Matrix q_;
  std::vector<double> weights_;
  std::optional<std::vector<ActionIndex>> order_;
};

/// Decision rule used by the enumerators: (arriving user, current stock).
using AllocationRule = std::function<ActionIndex(UserIndex, const InventoryState&)>;

struct OrderOutcome {
  std::vector<UserIndex> order;        // arrival sequence
  std::vector<ActionIndex> allocation; // action given to each arrival, same positions
  double total = 0.0;
};

/// Runs `rule` for every one of the J! arrival orders, each user arriving once,
/// in lexicographic order of the permutations. Requires J = K <= 8 and
/// uniform weights.
std::vector<OrderOutcome> enumerate_orders(const UnitSupplyInstance& inst,
                                           const AllocationRule& rule);

/// Mean total of `rule` over all arrival orders.
double enumerate_policy_value(const UnitSupplyInstance& inst, const AllocationRule& rule);

/// Same, for the greedy rule on the true q (lowest index wins ties).
double enumerate_greedy_value(const UnitSupplyInstance& inst);

AllocationRule greedy_rule(const Matrix& q);

struct Assignment {
  double value = 0.0;
  std::vector<ActionIndex> action_for_user;
};

/// Maximum-weight perfect matching of users to actions (J = K), O(K^3).
Assignment assignment_optimal_value(const UnitSupplyInstance& inst);

/// sum_k E_{p(x)}[q(x, a_k)]. Requires a shared preference order and J = K.
double greedy_value_closed_form(const UnitSupplyInstance& inst);

/// Value of the policy that gives the rank-`rank` action (0 = most preferred)
/// to `user` at the first step and acts greedily afterwards.
double modified_policy_value(const UnitSupplyInstance& inst, UserIndex user, std::size_t rank);

/// p(x_j) {(q(x_j, a_k) - E[q(x, a_k)]) - (q(x_j, a_1) - E[q(x, a_1)])}.
double theorem1_lower_bound(const UnitSupplyInstance& inst, UserIndex user, std::size_t rank);

}  // namespace supplybandit
