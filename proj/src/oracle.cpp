#include "supplybandit/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace supplybandit {

namespace {

constexpr std::size_t kMaxEnumerationUsers = 8;

std::optional<std::vector<ActionIndex>> find_shared_order(const Matrix& q) {
  const auto k = static_cast<std::size_t>(q.cols());
  std::vector<ActionIndex> order(k);
  std::iota(order.begin(), order.end(), ActionIndex{0});
  // Column sums rank any order that exists; equal sums under a shared order
  // mean identical columns, so stability is enough.
  const Vector sums = q.colwise().sum();
  std::stable_sort(order.begin(), order.end(), [&](ActionIndex a, ActionIndex b) {
    return sums(static_cast<Eigen::Index>(a)) > sums(static_cast<Eigen::Index>(b));
  });
  for (Eigen::Index j = 0; j < q.rows(); ++j)
    for (std::size_t r = 0; r + 1 < k; ++r)
      if (q(j, static_cast<Eigen::Index>(order[r])) < q(j, static_cast<Eigen::Index>(order[r + 1])))
        return std::nullopt;
  return order;
}

void require_square(const UnitSupplyInstance& inst) {
  if (inst.users() != inst.actions())
    throw std::invalid_argument("unit-supply oracle requires as many users as actions");
}

void check_indices(const UnitSupplyInstance& inst, UserIndex user, std::size_t rank) {
  if (user >= inst.users()) throw std::out_of_range("user index out of range");
  if (rank >= inst.actions()) throw std::out_of_range("action rank out of range");
}

}  // namespace

UnitSupplyInstance::UnitSupplyInstance(Matrix q, std::vector<double> weights)
    : q_(std::move(q)), weights_(std::move(weights)) {
  if (q_.rows() < 1 || q_.cols() < 1) throw std::invalid_argument("instance must be non-empty");
  if (!q_.allFinite()) throw std::invalid_argument("q entries must be finite");
  if (weights_.size() != users()) throw std::invalid_argument("weights must have one entry per user");
  double sum = 0.0;
  for (double w : weights_) {
    if (!(w >= 0.0)) throw std::invalid_argument("weights must be nonnegative");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("weights must sum to 1");
  order_ = find_shared_order(q_);
}

UnitSupplyInstance UnitSupplyInstance::uniform(Matrix q) {
  const auto j = static_cast<std::size_t>(q.rows());
  if (j == 0) throw std::invalid_argument("instance must be non-empty");
  return UnitSupplyInstance(std::move(q), std::vector<double>(j, 1.0 / static_cast<double>(j)));
}

const std::vector<ActionIndex>& UnitSupplyInstance::preference_order() const {
  if (!order_) throw std::logic_error("users do not share one preference order");
  return *order_;
}

double UnitSupplyInstance::expected_q(ActionIndex a) const {
  if (a >= actions()) throw std::out_of_range("action index out of range");
  double e = 0.0;
  for (std::size_t j = 0; j < users(); ++j)
    e += weights_[j] * q_(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(a));
  return e;
}

AllocationRule greedy_rule(const Matrix& q) {
  return [&q](UserIndex user, const InventoryState& s) {
    ActionIndex best = s.size();
    for (ActionIndex a = 0; a < s.size(); ++a) {
      if (!s.available(a)) continue;
      if (best == s.size() ||
          q(static_cast<Eigen::Index>(user), static_cast<Eigen::Index>(a)) >
              q(static_cast<Eigen::Index>(user), static_cast<Eigen::Index>(best)))
        best = a;
    }
    if (best == s.size()) throw std::logic_error("no action with remaining stock");
    return best;
  };
}

std::vector<OrderOutcome> enumerate_orders(const UnitSupplyInstance& inst,
                                           const AllocationRule& rule) {
  require_square(inst);
  if (inst.users() > kMaxEnumerationUsers)
    throw std::invalid_argument("order enumeration is limited to 8 users");
  const double uniform_weight = 1.0 / static_cast<double>(inst.users());
  for (double w : inst.weights())
    if (std::abs(w - uniform_weight) > 1e-12)
      throw std::invalid_argument("order enumeration requires uniform arrival weights");

  std::vector<UserIndex> order(inst.users());
  std::iota(order.begin(), order.end(), UserIndex{0});
  std::vector<OrderOutcome> out;
  do {
    OrderOutcome o{order, {}, 0.0};
    InventoryState s = InventoryState::uniform(inst.actions(), 1);
    for (UserIndex user : order) {
      const ActionIndex a = rule(user, s);
      s.consume(a);
      o.allocation.push_back(a);
      o.total += inst.q()(static_cast<Eigen::Index>(user), static_cast<Eigen::Index>(a));
    }
    out.push_back(std::move(o));
  } while (std::next_permutation(order.begin(), order.end()));
  return out;
}

double enumerate_policy_value(const UnitSupplyInstance& inst, const AllocationRule& rule) {
  const auto outcomes = enumerate_orders(inst, rule);
  double sum = 0.0;
  for (const auto& o : outcomes) sum += o.total;
  return sum / static_cast<double>(outcomes.size());
}

double enumerate_greedy_value(const UnitSupplyInstance& inst) {
  return enumerate_policy_value(inst, greedy_rule(inst.q()));
}

Assignment assignment_optimal_value(const UnitSupplyInstance& inst) {
  require_square(inst);
  // Shortest augmenting path Hungarian method on cost = -q, 1-based potentials.
  const std::size_t n = inst.users();
  const Matrix& q = inst.q();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> match(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    match[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = match[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = -q(static_cast<Eigen::Index>(i0 - 1), static_cast<Eigen::Index>(j - 1)) -
                           u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  Assignment out;
  out.action_for_user.assign(n, 0);
  for (std::size_t j = 1; j <= n; ++j) out.action_for_user[match[j] - 1] = j - 1;
  // Sum from the matrix rather than the potentials to avoid drift.
  for (std::size_t i = 0; i < n; ++i)
    out.value += q(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(out.action_for_user[i]));
  return out;
}

double greedy_value_closed_form(const UnitSupplyInstance& inst) {
  require_square(inst);
  double v = 0.0;
  for (ActionIndex a : inst.preference_order()) v += inst.expected_q(a);
  return v;
}

double theorem1_lower_bound(const UnitSupplyInstance& inst, UserIndex user, std::size_t rank) {
  require_square(inst);
  check_indices(inst, user, rank);
  const auto& order = inst.preference_order();
  const ActionIndex top = order.front();
  const ActionIndex chosen = order[rank];
  if (rank == 0) return 0.0;
  const auto j = static_cast<Eigen::Index>(user);
  const double gap_chosen = inst.q()(j, static_cast<Eigen::Index>(chosen)) - inst.expected_q(chosen);
  const double gap_top = inst.q()(j, static_cast<Eigen::Index>(top)) - inst.expected_q(top);
  return inst.weights()[user] * (gap_chosen - gap_top);
}

double modified_policy_value(const UnitSupplyInstance& inst, UserIndex user, std::size_t rank) {
  return theorem1_lower_bound(inst, user, rank) + greedy_value_closed_form(inst);
}

}  // namespace supplybandit
