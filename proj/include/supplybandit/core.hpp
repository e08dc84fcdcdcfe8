#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace supplybandit {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

using UserIndex = std::size_t;
using ActionIndex = std::size_t;

/// Random engine used everywhere. All randomness flows through explicitly
/// seeded instances of this type; nothing reads global state.
using Rng = std::mt19937_64;

/// Derives an independent 64-bit seed from a base seed and a list of stream
/// identifiers (episode index, stream tag, ...).
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> stream);

/// Finite pool of users: one context row per user plus the arrival
/// distribution p(x) over the pool.
class UserPopulation {
 public:
  UserPopulation(Matrix features, std::vector<double> weights);

  /// Population with p(x) uniform over the rows of `features`.
  static UserPopulation uniform(Matrix features);

  std::size_t size() const { return static_cast<std::size_t>(features_.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(features_.cols()); }
  const Matrix& features() const { return features_; }
  const std::vector<double>& weights() const { return weights_; }
  bool is_uniform() const;

 private:
  Matrix features_;
  std::vector<double> weights_;
};

struct ActionSet {
  std::size_t count = 0;
  std::vector<std::string> labels;

  explicit ActionSet(std::size_t k, std::vector<std::string> names = {});
  std::string label(ActionIndex a) const;
};

/// Remaining units per action. Entries are never negative.
class InventoryState {
 public:
  InventoryState() = default;
  explicit InventoryState(std::vector<std::int64_t> stock);

  /// `k` actions holding `units` each.
  static InventoryState uniform(std::size_t k, std::int64_t units);

  std::size_t size() const { return stock_.size(); }
  std::int64_t operator[](ActionIndex a) const { return stock_.at(a); }
  bool available(ActionIndex a) const { return stock_.at(a) > 0; }
  std::int64_t total() const;
  bool depleted() const;
  const std::vector<std::int64_t>& stock() const { return stock_; }

  /// In-place transition for a consumption of `a`. Throws std::logic_error
  /// when `a` has no stock left.
  void consume(ActionIndex a);

  friend bool operator==(const InventoryState&, const InventoryState&) = default;

 private:
  std::vector<std::int64_t> stock_;
};

/// Indices with positive stock, ascending.
std::vector<ActionIndex> available_actions(const InventoryState& s);

/// Transition: decrements `a` by one when `consumed`, identity otherwise.
/// Throws std::logic_error if `a` is out of stock.
InventoryState update_inventory(const InventoryState& s, ActionIndex a, bool consumed);

struct LoggedTuple {
  std::size_t t = 0;
  UserIndex user = 0;
  ActionIndex action = 0;
  bool consumed = false;
  double reward = 0.0;
  InventoryState stock_before;
};

struct Trajectory {
  std::vector<LoggedTuple> tuples;
  double realized_value = 0.0;
};

using LoggedDataset = std::vector<Trajectory>;

/// Checks that every tuple picked an in-stock action, that time indices
/// increase, and that consecutive snapshots follow the transition exactly
/// starting from `initial`.
bool obeys_transition(const Trajectory& traj, const InventoryState& initial);

/// Stock left after replaying the consumptions of `traj` from `initial`.
InventoryState replay_stock(const Trajectory& traj, const InventoryState& initial);

/// Formats a stock vector as a bracketed list, e.g. "[1,0,2]".
std::string format_stock(const InventoryState& s);

}  // namespace supplybandit
