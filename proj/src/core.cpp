#include "supplybandit/core.hpp"

#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace supplybandit {

std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> stream) {
  std::vector<std::uint32_t> words;
  words.reserve(2 + 2 * stream.size());
  auto push = [&](std::uint64_t v) {
    words.push_back(static_cast<std::uint32_t>(v & 0xffffffffu));
    words.push_back(static_cast<std::uint32_t>(v >> 32));
  };
  push(base);
  for (auto v : stream) push(v);
  std::seed_seq seq(words.begin(), words.end());
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
}

UserPopulation::UserPopulation(Matrix features, std::vector<double> weights)
    : features_(std::move(features)), weights_(std::move(weights)) {
  if (features_.rows() < 1) throw std::invalid_argument("population needs at least one user");
  if (weights_.size() != static_cast<std::size_t>(features_.rows()))
    throw std::invalid_argument("arrival weights must have one entry per user");
  if (!features_.allFinite()) throw std::invalid_argument("user features must be finite");
  double sum = 0.0;
  for (double w : weights_) {
    if (!(w >= 0.0)) throw std::invalid_argument("arrival weights must be nonnegative");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("arrival weights must sum to 1");
}

UserPopulation UserPopulation::uniform(Matrix features) {
  const auto n = static_cast<std::size_t>(features.rows());
  if (n == 0) throw std::invalid_argument("population needs at least one user");
  std::vector<double> w(n, 1.0 / static_cast<double>(n));
  return UserPopulation(std::move(features), std::move(w));
}

bool UserPopulation::is_uniform() const {
  const double u = 1.0 / static_cast<double>(weights_.size());
  for (double w : weights_)
    if (std::abs(w - u) > 1e-12) return false;
  return true;
}

ActionSet::ActionSet(std::size_t k, std::vector<std::string> names)
    : count(k), labels(std::move(names)) {
  if (count < 1) throw std::invalid_argument("action set needs at least one action");
  if (!labels.empty() && labels.size() != count)
    throw std::invalid_argument("action labels must match the action count");
}

std::string ActionSet::label(ActionIndex a) const {
  if (a >= count) throw std::out_of_range("action index out of range");
  return labels.empty() ? "a" + std::to_string(a + 1) : labels[a];
}

InventoryState::InventoryState(std::vector<std::int64_t> stock) : stock_(std::move(stock)) {
  for (auto v : stock_)
    if (v < 0) throw std::invalid_argument("stock entries must be nonnegative");
}

InventoryState InventoryState::uniform(std::size_t k, std::int64_t units) {
  return InventoryState(std::vector<std::int64_t>(k, units));
}

std::int64_t InventoryState::total() const {
  return std::accumulate(stock_.begin(), stock_.end(), std::int64_t{0});
}

bool InventoryState::depleted() const {
  for (auto v : stock_)
    if (v > 0) return false;
  return true;
}

void InventoryState::consume(ActionIndex a) {
  if (a >= stock_.size()) throw std::out_of_range("action index out of range");
  if (stock_[a] <= 0)
    throw std::logic_error("action " + std::to_string(a) + " selected with no remaining stock");
  --stock_[a];
}

std::vector<ActionIndex> available_actions(const InventoryState& s) {
  std::vector<ActionIndex> out;
  for (ActionIndex a = 0; a < s.size(); ++a)
    if (s[a] > 0) out.push_back(a);
  return out;
}

InventoryState update_inventory(const InventoryState& s, ActionIndex a, bool consumed) {
  if (a >= s.size()) throw std::out_of_range("action index out of range");
  if (s[a] <= 0)
    throw std::logic_error("action " + std::to_string(a) + " selected with no remaining stock");
  InventoryState next = s;
  if (consumed) next.consume(a);
  return next;
}

bool obeys_transition(const Trajectory& traj, const InventoryState& initial) {
  InventoryState s = initial;
  bool first = true;
  std::size_t last_t = 0;
  double value = 0.0;
  for (const auto& tup : traj.tuples) {
    if (!first && tup.t <= last_t) return false;
    if (!(tup.stock_before == s)) return false;
    if (tup.action >= s.size() || !s.available(tup.action)) return false;
    if (tup.consumed) s.consume(tup.action);
    value += tup.consumed ? tup.reward : 0.0;
    first = false;
    last_t = tup.t;
  }
  return std::abs(value - traj.realized_value) <= 1e-9 * (1.0 + std::abs(value));
}

InventoryState replay_stock(const Trajectory& traj, const InventoryState& initial) {
  InventoryState s = initial;
  for (const auto& tup : traj.tuples)
    if (tup.consumed) s.consume(tup.action);
  return s;
}

std::string format_stock(const InventoryState& s) {
  std::ostringstream os;
  os << '[';
  for (std::size_t a = 0; a < s.size(); ++a) {
    if (a) os << ',';
    os << s[a];
  }
  os << ']';
  return os.str();
}

}  // namespace supplybandit
