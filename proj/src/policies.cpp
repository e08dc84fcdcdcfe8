#include "supplybandit/policies.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace supplybandit {

namespace {

void check_user(const PolicySpec& spec, UserIndex user, const InventoryState& s) {
  if (!spec.estimate) throw std::invalid_argument("policy has no reward estimate");
  if (user >= static_cast<std::size_t>(spec.q_hat().rows()))
    throw std::out_of_range("user index out of range");
  if (s.size() != static_cast<std::size_t>(spec.q_hat().cols()))
    throw std::invalid_argument("inventory size does not match the action count");
}

constexpr ActionIndex kNone = std::numeric_limits<ActionIndex>::max();

// Lowest-index argmax of score(a) over in-stock actions accepted by `keep`.
template <typename Score, typename Keep>
ActionIndex argmax_available(const InventoryState& s, Score score, Keep keep) {
  ActionIndex best = kNone;
  double best_score = -std::numeric_limits<double>::infinity();
  for (ActionIndex a = 0; a < s.size(); ++a) {
    if (!s.available(a) || !keep(a)) continue;
    const double v = score(a);
    if (best == kNone || v > best_score) {
      best = a;
      best_score = v;
    }
  }
  return best;
}

ActionIndex require(ActionIndex a) {
  if (a == kNone) throw std::logic_error("no action with remaining stock");
  return a;
}

PolicySpec make_base(PolicyKind kind, std::shared_ptr<const RewardEstimate> estimate,
                     std::span<const double> weights) {
  if (!estimate) throw std::invalid_argument("policy needs a reward estimate");
  PolicySpec spec;
  spec.kind = kind;
  spec.population_means = population_means(estimate->q_hat, weights);
  spec.estimate = std::move(estimate);
  return spec;
}

}  // namespace

std::string to_string(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::greedy: return "greedy";
    case PolicyKind::opls: return "opls";
    case PolicyKind::opls_mixed: return "opls_mixed";
    case PolicyKind::softmax_logging: return "softmax_logging";
  }
  return "unknown";
}

std::vector<ActionIndex> SupplyPartition::sold_actions() const {
  std::vector<ActionIndex> out;
  for (ActionIndex a = 0; a < sold.size(); ++a)
    if (sold[a]) out.push_back(a);
  return out;
}

std::vector<ActionIndex> SupplyPartition::unsold_actions() const {
  std::vector<ActionIndex> out;
  for (ActionIndex a = 0; a < sold.size(); ++a)
    if (!sold[a]) out.push_back(a);
  return out;
}

Vector population_means(const Matrix& q_hat, std::span<const double> weights) {
  if (weights.size() != static_cast<std::size_t>(q_hat.rows()))
    throw std::invalid_argument("weights must have one entry per user");
  const Eigen::Map<const Vector> p(weights.data(), static_cast<Eigen::Index>(weights.size()));
  return q_hat.transpose() * p;
}

PolicySpec make_greedy(std::shared_ptr<const RewardEstimate> estimate,
                       std::span<const double> weights) {
  return make_base(PolicyKind::greedy, std::move(estimate), weights);
}

PolicySpec make_opls(std::shared_ptr<const RewardEstimate> estimate,
                     std::span<const double> weights, double beta_fairness) {
  if (!(beta_fairness >= 0.0 && beta_fairness <= 1.0))
    throw std::invalid_argument("fairness beta must lie in [0, 1]");
  auto spec = make_base(PolicyKind::opls, std::move(estimate), weights);
  spec.beta_fairness = beta_fairness;
  return spec;
}

PolicySpec make_opls_mixed(std::shared_ptr<const RewardEstimate> estimate,
                           std::span<const double> weights, SupplyPartition partition) {
  if (partition.sold.size() != static_cast<std::size_t>(estimate->q_hat.cols()))
    throw std::invalid_argument("partition must cover every action");
  auto spec = make_base(PolicyKind::opls_mixed, std::move(estimate), weights);
  spec.partition = std::move(partition);
  return spec;
}

PolicySpec make_softmax_logging(std::shared_ptr<const RewardEstimate> estimate,
                                std::span<const double> weights, double beta_logging) {
  if (!std::isfinite(beta_logging)) throw std::invalid_argument("logging beta must be finite");
  auto spec = make_base(PolicyKind::softmax_logging, std::move(estimate), weights);
  spec.beta_logging = beta_logging;
  return spec;
}

ActionIndex greedy_select(const PolicySpec& spec, UserIndex user, const InventoryState& s) {
  check_user(spec, user, s);
  const auto row = spec.q_hat().row(static_cast<Eigen::Index>(user));
  return require(argmax_available(
      s, [&](ActionIndex a) { return row(static_cast<Eigen::Index>(a)); },
      [](ActionIndex) { return true; }));
}

ActionIndex opls_select(const PolicySpec& spec, UserIndex user, const InventoryState& s) {
  check_user(spec, user, s);
  const auto row = spec.q_hat().row(static_cast<Eigen::Index>(user));
  const double beta = spec.beta_fairness;
  return require(argmax_available(
      s,
      [&](ActionIndex a) {
        const auto i = static_cast<Eigen::Index>(a);
        return row(i) - beta * spec.population_means(i);
      },
      [](ActionIndex) { return true; }));
}

SupplyPartition partition_by_depletion(const InventoryState& initial, std::size_t horizon,
                                       const Matrix& consumption, std::span<const double> weights) {
  if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
  if (initial.size() != static_cast<std::size_t>(consumption.cols()))
    throw std::invalid_argument("inventory size does not match the action count");
  const Vector mean_c = population_means(consumption, weights);
  const double k = static_cast<double>(initial.size());
  SupplyPartition out;
  out.sold.resize(initial.size());
  for (ActionIndex a = 0; a < initial.size(); ++a) {
    const double forecast = static_cast<double>(initial[a]) -
                            static_cast<double>(horizon) * mean_c(static_cast<Eigen::Index>(a)) / k;
    out.sold[a] = forecast <= 0.0;
  }
  return out;
}

ActionIndex opls_mixed_select(const PolicySpec& spec, UserIndex user, const InventoryState& s) {
  check_user(spec, user, s);
  if (!spec.partition) throw std::invalid_argument("opls_mixed policy needs a supply partition");
  const auto& sold = spec.partition->sold;
  const auto row = spec.q_hat().row(static_cast<Eigen::Index>(user));
  const auto q = [&](ActionIndex a) { return row(static_cast<Eigen::Index>(a)); };

  const ActionIndex sold_pick = argmax_available(
      s, [&](ActionIndex a) { return q(a) - spec.population_means(static_cast<Eigen::Index>(a)); },
      [&](ActionIndex a) { return bool(sold[a]); });
  const ActionIndex unsold_pick =
      argmax_available(s, q, [&](ActionIndex a) { return !sold[a]; });

  if (sold_pick == kNone) return require(unsold_pick);
  if (unsold_pick == kNone) return sold_pick;
  return q(unsold_pick) >= q(sold_pick) ? unsold_pick : sold_pick;
}

std::vector<double> softmax_probabilities(const PolicySpec& spec, UserIndex user,
                                          const InventoryState& s) {
  check_user(spec, user, s);
  const auto row = spec.q_hat().row(static_cast<Eigen::Index>(user));
  std::vector<double> prob(s.size(), 0.0);
  double peak = -std::numeric_limits<double>::infinity();
  bool any = false;
  for (ActionIndex a = 0; a < s.size(); ++a) {
    if (!s.available(a)) continue;
    peak = std::max(peak, spec.beta_logging * row(static_cast<Eigen::Index>(a)));
    any = true;
  }
  if (!any) throw std::logic_error("no action with remaining stock");
  double norm = 0.0;
  for (ActionIndex a = 0; a < s.size(); ++a) {
    if (!s.available(a)) continue;
    prob[a] = std::exp(spec.beta_logging * row(static_cast<Eigen::Index>(a)) - peak);
    norm += prob[a];
  }
  for (auto& p : prob) p /= norm;
  return prob;
}

ActionIndex softmax_logging_select(const PolicySpec& spec, UserIndex user,
                                   const InventoryState& s, Rng& rng) {
  const auto prob = softmax_probabilities(spec, user, s);
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  double acc = 0.0;
  ActionIndex last = kNone;
  for (ActionIndex a = 0; a < prob.size(); ++a) {
    if (prob[a] <= 0.0) continue;
    acc += prob[a];
    last = a;
    if (u < acc) return a;
  }
  return require(last);
}

ActionIndex select_action(const PolicySpec& spec, UserIndex user, const InventoryState& s,
                          Rng& rng) {
  switch (spec.kind) {
    case PolicyKind::greedy: return greedy_select(spec, user, s);
    case PolicyKind::opls: return opls_select(spec, user, s);
    case PolicyKind::opls_mixed: return opls_mixed_select(spec, user, s);
    case PolicyKind::softmax_logging: return softmax_logging_select(spec, user, s, rng);
  }
  throw std::logic_error("unknown policy kind");
}

}  // namespace supplybandit
