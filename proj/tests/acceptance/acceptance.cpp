// One PASS/FAIL line per acceptance criterion. Exit status is the number of
// failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>

#include <unistd.h>

#include "oracles.hpp"
#include "supplybandit/config.hpp"
#include "supplybandit/experiment.hpp"
#include "supplybandit/oracle.hpp"
#include "supplybandit/policies.hpp"
#include "supplybandit/sim.hpp"
#include "supplybandit/stats.hpp"

using namespace supplybandit;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      if (!detail.empty()) detail += "; ";
      detail += "failed: " + what;
    }
  }
  void note(const std::string& what) {
    if (pass) detail += (detail.empty() ? "" : "; ") + what;
  }
};

int failures = 0;

void criterion(const std::string& name, double budget_seconds, const std::function<Outcome()>& body) {
  const auto start = std::chrono::steady_clock::now();
  Outcome out;
  try {
    out = body();
  } catch (const std::exception& e) {
    out.pass = false;
    out.detail = std::string("exception: ") + e.what();
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (secs > budget_seconds) {
    out.pass = false;
    out.detail += " (over the " + std::to_string(budget_seconds) + " s budget)";
  }
  if (!out.pass) ++failures;
  std::printf("%s  %s  [%.2f s]  %s\n", out.pass ? "PASS" : "FAIL", name.c_str(), secs, out.detail.c_str());
  std::fflush(stdout);
}

std::string num(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

Matrix coupon_q() {
  Matrix q(3, 3);
  q << 80, 250, 200,
       100, 280, 120,
       60, 100, 70;
  return q;
}

Matrix to_matrix(const oracle_ref::Table& t) {
  Matrix m(static_cast<Eigen::Index>(t.size()), static_cast<Eigen::Index>(t[0].size()));
  for (std::size_t i = 0; i < t.size(); ++i)
    for (std::size_t j = 0; j < t[i].size(); ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = t[i][j];
  return m;
}

std::shared_ptr<const RewardEstimate> estimate_of(const Matrix& q) {
  return std::make_shared<RewardEstimate>(RewardEstimate{q, EstimateSource::exact, 0.0});
}

AllocationRule rule_of(const PolicySpec& spec) {
  return [spec](UserIndex u, const InventoryState& s) {
    Rng unused(0);
    return select_action(spec, u, s, unused);
  };
}

// The shared-order family: J = K cycling through 2..6, uniform p(x), rows of
// Uniform(0, 1) draws sorted in descending order.
std::vector<oracle_ref::Table> instance_family(std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<oracle_ref::Table> out;
  for (std::size_t i = 0; i < count; ++i) out.push_back(oracle_ref::random_sorted_table(rng, 2 + i % 5));
  return out;
}

Outcome coupon_exact() {
  Outcome o;
  const auto inst = UnitSupplyInstance::uniform(coupon_q());
  const auto orders = enumerate_orders(inst, greedy_rule(inst.q()));
  const std::vector<double> totals{430, 420, 540, 430, 400, 300};
  bool totals_ok = orders.size() == 6;
  for (std::size_t i = 0; totals_ok && i < 6; ++i) totals_ok = orders[i].total == totals[i];
  o.require(totals_ok, "per-order greedy totals");
  const double greedy = enumerate_greedy_value(inst);
  o.require(greedy == 420.0, "greedy value " + num(greedy));
  const auto opt = assignment_optimal_value(inst);
  o.require(opt.value == 540.0, "assignment value " + num(opt.value));
  o.require(opt.action_for_user == std::vector<ActionIndex>{2, 1, 0}, "assignment x1->70%, x2->50%, x3->30%");
  const auto opls = make_opls(estimate_of(inst.q()), inst.weights(), 1.0);
  const double opls_value = enumerate_policy_value(inst, rule_of(opls));
  o.require(opls_value == 540.0, "OPLS value " + num(opls_value));
  o.note("greedy 420 (430,420,540,430,400,300), optimal 540, OPLS 540");
  return o;
}

Outcome closed_form_equivalence() {
  Outcome o;
  double worst_greedy = 0.0, worst_modified = 0.0;
  std::size_t pairs = 0;
  for (const auto& t : instance_family(200, 2024)) {
    const auto inst = UnitSupplyInstance::uniform(to_matrix(t));
    const double closed = greedy_value_closed_form(inst);
    worst_greedy = std::max({worst_greedy, std::abs(closed - enumerate_greedy_value(inst)),
                             std::abs(closed - oracle_ref::greedy_permutation_value(t))});
    for (UserIndex j = 0; j < t.size(); ++j) {
      for (std::size_t k = 0; k < t.size(); ++k) {
        worst_modified = std::max(worst_modified, std::abs(modified_policy_value(inst, j, k) -
                                                           oracle_ref::modified_iid_value(t, j, k)));
        ++pairs;
      }
    }
  }
  o.require(worst_greedy <= 1e-9, "greedy closed form max error " + num(worst_greedy));
  o.require(worst_modified <= 1e-9, "modified policy max error " + num(worst_modified));
  o.note("200 instances, " + std::to_string(pairs) + " (j,k) pairs, max errors " + num(worst_greedy) +
         " / " + num(worst_modified));
  return o;
}

Outcome gap_bound_suite() {
  Outcome o;
  std::size_t violations = 0, nonzero_first = 0, checks = 0, solver_mismatch = 0;
  for (const auto& t : instance_family(500, 77)) {
    const auto inst = UnitSupplyInstance::uniform(to_matrix(t));
    const double best = assignment_optimal_value(inst).value;
    if (std::abs(best - oracle_ref::brute_force_assignment(t)) > 1e-12) ++solver_mismatch;
    const double gap = best - enumerate_greedy_value(inst);
    for (UserIndex j = 0; j < t.size(); ++j) {
      if (theorem1_lower_bound(inst, j, 0) != 0.0) ++nonzero_first;
      for (std::size_t k = 0; k < t.size(); ++k) {
        ++checks;
        if (gap < theorem1_lower_bound(inst, j, k)) ++violations;
      }
    }
  }
  o.require(violations == 0, std::to_string(violations) + " bound violations");
  o.require(nonzero_first == 0, std::to_string(nonzero_first) + " nonzero k=1 bounds");
  o.require(solver_mismatch == 0, std::to_string(solver_mismatch) + " assignment/brute-force mismatches");
  o.note("500 instances, " + std::to_string(checks) + " bounds, 0 violations");
  return o;
}

Outcome simulator_agreement() {
  Outcome o;
  EnvironmentSpec env{UserPopulation::uniform(Matrix::Zero(3, 1)),
                      std::make_shared<RewardModel>(Matrix::Ones(3, 3), coupon_q())};
  env.horizon = 3;
  env.initial_supply = InventoryState::uniform(3, 1);
  env.arrival = ArrivalMode::permutation;
  const auto w = env.population.weights();
  const auto greedy = estimate_policy_value(env, make_greedy(estimate_of(coupon_q()), w), 10000, 1);
  const auto opls = estimate_policy_value(env, make_opls(estimate_of(coupon_q()), w), 10000, 1);
  const double z = (greedy.mean - 420.0) / greedy.std_error;
  o.require(std::abs(z) <= 3.0, "greedy " + num(greedy.mean) + " is " + num(z) + " SE from 420");
  o.require(opls.mean == 540.0 && opls.std_error == 0.0,
            "OPLS " + num(opls.mean) + " with SE " + num(opls.std_error));
  o.note("greedy " + num(greedy.mean) + " +- " + num(greedy.std_error) + " (z=" + num(z) +
         "), OPLS 540 with SE 0");
  return o;
}

Outcome greedy_reduction() {
  Outcome o;
  Rng rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::size_t users = 30, actions = 12;
  Matrix c(users, actions), r(users, actions);
  for (Eigen::Index i = 0; i < c.size(); ++i) {
    c.data()[i] = u(rng);
    r.data()[i] = 10.0 * u(rng);
  }
  EnvironmentSpec env{UserPopulation::uniform(Matrix::Zero(users, 1)), std::make_shared<RewardModel>(c, r)};
  env.horizon = 300;
  env.initial_supply = InventoryState::uniform(actions, 400);
  env.reward_noise_sigma = 3.0;
  const auto w = env.population.weights();
  const auto est = estimate_of(env.model->product());
  const auto partition = partition_by_depletion(env.initial_supply, env.horizon, c, w);
  o.require(partition.sold_actions().empty(), "forecast marks some action sold");
  const auto greedy = make_greedy(est, w);
  const auto mixed = make_opls_mixed(est, w, partition);

  EpisodeOptions opts;
  opts.keep_actions = true;
  std::size_t mismatched = 0, depleted_any = 0;
  for (std::uint64_t e = 0; e < 200; ++e) {
    const auto a = simulate_episode(env, greedy, 11, e, opts);
    const auto b = simulate_episode(env, mixed, 11, e, opts);
    if (a.actions != b.actions || a.users != b.users) ++mismatched;
    for (ActionIndex k = 0; k < actions; ++k)
      if (!a.final_stock.available(k)) ++depleted_any;
  }
  o.require(mismatched == 0, std::to_string(mismatched) + " episodes with different actions");
  o.require(depleted_any == 0, "an action ran out during the horizon");
  const auto rel = relative_policy_value(env, mixed, greedy, 2000, 11);
  o.require(rel.ratio == 1.0, "relative value " + num(rel.ratio));
  o.note("A_sold empty, 200 paired episodes identical, relative value exactly 1");
  return o;
}

Json defaults_doc(double lambda, const std::string& scheme) {
  Json doc = Json::object();
  doc["environment"] = {{"source", "synthetic"}, {"users", 200},   {"actions", 100},
                        {"lambda", lambda},      {"horizon", "auto"},
                        {"supply", {{"scheme", scheme}, {"s_max", 20}}}};
  doc["policies"] = Json::array({{{"kind", "greedy"}}, {{"kind", "opls"}}});
  doc["seeds"] = {{"count", 100}, {"base", 0}};
  return doc;
}

struct Paired {
  std::vector<double> greedy, opls, ratio;
  std::size_t warnings = 0;
};

Paired run_paired(const Json& doc) {
  const auto res = compute_experiment(parse_config(doc));
  Paired p;
  for (const auto& cell : res.cells) {
    p.greedy.push_back(cell.policies[0].value);
    p.opls.push_back(cell.policies[1].value);
    p.ratio.push_back(cell.policies[1].relative_to_greedy);
    p.warnings += cell.warnings.size();
  }
  return p;
}

Outcome qualitative_trend() {
  Outcome o;
  const std::vector<std::pair<double, std::string>> settings{{0.0, "inverse_proportional"}, {0.5, "random"}};
  for (const auto& [lambda, scheme] : settings) {
    const auto p = run_paired(defaults_doc(lambda, scheme));
    const auto test = paired_t_test_greater(p.opls, p.greedy);
    const auto mean_ratio = summarize(p.ratio).mean;
    const std::string tag = "lambda=" + num(lambda) + " " + scheme;
    o.require(mean_ratio > 1.0, tag + " mean relative value " + num(mean_ratio));
    o.require(test.p_value < 0.01, tag + " p=" + num(test.p_value));
    o.require(p.warnings == 0, tag + " stock left at the horizon");
    o.note(tag + ": V_OPLS/V_greedy " + num(mean_ratio) + ", p=" + num(test.p_value));
  }
  return o;
}

Outcome noise_robustness() {
  Outcome o;
  for (double sigma : {0.0, 1.0, 3.0}) {
    auto doc = defaults_doc(0.5, "random");
    doc["estimator"] = {{"kind", "noise"}, {"sigma", sigma}};
    const auto p = run_paired(doc);
    const auto s = summarize(p.ratio);
    o.require(s.mean >= 1.0 - s.std_error,
              "sigma=" + num(sigma) + " relative " + num(s.mean) + " < 1 - " + num(s.std_error));
    o.note("sigma=" + num(sigma) + ": " + num(s.mean) + " +- " + num(s.std_error));
  }
  return o;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

Outcome invariant_suite() {
  Outcome o;
  Rng rng(41);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::size_t users = 8, actions = 6;
  Matrix c(users, actions), r(users, actions);
  for (Eigen::Index i = 0; i < c.size(); ++i) {
    c.data()[i] = u(rng);
    r.data()[i] = 4.0 * u(rng);
  }
  EnvironmentSpec env{UserPopulation::uniform(Matrix::Zero(users, 1)), std::make_shared<RewardModel>(c, r)};
  env.horizon = 60;
  env.initial_supply = InventoryState({3, 1, 4, 1, 5, 2});
  env.reward_noise_sigma = 2.0;
  const auto w = env.population.weights();
  const auto est = estimate_of(env.model->product());
  const std::vector<PolicySpec> policies{
      make_greedy(est, w), make_opls(est, w, 1.0), make_opls(est, w, 0.4),
      make_opls_mixed(est, w, partition_by_depletion(env.initial_supply, env.horizon, c, w)),
      make_softmax_logging(est, w, -1.0)};

  // conservation and feasibility along simulated trajectories
  std::size_t broken = 0, infeasible = 0, episodes = 0;
  for (const auto& policy : policies) {
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
      const auto traj = run_episode(env, policy, seed);
      ++episodes;
      if (!obeys_transition(traj, env.initial_supply)) ++broken;
      for (const auto& tup : traj.tuples)
        if (!tup.stock_before.available(tup.action)) ++infeasible;
      std::vector<std::int64_t> expected = env.initial_supply.stock();
      for (const auto& tup : traj.tuples) expected[tup.action] -= tup.consumed ? 1 : 0;
      if (replay_stock(traj, env.initial_supply).stock() != expected) ++broken;
    }
  }
  o.require(broken == 0, std::to_string(broken) + " trajectories break conservation");
  o.require(infeasible == 0, std::to_string(infeasible) + " out-of-stock selections");

  // feasibility on arbitrary states
  std::uniform_int_distribution<int> stock_draw(0, 2);
  std::size_t state_checks = 0;
  double worst_norm = 0.0;
  for (int i = 0; i < 5000; ++i) {
    std::vector<std::int64_t> s(actions);
    for (auto& v : s) v = stock_draw(rng);
    if (std::all_of(s.begin(), s.end(), [](auto v) { return v == 0; })) s[0] = 1;
    const InventoryState state(s);
    const UserIndex user = static_cast<UserIndex>(i) % users;
    for (const auto& policy : policies) {
      ++state_checks;
      if (!state.available(select_action(policy, user, state, rng))) ++infeasible;
    }
    for (double beta : {-5.0, -1.0, 0.0, 1.0, 80.0}) {
      const auto probs = softmax_probabilities(make_softmax_logging(est, w, beta), user, state);
      double sum = 0.0;
      for (ActionIndex a = 0; a < actions; ++a) {
        if (!state.available(a) && probs[a] != 0.0) worst_norm = 1.0;
        sum += probs[a];
      }
      worst_norm = std::max(worst_norm, std::abs(sum - 1.0));
    }
  }
  o.require(infeasible == 0, "selection outside the available set");
  o.require(worst_norm <= 1e-12, "softmax normalization error " + num(worst_norm));

  // OPLS shift invariance at beta = 1, and a greedy counterexample
  Vector delta(actions);
  for (Eigen::Index a = 0; a < delta.size(); ++a) delta(a) = 10.0 * u(rng) - 5.0;
  const Matrix shifted = env.model->product().rowwise() + delta.transpose();
  const auto opls_a = make_opls(est, w, 1.0);
  const auto opls_b = make_opls(estimate_of(shifted), w, 1.0);
  std::size_t shift_diffs = 0;
  for (int i = 0; i < 5000; ++i) {
    std::vector<std::int64_t> s(actions);
    for (auto& v : s) v = stock_draw(rng);
    if (std::all_of(s.begin(), s.end(), [](auto v) { return v == 0; })) s[3] = 1;
    const InventoryState state(s);
    const UserIndex user = static_cast<UserIndex>(i) % users;
    if (opls_select(opls_a, user, state) != opls_select(opls_b, user, state)) ++shift_diffs;
  }
  o.require(shift_diffs == 0, std::to_string(shift_diffs) + " OPLS decisions changed under an action offset");
  Matrix base(1, 2);
  base << 1.0, 0.0;
  Matrix moved = base;
  moved(0, 1) += 2.0;
  const std::vector<double> one{1.0};
  const auto full = InventoryState::uniform(2, 1);
  const bool greedy_moves = greedy_select(make_greedy(estimate_of(base), one), 0, full) !=
                            greedy_select(make_greedy(estimate_of(moved), one), 0, full);
  const bool opls_stays = opls_select(make_opls(estimate_of(base), one), 0, full) ==
                          opls_select(make_opls(estimate_of(moved), one), 0, full);
  o.require(greedy_moves && opls_stays, "greedy counterexample");

  // CSV determinism: seed count 1, fixed seed, two runs and two job counts
  auto doc = defaults_doc(0.5, "random");
  doc["seeds"] = {{"count", 1}, {"base", 17}};
  doc["sweep"] = {{"parameter", "environment.lambda"}, {"values", {0.0, 0.5, 1.0}}};
  doc["output"] = {{"trace", true}, {"allocation_checkpoints", {50, 500}}};
  const auto cfg = parse_config(doc);
  const fs::path root = fs::temp_directory_path() / ("supplybandit_acceptance_" + std::to_string(::getpid()));
  std::vector<std::string> digests;
  for (std::size_t run = 0; run < 3; ++run) {
    RunOptions opts;
    opts.out_dir = root / std::to_string(run);
    opts.jobs = run == 2 ? 3 : 1;
    const auto res = run_experiment(cfg, opts);
    std::string all;
    for (const auto& f : res.files) all += slurp(f);
    digests.push_back(all);
  }
  fs::remove_all(root);
  o.require(digests[0] == digests[1], "two identical runs differ");
  o.require(digests[0] == digests[2], "jobs=3 output differs from jobs=1");
  o.note(std::to_string(episodes) + " trajectories, " + std::to_string(state_checks) +
         " selections, softmax error " + num(worst_norm) + ", byte-identical CSVs");
  return o;
}

}  // namespace

int main() {
  criterion("coupon example exact", 1.0, coupon_exact);
  criterion("closed-form equivalence", 30.0, closed_form_equivalence);
  criterion("greedy gap lower bound", 60.0, gap_bound_suite);
  criterion("simulator-oracle agreement", 10.0, simulator_agreement);
  criterion("greedy reduction", 10.0, greedy_reduction);
  criterion("qualitative trend reproduction", 600.0, qualitative_trend);
  criterion("estimator robustness direction", 600.0, noise_robustness);
  criterion("invariant suite", 120.0, invariant_suite);
  std::printf("%d criteria failed\n", failures);
  return failures;
}
