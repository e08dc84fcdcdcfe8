#include "supplybandit/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include <boost/math/distributions/normal.hpp>

#include "supplybandit/parallel.hpp"

namespace supplybandit {

namespace {

enum StreamTag : std::uint64_t { kArrivals = 1, kConsumption = 2, kNoise = 3, kPolicy = 4 };

class ArrivalSource {
 public:
  ArrivalSource(const EnvironmentSpec& env, Rng& rng) : env_(env), rng_(rng) {
    const auto n = env.population.size();
    if (env.arrival == ArrivalMode::iid && !env.population.is_uniform()) {
      const auto& w = env.population.weights();
      pick_ = std::discrete_distribution<std::size_t>(w.begin(), w.end());
      weighted_ = true;
    }
    if (env.arrival == ArrivalMode::permutation) {
      pass_.resize(n);
      cursor_ = n;
    }
  }

  UserIndex next() {
    switch (env_.arrival) {
      case ArrivalMode::iid:
        if (weighted_) return pick_(rng_);
        return std::uniform_int_distribution<std::size_t>(0, env_.population.size() - 1)(rng_);
      case ArrivalMode::permutation:
        if (cursor_ == pass_.size()) {
          std::iota(pass_.begin(), pass_.end(), UserIndex{0});
          std::shuffle(pass_.begin(), pass_.end(), rng_);
          cursor_ = 0;
        }
        return pass_[cursor_++];
      case ArrivalMode::scripted: {
        const auto& script = env_.arrival_script;
        return script[step_++ % script.size()];
      }
    }
    throw std::logic_error("unknown arrival mode");
  }

 private:
  const EnvironmentSpec& env_;
  Rng& rng_;
  bool weighted_ = false;
  std::discrete_distribution<std::size_t> pick_;
  std::vector<UserIndex> pass_;
  std::size_t cursor_ = 0;
  std::size_t step_ = 0;
};

// Truncated-at-zero normal by inverse CDF, one uniform per draw.
double truncated_normal(double mean, double sigma, double u) {
  const boost::math::normal_distribution<double> std_normal(0.0, 1.0);
  const double lower = boost::math::cdf(std_normal, -mean / sigma);
  double p = lower + u * (1.0 - lower);
  p = std::clamp(p, std::numeric_limits<double>::min(), 1.0 - 1e-16);
  return std::max(0.0, mean + sigma * boost::math::quantile(std_normal, p));
}

}  // namespace

std::string to_string(ArrivalMode m) {
  switch (m) {
    case ArrivalMode::iid: return "iid";
    case ArrivalMode::permutation: return "permutation";
    case ArrivalMode::scripted: return "scripted";
  }
  return "unknown";
}

std::string to_string(RewardNoise n) {
  return n == RewardNoise::normal ? "normal" : "truncated_normal";
}

std::string to_string(SupplyScheme s) {
  switch (s) {
    case SupplyScheme::proportional: return "proportional";
    case SupplyScheme::inverse_proportional: return "inverse_proportional";
    case SupplyScheme::random: return "random";
  }
  return "unknown";
}

void EnvironmentSpec::validate() const {
  if (!model) throw std::invalid_argument("environment has no reward model");
  if (model->users() != population.size())
    throw std::invalid_argument("reward model rows must match the population size");
  if (initial_supply.size() != model->actions())
    throw std::invalid_argument("initial supply must have one entry per action");
  if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
  if (!(reward_noise_sigma >= 0.0)) throw std::invalid_argument("reward noise sigma must be >= 0");
  if (arrival == ArrivalMode::scripted) {
    if (arrival_script.empty()) throw std::invalid_argument("scripted arrivals need a script");
    for (auto u : arrival_script)
      if (u >= population.size()) throw std::invalid_argument("arrival script names an unknown user");
  }
}

InventoryState initial_supply(SupplyScheme scheme, std::int64_t s_max, const RewardModel& model,
                              const UserPopulation& users, Rng& rng) {
  if (s_max < 1) throw std::invalid_argument("s_max must be >= 1");
  const std::size_t k = model.actions();
  std::vector<std::int64_t> stock(k);
  if (scheme == SupplyScheme::random) {
    std::uniform_int_distribution<std::int64_t> draw(1, s_max);
    for (auto& v : stock) v = draw(rng);
    return InventoryState(std::move(stock));
  }

  const Vector demand = model.expected_product(users.weights());
  const double smax = static_cast<double>(s_max);
  auto settle = [](double x) { return std::max<std::int64_t>(1, std::llround(x)); };
  if (scheme == SupplyScheme::proportional) {
    const double top = demand.maxCoeff();
    for (std::size_t a = 0; a < k; ++a)
      stock[a] = top > 0.0 ? settle(smax * demand(static_cast<Eigen::Index>(a)) / top) : s_max;
  } else {
    if ((demand.array() <= 0.0).any())
      throw std::domain_error("inverse proportional supply needs positive expected demand");
    const double low = demand.minCoeff();
    for (std::size_t a = 0; a < k; ++a)
      stock[a] = settle(smax * low / std::sqrt(demand(static_cast<Eigen::Index>(a))));
  }
  return InventoryState(std::move(stock));
}

EpisodeResult simulate_episode(const EnvironmentSpec& env, const PolicySpec& policy,
                               std::uint64_t seed, std::uint64_t episode,
                               const EpisodeOptions& options) {
  env.validate();
  Rng arrivals_rng(derive_seed(seed, {episode, kArrivals}));
  Rng consumption_rng(derive_seed(seed, {episode, kConsumption}));
  Rng noise_rng(derive_seed(seed, {episode, kNoise}));
  Rng policy_rng(derive_seed(seed, {episode, kPolicy}));

  ArrivalSource arrivals(env, arrivals_rng);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> std_normal(0.0, 1.0);

  const Matrix& q_c = env.model->consumption();
  const Matrix& q_r = env.model->reward();
  const double sigma = env.reward_noise_sigma;

  std::vector<std::size_t> checkpoints = options.checkpoints;
  std::sort(checkpoints.begin(), checkpoints.end());
  Matrix counts;
  if (!checkpoints.empty())
    counts = Matrix::Zero(static_cast<Eigen::Index>(env.population.size()),
                          static_cast<Eigen::Index>(env.model->actions()));

  EpisodeResult out;
  out.step_values.reserve(env.horizon);
  InventoryState s = env.initial_supply;
  std::size_t next_checkpoint = 0;
  auto flush_checkpoints = [&](std::size_t t) {
    while (next_checkpoint < checkpoints.size() && checkpoints[next_checkpoint] <= t) {
      out.allocations.push_back(counts);
      ++next_checkpoint;
    }
  };
  flush_checkpoints(0);

  for (std::size_t t = 1; t <= env.horizon; ++t) {
    if (s.depleted()) break;
    const UserIndex user = arrivals.next();
    const ActionIndex a = select_action(policy, user, s, policy_rng);
    if (!s.available(a)) throw std::logic_error("policy selected an out-of-stock action");
    const auto j = static_cast<Eigen::Index>(user);
    const auto i = static_cast<Eigen::Index>(a);

    const bool consumed = unit(consumption_rng) < q_c(j, i);
    double reward = q_r(j, i);
    if (env.noise_kind == RewardNoise::normal) {
      const double z = std_normal(noise_rng);
      reward += sigma * z;
    } else {
      const double u = unit(noise_rng);
      if (sigma > 0.0) reward = truncated_normal(q_r(j, i), sigma, u);
    }

    if (options.keep_tuples)
      out.trajectory.tuples.push_back(LoggedTuple{t, user, a, consumed, reward, s});
    const double gained = consumed ? reward : 0.0;
    out.realized_value += gained;
    out.step_values.push_back(gained);
    if (options.keep_actions) {
      out.users.push_back(user);
      out.actions.push_back(a);
    }
    if (consumed) {
      s.consume(a);
      if (!checkpoints.empty()) counts(j, i) += 1.0;
    }
    flush_checkpoints(t);
  }
  flush_checkpoints(std::numeric_limits<std::size_t>::max());
  out.trajectory.realized_value = out.realized_value;
  out.final_stock = std::move(s);
  return out;
}

Trajectory run_episode(const EnvironmentSpec& env, const PolicySpec& policy, std::uint64_t seed) {
  EpisodeOptions opts;
  opts.keep_tuples = true;
  return simulate_episode(env, policy, seed, 0, opts).trajectory;
}

Trajectory run_episode(const EnvironmentSpec& env, const PolicySpec& policy, Rng& rng) {
  return run_episode(env, policy, static_cast<std::uint64_t>(rng()));
}

ValueEstimate estimate_policy_value(const EnvironmentSpec& env, const PolicySpec& policy,
                                    std::size_t n_sims, std::uint64_t seed,
                                    const EvaluationOptions& options) {
  if (n_sims < 1) throw std::invalid_argument("n_sims must be >= 1");
  env.validate();
  EpisodeOptions episode_opts;
  episode_opts.checkpoints = options.checkpoints;

  ValueEstimate est;
  est.n_sims = n_sims;
  est.per_timestep_cumulative.assign(env.horizon, 0.0);
  est.episode_values.reserve(n_sims);
  std::size_t depleted = 0;

  // Episodes run in fixed-size chunks and are folded in episode order, so the
  // result is independent of `jobs` and memory stays bounded.
  constexpr std::size_t kChunk = 256;
  std::vector<EpisodeResult> episodes;
  for (std::size_t begin = 0; begin < n_sims; begin += kChunk) {
    const std::size_t count = std::min(kChunk, n_sims - begin);
    episodes.assign(count, EpisodeResult{});
    parallel_for(count, options.jobs, [&](std::size_t i) {
      episodes[i] = simulate_episode(env, policy, seed, begin + i, episode_opts);
    });
    for (const auto& ep : episodes) {
      est.episode_values.push_back(ep.realized_value);
      double running = 0.0;
      for (std::size_t t = 0; t < env.horizon; ++t) {
        if (t < ep.step_values.size()) running += ep.step_values[t];
        est.per_timestep_cumulative[t] += running;
      }
      if (ep.final_stock.depleted()) ++depleted;
      if (est.mean_allocations.empty()) {
        est.mean_allocations = ep.allocations;
      } else {
        for (std::size_t c = 0; c < ep.allocations.size(); ++c)
          est.mean_allocations[c] += ep.allocations[c];
      }
    }
  }
  const double n = static_cast<double>(n_sims);
  for (auto& v : est.per_timestep_cumulative) v /= n;
  for (auto& m : est.mean_allocations) m /= n;
  est.depleted_fraction = static_cast<double>(depleted) / n;

  double sum = 0.0;
  for (double v : est.episode_values) sum += v;
  est.mean = sum / n;
  if (n_sims > 1) {
    double ss = 0.0;
    for (double v : est.episode_values) ss += (v - est.mean) * (v - est.mean);
    est.std_error = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  }
  return est;
}

RelativeValue relative_policy_value(const EnvironmentSpec& env, const PolicySpec& policy_a,
                                    const PolicySpec& policy_b, std::size_t n_sims,
                                    std::uint64_t seed, const EvaluationOptions& options) {
  RelativeValue out;
  out.numerator = estimate_policy_value(env, policy_a, n_sims, seed, options);
  out.denominator = estimate_policy_value(env, policy_b, n_sims, seed, options);
  if (!(out.denominator.mean > 0.0))
    throw std::domain_error("relative value needs a positive denominator estimate");
  out.ratio = out.numerator.mean / out.denominator.mean;
  return out;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
  const auto old_precision = out.precision(17);
  out << "t,user,action,consumed,reward,stock_json\n";
  for (const auto& tup : traj.tuples) {
    out << tup.t << ',' << tup.user << ',' << tup.action << ',' << (tup.consumed ? 1 : 0) << ','
        << tup.reward << ",\"" << format_stock(tup.stock_before) << "\"\n";
  }
  out.precision(old_precision);
}

}  // namespace supplybandit
