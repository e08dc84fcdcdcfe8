#include "supplybandit/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <memory>

#include <Eigen/Core>
#include <boost/version.hpp>

#include "supplybandit/ingest.hpp"
#include "supplybandit/oracle.hpp"
#include "supplybandit/parallel.hpp"
#include "supplybandit/policies.hpp"
#include "supplybandit/reward.hpp"
#include "supplybandit/sim.hpp"
#include "supplybandit/stats.hpp"

namespace supplybandit {

namespace {

namespace fs = std::filesystem;

enum Stream : std::uint64_t { kWorld = 1, kSupply = 2, kEstimate = 3, kLogging = 4, kEvaluation = 5 };

std::string fmt(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::string sweep_text(const Json& v) {
  if (v.is_null()) return {};
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_float()) return fmt(v.get<double>());
  return v.dump();
}

double ratio(double num, double den) {
  return den > 0.0 ? num / den : std::numeric_limits<double>::quiet_NaN();
}

struct World {
  EnvironmentSpec env;
  bool auto_horizon = false;
};

World build_world(const ExperimentConfig& cfg, std::uint64_t seed, const InteractionDataset* data) {
  const auto& ec = cfg.environment;
  Rng world_rng(derive_seed(seed, {kWorld}));
  std::shared_ptr<const RewardModel> model;
  std::optional<UserPopulation> population;

  switch (ec.source) {
    case EnvironmentSource::synthetic: {
      Matrix features(static_cast<Eigen::Index>(ec.users), static_cast<Eigen::Index>(ec.feature_dim));
      std::normal_distribution<double> normal(0.0, 1.0);
      for (Eigen::Index i = 0; i < features.rows(); ++i)
        for (Eigen::Index j = 0; j < features.cols(); ++j) features(i, j) = normal(world_rng);
      population = UserPopulation::uniform(std::move(features));
      model = std::make_shared<RewardModel>(make_synthetic_model(*population, ec.actions, ec.lambda, world_rng));
      break;
    }
    case EnvironmentSource::table:
      population = UserPopulation::uniform(Matrix::Zero(ec.table.rows(), 1));
      model = std::make_shared<RewardModel>(Matrix::Ones(ec.table.rows(), ec.table.cols()), ec.table);
      break;
    case EnvironmentSource::interactions: {
      const std::size_t users = ec.users == 0 ? data->users() : ec.users;
      const std::size_t items = ec.actions == 0 ? data->items() : ec.actions;
      const auto sample = users == data->users() && items == data->items()
                              ? *data
                              : subsample(*data, users, items, world_rng);
      population = to_population(sample);
      model = std::make_shared<RewardModel>(to_reward_model(sample));
      break;
    }
  }

  World w{EnvironmentSpec{.population = *population, .model = model}};
  if (!ec.stock.empty()) {
    w.env.initial_supply = InventoryState(ec.stock);
  } else {
    Rng supply_rng(derive_seed(seed, {kSupply}));
    w.env.initial_supply = initial_supply(ec.supply_scheme, ec.s_max, *model, *population, supply_rng);
  }
  w.auto_horizon = !ec.horizon.has_value();
  w.env.horizon = ec.horizon ? *ec.horizon : static_cast<std::size_t>(20 * w.env.initial_supply.total());
  w.env.reward_noise_sigma = ec.reward_sigma;
  w.env.noise_kind = ec.noise_kind;
  w.env.arrival = ec.arrival;
  w.env.validate();
  return w;
}

std::shared_ptr<const RewardEstimate> build_estimate(const ExperimentConfig& cfg, const World& w,
                                                     std::uint64_t seed) {
  const auto& model = *w.env.model;
  Rng rng(derive_seed(seed, {kEstimate}));
  switch (cfg.estimator.kind) {
    case EstimatorKind::exact:
      return std::make_shared<RewardEstimate>(exact_estimate(model));
    case EstimatorKind::noise:
      return std::make_shared<RewardEstimate>(noisy_estimate(model, cfg.estimator.sigma, rng));
    case EstimatorKind::ridge:
      break;
  }
  auto logging_estimate =
      std::make_shared<RewardEstimate>(noisy_estimate(model, cfg.logging.noise_sigma, rng));
  const auto& weights = w.env.population.weights();
  const auto logger = make_softmax_logging(logging_estimate, weights, cfg.logging.beta);
  const std::uint64_t log_seed = derive_seed(seed, {kLogging});
  std::vector<Trajectory> dataset;
  dataset.reserve(cfg.logging.episodes);
  EpisodeOptions opts;
  opts.keep_tuples = true;
  for (std::size_t e = 0; e < cfg.logging.episodes; ++e)
    dataset.push_back(simulate_episode(w.env, logger, log_seed, e, opts).trajectory);
  return std::make_shared<RewardEstimate>(ridge_fit(dataset, w.env.population, model.actions(),
                                                    cfg.estimator.penalty, cfg.estimator.target));
}

PolicySpec build_policy(const PolicyConfig& pc, const World& w,
                        const std::shared_ptr<const RewardEstimate>& estimate) {
  const auto& weights = w.env.population.weights();
  switch (pc.kind) {
    case HarnessPolicy::opls:
      return make_opls(estimate, weights, pc.beta);
    case HarnessPolicy::opls_mixed:
      return make_opls_mixed(estimate, weights,
                             partition_by_depletion(w.env.initial_supply, w.env.horizon,
                                                    w.env.model->consumption(), weights));
    case HarnessPolicy::greedy:
    case HarnessPolicy::optimal:
      break;
  }
  return make_greedy(estimate, weights);
}

CellOutcome run_cell(const ExperimentConfig& cfg, const Json& sweep_value, std::uint64_t seed,
                     const InteractionDataset* data, const std::vector<std::size_t>& checkpoints,
                     std::size_t jobs) {
  const World world = build_world(cfg, seed, data);
  const auto estimate = build_estimate(cfg, world, seed);

  CellOutcome cell;
  cell.sweep_value = sweep_value;
  cell.seed = seed;
  cell.horizon = world.env.horizon;
  cell.initial_stock = world.env.initial_supply.stock();

  EvaluationOptions eval_opts;
  eval_opts.jobs = jobs;
  eval_opts.checkpoints = checkpoints;
  const std::uint64_t eval_seed = derive_seed(seed, {kEvaluation});
  const auto& stock = world.env.initial_supply;

  for (const auto& pc : cfg.policies) {
    PolicyOutcome out;
    out.policy = pc.name;
    if (cfg.evaluation.method == EvaluationMethod::enumerate) {
      const auto inst = UnitSupplyInstance::uniform(world.env.model->product());
      if (pc.kind == HarnessPolicy::optimal) {
        out.value = assignment_optimal_value(inst).value;
      } else {
        const PolicySpec spec = build_policy(pc, world, estimate);
        out.value = enumerate_policy_value(inst, [&spec](UserIndex u, const InventoryState& s) {
          Rng unused(0);
          return select_action(spec, u, s, unused);
        });
      }
      out.depleted_fraction = 1.0;
    } else {
      const PolicySpec spec = build_policy(pc, world, estimate);
      auto est = estimate_policy_value(world.env, spec, cfg.evaluation.n_sims, eval_seed, eval_opts);
      out.value = est.mean;
      out.std_error = est.std_error;
      out.depleted_fraction = est.depleted_fraction;
      if (cfg.output.trace) out.trace = std::move(est.per_timestep_cumulative);
      for (auto& counts : est.mean_allocations) {
        Matrix share = counts;
        for (Eigen::Index a = 0; a < share.cols(); ++a) {
          const auto units = stock[static_cast<ActionIndex>(a)];
          share.col(a) = units > 0 ? Vector(share.col(a) / static_cast<double>(units))
                                   : Vector::Zero(share.rows());
        }
        out.shares.push_back(std::move(share));
      }
      if (world.auto_horizon && out.depleted_fraction < 1.0)
        cell.warnings.push_back("seed " + std::to_string(seed) + ", policy " + pc.name +
                                ": stock left at the auto horizon T=" +
                                std::to_string(world.env.horizon) + " in " +
                                fmt(100.0 * (1.0 - out.depleted_fraction)) + "% of episodes");
    }
    cell.policies.push_back(std::move(out));
  }

  const auto greedy = std::find_if(cfg.policies.begin(), cfg.policies.end(),
                                   [](const PolicyConfig& p) { return p.kind == HarnessPolicy::greedy; });
  const auto& base = cell.policies[static_cast<std::size_t>(greedy - cfg.policies.begin())];
  const double base_value = base.value;
  for (auto& p : cell.policies) p.relative_to_greedy = ratio(p.value, base_value);
  return cell;
}

const PolicyOutcome& greedy_outcome(const ExperimentConfig& cfg, const CellOutcome& cell) {
  for (std::size_t i = 0; i < cfg.policies.size(); ++i)
    if (cfg.policies[i].kind == HarnessPolicy::greedy) return cell.policies[i];
  throw std::logic_error("no greedy policy in the config");
}

// Tracks files as they are created so a failed run can remove them.
class OutputSet {
 public:
  explicit OutputSet(fs::path dir) : dir_(std::move(dir)) {}
  ~OutputSet() {
    if (committed_) return;
    std::error_code ec;
    for (const auto& f : files_) fs::remove(dir_ / f, ec);
  }

  std::ofstream open(const std::string& name) {
    std::ofstream out(dir_ / name, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + (dir_ / name).string());
    files_.push_back(name);
    return out;
  }

  void close(std::ofstream& out, const std::string& name) {
    out.close();
    if (!out) throw std::runtime_error("error writing " + (dir_ / name).string());
  }

  void commit() { committed_ = true; }
  const std::vector<fs::path>& files() const { return files_; }
  const fs::path& dir() const { return dir_; }

 private:
  fs::path dir_;
  std::vector<fs::path> files_;
  bool committed_ = false;
};

void write_results(OutputSet& out, const ExperimentConfig& cfg, const ExperimentResult& res) {
  auto f = out.open("results.csv");
  f << "sweep_param,sweep_value,seed,policy,value,std_error,relative_to_greedy\n";
  for (const auto& cell : res.cells)
    for (const auto& p : cell.policies)
      f << res.sweep_parameter << ',' << sweep_text(cell.sweep_value) << ',' << cell.seed << ','
        << p.policy << ',' << fmt(p.value) << ',' << fmt(p.std_error) << ','
        << fmt(p.relative_to_greedy) << '\n';
  out.close(f, "results.csv");

  auto s = out.open("summary.csv");
  s << "sweep_param,sweep_value,policy,n_seeds,mean_value,std_error,mean_relative_to_greedy,"
       "relative_std_error\n";
  const std::size_t per_value = cfg.seeds.count;
  for (std::size_t start = 0; start < res.cells.size(); start += per_value) {
    for (std::size_t p = 0; p < cfg.policies.size(); ++p) {
      std::vector<double> values, relative;
      for (std::size_t c = start; c < start + per_value; ++c) {
        values.push_back(res.cells[c].policies[p].value);
        relative.push_back(res.cells[c].policies[p].relative_to_greedy);
      }
      const auto v = summarize(values);
      const auto r = summarize(relative);
      s << res.sweep_parameter << ',' << sweep_text(res.cells[start].sweep_value) << ','
        << cfg.policies[p].name << ',' << v.n << ',' << fmt(v.mean) << ',' << fmt(v.std_error) << ','
        << fmt(r.mean) << ',' << fmt(r.std_error) << '\n';
    }
  }
  out.close(s, "summary.csv");

  if (cfg.output.trace) {
    auto t = out.open("trace.csv");
    t << "sweep_value,seed,policy,t,cumulative_value,relative_to_greedy\n";
    for (const auto& cell : res.cells) {
      const auto& base = greedy_outcome(cfg, cell);
      for (const auto& p : cell.policies)
        for (std::size_t i = 0; i < p.trace.size(); ++i)
          t << sweep_text(cell.sweep_value) << ',' << cell.seed << ',' << p.policy << ',' << i + 1
            << ',' << fmt(p.trace[i]) << ',' << fmt(ratio(p.trace[i], base.trace[i])) << '\n';
    }
    out.close(t, "trace.csv");
  }

  if (!res.checkpoints.empty()) {
    auto a = out.open("allocation.csv");
    a << "sweep_value,seed,policy,t,user,action,share\n";
    for (const auto& cell : res.cells)
      for (const auto& p : cell.policies)
        for (std::size_t c = 0; c < p.shares.size(); ++c)
          for (Eigen::Index j = 0; j < p.shares[c].rows(); ++j)
            for (Eigen::Index k = 0; k < p.shares[c].cols(); ++k)
              a << sweep_text(cell.sweep_value) << ',' << cell.seed << ',' << p.policy << ','
                << res.checkpoints[c] << ',' << j << ',' << k << ',' << fmt(p.shares[c](j, k)) << '\n';
    out.close(a, "allocation.csv");
  }
}

void write_demo(OutputSet& out, const ExperimentConfig& cfg, const ExperimentResult& res) {
  const std::size_t n_policies = cfg.policies.size();
  const double n = static_cast<double>(res.cells.size());
  std::vector<std::vector<double>> trace(n_policies);
  std::vector<std::vector<Matrix>> shares(n_policies);
  for (const auto& cell : res.cells) {
    for (std::size_t p = 0; p < n_policies; ++p) {
      const auto& po = cell.policies[p];
      if (trace[p].size() < po.trace.size()) trace[p].resize(po.trace.size(), 0.0);
      for (std::size_t t = 0; t < po.trace.size(); ++t) trace[p][t] += po.trace[t] / n;
      if (shares[p].empty())
        for (const auto& m : po.shares) shares[p].push_back(Matrix::Zero(m.rows(), m.cols()));
      for (std::size_t c = 0; c < po.shares.size(); ++c) shares[p][c] += po.shares[c] / n;
    }
  }
  std::size_t greedy = 0;
  while (cfg.policies[greedy].kind != HarnessPolicy::greedy) ++greedy;

  auto t = out.open("demo_trace.csv");
  t << "t,policy,mean_cumulative,relative_to_greedy\n";
  for (std::size_t p = 0; p < n_policies; ++p)
    for (std::size_t i = 0; i < trace[p].size(); ++i)
      t << i + 1 << ',' << cfg.policies[p].name << ',' << fmt(trace[p][i]) << ','
        << fmt(ratio(trace[p][i], trace[greedy][i])) << '\n';
  out.close(t, "demo_trace.csv");

  auto a = out.open("demo_allocation.csv");
  a << "policy,t,user,action,share\n";
  for (std::size_t p = 0; p < n_policies; ++p)
    for (std::size_t c = 0; c < shares[p].size(); ++c)
      for (Eigen::Index j = 0; j < shares[p][c].rows(); ++j)
        for (Eigen::Index k = 0; k < shares[p][c].cols(); ++k)
          a << cfg.policies[p].name << ',' << res.checkpoints[c] << ',' << j << ',' << k << ','
            << fmt(shares[p][c](j, k)) << '\n';
  out.close(a, "demo_allocation.csv");
}

void write_manifest(OutputSet& out, const ExperimentConfig& cfg, const RunOptions& options) {
  Json files = Json::array();
  for (const auto& f : out.files()) files.push_back(f.string());
  files.push_back("manifest.json");
  Json m;
  m["name"] = cfg.name;
  m["config_hash"] = config_hash(cfg.document);
  m["seed_base"] = options.seed.value_or(cfg.seeds.base);
  m["seed_count"] = cfg.seeds.count;
  m["sweep_parameter"] = cfg.sweep.parameter;
  m["files"] = files;
  m["versions"] = {{"supplybandit", SUPPLYBANDIT_VERSION},
                   {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                                 std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                 std::to_string(EIGEN_MINOR_VERSION)},
                   {"boost", BOOST_LIB_VERSION}};
  auto f = out.open("manifest.json");
  f << m.dump(2) << '\n';
  out.close(f, "manifest.json");
}

fs::path output_dir(const ExperimentConfig& cfg, const RunOptions& options) {
  fs::path dir = options.out_dir.value_or(cfg.output.dir);
  fs::create_directories(dir);
  return dir;
}

template <typename Extra>
ExperimentResult run_and_write(const ExperimentConfig& cfg, const RunOptions& options, Extra&& extra) {
  auto res = compute_experiment(cfg, options);
  for (const auto& cell : res.cells)
    for (const auto& w : cell.warnings) std::clog << "supplybandit: warning: " << w << '\n';
  OutputSet out(output_dir(cfg, options));
  write_results(out, cfg, res);
  extra(out, res);
  write_manifest(out, cfg, options);
  out.commit();
  for (const auto& f : out.files()) res.files.push_back(out.dir() / f);
  return res;
}

}  // namespace

std::string config_hash(const Json& doc) {
  std::uint64_t h = 14695981039346656037ULL;
  for (const unsigned char c : doc.dump()) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) out[static_cast<std::size_t>(i)] = digits[h & 0xf];
  return out;
}

ExperimentResult compute_experiment(const ExperimentConfig& cfg, const RunOptions& options) {
  ExperimentResult res;
  res.sweep_parameter = cfg.sweep.parameter;
  res.checkpoints = cfg.output.allocation_checkpoints;
  std::sort(res.checkpoints.begin(), res.checkpoints.end());
  res.checkpoints.erase(std::unique(res.checkpoints.begin(), res.checkpoints.end()), res.checkpoints.end());

  std::vector<ExperimentConfig> variants;
  std::vector<Json> sweep_values;
  if (cfg.sweep.parameter.empty()) {
    variants.push_back(cfg);
    sweep_values.push_back(Json());
  } else {
    for (const auto& v : cfg.sweep.values) {
      variants.push_back(parse_config(with_sweep_value(cfg.document, cfg.sweep.parameter, v), cfg.base_dir));
      sweep_values.push_back(v);
    }
  }

  std::optional<InteractionDataset> data;
  if (cfg.environment.source == EnvironmentSource::interactions)
    data = load_interactions(cfg.environment.ratings_path, cfg.environment.features_path);

  const std::uint64_t base = options.seed.value_or(cfg.seeds.base);
  const std::size_t seeds = cfg.seeds.count;
  const std::size_t n_cells = variants.size() * seeds;
  const std::size_t jobs = std::max<std::size_t>(1, options.jobs);
  const std::size_t inner_jobs = n_cells == 1 ? jobs : 1;

  res.cells.resize(n_cells);
  parallel_for(n_cells, jobs, [&](std::size_t i) {
    const std::size_t v = i / seeds;
    res.cells[i] = run_cell(variants[v], sweep_values[v], base + i % seeds,
                            data ? &*data : nullptr, res.checkpoints, inner_jobs);
  });
  return res;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const RunOptions& options) {
  return run_and_write(cfg, options, [](OutputSet&, const ExperimentResult&) {});
}

ExperimentResult run_small_scale_demo(const ExperimentConfig& cfg, const RunOptions& options) {
  if (!cfg.sweep.parameter.empty())
    throw std::invalid_argument("the demo does not take a sweep");
  return run_and_write(cfg, options, [&cfg](OutputSet& out, const ExperimentResult& res) {
    write_demo(out, cfg, res);
  });
}

}  // namespace supplybandit
