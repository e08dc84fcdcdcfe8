#include "supplybandit/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace supplybandit {

namespace {

std::string join(const std::string& path, std::string_view key) {
  return path.empty() ? std::string(key) : path + "." + std::string(key);
}

std::string summarize(const std::vector<Diagnostic>& diags) {
  std::ostringstream os;
  os << "invalid config:";
  for (const auto& d : diags) os << "\n  " << d.field << ": " << d.message;
  return os.str();
}

template <typename E>
using Choices = std::vector<std::pair<std::string, E>>;

template <typename E>
std::string choice_list(const Choices<E>& choices) {
  std::string out;
  for (const auto& [name, value] : choices) out += (out.empty() ? "" : ", ") + name;
  return out;
}

// Walks one document, filling an ExperimentConfig and collecting diagnostics.
class Reader {
 public:
  explicit Reader(std::vector<Diagnostic>& diags) : diags_(diags) {}

  void error(const std::string& field, const std::string& message) {
    diags_.push_back({field, message});
  }

  // True when `j` is an object; unknown keys are reported.
  bool object(const Json& j, const std::string& path, std::initializer_list<std::string_view> keys) {
    if (!j.is_object()) {
      error(path.empty() ? "<root>" : path, "expected an object");
      return false;
    }
    for (const auto& [key, value] : j.items()) {
      if (std::find(keys.begin(), keys.end(), key) == keys.end())
        error(join(path, key), "unknown field");
    }
    return true;
  }

  void real(const Json& obj, const std::string& path, const char* key, double& out,
            double lo = -std::numeric_limits<double>::infinity(),
            double hi = std::numeric_limits<double>::infinity(), bool lo_open = false) {
    const auto it = obj.find(key);
    if (it == obj.end()) return;
    const auto field = join(path, key);
    if (!it->is_number()) return error(field, "expected a number");
    const double v = it->get<double>();
    if (!std::isfinite(v)) return error(field, "must be finite");
    if (v < lo || v > hi || (lo_open && v == lo)) {
      std::ostringstream os;
      os << "value " << v << " out of range " << (lo_open ? "(" : "[") << lo << ", " << hi << "]";
      return error(field, os.str());
    }
    out = v;
  }

  template <typename T>
  void integer(const Json& obj, const std::string& path, const char* key, T& out, long long lo) {
    const auto it = obj.find(key);
    if (it == obj.end()) return;
    const auto field = join(path, key);
    if (!it->is_number_integer()) return error(field, "expected an integer");
    const auto v = it->get<long long>();
    if (v < lo) return error(field, "value " + std::to_string(v) + " must be >= " + std::to_string(lo));
    out = static_cast<T>(v);
  }

  void boolean(const Json& obj, const std::string& path, const char* key, bool& out) {
    const auto it = obj.find(key);
    if (it == obj.end()) return;
    if (!it->is_boolean()) return error(join(path, key), "expected true or false");
    out = it->get<bool>();
  }

  void text(const Json& obj, const std::string& path, const char* key, std::string& out) {
    const auto it = obj.find(key);
    if (it == obj.end()) return;
    if (!it->is_string()) return error(join(path, key), "expected a string");
    out = it->get<std::string>();
  }

  template <typename E>
  bool choice(const Json& obj, const std::string& path, const char* key, E& out,
              const Choices<E>& choices) {
    const auto it = obj.find(key);
    if (it == obj.end()) return true;
    const auto field = join(path, key);
    if (!it->is_string()) {
      error(field, "expected one of: " + choice_list(choices));
      return false;
    }
    const auto name = it->get<std::string>();
    for (const auto& [candidate, value] : choices) {
      if (candidate == name) {
        out = value;
        return true;
      }
    }
    error(field, "unknown value '" + name + "'; expected one of: " + choice_list(choices));
    return false;
  }

 private:
  std::vector<Diagnostic>& diags_;
};

const Choices<EnvironmentSource> kSources = {{"synthetic", EnvironmentSource::synthetic},
                                             {"table", EnvironmentSource::table},
                                             {"interactions", EnvironmentSource::interactions}};
const Choices<SupplyScheme> kSchemes = {{"proportional", SupplyScheme::proportional},
                                        {"inverse_proportional", SupplyScheme::inverse_proportional},
                                        {"random", SupplyScheme::random}};
const Choices<ArrivalMode> kArrivals = {{"iid", ArrivalMode::iid},
                                        {"permutation", ArrivalMode::permutation}};
const Choices<RewardNoise> kNoise = {{"normal", RewardNoise::normal},
                                     {"truncated_normal", RewardNoise::truncated_normal}};
const Choices<EstimatorKind> kEstimators = {{"exact", EstimatorKind::exact},
                                            {"noise", EstimatorKind::noise},
                                            {"ridge", EstimatorKind::ridge}};
const Choices<RidgeTarget> kTargets = {{"product", RidgeTarget::product},
                                       {"reward", RidgeTarget::reward}};
const Choices<EvaluationMethod> kMethods = {{"monte_carlo", EvaluationMethod::monte_carlo},
                                            {"enumerate", EvaluationMethod::enumerate}};
const Choices<HarnessPolicy> kPolicies = {{"greedy", HarnessPolicy::greedy},
                                          {"opls", HarnessPolicy::opls},
                                          {"opls_mixed", HarnessPolicy::opls_mixed},
                                          {"optimal", HarnessPolicy::optimal}};

void read_environment(Reader& r, const Json& env, EnvironmentConfig& out,
                      const std::filesystem::path& base_dir) {
  const std::string path = "environment";
  if (!r.object(env, path,
                {"source", "users", "actions", "feature_dim", "lambda", "supply", "horizon",
                 "arrival", "reward_noise", "table", "interactions"}))
    return;
  r.choice(env, path, "source", out.source, kSources);
  if (out.source == EnvironmentSource::interactions) {
    out.users = 0;
    out.actions = 0;
  }
  const long long min_size = out.source == EnvironmentSource::interactions ? 0 : 1;
  r.integer(env, path, "users", out.users, min_size);
  r.integer(env, path, "actions", out.actions, min_size);
  r.integer(env, path, "feature_dim", out.feature_dim, 1);
  r.real(env, path, "lambda", out.lambda, 0.0, 1.0);

  if (const auto it = env.find("supply"); it != env.end()) {
    const std::string sp = "environment.supply";
    if (r.object(*it, sp, {"scheme", "s_max", "stock"})) {
      r.choice(*it, sp, "scheme", out.supply_scheme, kSchemes);
      r.integer(*it, sp, "s_max", out.s_max, 1);
      if (const auto st = it->find("stock"); st != it->end()) {
        if (!st->is_array() || st->empty()) {
          r.error(sp + ".stock", "expected a non-empty array of nonnegative integers");
        } else {
          out.stock.clear();
          for (std::size_t i = 0; i < st->size(); ++i) {
            const auto& v = (*st)[i];
            if (!v.is_number_integer() || v.get<long long>() < 0) {
              r.error(sp + ".stock[" + std::to_string(i) + "]", "expected a nonnegative integer");
              continue;
            }
            out.stock.push_back(v.get<std::int64_t>());
          }
          if (std::all_of(out.stock.begin(), out.stock.end(), [](auto v) { return v == 0; }))
            r.error(sp + ".stock", "at least one action needs positive stock");
        }
      }
    }
  }

  if (const auto it = env.find("horizon"); it != env.end()) {
    if (it->is_string() && it->get<std::string>() == "auto") {
      out.horizon.reset();
    } else if (it->is_number_integer() && it->get<long long>() >= 1) {
      out.horizon = it->get<std::size_t>();
    } else {
      r.error("environment.horizon", "expected \"auto\" or an integer >= 1");
    }
  }
  r.choice(env, path, "arrival", out.arrival, kArrivals);

  if (const auto it = env.find("reward_noise"); it != env.end()) {
    const std::string np = "environment.reward_noise";
    if (r.object(*it, np, {"kind", "sigma"})) {
      r.choice(*it, np, "kind", out.noise_kind, kNoise);
      r.real(*it, np, "sigma", out.reward_sigma, 0.0);
    }
  }

  if (const auto it = env.find("table"); it != env.end()) {
    const std::string tp = "environment.table";
    if (r.object(*it, tp, {"q", "labels"})) {
      const auto q = it->find("q");
      if (q == it->end() || !q->is_array() || q->empty() || !(*q)[0].is_array() || (*q)[0].empty()) {
        r.error(tp + ".q", "expected a non-empty array of rows");
      } else {
        const auto rows = q->size();
        const auto cols = (*q)[0].size();
        out.table = Matrix::Zero(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
        for (std::size_t i = 0; i < rows; ++i) {
          const auto& row = (*q)[i];
          const std::string rp = tp + ".q[" + std::to_string(i) + "]";
          if (!row.is_array() || row.size() != cols) {
            r.error(rp, "every row needs " + std::to_string(cols) + " entries");
            continue;
          }
          for (std::size_t k = 0; k < cols; ++k) {
            if (!row[k].is_number() || !std::isfinite(row[k].get<double>()) || row[k].get<double>() < 0.0) {
              r.error(rp + "[" + std::to_string(k) + "]", "expected a finite number >= 0");
              continue;
            }
            out.table(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = row[k].get<double>();
          }
        }
      }
      if (const auto lb = it->find("labels"); lb != it->end()) {
        if (!lb->is_array() || !std::all_of(lb->begin(), lb->end(), [](const Json& v) { return v.is_string(); })) {
          r.error(tp + ".labels", "expected an array of strings");
        } else {
          out.labels = lb->get<std::vector<std::string>>();
        }
      }
    }
  }

  if (const auto it = env.find("interactions"); it != env.end()) {
    const std::string ip = "environment.interactions";
    if (r.object(*it, ip, {"ratings", "features"})) {
      std::string ratings, features;
      r.text(*it, ip, "ratings", ratings);
      r.text(*it, ip, "features", features);
      auto resolve = [&](const std::string& p) -> std::filesystem::path {
        if (p.empty()) return {};
        std::filesystem::path fp(p);
        return fp.is_absolute() || base_dir.empty() ? fp : base_dir / fp;
      };
      out.ratings_path = resolve(ratings);
      out.features_path = resolve(features);
    }
  }
}

void cross_check(Reader& r, const ExperimentConfig& cfg, const Json& doc) {
  const auto& env = cfg.environment;
  const bool table = env.source == EnvironmentSource::table;
  if (table) {
    if (env.table.size() == 0) {
      if (!doc.contains("environment") || !doc["environment"].contains("table"))
        r.error("environment.table", "the table source needs environment.table.q");
    } else {
      const auto& e = doc["environment"];
      if (e.contains("users") && env.users != static_cast<std::size_t>(env.table.rows()))
        r.error("environment.users", "does not match the number of table rows");
      if (e.contains("actions") && env.actions != static_cast<std::size_t>(env.table.cols()))
        r.error("environment.actions", "does not match the number of table columns");
      if (!env.labels.empty() && env.labels.size() != static_cast<std::size_t>(env.table.cols()))
        r.error("environment.table.labels", "needs one label per table column");
    }
  } else if (doc.contains("environment") && doc["environment"].contains("table")) {
    r.error("environment.table", "only used with source \"table\"");
  }
  if (env.source == EnvironmentSource::interactions &&
      (env.ratings_path.empty() || env.features_path.empty()))
    r.error("environment.interactions", "the interactions source needs ratings and features paths");

  const std::size_t actions = table && env.table.size() ? static_cast<std::size_t>(env.table.cols())
                                                        : env.actions;
  const std::size_t users = table && env.table.size() ? static_cast<std::size_t>(env.table.rows())
                                                      : env.users;
  if (!env.stock.empty() && actions != 0 && env.stock.size() != actions)
    r.error("environment.supply.stock", "needs one entry per action (" + std::to_string(actions) + ")");

  if (cfg.estimator.kind == EstimatorKind::ridge && !cfg.has_logging_block)
    r.error("estimator.kind", "ridge needs a logged dataset source: add a logging block");

  bool has_greedy = false;
  std::set<std::string> names;
  for (std::size_t i = 0; i < cfg.policies.size(); ++i) {
    const auto& p = cfg.policies[i];
    has_greedy = has_greedy || p.kind == HarnessPolicy::greedy;
    if (!names.insert(p.name).second)
      r.error("policies[" + std::to_string(i) + "].name", "duplicate policy name '" + p.name + "'");
    if (p.kind == HarnessPolicy::optimal && cfg.evaluation.method != EvaluationMethod::enumerate)
      r.error("policies[" + std::to_string(i) + "].kind",
              "optimal is only available with evaluation.method \"enumerate\"");
  }
  if (cfg.policies.empty()) r.error("policies", "at least one policy is required");
  else if (!has_greedy) r.error("policies", "a greedy policy is required as the relative-value baseline");

  if (cfg.evaluation.method == EvaluationMethod::enumerate) {
    const std::string f = "evaluation.method";
    if (env.source == EnvironmentSource::synthetic)
      r.error(f, "enumerate needs certain consumption (table or interactions source)");
    if (users != actions || users == 0 || users > 8)
      r.error(f, "enumerate needs as many users as actions, at most 8");
    const bool unit_stock =
        env.stock.empty()
            ? env.s_max == 1 && env.supply_scheme != SupplyScheme::inverse_proportional
            : std::all_of(env.stock.begin(), env.stock.end(), [](auto v) { return v == 1; });
    if (!unit_stock) r.error(f, "enumerate needs exactly one unit of every action");
    if (env.arrival != ArrivalMode::permutation)
      r.error(f, "enumerate needs environment.arrival \"permutation\"");
    if (cfg.estimator.kind == EstimatorKind::ridge)
      r.error(f, "enumerate does not support the ridge estimator");
  }

  if (cfg.output.trace && cfg.evaluation.method == EvaluationMethod::enumerate)
    r.error("output.trace", "not available with evaluation.method \"enumerate\"");
  if (!cfg.output.allocation_checkpoints.empty() && cfg.evaluation.method == EvaluationMethod::enumerate)
    r.error("output.allocation_checkpoints", "not available with evaluation.method \"enumerate\"");
}

ExperimentConfig read_document(const Json& doc, const std::filesystem::path& base_dir,
                               std::vector<Diagnostic>& diags, bool allow_sweep) {
  Reader r(diags);
  ExperimentConfig cfg;
  if (!r.object(doc, "",
                {"name", "environment", "estimator", "logging", "policies", "evaluation", "sweep",
                 "seeds", "output"}))
    return cfg;
  r.text(doc, "", "name", cfg.name);

  if (const auto it = doc.find("environment"); it != doc.end())
    read_environment(r, *it, cfg.environment, base_dir);

  if (const auto it = doc.find("estimator"); it != doc.end()) {
    if (r.object(*it, "estimator", {"kind", "sigma", "penalty", "target"})) {
      r.choice(*it, "estimator", "kind", cfg.estimator.kind, kEstimators);
      r.real(*it, "estimator", "sigma", cfg.estimator.sigma, 0.0);
      r.real(*it, "estimator", "penalty", cfg.estimator.penalty, 0.0,
             std::numeric_limits<double>::infinity(), true);
      r.choice(*it, "estimator", "target", cfg.estimator.target, kTargets);
    }
  }

  if (const auto it = doc.find("logging"); it != doc.end()) {
    cfg.has_logging_block = true;
    if (r.object(*it, "logging", {"beta", "noise_sigma", "episodes"})) {
      r.real(*it, "logging", "beta", cfg.logging.beta);
      r.real(*it, "logging", "noise_sigma", cfg.logging.noise_sigma, 0.0);
      r.integer(*it, "logging", "episodes", cfg.logging.episodes, 1);
    }
  }

  if (const auto it = doc.find("policies"); it != doc.end()) {
    if (!it->is_array()) {
      r.error("policies", "expected an array of policy objects");
    } else {
      for (std::size_t i = 0; i < it->size(); ++i) {
        const std::string pp = "policies[" + std::to_string(i) + "]";
        const auto& entry = (*it)[i];
        if (!r.object(entry, pp, {"kind", "beta", "name"})) continue;
        PolicyConfig p;
        if (!entry.contains("kind")) {
          r.error(pp + ".kind", "missing policy kind");
          continue;
        }
        if (!r.choice(entry, pp, "kind", p.kind, kPolicies)) continue;
        r.real(entry, pp, "beta", p.beta, 0.0, 1.0);
        if (entry.contains("beta") && p.kind != HarnessPolicy::opls)
          r.error(pp + ".beta", "only opls takes a fairness beta");
        p.name = to_string(p.kind);
        r.text(entry, pp, "name", p.name);
        cfg.policies.push_back(std::move(p));
      }
    }
  } else {
    cfg.policies = {{"greedy", HarnessPolicy::greedy, 1.0}, {"opls", HarnessPolicy::opls, 1.0}};
  }

  if (const auto it = doc.find("evaluation"); it != doc.end()) {
    if (r.object(*it, "evaluation", {"method", "n_sims"})) {
      r.choice(*it, "evaluation", "method", cfg.evaluation.method, kMethods);
      r.integer(*it, "evaluation", "n_sims", cfg.evaluation.n_sims, 1);
    }
  }

  if (const auto it = doc.find("seeds"); it != doc.end()) {
    if (r.object(*it, "seeds", {"count", "base"})) {
      r.integer(*it, "seeds", "count", cfg.seeds.count, 1);
      if (const auto b = it->find("base"); b != it->end()) {
        if (b->is_number_unsigned()) cfg.seeds.base = b->get<std::uint64_t>();
        else if (b->is_number_integer() && b->get<long long>() >= 0) cfg.seeds.base = b->get<std::uint64_t>();
        else r.error("seeds.base", "expected a nonnegative integer");
      }
    }
  }

  if (const auto it = doc.find("output"); it != doc.end()) {
    if (r.object(*it, "output", {"dir", "trace", "allocation_checkpoints"})) {
      std::string dir = cfg.output.dir.string();
      r.text(*it, "output", "dir", dir);
      cfg.output.dir = dir;
      r.boolean(*it, "output", "trace", cfg.output.trace);
      if (const auto cp = it->find("allocation_checkpoints"); cp != it->end()) {
        if (!cp->is_array() ||
            !std::all_of(cp->begin(), cp->end(),
                         [](const Json& v) { return v.is_number_integer() && v.get<long long>() >= 1; }))
          r.error("output.allocation_checkpoints", "expected an array of integers >= 1");
        else
          cfg.output.allocation_checkpoints = cp->get<std::vector<std::size_t>>();
      }
    }
  }

  if (const auto it = doc.find("sweep"); it != doc.end()) {
    if (!allow_sweep) {
      r.error("sweep", "nested sweeps are not supported");
    } else if (r.object(*it, "sweep", {"parameter", "values"})) {
      r.text(*it, "sweep", "parameter", cfg.sweep.parameter);
      const auto& allowed = sweepable_parameters();
      if (std::find(allowed.begin(), allowed.end(), cfg.sweep.parameter) == allowed.end()) {
        std::string list;
        for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
        r.error("sweep.parameter", "'" + cfg.sweep.parameter + "' cannot be swept; expected one of: " + list);
      }
      const auto values = it->find("values");
      if (values == it->end() || !values->is_array() || values->empty())
        r.error("sweep.values", "expected a non-empty array");
      else
        cfg.sweep.values.assign(values->begin(), values->end());
    }
  }

  cross_check(r, cfg, doc);
  cfg.document = doc;
  cfg.base_dir = base_dir;
  return cfg;
}

Json parse_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config file " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw std::runtime_error("config file " + path.string() + " is not valid JSON: " + e.what());
  }
}

}  // namespace

ConfigError::ConfigError(std::vector<Diagnostic> diagnostics)
    : std::runtime_error(summarize(diagnostics)), diagnostics_(std::move(diagnostics)) {}

std::string to_string(EnvironmentSource s) {
  for (const auto& [name, v] : kSources)
    if (v == s) return name;
  return "unknown";
}
std::string to_string(EstimatorKind k) {
  for (const auto& [name, v] : kEstimators)
    if (v == k) return name;
  return "unknown";
}
std::string to_string(EvaluationMethod m) {
  for (const auto& [name, v] : kMethods)
    if (v == m) return name;
  return "unknown";
}
std::string to_string(HarnessPolicy p) {
  for (const auto& [name, v] : kPolicies)
    if (v == p) return name;
  return "unknown";
}

const std::vector<std::string>& sweepable_parameters() {
  static const std::vector<std::string> params = {
      "environment.lambda",        "environment.users",         "environment.actions",
      "environment.supply.s_max",  "environment.supply.scheme", "environment.horizon",
      "environment.reward_noise.sigma", "estimator.sigma",      "estimator.penalty",
      "logging.beta"};
  return params;
}

Json with_sweep_value(const Json& doc, const std::string& parameter, const Json& value) {
  Json out = doc;
  out.erase("sweep");
  std::string pointer = "/" + parameter;
  std::replace(pointer.begin(), pointer.end(), '.', '/');
  out[Json::json_pointer(pointer)] = value;
  return out;
}

std::vector<Diagnostic> validate_config(const Json& doc, const std::filesystem::path& base_dir) {
  std::vector<Diagnostic> diags;
  const ExperimentConfig cfg = read_document(doc, base_dir, diags, true);
  if (!diags.empty() || cfg.sweep.parameter.empty()) return diags;
  for (std::size_t i = 0; i < cfg.sweep.values.size(); ++i) {
    std::vector<Diagnostic> cell;
    read_document(with_sweep_value(doc, cfg.sweep.parameter, cfg.sweep.values[i]), base_dir, cell, false);
    for (const auto& d : cell)
      diags.push_back({"sweep.values[" + std::to_string(i) + "]", d.field + ": " + d.message});
  }
  return diags;
}

std::vector<Diagnostic> validate_config_file(const std::filesystem::path& path) {
  return validate_config(parse_file(path), path.parent_path());
}

ExperimentConfig parse_config(const Json& doc, const std::filesystem::path& base_dir) {
  auto diags = validate_config(doc, base_dir);
  if (!diags.empty()) throw ConfigError(std::move(diags));
  std::vector<Diagnostic> unused;
  return read_document(doc, base_dir, unused, true);
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  return parse_config(parse_file(path), path.parent_path());
}

Json default_demo_config() {
  return Json::parse(R"({
    "name": "small_scale_demo",
    "environment": {
      "source": "table",
      "table": {
        "q": [[0.799, 1.011, 1.047, 2.521, 3.046],
              [0.329, 0.494, 1.683, 2.092, 2.589],
              [1.287, 1.718, 1.984, 2.932, 3.369]]
      },
      "supply": {"scheme": "random", "s_max": 10},
      "horizon": 60,
      "arrival": "iid",
      "reward_noise": {"kind": "normal", "sigma": 0.0}
    },
    "policies": [{"kind": "greedy"}, {"kind": "opls"}],
    "evaluation": {"method": "monte_carlo", "n_sims": 1},
    "seeds": {"count": 100, "base": 0},
    "output": {"dir": "results/demo", "trace": true, "allocation_checkpoints": [10, 30, 60]}
  })");
}

}  // namespace supplybandit
