#include <cstdlib>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "supplybandit/config.hpp"
#include "supplybandit/experiment.hpp"

namespace sb = supplybandit;

namespace {

constexpr int kOk = 0;
constexpr int kRuntimeError = 1;
constexpr int kConfigError = 2;

void print_diagnostics(const std::vector<sb::Diagnostic>& diags) {
  for (const auto& d : diags) std::cerr << "  " << d.field << ": " << d.message << '\n';
}

// Environment first, flags on top.
sb::RunOptions resolve_options(const std::string& out, std::size_t jobs, bool jobs_set,
                               const std::optional<std::uint64_t>& seed) {
  sb::RunOptions opts;
  if (const char* env = std::getenv("SUPPLYBANDIT_OUT"); env && *env) opts.out_dir = env;
  if (const char* env = std::getenv("SUPPLYBANDIT_JOBS"); env && *env) {
    try {
      opts.jobs = std::stoul(env);
    } catch (const std::exception&) {
      throw std::invalid_argument(std::string("SUPPLYBANDIT_JOBS is not a number: ") + env);
    }
  }
  if (!out.empty()) opts.out_dir = out;
  if (jobs_set) opts.jobs = jobs;
  opts.seed = seed;
  return opts;
}

void report(const sb::ExperimentResult& res) {
  for (const auto& f : res.files) std::cout << f.string() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Supply-constrained recommendation experiments"};
  app.set_version_flag("--version", std::string(SUPPLYBANDIT_VERSION));
  app.require_subcommand(1);

  std::string config_path, out_dir;
  std::size_t jobs = 1;
  std::uint64_t seed = 0;

  auto* run = app.add_subcommand("run", "Run an experiment config and write CSV results");
  run->add_option("--config", config_path, "Experiment config (JSON)")->required();
  auto* validate = app.add_subcommand("validate", "Check a config and list every problem");
  validate->add_option("--config", config_path, "Experiment config (JSON)")->required();
  auto* demo = app.add_subcommand("demo", "Small-scale demonstration (3 users, 5 actions)");
  demo->add_option("--config", config_path, "Override the built-in demo config");

  CLI::Option* jobs_opts[2]{};
  CLI::Option* seed_opts[2]{};
  int i = 0;
  for (auto* sub : {run, demo}) {
    sub->add_option("--out", out_dir, "Output directory");
    jobs_opts[i] = sub->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
    seed_opts[i] = sub->add_option("--seed", seed, "Base seed");
    ++i;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kConfigError;
  }
  const bool jobs_set = jobs_opts[0]->count() + jobs_opts[1]->count() > 0;
  const bool seed_set = seed_opts[0]->count() + seed_opts[1]->count() > 0;
  const std::optional<std::uint64_t> seed_override = seed_set ? std::optional(seed) : std::nullopt;

  try {
    if (*validate) {
      const auto diags = sb::validate_config_file(config_path);
      if (diags.empty()) {
        std::cout << config_path << ": ok\n";
        return kOk;
      }
      std::cerr << config_path << ": " << diags.size() << " problem(s)\n";
      print_diagnostics(diags);
      return kConfigError;
    }
    const auto opts = resolve_options(out_dir, jobs, jobs_set, seed_override);
    if (*run) {
      report(sb::run_experiment(sb::load_config(config_path), opts));
    } else {
      const auto cfg = config_path.empty() ? sb::parse_config(sb::default_demo_config())
                                           : sb::load_config(config_path);
      report(sb::run_small_scale_demo(cfg, opts));
    }
    return kOk;
  } catch (const sb::ConfigError& e) {
    std::cerr << "invalid config\n";
    print_diagnostics(e.diagnostics());
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
}
