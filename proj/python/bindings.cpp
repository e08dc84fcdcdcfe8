#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "supplybandit/config.hpp"
#include "supplybandit/experiment.hpp"
#include "supplybandit/oracle.hpp"

namespace py = pybind11;
using namespace supplybandit;

namespace {

Json parse_text(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw py::value_error(std::string("invalid JSON: ") + e.what());
  }
}

RunOptions options(std::optional<std::filesystem::path> out, std::optional<std::uint64_t> seed,
                   std::size_t jobs) {
  if (jobs == 0) throw py::value_error("jobs must be positive");
  RunOptions o;
  o.out_dir = std::move(out);
  o.seed = seed;
  o.jobs = jobs;
  return o;
}

py::dict cell_dict(const CellOutcome& cell) {
  py::list policies;
  for (const auto& p : cell.policies) {
    py::dict d;
    d["policy"] = p.policy;
    d["value"] = p.value;
    d["std_error"] = p.std_error;
    d["relative_to_greedy"] = p.relative_to_greedy;
    d["depleted_fraction"] = p.depleted_fraction;
    policies.append(d);
  }
  py::dict d;
  d["sweep_value"] = cell.sweep_value.is_null() ? py::object(py::none()) : py::str(cell.sweep_value.dump());
  d["seed"] = cell.seed;
  d["horizon"] = cell.horizon;
  d["initial_stock"] = cell.initial_stock;
  d["policies"] = policies;
  d["warnings"] = cell.warnings;
  return d;
}

}  // namespace

PYBIND11_MODULE(_supplybandit, m) {
  m.attr("__version__") = SUPPLYBANDIT_VERSION;

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  m.def("validate_config",
        [](const std::string& text) {
          std::vector<std::pair<std::string, std::string>> out;
          for (const auto& d : validate_config(parse_text(text))) out.emplace_back(d.field, d.message);
          return out;
        },
        py::arg("config_json"), "List of (field, message) problems in a JSON config; empty when valid.");

  m.def("default_demo_config", [] { return default_demo_config().dump(2); });

  m.def("compute",
        [](const std::string& text, std::optional<std::uint64_t> seed, std::size_t jobs) {
          const auto cfg = parse_config(parse_text(text));
          ExperimentResult res;
          {
            py::gil_scoped_release release;
            res = compute_experiment(cfg, options(std::nullopt, seed, jobs));
          }
          py::list cells;
          for (const auto& c : res.cells) cells.append(cell_dict(c));
          return cells;
        },
        py::arg("config_json"), py::arg("seed") = py::none(), py::arg("jobs") = 1);

  m.def("run",
        [](const std::filesystem::path& config, std::optional<std::filesystem::path> out,
           std::optional<std::uint64_t> seed, std::size_t jobs) {
          const auto cfg = load_config(config);
          py::gil_scoped_release release;
          return run_experiment(cfg, options(std::move(out), seed, jobs)).files;
        },
        py::arg("config"), py::arg("out") = py::none(), py::arg("seed") = py::none(),
        py::arg("jobs") = 1, "Run a config file and return the written file paths.");

  m.def("demo",
        [](std::optional<std::filesystem::path> out, std::optional<std::uint64_t> seed, std::size_t jobs) {
          const auto cfg = parse_config(default_demo_config());
          py::gil_scoped_release release;
          return run_small_scale_demo(cfg, options(std::move(out), seed, jobs)).files;
        },
        py::arg("out") = py::none(), py::arg("seed") = py::none(), py::arg("jobs") = 1);

  m.def("greedy_value", [](const Matrix& q) { return enumerate_greedy_value(UnitSupplyInstance::uniform(q)); },
        py::arg("q"), "Greedy value averaged over all arrival orders of a unit-supply J = K table.");
  m.def("greedy_value_closed_form",
        [](const Matrix& q) { return greedy_value_closed_form(UnitSupplyInstance::uniform(q)); }, py::arg("q"));
  m.def("optimal_assignment",
        [](const Matrix& q) {
          const auto a = assignment_optimal_value(UnitSupplyInstance::uniform(q));
          return py::make_tuple(a.value, a.action_for_user);
        },
        py::arg("q"));
  m.def("lower_bound",
        [](const Matrix& q, UserIndex user, std::size_t rank) {
          return theorem1_lower_bound(UnitSupplyInstance::uniform(q), user, rank);
        },
        py::arg("q"), py::arg("user"), py::arg("rank"));
}
