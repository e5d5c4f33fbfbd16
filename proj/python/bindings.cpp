#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <sstream>

#include "cbnn/canprop.hpp"
#include "cbnn/contraction.hpp"
#include "cbnn/harness.hpp"
#include "cbnn/metric.hpp"
#include "cbnn/oracle.hpp"

namespace py = pybind11;
using namespace cbnn;

namespace {

harness::ExperimentConfig config_from_obj(const py::object& obj) {
  if (py::isinstance<py::str>(obj)) {
    return harness::ExperimentConfig::from_json(obj.cast<std::string>());
  }
  // dicts and anything else json-serialisable go through json.dumps
  py::module_ json = py::module_::import("json");
  return harness::ExperimentConfig::from_json(
      json.attr("dumps")(obj).cast<std::string>());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "nearest-neighbour contextual bandits (CBNN) core";

  py::register_exception<ConfigError>(m, "ConfigError");
  py::register_exception<ProtocolError>(m, "ProtocolError");

  py::class_<PhiTable>(m, "PhiTable")
      .def(py::init<int>(), py::arg("horizon"))
      .def("__call__", &PhiTable::operator())
      .def_property_readonly("horizon", &PhiTable::horizon);

  py::class_<Learner>(m, "Learner")
      .def(py::init([](int horizon, int actions, double rho, std::uint64_t seed,
                       bool allow_padding) {
             LearnerOptions opts;
             opts.allow_padding = allow_padding;
             return new Learner(horizon, actions, rho, seed, opts);
           }),
           py::arg("horizon"), py::arg("actions"), py::arg("rho") = 1.0,
           py::arg("seed") = 1, py::arg("allow_padding") = false)
      .def("choose_action", &Learner::choose_action,
           py::arg("observed_parent") = std::nullopt)
      .def("feedback", &Learner::feedback, py::arg("loss"))
      .def("action_distribution", &Learner::action_distribution,
           py::arg("observed_parent") = std::nullopt)
      .def_property_readonly("eta", &Learner::eta)
      .def_property_readonly("trials_done", &Learner::trials_done)
      .def_property_readonly("awaiting_feedback", &Learner::awaiting_feedback)
      .def_property_readonly("horizon", &Learner::horizon)
      .def_property_readonly("num_actions", &Learner::num_actions);

  py::class_<metric::GridQuantiser>(m, "GridQuantiser")
      .def(py::init<int, int>(), py::arg("q"), py::arg("dim"))
      .def("quantise", &metric::GridQuantiser::quantise, py::arg("z"));

  py::class_<metric::MetricStore>(m, "MetricStore")
      .def(py::init([](int dim, const std::string& backend) {
             return new metric::MetricStore(
                 dim, backend == "grid" ? metric::NnBackend::kGridBuckets
                                        : metric::NnBackend::kExactScan);
           }),
           py::arg("dim"), py::arg("backend") = "exact")
      .def("insert", &metric::MetricStore::insert, py::arg("x"), py::arg("trial"))
      .def("query",
           [](const metric::MetricStore& s, const metric::Point& x) {
             const auto r = s.query(x);
             return py::make_tuple(r.point, r.trial, r.distance);
           })
      .def("__len__", &metric::MetricStore::size);

  m.def("default_params", &metric::default_params, py::arg("horizon"),
        py::arg("actions"), py::arg("dim"),
        "grid resolution and rho from the parameter schedule");
  m.def("policy_complexity", &oracle::policy_complexity, py::arg("actions"),
        py::arg("parents"));

  m.def(
      "run_experiment",
      [](const py::object& config) {
        const auto cfg = config_from_obj(config);
        const auto s = harness::run_experiment(cfg);
        py::dict out;
        out["trials"] = s.trials;
        out["learner_cum_loss"] = s.learner_cum_loss;
        out["comparator_cum_loss"] = s.comparator_cum_loss;
        out["final_regret"] = s.final_regret;
        out["phi_comparator"] = s.phi_comparator;
        out["total_learner_seconds"] = s.total_learner_seconds;
        out["resolved_q"] = s.resolved_q;
        out["resolved_rho"] = s.resolved_rho;
        if (s.has_uniform) out["uniform_regret"] = s.uniform_regret;
        if (s.has_best_fixed) out["best_fixed_action"] = s.best_fixed_action;
        return out;
      },
      py::arg("config"), "run a configured experiment; config is a dict or JSON text");

  m.def(
      "verify_suite",
      [](const std::string& name, std::uint64_t seed) {
        std::ostringstream log;
        const bool pass = verify::run_suite(name, seed, log);
        return py::make_tuple(pass, log.str());
      },
      py::arg("name"), py::arg("seed") = 1);

  m.def(
      "bench_timing",
      [](const std::vector<std::int64_t>& trials, int actions, std::uint64_t seed) {
        py::list rows;
        for (const auto& r : harness::bench_timing(trials, actions, seed)) {
          py::dict d;
          d["trials"] = r.trials;
          d["actions"] = r.actions;
          d["median_seconds"] = r.median_seconds;
          d["p99_seconds"] = r.p99_seconds;
          rows.append(d);
        }
        return rows;
      },
      py::arg("trials"), py::arg("actions") = 16, py::arg("seed") = 1);
}
