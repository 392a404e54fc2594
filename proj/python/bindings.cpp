#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "ppoue/advantage.hpp"
#include "ppoue/checkpoint.hpp"
#include "ppoue/envs.hpp"
#include "ppoue/gaussian_policy.hpp"
#include "ppoue/harness.hpp"
#include "ppoue/metrics.hpp"
#include "ppoue/ppo.hpp"
#include "ppoue/ue_gate.hpp"

namespace py = pybind11;
using namespace ppoue;

namespace {

RolloutBuffer buffer_from(const std::vector<double>& rewards, const std::vector<double>& values,
                          const std::vector<bool>& dones) {
  if (rewards.size() != values.size() || rewards.size() != dones.size())
    throw std::invalid_argument("rewards, values and dones must have equal length");
  RolloutBuffer buf;
  for (std::size_t i = 0; i < rewards.size(); ++i) {
    Transition t;
    t.state = Vec::Zero(1);
    t.action = Vec::Zero(1);
    t.reward = rewards[i];
    t.value_estimate = values[i];
    t.done = dones[i];
    buf.push(std::move(t));
  }
  return buf;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "PPO with uncertainty-aware exploration (C++ core)";

  py::register_exception<NumericalFault>(m, "NumericalFault", PyExc_ArithmeticError);

  // gaussian policy
  m.def("log_std_at",
        [](double start, double end, std::uint64_t total, std::uint64_t step) {
          return log_std_at(AnnealSchedule{start, end, total}, step);
        },
        py::arg("start"), py::arg("end"), py::arg("total_steps"), py::arg("step"));
  m.def("log_prob", [](const Vec& mean, const Vec& variance, const Vec& a) {
    return log_prob(DiagonalGaussian(mean, variance), a);
  }, py::arg("mean"), py::arg("variance"), py::arg("action"));
  m.def("sample", [](const Vec& mean, const Vec& variance, std::uint64_t seed) {
    Rng rng(seed);
    return sample(DiagonalGaussian(mean, variance), rng);
  }, py::arg("mean"), py::arg("variance"), py::arg("seed"));

  // advantage
  m.def("compute_advantages",
        [](const std::vector<double>& rewards, const std::vector<double>& values, const std::vector<bool>& dones,
           double gamma, double lam, bool normalize, double bootstrap) {
          const AdvantageResult r =
              compute_advantages(buffer_from(rewards, values, dones), AdvantageConfig{gamma, lam, normalize}, bootstrap);
          return py::make_tuple(r.advantages, r.returns);
        },
        py::arg("rewards"), py::arg("values"), py::arg("dones"), py::arg("gamma") = 0.99, py::arg("lam") = 0.95,
        py::arg("normalize") = true, py::arg("bootstrap_value") = 0.0);

  // ppo
  m.def("clipped_surrogate", &clipped_surrogate, py::arg("rho"), py::arg("advantage"), py::arg("clip") = 0.2);

  // gate
  m.def("action_distance", &action_distance, py::arg("a_prev"), py::arg("a_cur"));
  m.def("action_distance_ratio", &action_distance_ratio, py::arg("a_prev"), py::arg("a_cur"),
        py::arg("denom_guard") = 1e-8);
  m.def("select_threshold", [](const std::vector<double>& r, double u) { return select_threshold(r, u); },
        py::arg("ratios"), py::arg("uncertainty"));
  m.def("gate", [](double r, double tau) { return gate(r, tau) == GateDecision::kExplore ? "explore" : "exploit"; },
        py::arg("ratio"), py::arg("tau"));
  m.def("posterior_uncertainty",
        [](const std::vector<double>& ratios, double tau) {
          ThresholdState st;
          st.tau = tau;
          return posterior_uncertainty(close_interval(st, ratios));
        },
        py::arg("ratios"), py::arg("tau"));

  // environments
  py::class_<Environment>(m, "Environment")
      .def_property_readonly("name", [](const Environment& e) { return e.spec().name; })
      .def_property_readonly("obs_dim", [](const Environment& e) { return e.spec().obs_dim; })
      .def_property_readonly("action_dim", [](const Environment& e) { return e.spec().action_dim; })
      .def_property_readonly("max_episode_steps", [](const Environment& e) { return e.spec().max_episode_steps; })
      .def("reset", &Environment::reset, py::arg("seed"))
      .def("step", [](Environment& e, const Vec& a) {
        const StepResult r = e.step(a);
        return py::make_tuple(r.state, r.reward, r.done);
      }, py::arg("action"));
  m.def("make_environment", &make_environment, py::arg("name"), py::arg("horizon"));
  m.def("environment_names", &environment_names);
  m.def("lqr_optimal_gain", [] { return lqr_optimal_policy(LqrSystem::standard()); });

  // harness
  py::class_<UpdateStats>(m, "UpdateStats")
      .def_readonly("surrogate", &UpdateStats::surrogate)
      .def_readonly("value_loss", &UpdateStats::value_loss)
      .def_readonly("mean_ratio", &UpdateStats::mean_ratio)
      .def_readonly("clip_fraction", &UpdateStats::clip_fraction);

  py::class_<MetricsRow>(m, "MetricsRow")
      .def_readonly("env", &MetricsRow::env)
      .def_readonly("seed", &MetricsRow::seed)
      .def_readonly("U", &MetricsRow::uncertainty)
      .def_readonly("step", &MetricsRow::step)
      .def_readonly("update", &MetricsRow::update)
      .def_readonly("train_return", &MetricsRow::train_return)
      .def_readonly("train_episodes", &MetricsRow::train_episodes)
      .def_readonly("tau", &MetricsRow::tau)
      .def_readonly("pu", &MetricsRow::posterior_uncertainty)
      .def_readonly("explore_fraction", &MetricsRow::explore_fraction)
      .def_readonly("log_std", &MetricsRow::log_std)
      .def_readonly("stats", &MetricsRow::stats);

  py::class_<PpoConfig>(m, "PpoConfig")
      .def(py::init<>())
      .def_readwrite("clip", &PpoConfig::clip)
      .def_readwrite("epochs", &PpoConfig::epochs)
      .def_readwrite("minibatch_size", &PpoConfig::minibatch_size)
      .def_readwrite("value_loss_coeff", &PpoConfig::value_loss_coeff)
      .def_readwrite("max_grad_norm", &PpoConfig::max_grad_norm)
      .def_readwrite("mask_exploit", &PpoConfig::mask_exploit);

  py::class_<ExperimentConfig>(m, "ExperimentConfig")
      .def(py::init<>())
      .def_static("full_profile", &ExperimentConfig::full_profile)
      .def_readwrite("env", &ExperimentConfig::env)
      .def_readwrite("total_steps", &ExperimentConfig::total_steps)
      .def_readwrite("train_horizon", &ExperimentConfig::train_horizon)
      .def_readwrite("test_horizon", &ExperimentConfig::test_horizon)
      .def_readwrite("update_interval", &ExperimentConfig::update_interval)
      .def_readwrite("U", &ExperimentConfig::uncertainty)
      .def_readwrite("seeds", &ExperimentConfig::seeds)
      .def_readwrite("ppo", &ExperimentConfig::ppo)
      .def_readwrite("log_std_start", &ExperimentConfig::log_std_start)
      .def_readwrite("log_std_end", &ExperimentConfig::log_std_end)
      .def_readwrite("hidden", &ExperimentConfig::hidden)
      .def_readwrite("eval_episodes", &ExperimentConfig::eval_episodes)
      .def_readwrite("output_dir", &ExperimentConfig::output_dir)
      .def_readwrite("jobs", &ExperimentConfig::jobs)
      .def("validate", &ExperimentConfig::validate);

  py::class_<EvalReport>(m, "EvalReport")
      .def_readonly("returns", &EvalReport::returns)
      .def_readonly("mean", &EvalReport::mean)
      .def_readonly("stddev", &EvalReport::stddev)
      .def_readonly("horizon", &EvalReport::horizon);

  py::class_<Checkpoint>(m, "Checkpoint")
      .def_readonly("env_name", &Checkpoint::env_name)
      .def_readonly("step", &Checkpoint::step)
      .def_readonly("log_std", &Checkpoint::log_std)
      .def("save", [](const Checkpoint& c, const std::filesystem::path& p) { save_checkpoint(c, p); })
      .def("mean_action", [](const Checkpoint& c, const Vec& s) { return mean_action(c.actor, s); });
  m.def("load_checkpoint", &load_checkpoint, py::arg("path"));

  m.def("train",
        [](const ExperimentConfig& cfg, std::uint64_t seed, bool ablate_gate) {
          TrainResult r;
          {
            py::gil_scoped_release release;
            r = train(cfg, seed, ablate_gate ? GateMode::kAblated : GateMode::kGated);
          }
          return py::make_tuple(r.checkpoint, r.rows, r.fault);
        },
        py::arg("config"), py::arg("seed"), py::arg("ablate_gate") = false);
  m.def("evaluate", &evaluate, py::arg("checkpoint"), py::arg("env"), py::arg("horizon"), py::arg("episodes"),
        py::arg("seed"), py::call_guard<py::gil_scoped_release>());
  m.def("metrics_csv", &metrics_csv, py::arg("rows"));
  m.def("spearman", &spearman, py::arg("x"), py::arg("y"));
  m.def("scheme_name", &scheme_name, py::arg("U"));

#ifdef VERSION_INFO
  m.attr("__version__") = VERSION_INFO;
#else
  m.attr("__version__") = "dev";
#endif
}
