#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "marl/attention.h"
#include "marl/gradcheck.h"
#include "marl/runner.h"

namespace py = pybind11;
using namespace marl;

namespace {

py::array_t<double> to_numpy(const Array& a) {
  if (a.shape.size() == 2) {
    py::array_t<double> out({a.shape[0], a.shape[1]});
    std::copy(a.data.begin(), a.data.end(), out.mutable_data());
    return out;
  }
  py::array_t<double> out(static_cast<py::ssize_t>(a.data.size()));
  std::copy(a.data.begin(), a.data.end(), out.mutable_data());
  return out;
}

Array from_numpy(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 2) throw std::invalid_argument("expected a 2-D array");
  Array out({static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1))});
  std::copy(a.data(), a.data() + a.size(), out.data.begin());
  return out;
}

py::dict step_to_dict(const EnvStep& s) {
  py::dict d;
  d["rewards"] = s.rewards;
  d["done"] = s.done;
  d["collisions"] = s.collisions;
  d["captures"] = s.captures;
  d["spawns"] = s.spawns;
  return d;
}

template <class E>
void bind_env_common(py::class_<E>& cls) {
  cls.def("reset", [](E& e, std::uint64_t seed) { e.reset(seed); }, py::arg("seed"))
      .def("step", [](E& e, const std::vector<int>& a) { return step_to_dict(e.step(a)); },
           py::arg("actions"))
      .def("observe", [](const E& e) { return to_numpy(observe_all(e)); })
      .def("positions", [](const E& e) { return e.positions(); })
      .def_property_readonly("n_agents", &E::n_agents)
      .def_property_readonly("obs_dim", &E::obs_dim)
      .def_property_readonly("n_actions", &E::n_actions)
      .def_property_readonly("max_steps", &E::max_steps);
}

}  // namespace

PYBIND11_MODULE(_marl, m) {
  m.doc() = "game-abstraction multi-agent RL lab";

  auto traffic =
      py::class_<TrafficEnv>(m, "TrafficEnv")
          .def(py::init([](const std::string& difficulty, int n_max, double p_arrive, int vision) {
                 TJConfig cfg = TJConfig::preset(difficulty);
                 if (n_max > 0) cfg.n_max = n_max;
                 if (p_arrive >= 0.0) cfg.p_arrive = p_arrive;
                 if (vision >= 0) cfg.vision = vision;
                 cfg.validate();
                 return TrafficEnv(cfg);
               }),
               py::arg("difficulty") = "easy", py::arg("n_max") = 0, py::arg("p_arrive") = -1.0,
               py::arg("vision") = -1)
          .def("agent_active", &TrafficEnv::agent_active, py::arg("agent"));
  bind_env_common(traffic);

  auto pursuit =
      py::class_<PursuitEnv>(m, "PursuitEnv")
          .def(py::init([](int n_adversaries, int n_prey, double shaping) {
                 PPConfig cfg;
                 cfg.n_adversaries = n_adversaries;
                 cfg.n_prey = n_prey;
                 cfg.shaping = shaping;
                 cfg.validate();
                 return PursuitEnv(cfg);
               }),
               py::arg("n_adversaries") = 5, py::arg("n_prey") = 2, py::arg("shaping") = 0.0)
          .def("prey_flee_action", &PursuitEnv::prey_flee_action, py::arg("prey_index"));
  bind_env_common(pursuit);

  py::class_<ExperimentConfig>(m, "ExperimentConfig")
      .def_readonly("algorithm", &ExperimentConfig::algorithm)
      .def_readonly("environment", &ExperimentConfig::environment)
      .def_readonly("difficulty", &ExperimentConfig::difficulty)
      .def_readonly("seeds", &ExperimentConfig::seeds)
      .def_readonly("episodes", &ExperimentConfig::episodes)
      .def_readonly("config_hash", &ExperimentConfig::config_hash);

  m.def("load_config", &ExperimentConfig::load, py::arg("path"));
  m.def(
      "parse_config",
      [](const std::string& text) {
        return ExperimentConfig::from_config(ConfigFile::parse_string(text));
      },
      py::arg("text"));

  py::class_<RunReport>(m, "RunReport")
      .def_readonly("seeds", &RunReport::seeds)
      .def_readonly("per_seed_final", &RunReport::per_seed_final)
      .def_readonly("mean", &RunReport::mean)
      .def_readonly("stddev", &RunReport::stddev)
      .def_readonly("total_env_steps", &RunReport::total_env_steps)
      .def_readonly("completed", &RunReport::completed)
      .def_readonly("run_dir", &RunReport::run_dir);

  m.def("run_experiment", &run_experiment, py::arg("config"), py::arg("run_dir") = "",
        py::call_guard<py::gil_scoped_release>());
  m.def(
      "evaluate_checkpoint",
      [](const ExperimentConfig& cfg, const std::string& ckpt, int episodes, std::uint64_t seed) {
        EvalStats st = evaluate_checkpoint(cfg, ckpt, episodes, seed);
        py::dict d;
        d["success_rate"] = st.success_rate;
        d["mean_reward"] = st.mean_reward;
        d["graph_density"] = st.mean_graph_density;
        d["captures"] = st.mean_captures;
        return d;
      },
      py::arg("config"), py::arg("checkpoint"), py::arg("episodes") = 32, py::arg("seed") = 0);
  m.def("export_attention", &export_attention, py::arg("config"), py::arg("checkpoint"),
        py::arg("out_path"), py::arg("episodes") = 4, py::arg("seed") = 0);

  // two-stage game abstraction over a feature matrix with freshly initialized
  // attention parameters: returns the hard / soft / combined matrices
  m.def(
      "attention_graph",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& features,
         std::uint64_t seed) {
        Array f = from_numpy(features);
        AttentionConfig cfg;
        cfg.pair_hidden = 16;
        cfg.key_dim = 16;
        ParamStore store(seed);
        Graph g(store);
        Rng rng(seed ^ 0x777u);
        AttentionOut out =
            two_stage_forward(g, "attn", cfg, g.tape.constant(f), g.tape.constant(f), f.rows(), rng);
        AgentGraph gr = extract_graph(g.tape, out, f.rows(), 0);
        py::dict d;
        d["hard"] = to_numpy(gr.hard);
        d["soft"] = to_numpy(gr.soft);
        d["combined"] = to_numpy(gr.combined);
        d["density"] = gr.density();
        return d;
      },
      py::arg("features"), py::arg("seed") = 0);

  // finite-difference check over the encoder + attention + head stack
  m.def(
      "grad_check",
      [](std::uint64_t seed) {
        ParamStore store(seed);
        AttentionConfig attn;
        attn.pair_hidden = 8;
        attn.key_dim = 8;
        attn.mode = GumbelMode::Relaxed;
        const int n = 3, B = 2, d = 5;
        Rng data_rng(seed ^ 0xabcdu);
        Array obs({B * n, d});
        for (double& v : obs.data) v = uniform01(data_rng) - 0.5;
        return grad_check(store, [&](Graph& g) {
          Rng rng(seed ^ 0x777u);
          NodeId x = g.tape.constant(obs);
          NodeId h = mlp(g, "enc", MlpSpec{{8}}, x);
          AttentionOut out = two_stage_forward(g, "attn", attn, h, h, n, rng);
          NodeId head = mlp(g, "head", MlpSpec{{1}}, g.tape.concat_cols({h, out.aggregated}));
          return g.tape.sum_all(head);
        });
      },
      py::arg("seed") = 0);
}
