#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "marl/gradcheck.h"
#include "marl/nn.h"
#include "marl/runner.h"

using namespace marl;

namespace {

int cmd_train(const std::string& config_path, const std::string& out_dir) {
  ExperimentConfig cfg = ExperimentConfig::load(config_path);
  RunReport rep = run_experiment(cfg, out_dir);
  std::printf("run_dir=%s mean=%.4f stddev=%.4f env_steps=%ld completed=%d\n",
              rep.run_dir.c_str(), rep.mean, rep.stddev, rep.total_env_steps,
              rep.completed ? 1 : 0);
  return rep.completed ? 0 : 1;
}

int cmd_eval(const std::string& ckpt, const std::string& config_path, int episodes,
             std::uint64_t seed) {
  ExperimentConfig cfg = ExperimentConfig::load(config_path);
  EvalStats st = evaluate_checkpoint(cfg, ckpt, episodes, seed);
  std::printf("success_rate=%.4f mean_reward=%.4f graph_density=%.4f captures=%.4f\n",
              st.success_rate, st.mean_reward, st.mean_graph_density, st.mean_captures);
  return 0;
}

int cmd_export(const std::string& ckpt, const std::string& config_path, const std::string& out,
               int episodes, std::uint64_t seed) {
  ExperimentConfig cfg = ExperimentConfig::load(config_path);
  export_attention(cfg, ckpt, out, episodes, seed);
  std::printf("wrote %s\n", out.c_str());
  return 0;
}

int cmd_gradcheck(std::uint64_t seed) {
  // gate + attention + heads over a random batch; the full differentiable path
  ParamStore store(seed);
  AttentionConfig attn;
  attn.pair_hidden = 8;
  attn.key_dim = 8;
  attn.mode = GumbelMode::Relaxed;
  const int n = 3, B = 2, d = 5;
  Rng data_rng(seed ^ 0xabcdu);
  Array obs({B * n, d});
  for (double& v : obs.data) v = uniform01(data_rng) - 0.5;

  auto loss = [&](Graph& g) {
    Rng rng(seed ^ 0x777u);
    NodeId x = g.tape.constant(obs);
    NodeId h = mlp(g, "enc", MlpSpec{{8}}, x);
    AttentionOut out = two_stage_forward(g, "attn", attn, h, h, n, rng);
    NodeId head = mlp(g, "head", MlpSpec{{1}}, g.tape.concat_cols({h, out.aggregated}));
    return g.tape.sum_all(head);
  };
  double err = grad_check(store, loss);
  std::printf("max_rel_err=%.3e (%s)\n", err, err < 1e-4 ? "ok" : "FAIL");
  return err < 1e-4 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"game-abstraction multi-agent RL lab"};
  app.require_subcommand(1);

  std::string config_path, ckpt_path, out_path, out_dir;
  int episodes = 32;
  std::uint64_t seed = 0;

  auto* train = app.add_subcommand("train", "train an experiment config");
  train->add_option("config", config_path)->required()->check(CLI::ExistingFile);
  train->add_option("--out", out_dir, "override the run directory");

  auto* ev = app.add_subcommand("eval", "greedy evaluation of a checkpoint");
  ev->add_option("checkpoint", ckpt_path)->required()->check(CLI::ExistingFile);
  ev->add_option("config", config_path)->required()->check(CLI::ExistingFile);
  ev->add_option("--episodes", episodes);
  ev->add_option("--seed", seed);

  auto* ex = app.add_subcommand("export-attention", "dump per-step attention graphs as JSONL");
  ex->add_option("checkpoint", ckpt_path)->required()->check(CLI::ExistingFile);
  ex->add_option("config", config_path)->required()->check(CLI::ExistingFile);
  ex->add_option("--out", out_path)->required();
  ex->add_option("--episodes", episodes);
  ex->add_option("--seed", seed);

  auto* gc = app.add_subcommand("grad-check", "finite-difference check of the attention stack");
  gc->add_option("--seed", seed);

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) return cmd_train(config_path, out_dir);
    if (ev->parsed()) return cmd_eval(ckpt_path, config_path, episodes, seed);
    if (ex->parsed()) return cmd_export(ckpt_path, config_path, out_path, episodes, seed);
    if (gc->parsed()) return cmd_gradcheck(seed);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 2;
}
