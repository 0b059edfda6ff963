#include "marl/runner.h"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "marl/checkpoint.h"

namespace marl {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::uint64_t seed_base(int seed) { return 0x100000001b3ull * static_cast<std::uint64_t>(seed + 1); }

void append_metrics(std::ofstream& out, int episode, long env_steps, int seed, double success,
                    double mean_reward, double density, double policy_loss, double value_loss,
                    double entropy) {
  json row = {
      {"episode", episode},         {"env_steps", env_steps},   {"seed", seed},
      {"success_rate", success},    {"mean_reward", mean_reward}, {"graph_density", density},
      {"policy_loss", policy_loss}, {"value_loss", value_loss}, {"entropy", entropy},
  };
  out << row.dump() << "\n";
  out.flush();
}

void atomic_save(const std::string& path, const std::map<std::string, const ParamStore*>& stores,
                 std::uint64_t hash) {
  std::string tmp = path + ".tmp";
  checkpoint::save(tmp, stores, hash);
  fs::rename(tmp, path);
}

struct SeedResult {
  double final_metric = 0.0;
  long env_steps = 0;
  bool completed = false;
};

SeedResult run_comm_seed(const ExperimentConfig& config, int seed, const fs::path& dir) {
  fs::create_directories(dir / "checkpoints");
  std::ofstream metrics(dir / "metrics.jsonl");
  std::uint64_t base = seed_base(seed);

  TJConfig tj_now = config.environment == "traffic-junction" ? config.env_at_episode(0) : TJConfig{};
  std::unique_ptr<Env> proto;
  if (config.environment == "traffic-junction") proto = std::make_unique<TrafficEnv>(tj_now);
  else proto = config.make_env();

  CommPolicy policy(config.comm, proto->obs_dim(), proto->n_agents(), proto->n_actions(), base);
  Adam opt(config.comm.lr);

  int batch = std::max(1, config.comm.batch_episodes);
  std::vector<std::unique_ptr<Env>> envs;
  for (int b = 0; b < batch; ++b) envs.push_back(proto->clone());

  SeedResult res;
  int episode = 0;
  double final_metric = 0.0;
  bool target_hit = false;

  int last_logged = -1;
  auto do_eval = [&](int ep, const TrainStats& ts) {
    EvalStats st = policy.evaluate(*proto, config.eval_episodes, base ^ 0xe7a1u);
    append_metrics(metrics, ep, res.env_steps, seed, st.success_rate, st.mean_reward,
                   st.mean_graph_density, ts.policy_loss, ts.baseline_loss, ts.entropy);
    last_logged = ep;
    final_metric = config.environment == "traffic-junction" ? st.success_rate : st.mean_reward;
    return st;
  };

  if (config.episodes == 0) {
    do_eval(0, {});
    res.completed = true;
  }

  int next_eval = config.eval_interval;
  int next_ckpt = config.checkpoint_interval;
  while (episode < config.episodes) {
    if (config.max_env_steps > 0 && res.env_steps >= config.max_env_steps) break;
    if (config.environment == "traffic-junction" && !config.curriculum.empty()) {
      TJConfig want = config.env_at_episode(episode);
      if (want.n_max != tj_now.n_max || want.p_arrive != tj_now.p_arrive) {
        tj_now = want;
        proto = std::make_unique<TrafficEnv>(tj_now);
        envs.clear();
        for (int b = 0; b < batch; ++b) envs.push_back(proto->clone());
        policy.n_agents = proto->n_agents();
      }
    }
    std::uint64_t update_seed = base + 0x9e37u * static_cast<std::uint64_t>(episode + 1);
    TrainStats ts = policy.train_batch(envs, update_seed, opt);
    episode += batch;
    res.env_steps += static_cast<long>(batch) * proto->max_steps();
    if (config.eval_interval > 0 && episode >= next_eval) {
      next_eval += config.eval_interval;
      EvalStats st = do_eval(episode, ts);
      if (config.target_success > 0.0 && st.success_rate >= config.target_success) {
        target_hit = true;
        break;
      }
    }
    if (config.checkpoint_interval > 0 && episode >= next_ckpt) {
      next_ckpt += config.checkpoint_interval;
      atomic_save((dir / "checkpoints" / "latest.json").string(), {{"policy", &policy.params}},
                  config.config_hash);
    }
  }
  if (config.episodes > 0 && last_logged != episode) do_eval(episode, {});
  atomic_save((dir / "checkpoints" / "final.json").string(), {{"policy", &policy.params}},
              config.config_hash);
  res.final_metric = final_metric;
  res.completed = target_hit || episode >= config.episodes ||
                  (config.max_env_steps > 0 && res.env_steps >= config.max_env_steps) ||
                  config.episodes == 0;
  return res;
}

SeedResult run_gaac_seed(const ExperimentConfig& config, int seed, const fs::path& dir) {
  fs::create_directories(dir / "checkpoints");
  std::ofstream metrics(dir / "metrics.jsonl");
  std::uint64_t base = seed_base(seed);
  std::unique_ptr<Env> env = config.make_env();
  ActorCritic ac(config.gaac, env->obs_dim(), env->n_agents(), env->n_actions(), base);

  SeedResult res;
  double final_metric = 0.0;
  if (config.episodes == 0) {
    auto [reward, density] = ac.evaluate(*env, config.eval_episodes, base ^ 0xe7a1u);
    append_metrics(metrics, 0, 0, seed, 0.0, reward, density, 0.0, 0.0, 0.0);
    final_metric = reward;
  } else {
    ac.train(*env, config.episodes, base, config.eval_interval, config.eval_episodes,
             [&](const GAACMetricsRow& row) {
               res.env_steps = static_cast<long>(row.episode) * env->max_steps();
               append_metrics(metrics, row.episode, res.env_steps, seed, 0.0,
                              row.mean_adversary_reward, row.graph_density, row.policy_loss,
                              row.td_loss, 0.0);
               final_metric = row.mean_adversary_reward;
             });
    res.env_steps = static_cast<long>(config.episodes) * env->max_steps();
    auto [reward, density] = ac.evaluate(*env, config.eval_episodes, base ^ 0xe7a1u);
    if (config.eval_interval <= 0 || config.episodes % config.eval_interval != 0)
      append_metrics(metrics, config.episodes, res.env_steps, seed, 0.0, reward, density, 0.0, 0.0,
                     0.0);
    final_metric = reward;
  }
  atomic_save((dir / "checkpoints" / "final.json").string(),
              {{"actor", &ac.actor_params}, {"critic", &ac.critic_params}, {"target", &ac.target_params}},
              config.config_hash);
  res.final_metric = final_metric;
  res.completed = true;
  return res;
}

}  // namespace

std::string default_run_root() {
  const char* root = std::getenv("MARL_RUN_ROOT");
  return root ? root : "runs";
}

RunReport run_experiment(const ExperimentConfig& config, std::string run_dir) {
  auto t0 = std::chrono::steady_clock::now();
  if (run_dir.empty()) run_dir = config.output_dir;
  if (run_dir.empty())
    run_dir = default_run_root() + "/run-" + std::to_string(config.config_hash);
  fs::create_directories(run_dir);

  RunReport report;
  report.run_dir = run_dir;
  report.seeds = config.seeds;
  bool all_completed = true;
  for (int seed : config.seeds) {
    fs::path dir = fs::path(run_dir) / ("seed" + std::to_string(seed));
    SeedResult r = config.is_comm_family() ? run_comm_seed(config, seed, dir)
                                           : run_gaac_seed(config, seed, dir);
    report.per_seed_final.push_back(r.final_metric);
    report.total_env_steps += r.env_steps;
    all_completed = all_completed && r.completed;
  }
  double mean = 0.0;
  for (double v : report.per_seed_final) mean += v;
  mean /= report.per_seed_final.empty() ? 1 : report.per_seed_final.size();
  double var = 0.0;
  for (double v : report.per_seed_final) var += (v - mean) * (v - mean);
  if (report.per_seed_final.size() > 1) var /= report.per_seed_final.size() - 1;
  report.mean = mean;
  report.stddev = std::sqrt(var);
  report.completed = all_completed;

  double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  json rep = {
      {"config_hash", config.config_hash},
      {"algorithm", config.algorithm},
      {"environment", config.environment},
      {"seeds", config.seeds},
      {"per_seed_final", report.per_seed_final},
      {"mean", report.mean},
      {"stddev", report.stddev},
      {"total_env_steps", report.total_env_steps},
      {"completed", report.completed},
      {"wall_time_sec", wall},
  };
  std::ofstream out(fs::path(run_dir) / "final_report.json");
  out << rep.dump(2) << "\n";
  return report;
}

EvalStats evaluate_checkpoint(const ExperimentConfig& config, const std::string& ckpt_path,
                              int episodes, std::uint64_t seed) {
  std::unique_ptr<Env> env = config.make_env();
  checkpoint::Loaded l = checkpoint::load(ckpt_path);
  if (l.config_hash != config.config_hash)
    throw std::runtime_error("evaluate_checkpoint: checkpoint/config hash mismatch");
  if (config.is_comm_family()) {
    CommPolicy policy(config.comm, env->obs_dim(), env->n_agents(), env->n_actions(), 0);
    policy.params = l.stores.at("policy");
    return policy.evaluate(*env, episodes, seed);
  }
  ActorCritic ac(config.gaac, env->obs_dim(), env->n_agents(), env->n_actions(), 0);
  ac.actor_params = l.stores.at("actor");
  ac.critic_params = l.stores.at("critic");
  ac.target_params = l.stores.at("target");
  auto [reward, density] = ac.evaluate(*env, episodes, seed);
  EvalStats st;
  st.mean_reward = reward;
  st.mean_graph_density = density;
  return st;
}

void export_attention(const ExperimentConfig& config, const std::string& ckpt_path,
                      const std::string& out_path, int episodes, std::uint64_t seed) {
  std::unique_ptr<Env> env = config.make_env();
  checkpoint::Loaded l = checkpoint::load(ckpt_path);
  if (l.config_hash != config.config_hash)
    throw std::runtime_error("export_attention: checkpoint/config hash mismatch");
  std::ofstream out(out_path);
  if (!out) throw std::runtime_error("export_attention: cannot write '" + out_path + "'");

  auto matrix_json = [](const Array& m) {
    json rows = json::array();
    for (int i = 0; i < m.rows(); ++i) {
      json row = json::array();
      for (int j = 0; j < m.cols(); ++j) row.push_back(m.at(i, j));
      rows.push_back(std::move(row));
    }
    return rows;
  };
  auto positions_json = [](const std::vector<std::pair<double, double>>& pos) {
    json arr = json::array();
    for (auto [x, y] : pos) arr.push_back(json::array({x, y}));
    return arr;
  };

  if (config.is_comm_family()) {
    CommPolicy policy(config.comm, env->obs_dim(), env->n_agents(), env->n_actions(), 0);
    policy.params = l.stores.at("policy");
    for (int ep = 0; ep < episodes; ++ep) {
      std::uint64_t ep_seed = seed + 104729u * static_cast<std::uint64_t>(ep);
      Rng rng(ep_seed ^ 0x9e3779b97f4a7c15ull);
      env->reset(ep_seed);
      CommPolicy::ActState state = policy.initial_state(1);
      for (int step = 0; step < env->max_steps(); ++step) {
        Array obs = observe_all(*env);
        CommPolicy::ActOut a = policy.act(obs, state, rng, false);
        json line = {{"episode", ep},
                     {"step", step},
                     {"hard", matrix_json(a.graph.hard)},
                     {"combined", matrix_json(a.graph.combined)},
                     {"positions", positions_json(env->positions())}};
        out << line.dump() << "\n";
        env->step(a.actions);
      }
    }
    return;
  }

  ActorCritic ac(config.gaac, env->obs_dim(), env->n_agents(), env->n_actions(), 0);
  ac.actor_params = l.stores.at("actor");
  ac.critic_params = l.stores.at("critic");
  ac.target_params = l.stores.at("target");
  Rng rng(seed ^ 0x51ed270b);
  for (int ep = 0; ep < episodes; ++ep) {
    env->reset(seed + 31337u * static_cast<std::uint64_t>(ep));
    for (int step = 0; step < env->max_steps(); ++step) {
      Array obs = observe_all(*env);
      Array probs = ac.actor_probs(obs);
      std::vector<int> actions(env->n_agents());
      for (int i = 0; i < env->n_agents(); ++i) {
        int best = 0;
        for (int a = 1; a < env->n_actions(); ++a)
          if (probs.at(i, a) > probs.at(i, best)) best = a;
        actions[i] = best;
      }
      AgentGraph gr = ac.critic_graph(obs, actions, rng);
      json line = {{"episode", ep},
                   {"step", step},
                   {"hard", matrix_json(gr.hard)},
                   {"combined", matrix_json(gr.combined)},
                   {"positions", positions_json(env->positions())}};
      out << line.dump() << "\n";
      env->step(actions);
    }
  }
}

}  // namespace marl
