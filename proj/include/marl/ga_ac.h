#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "marl/attention.h"
#include "marl/env.h"
#include "marl/optim.h"

namespace marl {

struct Transition {
  std::vector<double> obs;       // [n * obs_dim]
  std::vector<int> actions;      // [n]
  std::vector<double> rewards;   // [n]
  std::vector<double> next_obs;  // [n * obs_dim]
  bool done = false;
};

class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {}
  void push(Transition t);
  std::vector<const Transition*> sample(int batch, Rng& rng) const;  // without replacement
  std::size_t size() const { return data_.size(); }
  std::size_t capacity() const { return capacity_; }

 private:
  std::size_t capacity_;
  std::size_t cursor_ = 0;
  std::vector<Transition> data_;
};

struct GAACConfig {
  int embed_dim = 64;
  int actor_hidden = 64;
  int head_hidden = 64;
  AttentionConfig attn;
  double gamma = 0.99;
  double actor_lr = 1e-3;
  double critic_lr = 1e-3;
  double entropy_coef = 0.01;
  double polyak = 0.01;
  int buffer_capacity = 100000;
  int batch_size = 256;
  int update_every = 4;
  int warmup_transitions = 1000;
  double epsilon = 0.0;  // extra uniform-random action probability while training
  bool use_attention = true;  // false: independent per-agent critic baseline
};

struct GAACMetricsRow {
  int episode = 0;
  double mean_adversary_reward = 0.0;
  double graph_density = 0.0;
  double td_loss = 0.0;
  double policy_loss = 0.0;
};

// Per-agent actors with a centralized attention critic over the joint
// observation-action embeddings. The critic outputs one value per candidate
// action of the owning agent.
class ActorCritic {
 public:
  ActorCritic(GAACConfig cfg, int obs_dim, int n_agents, int n_actions, std::uint64_t init_seed);

  struct CriticOut {
    std::vector<NodeId> q;  // per agent, [B, n_actions]
    AttentionOut attn;
  };
  // obs [B*n, obs_dim], act_onehot [B*n, n_actions]
  CriticOut build_critic(Graph& g, NodeId obs, NodeId act_onehot, Rng& rng);

  // actor distribution over actions for each row of obs [R, obs_dim]
  NodeId build_actor_logits(Graph& g, NodeId obs);
  Array actor_probs(const Array& obs);  // no-grad helper

  double critic_update(const std::vector<const Transition*>& batch, Rng& rng);
  double actor_update(const std::vector<const Transition*>& batch, Rng& rng);
  void soft_update();  // polyak target <- online

  std::vector<GAACMetricsRow> train(Env& env, int episodes, std::uint64_t seed, int eval_interval,
                                    int eval_episodes,
                                    const std::function<void(const GAACMetricsRow&)>& on_metrics = nullptr);
  // greedy rollouts: mean per-episode adversary reward (summed over steps,
  // averaged over agents) and mean gate density
  std::pair<double, double> evaluate(Env& env, int episodes, std::uint64_t seed);

  // critic-side attention graph for one joint (obs, actions) sample
  AgentGraph critic_graph(const Array& obs, const std::vector<int>& actions, Rng& rng);

  GAACConfig cfg;
  ParamStore actor_params;
  ParamStore critic_params;
  ParamStore target_params;
  ReplayBuffer buffer;
  int obs_dim, n_agents, n_actions;

 private:
  Array onehot_actions(const std::vector<int>& actions) const;
  // critic forward as plain values (no gradient tracking)
  std::vector<Array> critic_values(ParamStore& store, const Array& obs, const Array& act_onehot,
                                   Rng& rng, double* density = nullptr);
  Adam actor_opt_;
  Adam critic_opt_;
};

}  // namespace marl
