#pragma once

#include <memory>
#include <vector>

#include "marl/attention.h"
#include "marl/env.h"
#include "marl/optim.h"

namespace marl {

struct CommConfig {
  int enc_dim = 128;
  int lstm_hidden = 128;
  int head_hidden = 64;
  AttentionConfig attn;
  double gamma = 1.0;
  double lr = 1e-3;
  double entropy_coef = 0.01;
  double baseline_coef = 0.5;
  int batch_episodes = 16;
};

// One trajectory batch: B episodes stepped in lockstep, flattened to rows of
// B*n agents per step.
struct Trajectory {
  int batch = 0, n_agents = 0, steps = 0;
  std::vector<std::vector<int>> actions;       // [T][B*n]
  std::vector<std::vector<double>> rewards;    // [T][B*n]
  std::vector<std::vector<double>> active;     // [T][B*n] 0/1
  std::vector<int> collisions;                 // [T], summed over the batch
  std::vector<std::vector<int>> per_env_collisions;  // [B][T]
  std::vector<double> graph_density;           // [T], batch mean
  std::vector<AgentGraph> graphs;              // [T] graph of batch element 0
};

struct TrainStats {
  double policy_loss = 0.0;
  double baseline_loss = 0.0;
  double entropy = 0.0;
  double mean_return = 0.0;
};

struct EvalStats {
  double success_rate = 0.0;
  double mean_reward = 0.0;   // per-episode reward summed over steps, averaged over agents
  double mean_graph_density = 0.0;
  double mean_captures = 0.0;
};

// Recurrent per-agent policy with a shared parameter set; the communication
// vector comes from the configured aggregator over the agents' hidden states.
class CommPolicy {
 public:
  CommPolicy(CommConfig cfg, int obs_dim, int n_agents, int n_actions, std::uint64_t init_seed);

  // Greedy or sampling action selection for one step outside training.
  // Recurrent state is carried as plain arrays between calls.
  struct ActState {
    Array h, c;  // [n, hidden] per environment
  };
  ActState initial_state(int batch = 1) const;
  struct ActOut {
    std::vector<int> actions;
    std::vector<std::vector<double>> distributions;  // [B*n][n_actions]
    AgentGraph graph;  // batch element 0
  };
  ActOut act(const Array& obs, ActState& state, Rng& rng, bool explore);

  // Runs a lockstep batch of episodes and applies one REINFORCE update.
  TrainStats train_batch(std::vector<std::unique_ptr<Env>>& envs, std::uint64_t seed, Adam& opt,
                         Trajectory* out_traj = nullptr);

  // Greedy rollouts; per-episode seeds derived from seed.
  EvalStats evaluate(Env& env, int episodes, std::uint64_t seed);

  // Rollout without updating (used by tests and the attention export).
  Trajectory rollout(std::vector<std::unique_ptr<Env>>& envs, std::uint64_t seed, bool explore);

  CommConfig cfg;
  ParamStore params;
  int obs_dim, n_agents, n_actions;

 private:
  struct StepNodes {
    NodeId logits, probs, logp, baseline;
    AttentionOut attn;
    LstmState state;
  };
  StepNodes build_step(Graph& g, NodeId obs, LstmState state, Rng& rng);
  friend struct CommPolicyTestAccess;
};

}  // namespace marl
