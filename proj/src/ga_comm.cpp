#include "marl/ga_comm.h"

#include <cmath>
#include <stdexcept>

namespace marl {

namespace {

int sample_row(const Array& probs, int row, Rng& rng) {
  double u = uniform01(rng);
  double acc = 0.0;
  int C = probs.cols();
  for (int j = 0; j < C; ++j) {
    acc += probs.at(row, j);
    if (u <= acc) return j;
  }
  return C - 1;
}

int argmax_row(const Array& probs, int row) {
  int best = 0;
  for (int j = 1; j < probs.cols(); ++j)
    if (probs.at(row, j) > probs.at(row, best)) best = j;
  return best;
}

double batch_density(const Array& hard, int n) {
  int rows = hard.rows();
  if (n < 2) return 0.0;
  double on = 0.0;
  for (int r = 0; r < rows; ++r)
    for (int j = 0; j < n; ++j)
      if (r % n != j && hard.at(r, j) > 0.5) on += 1.0;
  return on / (static_cast<double>(rows) * (n - 1));
}

}  // namespace

CommPolicy::CommPolicy(CommConfig cfg_, int obs_dim_, int n_agents_, int n_actions_, std::uint64_t init_seed)
    : cfg(cfg_), params(init_seed), obs_dim(obs_dim_), n_agents(n_agents_), n_actions(n_actions_) {}

CommPolicy::StepNodes CommPolicy::build_step(Graph& g, NodeId obs, LstmState state, Rng& rng) {
  Tape& t = g.tape;
  if (t.val(obs).cols() != obs_dim)
    throw std::invalid_argument("CommPolicy: observation width mismatch");
  MlpSpec enc{{cfg.enc_dim}, Activation::Tanh, true};
  NodeId e = mlp(g, "enc", enc, obs);
  LstmState s2 = lstm_step(g, "lstm", e, state, cfg.lstm_hidden);
  AttentionOut attn = two_stage_forward(g, "attn", cfg.attn, s2.h, s2.h, n_agents, rng);
  NodeId trunk = t.concat_cols({s2.h, attn.aggregated});
  NodeId logits = mlp(g, "head", MlpSpec{{cfg.head_hidden, n_actions}, Activation::Tanh, false}, trunk);
  NodeId baseline = mlp(g, "vhead", MlpSpec{{cfg.head_hidden, 1}, Activation::Tanh, false}, trunk);
  StepNodes out;
  out.logits = logits;
  out.probs = t.softmax_rows(logits);
  out.logp = t.log_softmax_rows(logits);
  out.baseline = baseline;
  out.attn = attn;
  out.state = s2;
  return out;
}

CommPolicy::ActState CommPolicy::initial_state(int batch) const {
  return {Array::zeros({batch * n_agents, cfg.lstm_hidden}),
          Array::zeros({batch * n_agents, cfg.lstm_hidden})};
}

CommPolicy::ActOut CommPolicy::act(const Array& obs, ActState& state, Rng& rng, bool explore) {
  Graph g(params);
  Tape& t = g.tape;
  NodeId o = t.constant(obs);
  LstmState s{t.constant(state.h), t.constant(state.c)};
  StepNodes sn = build_step(g, o, s, rng);
  const Array& probs = t.val(sn.probs);
  ActOut out;
  int rows = probs.rows();
  out.actions.resize(rows);
  out.distributions.resize(rows);
  for (int r = 0; r < rows; ++r) {
    out.actions[r] = explore ? sample_row(probs, r, rng) : argmax_row(probs, r);
    out.distributions[r].assign(probs.data.begin() + static_cast<std::size_t>(r) * probs.cols(),
                                probs.data.begin() + static_cast<std::size_t>(r + 1) * probs.cols());
  }
  out.graph = extract_graph(t, sn.attn, n_agents, 0);
  state.h = t.val(sn.state.h);
  state.c = t.val(sn.state.c);
  return out;
}

Trajectory CommPolicy::rollout(std::vector<std::unique_ptr<Env>>& envs, std::uint64_t seed, bool explore) {
  Trajectory traj;
  Graph g(params);
  Tape& t = g.tape;
  Rng rng(seed);
  int B = static_cast<int>(envs.size());
  int n = n_agents;
  for (int b = 0; b < B; ++b) envs[b]->reset(seed + static_cast<std::uint64_t>(b) * 7919u);
  int T = envs[0]->max_steps();
  traj.batch = B;
  traj.n_agents = n;
  traj.steps = T;
  traj.per_env_collisions.assign(B, {});
  LstmState s{t.constant(Array::zeros({B * n, cfg.lstm_hidden})),
              t.constant(Array::zeros({B * n, cfg.lstm_hidden}))};
  for (int step = 0; step < T; ++step) {
    Array obs({B * n, obs_dim});
    std::vector<double> active(B * n, 0.0);
    for (int b = 0; b < B; ++b)
      for (int i = 0; i < n; ++i) {
        envs[b]->observe(i, obs.data.data() + static_cast<std::size_t>(b * n + i) * obs_dim);
        active[b * n + i] = envs[b]->agent_active(i) ? 1.0 : 0.0;
      }
    StepNodes sn = build_step(g, t.constant(std::move(obs)), s, rng);
    s = sn.state;
    const Array& probs = t.val(sn.probs);
    std::vector<int> acts(B * n);
    for (int r = 0; r < B * n; ++r)
      acts[r] = explore ? sample_row(probs, r, rng) : argmax_row(probs, r);
    std::vector<double> rewards(B * n, 0.0);
    int coll = 0;
    for (int b = 0; b < B; ++b) {
      std::vector<int> env_acts(acts.begin() + b * n, acts.begin() + (b + 1) * n);
      EnvStep es = envs[b]->step(env_acts);
      for (int i = 0; i < n; ++i) rewards[b * n + i] = es.rewards[i];
      coll += es.collisions;
      traj.per_env_collisions[b].push_back(es.collisions);
    }
    traj.actions.push_back(std::move(acts));
    traj.rewards.push_back(std::move(rewards));
    traj.active.push_back(std::move(active));
    traj.collisions.push_back(coll);
    traj.graph_density.push_back(batch_density(t.val(sn.attn.hard), n));
    traj.graphs.push_back(extract_graph(t, sn.attn, n, 0));
  }
  return traj;
}

TrainStats CommPolicy::train_batch(std::vector<std::unique_ptr<Env>>& envs, std::uint64_t seed,
                                   Adam& opt, Trajectory* out_traj) {
  Graph g(params);
  Tape& t = g.tape;
  Rng rng(seed);
  int B = static_cast<int>(envs.size());
  int n = n_agents;
  int R = B * n;
  for (int b = 0; b < B; ++b) envs[b]->reset(seed + static_cast<std::uint64_t>(b) * 7919u);
  int T = envs[0]->max_steps();

  Trajectory traj;
  traj.batch = B;
  traj.n_agents = n;
  traj.steps = T;
  traj.per_env_collisions.assign(B, {});
  std::vector<StepNodes> steps;
  steps.reserve(T);
  LstmState s{t.constant(Array::zeros({R, cfg.lstm_hidden})),
              t.constant(Array::zeros({R, cfg.lstm_hidden}))};
  for (int step = 0; step < T; ++step) {
    Array obs({R, obs_dim});
    std::vector<double> active(R, 0.0);
    for (int b = 0; b < B; ++b)
      for (int i = 0; i < n; ++i) {
        envs[b]->observe(i, obs.data.data() + static_cast<std::size_t>(b * n + i) * obs_dim);
        active[b * n + i] = envs[b]->agent_active(i) ? 1.0 : 0.0;
      }
    StepNodes sn = build_step(g, t.constant(std::move(obs)), s, rng);
    s = sn.state;
    const Array& probs = t.val(sn.probs);
    std::vector<int> acts(R);
    for (int r = 0; r < R; ++r) acts[r] = sample_row(probs, r, rng);
    std::vector<double> rewards(R, 0.0);
    int coll = 0;
    for (int b = 0; b < B; ++b) {
      std::vector<int> env_acts(acts.begin() + b * n, acts.begin() + (b + 1) * n);
      EnvStep es = envs[b]->step(env_acts);
      for (int i = 0; i < n; ++i) rewards[b * n + i] = es.rewards[i];
      coll += es.collisions;
      traj.per_env_collisions[b].push_back(es.collisions);
    }
    traj.actions.push_back(std::move(acts));
    traj.rewards.push_back(std::move(rewards));
    traj.active.push_back(std::move(active));
    traj.collisions.push_back(coll);
    traj.graph_density.push_back(batch_density(t.val(sn.attn.hard), n));
    traj.graphs.push_back(extract_graph(t, sn.attn, n, 0));
    steps.push_back(std::move(sn));
  }

  // discounted returns per slot, R_t = r_t + gamma * R_{t+1}
  std::vector<std::vector<double>> returns(T, std::vector<double>(R, 0.0));
  for (int step = T - 1; step >= 0; --step)
    for (int r = 0; r < R; ++r)
      returns[step][r] = traj.rewards[step][r] + (step + 1 < T ? cfg.gamma * returns[step + 1][r] : 0.0);

  double count = 0.0;
  for (int step = 0; step < T; ++step)
    for (int r = 0; r < R; ++r) count += traj.active[step][r];
  if (count < 1.0) count = 1.0;

  NodeId policy_sum = t.constant(Array::scalar(0.0));
  NodeId baseline_sum = t.constant(Array::scalar(0.0));
  NodeId entropy_sum = t.constant(Array::scalar(0.0));
  for (int step = 0; step < T; ++step) {
    const StepNodes& sn = steps[step];
    Array adv({R, 1});
    Array mask({R, 1});
    Array ret({R, 1});
    for (int r = 0; r < R; ++r) {
      double b = t.val(sn.baseline).at(r, 0);
      mask.at(r, 0) = traj.active[step][r];
      ret.at(r, 0) = returns[step][r];
      adv.at(r, 0) = (returns[step][r] - b) * traj.active[step][r];
    }
    NodeId mask_c = t.constant(std::move(mask));
    NodeId sel = t.select_cols_per_row(sn.logp, traj.actions[step]);
    policy_sum = t.add(policy_sum, t.sum_all(t.mul(sel, t.constant(std::move(adv)))));
    NodeId diff = t.mul(t.sub(sn.baseline, t.constant(std::move(ret))), mask_c);
    baseline_sum = t.add(baseline_sum, t.sum_all(t.mul(diff, diff)));
    NodeId plogp = t.sum_cols(t.mul(sn.probs, sn.logp));
    entropy_sum = t.add(entropy_sum, t.sum_all(t.mul(plogp, mask_c)));
  }
  NodeId policy_loss = t.scale(policy_sum, -1.0 / count);
  NodeId baseline_loss = t.scale(baseline_sum, 1.0 / count);
  NodeId neg_entropy = t.scale(entropy_sum, 1.0 / count);  // = -H
  NodeId loss = t.add(t.add(policy_loss, t.scale(baseline_loss, cfg.baseline_coef)),
                      t.scale(neg_entropy, cfg.entropy_coef));
  g.backward(loss);
  g.write_grads();
  opt.step(params);

  TrainStats st;
  st.policy_loss = t.val(policy_loss).data[0];
  st.baseline_loss = t.val(baseline_loss).data[0];
  st.entropy = -t.val(neg_entropy).data[0];
  double mr = 0.0;
  for (int r = 0; r < R; ++r) mr += returns[0][r];
  st.mean_return = mr / R;
  if (out_traj) *out_traj = std::move(traj);
  return st;
}

EvalStats CommPolicy::evaluate(Env& env, int episodes, std::uint64_t seed) {
  EvalStats st;
  int n = n_agents;
  for (int e = 0; e < episodes; ++e) {
    std::uint64_t ep_seed = seed + static_cast<std::uint64_t>(e) * 104729u;
    Rng rng(ep_seed ^ 0x9e3779b97f4a7c15ull);
    env.reset(ep_seed);
    ActState state = initial_state(1);
    bool clean = true;
    double total_reward = 0.0;
    double density = 0.0;
    for (int step = 0; step < env.max_steps(); ++step) {
      Array obs = observe_all(env);
      ActOut a = act(obs, state, rng, /*explore=*/false);
      EnvStep es = env.step(a.actions);
      for (double r : es.rewards) total_reward += r;
      if (es.collisions > 0) clean = false;
      st.mean_captures += es.captures;
      density += a.graph.density();
    }
    st.success_rate += clean ? 1.0 : 0.0;
    st.mean_reward += total_reward / n;
    st.mean_graph_density += density / env.max_steps();
  }
  st.success_rate /= episodes;
  st.mean_reward /= episodes;
  st.mean_graph_density /= episodes;
  st.mean_captures /= episodes;
  return st;
}

}  // namespace marl
