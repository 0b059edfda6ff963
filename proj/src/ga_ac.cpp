#include "marl/ga_ac.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace marl {

namespace {

int sample_from(const std::vector<double>& p, Rng& rng) {
  double u = uniform01(rng);
  double acc = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) {
    acc += p[j];
    if (u <= acc) return static_cast<int>(j);
  }
  return static_cast<int>(p.size()) - 1;
}

}  // namespace

void ReplayBuffer::push(Transition t) {
  if (data_.size() < capacity_) {
    data_.push_back(std::move(t));
  } else {
    data_[cursor_] = std::move(t);
    cursor_ = (cursor_ + 1) % capacity_;
  }
}

std::vector<const Transition*> ReplayBuffer::sample(int batch, Rng& rng) const {
  if (data_.empty()) throw std::runtime_error("ReplayBuffer: empty");
  batch = std::min<int>(batch, static_cast<int>(data_.size()));
  std::unordered_set<std::size_t> seen;
  std::vector<const Transition*> out;
  out.reserve(batch);
  while (static_cast<int>(out.size()) < batch) {
    std::size_t k = rng() % data_.size();
    if (seen.insert(k).second) out.push_back(&data_[k]);
  }
  return out;
}

ActorCritic::ActorCritic(GAACConfig cfg_, int obs_dim_, int n_agents_, int n_actions_, std::uint64_t init_seed)
    : cfg(cfg_),
      actor_params(init_seed ^ 0xa5a5a5a5ull),
      critic_params(init_seed),
      target_params(init_seed),
      buffer(static_cast<std::size_t>(cfg_.buffer_capacity)),
      obs_dim(obs_dim_),
      n_agents(n_agents_),
      n_actions(n_actions_),
      actor_opt_(cfg_.actor_lr),
      critic_opt_(cfg_.critic_lr) {
  // materialize parameters so the target can start as an exact copy
  {
    Graph g(critic_params);
    Rng rng(0);
    NodeId o = g.tape.constant(Array::zeros({n_agents, obs_dim}));
    NodeId a = g.tape.constant(Array::zeros({n_agents, n_actions}));
    build_critic(g, o, a, rng);
  }
  {
    Graph g(actor_params);
    build_actor_logits(g, g.tape.constant(Array::zeros({n_agents, obs_dim})));
  }
  target_params = critic_params;
}

NodeId ActorCritic::build_actor_logits(Graph& g, NodeId obs) {
  return mlp(g, "actor", MlpSpec{{cfg.actor_hidden, cfg.actor_hidden, n_actions}, Activation::Tanh, false}, obs);
}

Array ActorCritic::actor_probs(const Array& obs) {
  Graph g(actor_params);
  NodeId logits = build_actor_logits(g, g.tape.constant(obs));
  return g.tape.val(g.tape.softmax_rows(logits));
}

ActorCritic::CriticOut ActorCritic::build_critic(Graph& g, NodeId obs, NodeId act_onehot, Rng& rng) {
  Tape& t = g.tape;
  if (t.val(obs).cols() != obs_dim || t.val(act_onehot).cols() != n_actions)
    throw std::invalid_argument("build_critic: input width mismatch");
  int rows = t.val(obs).rows();
  if (rows != t.val(act_onehot).rows() || rows % n_agents != 0)
    throw std::invalid_argument("build_critic: joint input incomplete");
  int B = rows / n_agents;

  NodeId e = mlp(g, "g", MlpSpec{{cfg.embed_dim}, Activation::Tanh, true},
                 t.concat_cols({obs, act_onehot}));
  CriticOut out;
  NodeId head_base;
  if (cfg.use_attention) {
    NodeId V = g.param("V", {cfg.embed_dim, cfg.embed_dim}, Init::UniformFanIn);
    NodeId values = t.tanh_op(t.matmul(e, V));
    out.attn = two_stage_forward(g, "attn", cfg.attn, e, values, n_agents, rng);
    head_base = t.concat_cols({e, out.attn.aggregated});
  } else {
    out.attn.hard = t.constant(Array::zeros({rows, n_agents}));
    out.attn.soft = out.attn.hard;
    out.attn.combined = out.attn.hard;
    out.attn.aggregated = t.constant(Array::zeros({rows, cfg.embed_dim}));
    head_base = t.concat_cols({e, out.attn.aggregated});
  }
  out.q.resize(n_agents);
  for (int i = 0; i < n_agents; ++i) {
    std::vector<int> idx(B);
    for (int b = 0; b < B; ++b) idx[b] = b * n_agents + i;
    NodeId rows_i = t.gather_rows(head_base, std::move(idx));
    out.q[i] = mlp(g, "f" + std::to_string(i),
                   MlpSpec{{cfg.head_hidden, n_actions}, Activation::Tanh, false}, rows_i);
  }
  return out;
}

Array ActorCritic::onehot_actions(const std::vector<int>& actions) const {
  Array a({static_cast<int>(actions.size()), n_actions});
  for (std::size_t r = 0; r < actions.size(); ++r) a.at(static_cast<int>(r), actions[r]) = 1.0;
  return a;
}

std::vector<Array> ActorCritic::critic_values(ParamStore& store, const Array& obs,
                                              const Array& act_onehot, Rng& rng, double* density) {
  Graph g(store);
  CriticOut co = build_critic(g, g.tape.constant(obs), g.tape.constant(act_onehot), rng);
  std::vector<Array> out(n_agents);
  for (int i = 0; i < n_agents; ++i) out[i] = g.tape.val(co.q[i]);
  if (density) {
    const Array& hard = g.tape.val(co.attn.hard);
    double on = 0.0;
    int rows = hard.rows();
    for (int r = 0; r < rows; ++r)
      for (int j = 0; j < n_agents; ++j)
        if (r % n_agents != j && hard.at(r, j) > 0.5) on += 1.0;
    *density = n_agents > 1 ? on / (static_cast<double>(rows) * (n_agents - 1)) : 0.0;
  }
  return out;
}

double ActorCritic::critic_update(const std::vector<const Transition*>& batch, Rng& rng) {
  if (batch.empty()) throw std::invalid_argument("critic_update: empty batch");
  int B = static_cast<int>(batch.size());
  int R = B * n_agents;

  Array obs({R, obs_dim}), next_obs({R, obs_dim});
  std::vector<int> taken(R);
  for (int b = 0; b < B; ++b)
    for (int i = 0; i < n_agents; ++i) {
      int r = b * n_agents + i;
      std::copy_n(batch[b]->obs.begin() + static_cast<std::size_t>(i) * obs_dim, obs_dim,
                  obs.data.begin() + static_cast<std::size_t>(r) * obs_dim);
      std::copy_n(batch[b]->next_obs.begin() + static_cast<std::size_t>(i) * obs_dim, obs_dim,
                  next_obs.data.begin() + static_cast<std::size_t>(r) * obs_dim);
      taken[r] = batch[b]->actions[i];
    }

  // bootstrap target: next actions sampled from the current actors, exact
  // expectation over the owning agent's candidate actions, target critic only
  Array next_probs = actor_probs(next_obs);
  std::vector<int> next_actions(R);
  for (int r = 0; r < R; ++r) {
    std::vector<double> p(next_probs.data.begin() + static_cast<std::size_t>(r) * n_actions,
                          next_probs.data.begin() + static_cast<std::size_t>(r + 1) * n_actions);
    next_actions[r] = sample_from(p, rng);
  }
  std::vector<Array> qbar = critic_values(target_params, next_obs, onehot_actions(next_actions), rng);

  std::vector<std::vector<double>> y(n_agents, std::vector<double>(B, 0.0));
  for (int i = 0; i < n_agents; ++i)
    for (int b = 0; b < B; ++b) {
      double ev = 0.0;
      for (int a = 0; a < n_actions; ++a)
        ev += next_probs.at(b * n_agents + i, a) * qbar[i].at(b, a);
      double bootstrap = batch[b]->done ? 0.0 : cfg.gamma * ev;
      y[i][b] = batch[b]->rewards[i] + bootstrap;
    }

  Graph g(critic_params);
  Tape& t = g.tape;
  CriticOut co = build_critic(g, t.constant(std::move(obs)), t.constant(onehot_actions(taken)), rng);
  NodeId loss = t.constant(Array::scalar(0.0));
  for (int i = 0; i < n_agents; ++i) {
    std::vector<int> own(B);
    for (int b = 0; b < B; ++b) own[b] = taken[b * n_agents + i];
    NodeId qsel = t.select_cols_per_row(co.q[i], std::move(own));
    Array yi({B, 1});
    for (int b = 0; b < B; ++b) yi.at(b, 0) = y[i][b];
    NodeId diff = t.sub(qsel, t.constant(std::move(yi)));
    loss = t.add(loss, t.scale(t.sum_all(t.mul(diff, diff)), 1.0 / B));
  }
  g.backward(loss);
  g.write_grads();
  critic_opt_.step(critic_params);
  return t.val(loss).data[0];
}

double ActorCritic::actor_update(const std::vector<const Transition*>& batch, Rng& rng) {
  if (batch.empty()) throw std::invalid_argument("actor_update: empty batch");
  int B = static_cast<int>(batch.size());
  int R = B * n_agents;

  Array obs({R, obs_dim});
  std::vector<int> taken(R);
  for (int b = 0; b < B; ++b)
    for (int i = 0; i < n_agents; ++i) {
      int r = b * n_agents + i;
      std::copy_n(batch[b]->obs.begin() + static_cast<std::size_t>(i) * obs_dim, obs_dim,
                  obs.data.begin() + static_cast<std::size_t>(r) * obs_dim);
      taken[r] = batch[b]->actions[i];
    }

  // frozen critic: per-action values as plain numbers
  std::vector<Array> q = critic_values(critic_params, obs, onehot_actions(taken), rng);

  Graph g(actor_params);
  Tape& t = g.tape;
  NodeId logits = build_actor_logits(g, t.constant(obs));
  NodeId probs = t.softmax_rows(logits);
  NodeId logp = t.log_softmax_rows(logits);

  // counterfactual baseline per sample: b_i = sum_a pi(a) Q_i(a)
  Array adv({R, n_actions});
  const Array& pv = t.val(probs);
  for (int b = 0; b < B; ++b)
    for (int i = 0; i < n_agents; ++i) {
      int r = b * n_agents + i;
      double base = 0.0;
      for (int a = 0; a < n_actions; ++a) base += pv.at(r, a) * q[i].at(b, a);
      for (int a = 0; a < n_actions; ++a) adv.at(r, a) = q[i].at(b, a) - base;
    }

  // exact policy gradient: detach the expectation weights so the gradient is
  // sum_a pi(a) A(a) dlogpi(a)
  NodeId obj = t.sum_all(t.mul(t.mul(t.stop_gradient(probs), logp), t.constant(std::move(adv))));
  NodeId neg_entropy = t.sum_all(t.mul(probs, logp));
  NodeId loss = t.scale(t.sub(obj, t.scale(neg_entropy, cfg.entropy_coef)), -1.0 / R);
  // loss = -(E[logp * A] + entropy bonus)
  g.backward(loss);
  g.write_grads();
  actor_opt_.step(actor_params);
  return t.val(loss).data[0];
}

void ActorCritic::soft_update() { ParamStore::polyak(target_params, critic_params, cfg.polyak); }

AgentGraph ActorCritic::critic_graph(const Array& obs, const std::vector<int>& actions, Rng& rng) {
  Graph g(critic_params);
  CriticOut co = build_critic(g, g.tape.constant(obs), g.tape.constant(onehot_actions(actions)), rng);
  return extract_graph(g.tape, co.attn, n_agents, 0);
}

std::vector<GAACMetricsRow> ActorCritic::train(Env& env, int episodes, std::uint64_t seed,
                                               int eval_interval, int eval_episodes,
                                               const std::function<void(const GAACMetricsRow&)>& on_metrics) {
  std::vector<GAACMetricsRow> curve;
  Rng rng(seed);
  long env_steps = 0;
  double last_td = 0.0, last_pl = 0.0;
  for (int ep = 0; ep < episodes; ++ep) {
    env.reset(seed + 977u * static_cast<std::uint64_t>(ep));
    for (int step = 0; step < env.max_steps(); ++step) {
      Array obs = observe_all(env);
      Array probs = actor_probs(obs);
      std::vector<int> actions(n_agents);
      for (int i = 0; i < n_agents; ++i) {
        if (cfg.epsilon > 0.0 && uniform01(rng) < cfg.epsilon) {
          actions[i] = static_cast<int>(rng() % static_cast<std::uint64_t>(n_actions));
        } else {
          std::vector<double> p(probs.data.begin() + static_cast<std::size_t>(i) * n_actions,
                                probs.data.begin() + static_cast<std::size_t>(i + 1) * n_actions);
          actions[i] = sample_from(p, rng);
        }
      }
      EnvStep es = env.step(actions);
      Transition tr;
      tr.obs = obs.data;
      tr.actions = actions;
      tr.rewards = es.rewards;
      tr.next_obs = observe_all(env).data;
      tr.done = es.done;
      buffer.push(std::move(tr));
      ++env_steps;
      if (buffer.size() >= static_cast<std::size_t>(cfg.warmup_transitions) &&
          env_steps % cfg.update_every == 0) {
        auto batch = buffer.sample(cfg.batch_size, rng);
        last_td = critic_update(batch, rng);
        last_pl = actor_update(batch, rng);
        soft_update();
      }
    }
    if (eval_interval > 0 && (ep + 1) % eval_interval == 0) {
      auto [reward, density] = evaluate(env, eval_episodes, seed ^ (0xe5a1u + static_cast<std::uint64_t>(ep)));
      GAACMetricsRow row{ep + 1, reward, density, last_td, last_pl};
      curve.push_back(row);
      if (on_metrics) on_metrics(row);
    }
  }
  return curve;
}

std::pair<double, double> ActorCritic::evaluate(Env& env, int episodes, std::uint64_t seed) {
  std::unique_ptr<Env> e = env.clone();
  double total = 0.0, density_acc = 0.0;
  long density_n = 0;
  Rng rng(seed ^ 0x51ed270b);
  for (int ep = 0; ep < episodes; ++ep) {
    e->reset(seed + 31337u * static_cast<std::uint64_t>(ep));
    double ep_reward = 0.0;
    for (int step = 0; step < e->max_steps(); ++step) {
      Array obs = observe_all(*e);
      Array probs = actor_probs(obs);
      std::vector<int> actions(n_agents);
      for (int i = 0; i < n_agents; ++i) {
        int best = 0;
        for (int a = 1; a < n_actions; ++a)
          if (probs.at(i, a) > probs.at(i, best)) best = a;
        actions[i] = best;
      }
      EnvStep es = e->step(actions);
      for (double r : es.rewards) ep_reward += r;
      if (cfg.use_attention && step % 10 == 0) {
        double d = 0.0;
        critic_values(critic_params, obs, onehot_actions(actions), rng, &d);
        density_acc += d;
        ++density_n;
      }
    }
    total += ep_reward / n_agents;
  }
  return {total / episodes, density_n ? density_acc / density_n : 0.0};
}

}  // namespace marl
