#pragma once

#include <vector>

#include "marl/env.h"
#include "marl/rng.h"

namespace marl {

// Continuous 2-D pursuit: slow adversaries chase faster scripted prey inside
// a clamped square world. Capture is a reward event only; entities persist.

struct PPConfig {
  int n_adversaries = 5;
  int n_prey = 2;
  double world_half_width = 1.0;
  double adversary_max_speed = 1.0;
  double prey_max_speed = 1.3;
  double accel = 3.0;           // per-action acceleration magnitude
  double dt = 0.1;              // integration scale
  double damping = 0.5;         // velocity retained factor applied as (1-damping) per step
  double capture_radius = 0.1;
  int max_steps = 50;
  double capture_reward = 10.0;
  double shaping = 0.0;  // per-adversary -shaping * distance-to-nearest-prey
  double prey_noise = 0.0;  // probability a prey takes a random action instead

  int obs_dim() const { return 4 + 2 * (n_adversaries + n_prey - 1) + 2 * n_prey; }
  void validate() const;
};

struct PPEntity {
  double px = 0.0, py = 0.0;
  double vx = 0.0, vy = 0.0;
};

class PursuitEnv final : public Env {
 public:
  // actions: 0 stay, 1 up (+y), 2 down, 3 left, 4 right
  static constexpr int kNumActions = 5;

  explicit PursuitEnv(PPConfig cfg);

  int n_agents() const override { return cfg_.n_adversaries; }
  int obs_dim() const override { return cfg_.obs_dim(); }
  int n_actions() const override { return kNumActions; }
  int max_steps() const override { return cfg_.max_steps; }
  void reset(std::uint64_t seed) override;
  EnvStep step(const std::vector<int>& adversary_actions) override;
  void observe(int adversary, double* out) const override;
  std::vector<std::pair<double, double>> positions() const override;
  std::unique_ptr<Env> clone() const override { return std::make_unique<PursuitEnv>(*this); }

  const PPConfig& config() const { return cfg_; }
  const std::vector<PPEntity>& adversaries() const { return adversaries_; }
  const std::vector<PPEntity>& prey() const { return prey_; }

  // direct state injection for replay and diagnostics
  void set_state(std::vector<PPEntity> adversaries, std::vector<PPEntity> prey);

  // Scripted flee policy: per prey, argmax over actions of the post-step
  // minimum distance to any adversary; ties broken by action order.
  std::vector<int> prey_policy() const;
  int prey_flee_action(int prey_index) const;

 private:
  void integrate(PPEntity& e, int action, double max_speed) const;
  PPConfig cfg_;
  std::vector<PPEntity> adversaries_;
  std::vector<PPEntity> prey_;
  int step_count_ = 0;
  Rng rng_;
};

}  // namespace marl
