#pragma once

#include <string>
#include <vector>

#include "marl/env.h"
#include "marl/rng.h"

namespace marl {

// Traffic junction: cars on pre-assigned routes, gas/brake actions, collision
// and linear time penalties, zero-vision observations (own cell + route + flag).

struct TJRoute {
  std::vector<std::pair<int, int>> cells;  // (row, col) from entry to exit
};

struct TJConfig {
  std::string difficulty = "easy";
  int grid = 7;
  std::vector<TJRoute> routes;
  int n_max = 5;
  double p_arrive = 0.30;
  int max_steps = 20;
  int vision = 0;
  double time_penalty = -0.01;
  double collision_penalty = -10.0;

  static TJConfig preset(const std::string& difficulty);
  int obs_dim() const { return grid * grid + static_cast<int>(routes.size()) + 1; }
  void validate() const;
};

struct TJCar {
  bool active = false;
  int route = -1;
  int progress = 0;
  int tau = 0;  // steps since activation, >= 1 while active
};

class TrafficEnv final : public Env {
 public:
  static constexpr int kGas = 0;
  static constexpr int kBrake = 1;

  explicit TrafficEnv(TJConfig cfg);

  int n_agents() const override { return cfg_.n_max; }
  int obs_dim() const override { return cfg_.obs_dim(); }
  int n_actions() const override { return 2; }
  int max_steps() const override { return cfg_.max_steps; }
  void reset(std::uint64_t seed) override;
  EnvStep step(const std::vector<int>& actions) override;
  void observe(int agent, double* out) const override;
  bool agent_active(int agent) const override { return cars_[agent].active; }
  std::vector<std::pair<double, double>> positions() const override;
  std::unique_ptr<Env> clone() const override { return std::make_unique<TrafficEnv>(*this); }

  const TJConfig& config() const { return cfg_; }
  const std::vector<TJCar>& cars() const { return cars_; }
  int step_count() const { return step_count_; }
  int total_collisions() const { return total_collisions_; }
  std::pair<int, int> car_cell(int agent) const;

 private:
  void spawn();
  TJConfig cfg_;
  std::vector<TJCar> cars_;
  int step_count_ = 0;
  int total_collisions_ = 0;
  Rng rng_;
};

// true iff no step of the episode had a collision
bool episode_success(const std::vector<int>& per_step_collisions);

}  // namespace marl
