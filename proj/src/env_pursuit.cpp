#include "marl/env_pursuit.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace marl {

namespace {

constexpr double kAx[] = {0.0, 0.0, 0.0, -1.0, 1.0};
constexpr double kAy[] = {0.0, 1.0, -1.0, 0.0, 0.0};

double dist(double ax, double ay, double bx, double by) {
  return std::hypot(ax - bx, ay - by);
}

}  // namespace

void PPConfig::validate() const {
  if (n_adversaries < 1 || n_prey < 1) throw std::invalid_argument("PPConfig: need at least one of each");
  if (prey_max_speed <= adversary_max_speed)
    throw std::invalid_argument("PPConfig: prey must be faster than adversaries");
  if (world_half_width <= 0 || capture_radius <= 0 || dt <= 0 || accel <= 0)
    throw std::invalid_argument("PPConfig: non-positive physics constant");
  if (max_steps < 1) throw std::invalid_argument("PPConfig: max_steps must be positive");
}

PursuitEnv::PursuitEnv(PPConfig cfg) : cfg_(cfg) {
  cfg_.validate();
  adversaries_.assign(cfg_.n_adversaries, PPEntity{});
  prey_.assign(cfg_.n_prey, PPEntity{});
}

void PursuitEnv::reset(std::uint64_t seed) {
  rng_.seed(seed);
  step_count_ = 0;
  double w = cfg_.world_half_width;
  for (PPEntity& e : adversaries_) e = {uniform(rng_, -w, w), uniform(rng_, -w, w), 0.0, 0.0};
  for (PPEntity& e : prey_) e = {uniform(rng_, -w, w), uniform(rng_, -w, w), 0.0, 0.0};
}

void PursuitEnv::set_state(std::vector<PPEntity> adversaries, std::vector<PPEntity> prey) {
  if (static_cast<int>(adversaries.size()) != cfg_.n_adversaries ||
      static_cast<int>(prey.size()) != cfg_.n_prey)
    throw std::invalid_argument("PursuitEnv::set_state: entity count mismatch");
  adversaries_ = std::move(adversaries);
  prey_ = std::move(prey);
}

void PursuitEnv::integrate(PPEntity& e, int action, double max_speed) const {
  e.vx = (1.0 - cfg_.damping) * e.vx + kAx[action] * cfg_.accel * cfg_.dt;
  e.vy = (1.0 - cfg_.damping) * e.vy + kAy[action] * cfg_.accel * cfg_.dt;
  double speed = std::hypot(e.vx, e.vy);
  if (speed > max_speed) {
    e.vx *= max_speed / speed;
    e.vy *= max_speed / speed;
  }
  e.px += e.vx * cfg_.dt;
  e.py += e.vy * cfg_.dt;
  double w = cfg_.world_half_width;
  e.px = std::clamp(e.px, -w, w);
  e.py = std::clamp(e.py, -w, w);
}

int PursuitEnv::prey_flee_action(int prey_index) const {
  const PPEntity& p = prey_[prey_index];
  int best = 0;
  double best_score = -1.0;
  for (int a = 0; a < kNumActions; ++a) {
    PPEntity trial = p;
    integrate(trial, a, cfg_.prey_max_speed);
    double mind = 1e300;
    for (const PPEntity& adv : adversaries_)
      mind = std::min(mind, dist(trial.px, trial.py, adv.px, adv.py));
    if (mind > best_score) {
      best_score = mind;
      best = a;
    }
  }
  return best;
}

std::vector<int> PursuitEnv::prey_policy() const {
  std::vector<int> actions(cfg_.n_prey);
  for (int i = 0; i < cfg_.n_prey; ++i) actions[i] = prey_flee_action(i);
  return actions;
}

EnvStep PursuitEnv::step(const std::vector<int>& adversary_actions) {
  if (static_cast<int>(adversary_actions.size()) != cfg_.n_adversaries)
    throw std::invalid_argument("PursuitEnv::step: expected one action per adversary");
  for (int a : adversary_actions)
    if (a < 0 || a >= kNumActions) throw std::invalid_argument("PursuitEnv::step: invalid action");

  std::vector<int> prey_actions = prey_policy();
  for (int i = 0; i < cfg_.n_prey; ++i)
    if (cfg_.prey_noise > 0.0 && uniform01(rng_) < cfg_.prey_noise)
      prey_actions[i] = static_cast<int>(rng_() % kNumActions);

  for (int i = 0; i < cfg_.n_adversaries; ++i)
    integrate(adversaries_[i], adversary_actions[i], cfg_.adversary_max_speed);
  for (int i = 0; i < cfg_.n_prey; ++i)
    integrate(prey_[i], prey_actions[i], cfg_.prey_max_speed);

  EnvStep out;
  out.rewards.assign(cfg_.n_adversaries, 0.0);
  for (const PPEntity& adv : adversaries_)
    for (const PPEntity& p : prey_)
      if (dist(adv.px, adv.py, p.px, p.py) <= cfg_.capture_radius) ++out.captures;
  double shared = cfg_.capture_reward * out.captures;
  for (int i = 0; i < cfg_.n_adversaries; ++i) {
    double r = shared;
    if (cfg_.shaping > 0.0) {
      double mind = 1e300;
      for (const PPEntity& p : prey_)
        mind = std::min(mind, dist(adversaries_[i].px, adversaries_[i].py, p.px, p.py));
      r -= cfg_.shaping * mind;
    }
    out.rewards[i] = r;
  }

  ++step_count_;
  out.done = step_count_ >= cfg_.max_steps;
  return out;
}

void PursuitEnv::observe(int adversary, double* out) const {
  const PPEntity& self = adversaries_[adversary];
  int k = 0;
  out[k++] = self.px;
  out[k++] = self.py;
  out[k++] = self.vx;
  out[k++] = self.vy;
  for (int j = 0; j < cfg_.n_adversaries; ++j) {
    if (j == adversary) continue;
    out[k++] = adversaries_[j].px - self.px;
    out[k++] = adversaries_[j].py - self.py;
  }
  for (const PPEntity& p : prey_) {
    out[k++] = p.px - self.px;
    out[k++] = p.py - self.py;
  }
  for (const PPEntity& p : prey_) {
    out[k++] = p.vx - self.vx;
    out[k++] = p.vy - self.vy;
  }
}

std::vector<std::pair<double, double>> PursuitEnv::positions() const {
  std::vector<std::pair<double, double>> pos;
  for (const PPEntity& e : adversaries_) pos.emplace_back(e.px, e.py);
  for (const PPEntity& e : prey_) pos.emplace_back(e.px, e.py);
  return pos;
}

}  // namespace marl
