#include "marl/env_traffic.h"

#include <map>
#include <stdexcept>

namespace marl {

namespace {

TJRoute straight_route(int grid, int fixed, bool horizontal, bool reversed) {
  TJRoute r;
  for (int k = 0; k < grid; ++k) {
    int p = reversed ? grid - 1 - k : k;
    r.cells.push_back(horizontal ? std::make_pair(fixed, p) : std::make_pair(p, fixed));
  }
  return r;
}

}  // namespace

TJConfig TJConfig::preset(const std::string& difficulty) {
  TJConfig c;
  c.difficulty = difficulty;
  if (difficulty == "easy") {
    // two crossing one-way roads, single junction
    c.grid = 7;
    c.n_max = 5;
    c.p_arrive = 0.30;
    c.max_steps = 20;
    c.routes = {straight_route(7, 3, true, false), straight_route(7, 3, false, false)};
  } else if (difficulty == "medium") {
    // two-way roads through one junction block
    c.grid = 14;
    c.n_max = 10;
    c.p_arrive = 0.20;
    c.max_steps = 40;
    c.routes = {straight_route(14, 6, true, false), straight_route(14, 7, true, true),
                straight_route(14, 6, false, true), straight_route(14, 7, false, false)};
  } else if (difficulty == "hard") {
    // two horizontal and two vertical roads, four junctions
    c.grid = 18;
    c.n_max = 20;
    c.p_arrive = 0.05;
    c.max_steps = 80;
    c.routes = {straight_route(18, 5, true, false), straight_route(18, 12, true, true),
                straight_route(18, 5, false, false), straight_route(18, 12, false, true)};
  } else {
    throw std::invalid_argument("TJConfig: unknown difficulty '" + difficulty + "'");
  }
  return c;
}

void TJConfig::validate() const {
  if (grid < 3) throw std::invalid_argument("TJConfig: grid too small");
  if (n_max < 1) throw std::invalid_argument("TJConfig: n_max must be positive");
  if (p_arrive < 0.0 || p_arrive >= 1.0) throw std::invalid_argument("TJConfig: p_arrive out of [0,1)");
  if (max_steps < 1) throw std::invalid_argument("TJConfig: max_steps must be positive");
  if (routes.empty()) throw std::invalid_argument("TJConfig: no routes");
  for (const TJRoute& r : routes) {
    if (r.cells.empty()) throw std::invalid_argument("TJConfig: empty route");
    for (auto [row, col] : r.cells)
      if (row < 0 || col < 0 || row >= grid || col >= grid)
        throw std::invalid_argument("TJConfig: route cell outside grid");
  }
}

TrafficEnv::TrafficEnv(TJConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  cars_.assign(cfg_.n_max, TJCar{});
}

std::pair<int, int> TrafficEnv::car_cell(int agent) const {
  const TJCar& c = cars_[agent];
  if (!c.active) return {-1, -1};
  return cfg_.routes[c.route].cells[c.progress];
}

void TrafficEnv::reset(std::uint64_t seed) {
  rng_.seed(seed);
  cars_.assign(cfg_.n_max, TJCar{});
  step_count_ = 0;
  total_collisions_ = 0;
  spawn();
}

void TrafficEnv::spawn() {
  // at most one arrival per step, entry must be free of active cars
  if (uniform01(rng_) >= cfg_.p_arrive) return;
  int slot = -1;
  for (int i = 0; i < cfg_.n_max; ++i)
    if (!cars_[i].active) { slot = i; break; }
  if (slot < 0) return;
  std::vector<int> open;
  for (std::size_t r = 0; r < cfg_.routes.size(); ++r) {
    auto entry = cfg_.routes[r].cells.front();
    bool occupied = false;
    for (const TJCar& c : cars_)
      if (c.active && cfg_.routes[c.route].cells[c.progress] == entry) occupied = true;
    if (!occupied) open.push_back(static_cast<int>(r));
  }
  if (open.empty()) return;
  int route = open[rng_() % open.size()];
  cars_[slot] = TJCar{true, route, 0, 1};
}

EnvStep TrafficEnv::step(const std::vector<int>& actions) {
  if (static_cast<int>(actions.size()) != cfg_.n_max)
    throw std::invalid_argument("TrafficEnv::step: expected one action per slot");
  for (int a : actions)
    if (a != kGas && a != kBrake) throw std::invalid_argument("TrafficEnv::step: invalid action");

  EnvStep out;
  out.rewards.assign(cfg_.n_max, 0.0);

  // movement
  for (int i = 0; i < cfg_.n_max; ++i) {
    TJCar& c = cars_[i];
    if (!c.active) continue;
    if (actions[i] == kGas) {
      ++c.progress;
      if (c.progress >= static_cast<int>(cfg_.routes[c.route].cells.size())) {
        c = TJCar{};  // route finished, slot frees up
        continue;
      }
    }
  }

  // collisions: cell co-occupancy after simultaneous movement
  std::map<std::pair<int, int>, int> occupancy;
  for (int i = 0; i < cfg_.n_max; ++i)
    if (cars_[i].active) ++occupancy[car_cell(i)];
  for (int i = 0; i < cfg_.n_max; ++i) {
    TJCar& c = cars_[i];
    if (!c.active) continue;
    double r = cfg_.time_penalty * c.tau;
    if (occupancy[car_cell(i)] >= 2) r += cfg_.collision_penalty;
    out.rewards[i] = r;
  }
  for (const auto& [cell, count] : occupancy)
    if (count >= 2) ++out.collisions;
  total_collisions_ += out.collisions;

  for (TJCar& c : cars_)
    if (c.active) ++c.tau;

  int before = 0;
  for (const TJCar& c : cars_) before += c.active ? 1 : 0;
  spawn();
  int after = 0;
  for (const TJCar& c : cars_) after += c.active ? 1 : 0;
  out.spawns = after - before;

  ++step_count_;
  out.done = step_count_ >= cfg_.max_steps;
  return out;
}

void TrafficEnv::observe(int agent, double* out) const {
  int d = cfg_.obs_dim();
  for (int k = 0; k < d; ++k) out[k] = 0.0;
  const TJCar& c = cars_[agent];
  if (!c.active) return;
  auto [row, col] = car_cell(agent);
  out[row * cfg_.grid + col] = 1.0;
  out[cfg_.grid * cfg_.grid + c.route] = 1.0;
  out[d - 1] = 1.0;
}

std::vector<std::pair<double, double>> TrafficEnv::positions() const {
  std::vector<std::pair<double, double>> pos(cfg_.n_max, {-1.0, -1.0});
  for (int i = 0; i < cfg_.n_max; ++i)
    if (cars_[i].active) {
      auto [r, c] = car_cell(i);
      pos[i] = {static_cast<double>(r), static_cast<double>(c)};
    }
  return pos;
}

bool episode_success(const std::vector<int>& per_step_collisions) {
  for (int c : per_step_collisions)
    if (c > 0) return false;
  return true;
}

}  // namespace marl
