#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "marl/array.h"

namespace marl {

struct EnvStep {
  std::vector<double> rewards;  // one per agent slot
  bool done = false;
  int collisions = 0;  // traffic: co-located active pairs' cells this step
  int captures = 0;    // pursuit: (adversary, prey) pairs within radius
  int spawns = 0;
};

// Fixed-slot multi-agent environment. Observations are written into a flat
// [n_agents * obs_dim] buffer; inactive slots observe zeros with the active
// flag down and their actions are ignored.
class Env {
 public:
  virtual ~Env() = default;
  virtual int n_agents() const = 0;
  virtual int obs_dim() const = 0;
  virtual int n_actions() const = 0;
  virtual int max_steps() const = 0;
  virtual void reset(std::uint64_t seed) = 0;
  virtual EnvStep step(const std::vector<int>& actions) = 0;
  virtual void observe(int agent, double* out) const = 0;
  virtual bool agent_active(int agent) const { (void)agent; return true; }
  // 2-D display position of each agent slot (grid cell or world coords)
  virtual std::vector<std::pair<double, double>> positions() const = 0;
  virtual std::unique_ptr<Env> clone() const = 0;
};

inline Array observe_all(const Env& env) {
  Array obs({env.n_agents(), env.obs_dim()});
  for (int i = 0; i < env.n_agents(); ++i) env.observe(i, obs.data.data() + static_cast<std::size_t>(i) * env.obs_dim());
  return obs;
}

}  // namespace marl
