#pragma once

#include <map>
#include <string>
#include <unordered_map>

#include "marl/array.h"
#include "marl/rng.h"
#include "marl/tape.h"

namespace marl {

enum class Init {
  Zeros,
  Ones,
  UniformFanIn,  // U(-s, s), s = 1/sqrt(fan_in) with fan_in = shape[0]
  LstmBias,      // zeros with the forget-gate quarter set to +1
};

// Named parameter collection. Creation is lazy and the per-parameter init rng
// is derived from (seed, name), so build order does not affect initial values.
class ParamStore {
 public:
  struct Param {
    Array value;
    Array grad;
  };

  explicit ParamStore(std::uint64_t init_seed = 0) : init_seed_(init_seed) {}

  Param& ensure(const std::string& name, const std::vector<int>& shape, Init kind);
  bool has(const std::string& name) const { return entries_.count(name) != 0; }
  Param& at(const std::string& name);
  const Param& at(const std::string& name) const;
  const std::map<std::string, Param>& entries() const { return entries_; }
  std::map<std::string, Param>& entries() { return entries_; }

  void zero_grads();
  std::size_t param_count() const;

  // target <- (1-rho)*target + rho*online, matched by name
  static void polyak(ParamStore& target, const ParamStore& online, double rho);

  std::uint64_t init_seed() const { return init_seed_; }

 private:
  std::map<std::string, Param> entries_;
  std::uint64_t init_seed_;
};

// One forward pass: a tape plus the binding of parameter names to leaves.
// Each name is bound once, so reuse of a parameter accumulates its gradient
// on a single leaf. write_grads() implements overwrite-after-zero semantics.
class Graph {
 public:
  explicit Graph(ParamStore& store) : store_(&store) {}

  NodeId param(const std::string& name, const std::vector<int>& shape, Init kind);
  void backward(NodeId loss) { tape.backward(loss); }
  void write_grads();

  ParamStore& store() { return *store_; }
  Tape tape;

 private:
  ParamStore* store_;
  std::unordered_map<std::string, NodeId> bound_;
};

}  // namespace marl
