#include "marl/paramstore.h"

#include <cmath>
#include <stdexcept>

namespace marl {

ParamStore::Param& ParamStore::ensure(const std::string& name, const std::vector<int>& shape, Init kind) {
  auto it = entries_.find(name);
  if (it != entries_.end()) {
    if (it->second.value.shape != shape)
      throw std::invalid_argument("ParamStore: shape conflict for '" + name + "'");
    return it->second;
  }
  Param p;
  p.value = Array::zeros(shape);
  p.grad = Array::zeros(shape);
  Rng rng(fnv1a_str(name) ^ init_seed_);
  switch (kind) {
    case Init::Zeros:
      break;
    case Init::Ones:
      for (double& v : p.value.data) v = 1.0;
      break;
    case Init::UniformFanIn: {
      double s = 1.0 / std::sqrt(static_cast<double>(shape[0]));
      for (double& v : p.value.data) v = uniform(rng, -s, s);
      break;
    }
    case Init::LstmBias: {
      // gate layout i,f,g,o; forget quarter gets +1
      int h = static_cast<int>(p.value.size()) / 4;
      for (int j = h; j < 2 * h; ++j) p.value.data[j] = 1.0;
      break;
    }
  }
  return entries_.emplace(name, std::move(p)).first->second;
}

ParamStore::Param& ParamStore::at(const std::string& name) {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw std::out_of_range("ParamStore: unknown parameter '" + name + "'");
  return it->second;
}

const ParamStore::Param& ParamStore::at(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw std::out_of_range("ParamStore: unknown parameter '" + name + "'");
  return it->second;
}

void ParamStore::zero_grads() {
  for (auto& [name, p] : entries_)
    for (double& v : p.grad.data) v = 0.0;
}

std::size_t ParamStore::param_count() const {
  std::size_t n = 0;
  for (const auto& [name, p] : entries_) n += p.value.size();
  return n;
}

void ParamStore::polyak(ParamStore& target, const ParamStore& online, double rho) {
  for (auto& [name, tp] : target.entries_) {
    const Param& op = online.at(name);
    if (!tp.value.same_shape(op.value))
      throw std::invalid_argument("polyak: shape mismatch for '" + name + "'");
    for (std::size_t i = 0; i < tp.value.size(); ++i)
      tp.value.data[i] = (1.0 - rho) * tp.value.data[i] + rho * op.value.data[i];
  }
}

NodeId Graph::param(const std::string& name, const std::vector<int>& shape, Init kind) {
  auto it = bound_.find(name);
  if (it != bound_.end()) return it->second;
  ParamStore::Param& p = store_->ensure(name, shape, kind);
  NodeId id = tape.leaf(p.value);
  bound_.emplace(name, id);
  return id;
}

void Graph::write_grads() {
  store_->zero_grads();
  for (const auto& [name, id] : bound_) {
    const Array& g = tape.grad(id);
    if (g.data.empty()) continue;  // parameter not reached by the loss: stays zero
    store_->at(name).grad = g;
  }
}

}  // namespace marl
