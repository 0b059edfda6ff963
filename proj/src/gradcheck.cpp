#include "marl/gradcheck.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "marl/rng.h"

namespace marl {

namespace {

double eval_loss(ParamStore& store, const LossBuilder& build) {
  Graph g(store);
  NodeId loss = build(g);
  if (g.tape.val(loss).size() != 1) throw std::invalid_argument("grad_check: loss must be scalar");
  return g.tape.val(loss).data[0];
}

}  // namespace

double grad_check(ParamStore& store, const LossBuilder& build, double eps, int max_coords) {
  if (eps <= 1e-8 || eps >= 1e-2) throw std::invalid_argument("grad_check: eps out of range");
  {
    Graph g(store);
    NodeId loss = build(g);
    g.backward(loss);
    g.write_grads();
  }
  // snapshot analytic grads; finite differences reuse the same builder
  double worst = 0.0;
  for (auto& [name, p] : store.entries()) {
    std::vector<int> coords;
    int n = static_cast<int>(p.value.size());
    if (n <= max_coords) {
      for (int i = 0; i < n; ++i) coords.push_back(i);
    } else {
      Rng rng(fnv1a_str(name) ^ 0x5bd1e995u);
      for (int k = 0; k < max_coords; ++k)
        coords.push_back(static_cast<int>(rng() % static_cast<std::uint64_t>(n)));
    }
    for (int i : coords) {
      double saved = p.value.data[i];
      p.value.data[i] = saved + eps;
      double up = eval_loss(store, build);
      p.value.data[i] = saved - eps;
      double dn = eval_loss(store, build);
      p.value.data[i] = saved;
      double numeric = (up - dn) / (2.0 * eps);
      double analytic = p.grad.data[i];
      double err = std::abs(analytic - numeric) / std::max(1.0, std::abs(analytic) + std::abs(numeric));
      worst = std::max(worst, err);
    }
  }
  return worst;
}

}  // namespace marl
