#pragma once

#include <functional>

#include "marl/paramstore.h"

namespace marl {

// Builds the loss on a fresh Graph; must be deterministic across calls
// (reseed any internal rng inside the closure).
using LossBuilder = std::function<NodeId(Graph&)>;

// Compares backward() gradients against central finite differences.
// Returns the max over checked coordinates of |analytic - numeric| /
// max(1, |analytic| + |numeric|). At most max_coords coordinates per
// parameter are probed (deterministically subsampled).
double grad_check(ParamStore& store, const LossBuilder& build, double eps = 1e-5,
                  int max_coords = 64);

}  // namespace marl
