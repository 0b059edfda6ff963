#pragma once

#include <map>
#include <string>

#include "marl/paramstore.h"

namespace marl {

// Adam over a ParamStore. Moment slots are created per parameter on first use;
// gradients are left untouched by step().
class Adam {
 public:
  explicit Adam(double lr = 1e-3, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(ParamStore& store);

  double lr() const { return lr_; }
  void set_lr(double lr) { lr_ = lr; }
  long step_count() const { return step_count_; }

 private:
  struct Moments {
    Array m, v;
  };
  double lr_, beta1_, beta2_, eps_;
  long step_count_ = 0;
  std::map<std::string, Moments> state_;
};

}  // namespace marl
