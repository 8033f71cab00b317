#pragma once

#include <vector>

#include "textile/tensor.hpp"

namespace textile {

struct AdamConfig {
  Real beta1 = 0.9;
  Real beta2 = 0.999;
  Real eps = 1e-8;
  Real weight_decay = 0.0; // decoupled, scaled by the learning rate
};

class Adam {
public:
  Adam(AdamConfig config, const std::vector<Tensor>& params);

  // One update from the gradients currently stored on the parameters.
  void step(std::vector<Tensor>& params, Real lr);

  int steps_taken() const { return t_; }

private:
  AdamConfig config_;
  int t_ = 0;
  std::vector<std::vector<Real>> m_, v_;
};

// Linear warmup from zero to `base` over `warmup` steps, then linear decay to
// zero at `total`.
Real lr_schedule(int step, Real base, int warmup, int total);

} // namespace textile
