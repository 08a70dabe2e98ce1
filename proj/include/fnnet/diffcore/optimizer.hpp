#pragma once

#include <cstddef>
#include <vector>

#include "fnnet/diffcore/graph.hpp"

namespace fnnet::diff {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam with bias correction. Moment buffers are keyed by position in the
// parameter list, which must stay the same between steps.
class Adam {
 public:
  explicit Adam(AdamConfig config = {});

  // Applies one update from each Parameter::grad. Does not clear gradients.
  void step(const std::vector<Parameter*>& params);

  std::size_t steps_taken() const noexcept { return t_; }
  const AdamConfig& config() const noexcept { return config_; }

 private:
  AdamConfig config_;
  std::size_t t_ = 0;
  std::vector<Tensor> m_, v_;
};

}  // namespace fnnet::diff
