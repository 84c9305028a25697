#pragma once

#include <cstdint>
#include <vector>

#include "igsd/tensor.hpp"

namespace igsd {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam with bias correction. Parameters update only through step(), which
/// also zeroes the consumed gradients.
class Adam {
 public:
  Adam(std::vector<Tensor> params, AdamConfig cfg = {});

  /// One update over all parameters. Throws StateError when a parameter has
  /// no gradient buffer (call backward, or ensure_grad for detached params).
  void step();

  std::int64_t step_count() const { return step_count_; }
  const AdamConfig& config() const { return cfg_; }

 private:
  std::vector<Tensor> params_;
  std::vector<Mat> m_;
  std::vector<Mat> v_;
  AdamConfig cfg_;
  std::int64_t step_count_ = 0;
};

}  // namespace igsd
