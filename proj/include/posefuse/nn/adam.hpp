#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "posefuse/nn/layers.hpp"

namespace posefuse::nn {

struct AdamConfig {
  double learning_rate = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// One bias-corrected Adam update of a flat parameter buffer. `step` is the
/// 1-based update count used for bias correction.
void adam_update(std::span<double> params, std::span<const double> grads, std::span<double> first_moment,
                 std::span<double> second_moment, std::uint64_t step, const AdamConfig& config);

/// Adam over a fixed parameter list. Moments are sized on the first step and
/// the parameter list must keep its order and shapes afterwards.
class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}

  void step(const std::vector<Parameter>& params);
  std::uint64_t steps_taken() const { return step_; }
  const AdamConfig& config() const { return config_; }

 private:
  AdamConfig config_;
  std::uint64_t step_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

}  // namespace posefuse::nn
