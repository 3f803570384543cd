#pragma once

#include <cstdint>
#include <vector>

#include "spikelink/tensor.hpp"

namespace spikelink::ag {

struct AdamOptions {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam with bias correction. Moments are allocated on the first step and
/// are matched to parameters by position.
class Adam {
 public:
  explicit Adam(AdamOptions options = {}) : options_(options) {}

  void step(std::vector<Tensor>& params);
  [[nodiscard]] std::uint64_t steps() const noexcept { return step_; }
  [[nodiscard]] const AdamOptions& options() const noexcept { return options_; }

 private:
  AdamOptions options_;
  std::uint64_t step_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

void zero_grad(std::vector<Tensor>& params);

}  // namespace spikelink::ag
