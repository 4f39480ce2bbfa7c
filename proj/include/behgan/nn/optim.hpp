#pragma once

#include <cstdint>
#include <vector>

#include "behgan/nn/tensor.hpp"

namespace behgan::nn {

struct AdamConfig {
  double lr = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam with bias correction. Moments live in Param so checkpoints carry
/// them; only the step counter is kept here.
class Adam {
 public:
  Adam() = default;
  Adam(std::vector<Param*> params, AdamConfig config) : params_(std::move(params)), config_(config) {}

  void step();
  // Points the optimizer at a (moved or copied) parameter set.
  void rebind(std::vector<Param*> params) { params_ = std::move(params); }
  void zero_grad();

  std::int64_t steps() const noexcept { return t_; }
  void set_steps(std::int64_t t) noexcept { t_ = t; }
  const AdamConfig& config() const noexcept { return config_; }

 private:
  std::vector<Param*> params_;
  AdamConfig config_;
  std::int64_t t_ = 0;
};

void zero_grads(const std::vector<Param*>& params);
// Sum of squared gradients.
double grad_norm_sq(const std::vector<Param*>& params);

}  // namespace behgan::nn
