#include "behgan/nn/optim.hpp"

#include <cmath>

namespace behgan::nn {

void Adam::step() {
  ++t_;
  const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  const auto b1 = static_cast<float>(config_.beta1), b2 = static_cast<float>(config_.beta2);
  const auto step_size = static_cast<float>(config_.lr / c1);
  const auto inv_c2 = static_cast<float>(1.0 / c2);
  const auto eps = static_cast<float>(config_.eps);
  for (Param* p : params_) {
    for (std::size_t i = 0; i < p->size(); ++i) {
      const float g = p->grad[i];
      p->m[i] = b1 * p->m[i] + (1.0f - b1) * g;
      p->v[i] = b2 * p->v[i] + (1.0f - b2) * g * g;
      p->value[i] -= step_size * p->m[i] / (std::sqrt(p->v[i] * inv_c2) + eps);
    }
  }
}

void Adam::zero_grad() { zero_grads(params_); }

void zero_grads(const std::vector<Param*>& params) {
  for (Param* p : params) p->zero_grad();
}

double grad_norm_sq(const std::vector<Param*>& params) {
  double s = 0.0;
  for (const Param* p : params)
    for (float g : p->grad) s += static_cast<double>(g) * g;
  return s;
}

}  // namespace behgan::nn
