#include "behgan/nn/tensor.hpp"

#include <algorithm>
#include <stdexcept>

namespace behgan::nn {

void Tensor::fill(float v) { std::fill(data_.begin(), data_.end(), v); }

Tensor& Tensor::operator+=(const Tensor& o) {
  if (!same_shape(o)) throw std::invalid_argument("Tensor::operator+=: shape mismatch");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
  return *this;
}

void Param::zero_grad() { std::fill(grad.begin(), grad.end(), 0.0f); }

void Param::init_normal(std::mt19937_64& rng, float stddev) {
  std::normal_distribution<float> dist(0.0f, stddev);
  for (auto& x : value) x = dist(rng);
}

}  // namespace behgan::nn
