#pragma once

#include <cstddef>
#include <new>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace behgan::nn {

/// 64-byte aligned storage. Vectorized kernels pick their peeling by address,
/// so fixed alignment keeps float results identical from run to run.
template <class T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t alignment{64};

  AlignedAllocator() noexcept = default;
  template <class U>
  AlignedAllocator(const AlignedAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), alignment)); }
  void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, alignment); }

  template <class U>
  bool operator==(const AlignedAllocator<U>&) const noexcept { return true; }
};

using FloatBuffer = std::vector<float, AlignedAllocator<float>>;

/// Dense NCHW float tensor.
class Tensor {
 public:
  Tensor() = default;
  Tensor(int n, int c, int h, int w, float fill = 0.0f)
      : n_(n), c_(c), h_(h), w_(w), data_(static_cast<std::size_t>(n) * c * h * w, fill) {}

  int n() const noexcept { return n_; }
  int c() const noexcept { return c_; }
  int h() const noexcept { return h_; }
  int w() const noexcept { return w_; }
  std::size_t size() const noexcept { return data_.size(); }
  std::size_t sample_size() const noexcept { return static_cast<std::size_t>(c_) * h_ * w_; }
  bool same_shape(const Tensor& o) const noexcept { return n_ == o.n_ && c_ == o.c_ && h_ == o.h_ && w_ == o.w_; }

  float* data() noexcept { return data_.data(); }
  const float* data() const noexcept { return data_.data(); }
  std::span<float> span() noexcept { return data_; }
  std::span<const float> span() const noexcept { return data_; }
  float* sample(int i) noexcept { return data_.data() + i * sample_size(); }
  const float* sample(int i) const noexcept { return data_.data() + i * sample_size(); }

  float& operator()(int n, int c, int h, int w) noexcept { return data_[index(n, c, h, w)]; }
  float operator()(int n, int c, int h, int w) const noexcept { return data_[index(n, c, h, w)]; }
  float& operator[](std::size_t i) noexcept { return data_[i]; }
  float operator[](std::size_t i) const noexcept { return data_[i]; }

  void fill(float v);
  Tensor& operator+=(const Tensor& o);

 private:
  std::size_t index(int n, int c, int h, int w) const noexcept {
    return ((static_cast<std::size_t>(n) * c_ + c) * h_ + h) * w_ + w;
  }
  int n_ = 0, c_ = 0, h_ = 0, w_ = 0;
  FloatBuffer data_;
};

/// Trainable array with its gradient and Adam moments.
struct Param {
  std::string name;
  FloatBuffer value;
  FloatBuffer grad;
  FloatBuffer m;
  FloatBuffer v;

  Param() = default;
  Param(std::string n, std::size_t size) : name(std::move(n)), value(size), grad(size), m(size), v(size) {}

  std::size_t size() const noexcept { return value.size(); }
  void zero_grad();
  void init_normal(std::mt19937_64& rng, float stddev);
};

}  // namespace behgan::nn
