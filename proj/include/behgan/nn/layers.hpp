#pragma once

#include <random>
#include <vector>

#include "behgan/nn/tensor.hpp"

namespace behgan::nn {

// Every layer caches what its backward pass needs during forward. Parameter
// gradients accumulate until Param::zero_grad; set `accumulate = false` to
// only propagate input gradients.

class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(std::string name, int in_ch, int out_ch, int kh, int kw, int stride, int pad_h, int pad_w,
         std::mt19937_64& rng, bool spectral_norm = false);

  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& grad_out);

  /// One power-iteration step refreshing the spectral-norm estimate. Only
  /// the owner's update step calls this, so plain forwards stay pure.
  void refresh_spectral();

  void collect(std::vector<Param*>& out) { out.push_back(&weight_); out.push_back(&bias_); }
  void collect_buffers(std::vector<FloatBuffer*>& out) { if (spectral_) { out.push_back(&u_); out.push_back(&v_); } }
  bool accumulate = true;

  int in_channels() const noexcept { return in_; }
  int out_channels() const noexcept { return out_; }
  int kernel_h() const noexcept { return kh_; }
  int kernel_w() const noexcept { return kw_; }
  int stride() const noexcept { return stride_; }
  double sigma() const noexcept { return sigma_; }

 private:
  void compute_sigma();
  FloatBuffer effective_weight() const;

  int in_ = 0, out_ = 0, kh_ = 1, kw_ = 1, stride_ = 1, ph_ = 0, pw_ = 0;
  bool spectral_ = false;
  Param weight_, bias_;
  FloatBuffer u_, v_;
  double sigma_ = 1.0;

  // forward cache
  int batch_ = 0, in_h_ = 0, in_w_ = 0, out_h_ = 0, out_w_ = 0;
  FloatBuffer cols_;
  FloatBuffer w_eff_;
};

/// y = W x + b over rows of a (rows x in) matrix.
class Linear {
 public:
  Linear() = default;
  Linear(std::string name, int in, int out, std::mt19937_64& rng, float init_std = -1.0f);

  // x: rows*in values; returns rows*out.
  FloatBuffer forward(const FloatBuffer& x, int rows);
  FloatBuffer backward(const FloatBuffer& grad_out);

  void collect(std::vector<Param*>& out) { out.push_back(&weight_); out.push_back(&bias_); }
  Param& bias() { return bias_; }
  Param& weight() { return weight_; }
  bool accumulate = true;
  int in_features() const noexcept { return in_; }
  int out_features() const noexcept { return out_; }

 private:
  int in_ = 0, out_ = 0, rows_ = 0;
  Param weight_, bias_;
  FloatBuffer x_;
};

enum class ActKind { relu, leaky_relu, tanh };

class Activation {
 public:
  explicit Activation(ActKind kind = ActKind::relu, float slope = 0.2f) : kind_(kind), slope_(slope) {}
  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& grad_out) const;

 private:
  ActKind kind_;
  float slope_;
  Tensor cache_;  // input for relu variants, output for tanh
};

class Upsample2x {
 public:
  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& grad_out) const;
};

class AvgPool2x {
 public:
  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& grad_out) const;

 private:
  int h_ = 0, w_ = 0;
};

class MaxPool2x {
 public:
  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& grad_out) const;

 private:
  int n_ = 0, c_ = 0, h_ = 0, w_ = 0;
  std::vector<std::size_t> argmax_;
};

/// Per-pixel channel normalization whose gain and bias are linear functions
/// of the conditioning row of the character owning each column:
///   y = x / rms_c(x) * (1 + gain(cond)) + bias(cond)
/// Columns map to characters by w / (W / n_chars), so the layer never mixes
/// information across columns.
class CondPixelNorm {
 public:
  CondPixelNorm() = default;
  CondPixelNorm(std::string name, int channels, int cond_dim, std::mt19937_64& rng);

  // cond: batch * n_chars * cond_dim values.
  Tensor forward(const Tensor& x, const FloatBuffer& cond, int n_chars);
  // Returns grad w.r.t. x; adds grad w.r.t. cond into cond_grad.
  Tensor backward(const Tensor& grad_out, FloatBuffer& cond_grad);

  void collect(std::vector<Param*>& out) { gain_.collect(out); bias_.collect(out); }
  void set_accumulate(bool on) { gain_.accumulate = on; bias_.accumulate = on; }

 private:
  int channels_ = 0;
  int n_chars_ = 0;
  Linear gain_, bias_;
  Tensor xhat_;
  FloatBuffer inv_rms_;  // per (n, h, w)
  FloatBuffer gain_out_, bias_out_;
};

}  // namespace behgan::nn
