#include "behgan/nn/layers.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace behgan::nn {

namespace {

using MatR = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapR = Eigen::Map<MatR>;
using CMapR = Eigen::Map<const MatR>;
using VecF = Eigen::VectorXf;

constexpr float kNormEps = 1e-8f;

void normalize(FloatBuffer& v) {
  double s = 0.0;
  for (float x : v) s += static_cast<double>(x) * x;
  const auto inv = static_cast<float>(1.0 / std::sqrt(s + 1e-12));
  for (auto& x : v) x *= inv;
}

}  // namespace

// ----------------------------------------------------------------- Conv2d

Conv2d::Conv2d(std::string name, int in_ch, int out_ch, int kh, int kw, int stride, int pad_h, int pad_w,
               std::mt19937_64& rng, bool spectral_norm)
    : in_(in_ch), out_(out_ch), kh_(kh), kw_(kw), stride_(stride), ph_(pad_h), pw_(pad_w), spectral_(spectral_norm),
      weight_(name + ".weight", static_cast<std::size_t>(out_ch) * in_ch * kh * kw),
      bias_(name + ".bias", static_cast<std::size_t>(out_ch)) {
  const int fan_in = in_ch * kh * kw;
  weight_.init_normal(rng, std::sqrt(2.0f / static_cast<float>(fan_in)));
  if (spectral_) {
    u_.resize(out_);
    std::normal_distribution<float> d(0.0f, 1.0f);
    for (auto& x : u_) x = d(rng);
    normalize(u_);
    v_.assign(static_cast<std::size_t>(fan_in), 0.0f);
    for (int i = 0; i < 8; ++i) refresh_spectral();
  }
}

void Conv2d::refresh_spectral() {
  if (!spectral_) return;
  const int k = in_ * kh_ * kw_;
  CMapR w(weight_.value.data(), out_, k);
  Eigen::Map<VecF> u(u_.data(), out_), v(v_.data(), k);
  VecF nv = w.transpose() * u;
  nv /= std::max(nv.norm(), 1e-12f);
  v = nv;
  VecF nu = w * v;
  nu /= std::max(nu.norm(), 1e-12f);
  u = nu;
}

void Conv2d::compute_sigma() {
  const int k = in_ * kh_ * kw_;
  CMapR w(weight_.value.data(), out_, k);
  Eigen::Map<const VecF> u(u_.data(), out_), v(v_.data(), k);
  sigma_ = std::max(static_cast<double>(u.dot(w * v)), 1e-8);
}

FloatBuffer Conv2d::effective_weight() const {
  if (!spectral_) return weight_.value;
  FloatBuffer w = weight_.value;
  const auto inv = static_cast<float>(1.0 / sigma_);
  for (auto& x : w) x *= inv;
  return w;
}

Tensor Conv2d::forward(const Tensor& x) {
  if (x.c() != in_) throw std::invalid_argument("Conv2d: channel mismatch");
  batch_ = x.n();
  in_h_ = x.h();
  in_w_ = x.w();
  out_h_ = (in_h_ + 2 * ph_ - kh_) / stride_ + 1;
  out_w_ = (in_w_ + 2 * pw_ - kw_) / stride_ + 1;
  const int k = in_ * kh_ * kw_;
  const int hw = out_h_ * out_w_;
  const std::size_t ncols = static_cast<std::size_t>(batch_) * hw;

  cols_.assign(static_cast<std::size_t>(k) * ncols, 0.0f);
  for (int b = 0; b < batch_; ++b)
    for (int c = 0; c < in_; ++c)
      for (int i = 0; i < kh_; ++i)
        for (int j = 0; j < kw_; ++j) {
          const int row = (c * kh_ + i) * kw_ + j;
          float* dst = cols_.data() + row * ncols + static_cast<std::size_t>(b) * hw;
          for (int oy = 0; oy < out_h_; ++oy) {
            const int iy = oy * stride_ - ph_ + i;
            if (iy < 0 || iy >= in_h_) continue;
            for (int ox = 0; ox < out_w_; ++ox) {
              const int ix = ox * stride_ - pw_ + j;
              if (ix >= 0 && ix < in_w_) dst[oy * out_w_ + ox] = x(b, c, iy, ix);
            }
          }
        }

  if (spectral_) compute_sigma();
  w_eff_ = effective_weight();
  CMapR w(w_eff_.data(), out_, k);
  CMapR cols(cols_.data(), k, static_cast<Eigen::Index>(ncols));
  MatR y = w * cols;

  Tensor out(batch_, out_, out_h_, out_w_);
  for (int b = 0; b < batch_; ++b)
    for (int co = 0; co < out_; ++co) {
      const float bias = bias_.value[co];
      const float* src = y.data() + co * ncols + static_cast<std::size_t>(b) * hw;
      float* dst = out.sample(b) + static_cast<std::size_t>(co) * hw;
      for (int p = 0; p < hw; ++p) dst[p] = src[p] + bias;
    }
  return out;
}

Tensor Conv2d::backward(const Tensor& grad_out) {
  const int k = in_ * kh_ * kw_;
  const int hw = out_h_ * out_w_;
  const std::size_t ncols = static_cast<std::size_t>(batch_) * hw;

  MatR dy(out_, static_cast<Eigen::Index>(ncols));
  for (int b = 0; b < batch_; ++b)
    for (int co = 0; co < out_; ++co) {
      const float* src = grad_out.sample(b) + static_cast<std::size_t>(co) * hw;
      std::copy_n(src, hw, dy.data() + co * ncols + static_cast<std::size_t>(b) * hw);
    }

  CMapR cols(cols_.data(), k, static_cast<Eigen::Index>(ncols));
  if (accumulate) {
    MatR dw = dy * cols.transpose();
    if (spectral_) {
      CMapR w(weight_.value.data(), out_, k);
      Eigen::Map<const VecF> u(u_.data(), out_), v(v_.data(), k);
      const double inner = (dw.cwiseProduct(w)).sum();
      const auto s = static_cast<float>(sigma_);
      dw = dw / s - static_cast<float>(inner / (sigma_ * sigma_)) * (u * v.transpose());
    }
    MapR gw(weight_.grad.data(), out_, k);
    gw += dw;
    for (int co = 0; co < out_; ++co) bias_.grad[co] += dy.row(co).sum();
  }

  CMapR w(w_eff_.data(), out_, k);
  MatR dcols = w.transpose() * dy;

  Tensor dx(batch_, in_, in_h_, in_w_);
  for (int b = 0; b < batch_; ++b)
    for (int c = 0; c < in_; ++c)
      for (int i = 0; i < kh_; ++i)
        for (int j = 0; j < kw_; ++j) {
          const int row = (c * kh_ + i) * kw_ + j;
          const float* src = dcols.data() + row * ncols + static_cast<std::size_t>(b) * hw;
          for (int oy = 0; oy < out_h_; ++oy) {
            const int iy = oy * stride_ - ph_ + i;
            if (iy < 0 || iy >= in_h_) continue;
            for (int ox = 0; ox < out_w_; ++ox) {
              const int ix = ox * stride_ - pw_ + j;
              if (ix >= 0 && ix < in_w_) dx(b, c, iy, ix) += src[oy * out_w_ + ox];
            }
          }
        }
  return dx;
}

// ----------------------------------------------------------------- Linear

Linear::Linear(std::string name, int in, int out, std::mt19937_64& rng, float init_std)
    : in_(in), out_(out), weight_(name + ".weight", static_cast<std::size_t>(in) * out),
      bias_(name + ".bias", static_cast<std::size_t>(out)) {
  weight_.init_normal(rng, init_std > 0.0f ? init_std : std::sqrt(1.0f / static_cast<float>(in)));
}

FloatBuffer Linear::forward(const FloatBuffer& x, int rows) {
  if (x.size() != static_cast<std::size_t>(rows) * in_) throw std::invalid_argument("Linear: input size");
  rows_ = rows;
  x_ = x;
  FloatBuffer y(static_cast<std::size_t>(rows) * out_);
  CMapR xm(x_.data(), rows, in_);
  CMapR w(weight_.value.data(), out_, in_);
  MapR ym(y.data(), rows, out_);
  ym.noalias() = xm * w.transpose();
  Eigen::Map<const Eigen::RowVectorXf> b(bias_.value.data(), out_);
  ym.rowwise() += b;
  return y;
}

FloatBuffer Linear::backward(const FloatBuffer& grad_out) {
  CMapR dy(grad_out.data(), rows_, out_);
  CMapR xm(x_.data(), rows_, in_);
  CMapR w(weight_.value.data(), out_, in_);
  if (accumulate) {
    MapR gw(weight_.grad.data(), out_, in_);
    gw += dy.transpose() * xm;
    Eigen::Map<Eigen::RowVectorXf> gb(bias_.grad.data(), out_);
    gb += dy.colwise().sum();
  }
  FloatBuffer dx(static_cast<std::size_t>(rows_) * in_);
  MapR dxm(dx.data(), rows_, in_);
  dxm.noalias() = dy * w;
  return dx;
}

// ------------------------------------------------------------- Activation

Tensor Activation::forward(const Tensor& x) {
  Tensor y = x;
  switch (kind_) {
    case ActKind::relu:
      for (std::size_t i = 0; i < y.size(); ++i) y[i] = std::max(0.0f, y[i]);
      cache_ = x;
      break;
    case ActKind::leaky_relu:
      for (std::size_t i = 0; i < y.size(); ++i)
        if (y[i] < 0.0f) y[i] *= slope_;
      cache_ = x;
      break;
    case ActKind::tanh:
      for (std::size_t i = 0; i < y.size(); ++i) y[i] = std::tanh(y[i]);
      cache_ = y;
      break;
  }
  return y;
}

Tensor Activation::backward(const Tensor& grad_out) const {
  Tensor g = grad_out;
  switch (kind_) {
    case ActKind::relu:
      for (std::size_t i = 0; i < g.size(); ++i)
        if (cache_[i] <= 0.0f) g[i] = 0.0f;
      break;
    case ActKind::leaky_relu:
      for (std::size_t i = 0; i < g.size(); ++i)
        if (cache_[i] < 0.0f) g[i] *= slope_;
      break;
    case ActKind::tanh:
      for (std::size_t i = 0; i < g.size(); ++i) g[i] *= 1.0f - cache_[i] * cache_[i];
      break;
  }
  return g;
}

// ----------------------------------------------------------- resampling

Tensor Upsample2x::forward(const Tensor& x) {
  Tensor y(x.n(), x.c(), 2 * x.h(), 2 * x.w());
  for (int n = 0; n < x.n(); ++n)
    for (int c = 0; c < x.c(); ++c)
      for (int h = 0; h < y.h(); ++h)
        for (int w = 0; w < y.w(); ++w) y(n, c, h, w) = x(n, c, h / 2, w / 2);
  return y;
}

Tensor Upsample2x::backward(const Tensor& g) const {
  Tensor dx(g.n(), g.c(), g.h() / 2, g.w() / 2);
  for (int n = 0; n < g.n(); ++n)
    for (int c = 0; c < g.c(); ++c)
      for (int h = 0; h < g.h(); ++h)
        for (int w = 0; w < g.w(); ++w) dx(n, c, h / 2, w / 2) += g(n, c, h, w);
  return dx;
}

Tensor AvgPool2x::forward(const Tensor& x) {
  h_ = x.h();
  w_ = x.w();
  Tensor y(x.n(), x.c(), x.h() / 2, x.w() / 2);
  for (int n = 0; n < x.n(); ++n)
    for (int c = 0; c < x.c(); ++c)
      for (int h = 0; h < y.h(); ++h)
        for (int w = 0; w < y.w(); ++w)
          y(n, c, h, w) = 0.25f * (x(n, c, 2 * h, 2 * w) + x(n, c, 2 * h + 1, 2 * w) + x(n, c, 2 * h, 2 * w + 1) +
                                   x(n, c, 2 * h + 1, 2 * w + 1));
  return y;
}

Tensor AvgPool2x::backward(const Tensor& g) const {
  Tensor dx(g.n(), g.c(), h_, w_);
  for (int n = 0; n < g.n(); ++n)
    for (int c = 0; c < g.c(); ++c)
      for (int h = 0; h < g.h(); ++h)
        for (int w = 0; w < g.w(); ++w) {
          const float v = 0.25f * g(n, c, h, w);
          dx(n, c, 2 * h, 2 * w) += v;
          dx(n, c, 2 * h + 1, 2 * w) += v;
          dx(n, c, 2 * h, 2 * w + 1) += v;
          dx(n, c, 2 * h + 1, 2 * w + 1) += v;
        }
  return dx;
}

Tensor MaxPool2x::forward(const Tensor& x) {
  n_ = x.n();
  c_ = x.c();
  h_ = x.h();
  w_ = x.w();
  Tensor y(x.n(), x.c(), x.h() / 2, x.w() / 2);
  argmax_.assign(y.size(), 0);
  std::size_t o = 0;
  for (int n = 0; n < x.n(); ++n)
    for (int c = 0; c < x.c(); ++c)
      for (int h = 0; h < y.h(); ++h)
        for (int w = 0; w < y.w(); ++w, ++o) {
          float best = -std::numeric_limits<float>::infinity();
          std::size_t arg = 0;
          for (int dy = 0; dy < 2; ++dy)
            for (int dx = 0; dx < 2; ++dx) {
              const std::size_t idx = ((static_cast<std::size_t>(n) * c_ + c) * h_ + 2 * h + dy) * w_ + 2 * w + dx;
              if (x[idx] > best) {
                best = x[idx];
                arg = idx;
              }
            }
          y[o] = best;
          argmax_[o] = arg;
        }
  return y;
}

Tensor MaxPool2x::backward(const Tensor& g) const {
  Tensor dx(n_, c_, h_, w_);
  for (std::size_t o = 0; o < g.size(); ++o) dx[argmax_[o]] += g[o];
  return dx;
}

// ---------------------------------------------------------- CondPixelNorm

CondPixelNorm::CondPixelNorm(std::string name, int channels, int cond_dim, std::mt19937_64& rng)
    : channels_(channels),
      gain_(name + ".gain", cond_dim, channels, rng, 0.3f / std::sqrt(static_cast<float>(cond_dim))),
      bias_(name + ".bias", cond_dim, channels, rng, 0.3f / std::sqrt(static_cast<float>(cond_dim))) {}

Tensor CondPixelNorm::forward(const Tensor& x, const FloatBuffer& cond, int n_chars) {
  if (x.c() != channels_) throw std::invalid_argument("CondPixelNorm: channel mismatch");
  if (x.w() % n_chars != 0) throw std::invalid_argument("CondPixelNorm: width not divisible by n_chars");
  n_chars_ = n_chars;
  const int rows = x.n() * n_chars;
  gain_out_ = gain_.forward(cond, rows);
  bias_out_ = bias_.forward(cond, rows);

  const int C = x.c(), H = x.h(), W = x.w(), per_char = W / n_chars;
  xhat_ = Tensor(x.n(), C, H, W);
  inv_rms_.assign(static_cast<std::size_t>(x.n()) * H * W, 0.0f);
  Tensor y(x.n(), C, H, W);
  for (int n = 0; n < x.n(); ++n)
    for (int h = 0; h < H; ++h)
      for (int w = 0; w < W; ++w) {
        double ss = 0.0;
        for (int c = 0; c < C; ++c) ss += static_cast<double>(x(n, c, h, w)) * x(n, c, h, w);
        const auto inv = static_cast<float>(1.0 / std::sqrt(ss / C + kNormEps));
        inv_rms_[(static_cast<std::size_t>(n) * H + h) * W + w] = inv;
        const std::size_t row = static_cast<std::size_t>(n) * n_chars + w / per_char;
        const float* g = gain_out_.data() + row * C;
        const float* b = bias_out_.data() + row * C;
        for (int c = 0; c < C; ++c) {
          const float xh = x(n, c, h, w) * inv;
          xhat_(n, c, h, w) = xh;
          y(n, c, h, w) = xh * (1.0f + g[c]) + b[c];
        }
      }
  return y;
}

Tensor CondPixelNorm::backward(const Tensor& grad_out, FloatBuffer& cond_grad) {
  const int N = grad_out.n(), C = grad_out.c(), H = grad_out.h(), W = grad_out.w(), per_char = W / n_chars_;
  FloatBuffer dgain(gain_out_.size(), 0.0f), dbias(bias_out_.size(), 0.0f);
  Tensor dx(N, C, H, W);
  FloatBuffer dxhat(C);
  for (int n = 0; n < N; ++n)
    for (int h = 0; h < H; ++h)
      for (int w = 0; w < W; ++w) {
        const std::size_t row = static_cast<std::size_t>(n) * n_chars_ + w / per_char;
        const float* g = gain_out_.data() + row * C;
        double dot = 0.0;
        for (int c = 0; c < C; ++c) {
          const float dy = grad_out(n, c, h, w);
          const float xh = xhat_(n, c, h, w);
          dgain[row * C + c] += dy * xh;
          dbias[row * C + c] += dy;
          dxhat[c] = dy * (1.0f + g[c]);
          dot += static_cast<double>(dxhat[c]) * xh;
        }
        const float inv = inv_rms_[(static_cast<std::size_t>(n) * H + h) * W + w];
        const auto mean_dot = static_cast<float>(dot / C);
        for (int c = 0; c < C; ++c) dx(n, c, h, w) = inv * (dxhat[c] - xhat_(n, c, h, w) * mean_dot);
      }
  const auto dc1 = gain_.backward(dgain);
  const auto dc2 = bias_.backward(dbias);
  if (cond_grad.size() != dc1.size()) cond_grad.assign(dc1.size(), 0.0f);
  for (std::size_t i = 0; i < dc1.size(); ++i) cond_grad[i] += dc1[i] + dc2[i];
  return dx;
}

}  // namespace behgan::nn
