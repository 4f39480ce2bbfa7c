#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>

#include "behgan/nn/layers.hpp"
#include "behgan/nn/optim.hpp"

using namespace behgan::nn;

namespace {

Tensor random_tensor(int n, int c, int h, int w, std::mt19937_64& rng) {
  Tensor t(n, c, h, w);
  std::normal_distribution<float> d(0.0f, 1.0f);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = d(rng);
  return t;
}

double dot(const Tensor& a, const Tensor& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<double>(a[i]) * b[i];
  return s;
}

// Central difference of f at v[i].
double numeric(FloatBuffer& v, std::size_t i, const std::function<double()>& f, float eps = 1e-2f) {
  const float keep = v[i];
  v[i] = keep + eps;
  const double up = f();
  v[i] = keep - eps;
  const double down = f();
  v[i] = keep;
  return (up - down) / (2.0 * eps);
}

void check_close(double analytic, double num) {
  const double tol = 2e-2 * std::max(1.0, std::fabs(num));
  CHECK(std::fabs(analytic - num) <= tol);
}

void check_conv(int stride, int pad, bool spectral) {
  std::mt19937_64 rng(stride * 10 + pad + spectral);
  Conv2d conv("c", 2, 3, 3, 3, stride, pad, pad, rng, spectral);
  Tensor x = random_tensor(2, 2, 7, 6, rng);
  const Tensor probe_shape = conv.forward(x);
  const Tensor r = random_tensor(probe_shape.n(), probe_shape.c(), probe_shape.h(), probe_shape.w(), rng);
  auto loss = [&] { return dot(conv.forward(x), r); };

  std::vector<Param*> params;
  conv.collect(params);
  for (auto* p : params) p->zero_grad();
  (void)conv.forward(x);
  const Tensor gx = conv.backward(r);

  FloatBuffer xs(x.data(), x.data() + x.size());
  auto loss_x = [&] {
    std::copy(xs.begin(), xs.end(), x.data());
    return loss();
  };
  for (std::size_t i = 0; i < x.size(); i += 5) check_close(gx[i], numeric(xs, i, loss_x));
  std::copy(xs.begin(), xs.end(), x.data());
  for (auto* p : params)
    for (std::size_t i = 0; i < p->size(); i += 3) check_close(p->grad[i], numeric(p->value, i, loss));
}

}  // namespace

TEST_CASE("conv2d gradients match finite differences") {
  check_conv(1, 1, false);
  check_conv(2, 1, false);
  check_conv(1, 0, false);
}

TEST_CASE("spectrally normalized conv gradients match finite differences") { check_conv(1, 1, true); }

TEST_CASE("spectral norm tracks the largest singular value") {
  std::mt19937_64 rng(5);
  Conv2d conv("c", 4, 6, 3, 3, 1, 1, 1, rng, true);
  for (int i = 0; i < 50; ++i) conv.refresh_spectral();
  Tensor x = random_tensor(1, 4, 5, 5, rng);
  (void)conv.forward(x);
  // Brute force: power iteration on W W^T from a fresh start.
  std::vector<Param*> params;
  conv.collect(params);
  const auto& w = params[0]->value;
  const int rows = 6, cols = 4 * 9;
  std::vector<double> u(rows, 1.0), v(cols);
  double sigma = 0.0;
  for (int it = 0; it < 500; ++it) {
    for (int j = 0; j < cols; ++j) {
      v[j] = 0;
      for (int i = 0; i < rows; ++i) v[j] += w[i * cols + j] * u[i];
    }
    double nv = 0;
    for (double e : v) nv += e * e;
    nv = std::sqrt(nv);
    for (double& e : v) e /= nv;
    for (int i = 0; i < rows; ++i) {
      u[i] = 0;
      for (int j = 0; j < cols; ++j) u[i] += w[i * cols + j] * v[j];
    }
    double nu = 0;
    for (double e : u) nu += e * e;
    sigma = std::sqrt(nu);
    for (double& e : u) e /= sigma;
  }
  CHECK(conv.sigma() == doctest::Approx(sigma).epsilon(1e-3));
}

TEST_CASE("forward does not move the spectral estimate") {
  std::mt19937_64 rng(6);
  Conv2d conv("c", 2, 2, 3, 3, 1, 1, 1, rng, true);
  Tensor x = random_tensor(1, 2, 4, 4, rng);
  const Tensor a = conv.forward(x);
  const Tensor b = conv.forward(x);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("linear gradients") {
  std::mt19937_64 rng(7);
  Linear lin("l", 5, 4, rng);
  FloatBuffer x(3 * 5);
  std::normal_distribution<float> d;
  for (auto& v : x) v = d(rng);
  FloatBuffer r(3 * 4);
  for (auto& v : r) v = d(rng);
  auto loss = [&] {
    const auto y = lin.forward(x, 3);
    double s = 0;
    for (std::size_t i = 0; i < y.size(); ++i) s += y[i] * r[i];
    return s;
  };
  std::vector<Param*> params;
  lin.collect(params);
  for (auto* p : params) p->zero_grad();
  (void)lin.forward(x, 3);
  const auto gx = lin.backward(r);
  for (std::size_t i = 0; i < x.size(); ++i) check_close(gx[i], numeric(x, i, loss));
  for (auto* p : params)
    for (std::size_t i = 0; i < p->size(); ++i) check_close(p->grad[i], numeric(p->value, i, loss));
}

TEST_CASE("conditional pixel norm gradients") {
  std::mt19937_64 rng(8);
  CondPixelNorm norm("n", 3, 4, rng);
  Tensor x = random_tensor(2, 3, 2, 4, rng);  // two chars, two columns each
  FloatBuffer cond(2 * 2 * 4);
  std::normal_distribution<float> d;
  for (auto& v : cond) v = d(rng);
  const Tensor r = random_tensor(2, 3, 2, 4, rng);
  auto loss = [&] { return dot(norm.forward(x, cond, 2), r); };

  std::vector<Param*> params;
  norm.collect(params);
  for (auto* p : params) p->zero_grad();
  (void)norm.forward(x, cond, 2);
  FloatBuffer gcond(cond.size(), 0.0f);
  const Tensor gx = norm.backward(r, gcond);

  FloatBuffer xs(x.data(), x.data() + x.size());
  auto loss_x = [&] {
    std::copy(xs.begin(), xs.end(), x.data());
    return loss();
  };
  for (std::size_t i = 0; i < x.size(); ++i) check_close(gx[i], numeric(xs, i, loss_x, 1e-3f));
  std::copy(xs.begin(), xs.end(), x.data());
  for (std::size_t i = 0; i < cond.size(); ++i) check_close(gcond[i], numeric(cond, i, loss, 1e-3f));
  for (auto* p : params)
    for (std::size_t i = 0; i < p->size(); i += 2) check_close(p->grad[i], numeric(p->value, i, loss, 1e-3f));
}

TEST_CASE("conditional pixel norm keeps columns local") {
  std::mt19937_64 rng(9);
  CondPixelNorm norm("n", 2, 3, rng);
  const Tensor x = random_tensor(1, 2, 2, 6, rng);
  FloatBuffer cond(3 * 3, 0.5f);
  const Tensor a = norm.forward(x, cond, 3);
  for (int k = 0; k < 3; ++k) cond[3 * 1 + k] = 0.0f;  // middle character
  const Tensor b = norm.forward(x, cond, 3);
  for (int c = 0; c < 2; ++c)
    for (int y = 0; y < 2; ++y)
      for (int w = 0; w < 6; ++w) {
        if (w == 2 || w == 3) continue;
        CHECK(a(0, c, y, w) == b(0, c, y, w));
      }
}

TEST_CASE("resampling layers are adjoint to their backward") {
  std::mt19937_64 rng(10);
  const Tensor x = random_tensor(2, 3, 4, 6, rng);
  {
    Upsample2x up;
    const Tensor y = up.forward(x);
    CHECK(y.h() == 8);
    CHECK(y.w() == 12);
    const Tensor g = random_tensor(2, 3, 8, 12, rng);
    CHECK(dot(y, g) == doctest::Approx(dot(x, up.backward(g))).epsilon(1e-5));
  }
  {
    AvgPool2x pool;
    const Tensor y = pool.forward(x);
    const Tensor g = random_tensor(2, 3, 2, 3, rng);
    CHECK(dot(y, g) == doctest::Approx(dot(x, pool.backward(g))).epsilon(1e-5));
  }
  {
    MaxPool2x pool;
    const Tensor y = pool.forward(x);
    const Tensor g = random_tensor(2, 3, 2, 3, rng);
    CHECK(dot(y, g) == doctest::Approx(dot(x, pool.backward(g))).epsilon(1e-5));
  }
}

TEST_CASE("activations") {
  Tensor x(1, 1, 1, 3);
  x[0] = -2.0f, x[1] = 0.5f, x[2] = 3.0f;
  Activation relu(ActKind::relu), leaky(ActKind::leaky_relu, 0.2f), th(ActKind::tanh);
  const Tensor r = relu.forward(x), l = leaky.forward(x), t = th.forward(x);
  CHECK(r[0] == 0.0f);
  CHECK(r[2] == 3.0f);
  CHECK(l[0] == doctest::Approx(-0.4));
  CHECK(t[1] == doctest::Approx(std::tanh(0.5)));
  Tensor g(1, 1, 1, 3, 1.0f);
  CHECK(th.backward(g)[1] == doctest::Approx(1.0 - std::tanh(0.5) * std::tanh(0.5)));
  CHECK(leaky.backward(g)[0] == doctest::Approx(0.2));
}

TEST_CASE("adam first step moves each weight by lr against its gradient sign") {
  Param p("p", 3);
  p.value = {1.0f, 1.0f, 1.0f};
  p.grad = {0.5f, -2.0f, 0.0f};
  Adam opt({&p}, {0.1, 0.5, 0.999, 1e-8});
  opt.step();
  CHECK(p.value[0] == doctest::Approx(0.9).epsilon(1e-5));
  CHECK(p.value[1] == doctest::Approx(1.1).epsilon(1e-5));
  CHECK(p.value[2] == 1.0f);
  CHECK(opt.steps() == 1);
}
