#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <tuple>

#include "behgan/errors.hpp"
#include "behgan/metrics.hpp"

namespace behgan {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Edge {
  double value;
  int a, b;
};

struct Triangle {
  double value;
  int last_edge;  // filtration index of its latest edge
  int e[3];
};

// Sorted symmetric difference, in place into `a`.
void add_mod2(std::vector<int>& a, const std::vector<int>& b, std::vector<int>& scratch) {
  scratch.clear();
  std::set_symmetric_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(scratch));
  a.swap(scratch);
}

}  // namespace

std::vector<PersistenceInterval> witness_h1_intervals(const std::vector<double>& dist2, std::size_t n_points,
                                                      const std::vector<std::size_t>& landmarks, double alpha_max) {
  const int L = static_cast<int>(landmarks.size());
  if (n_points == 0 || dist2.size() % n_points != 0) throw DimensionMismatch();
  const std::size_t n_w = dist2.size() / n_points;

  // Lazy witness filtration value of every landmark pair that enters below alpha_max.
  std::vector<double> pair(static_cast<std::size_t>(L) * L, kInf);
  std::vector<double> d(static_cast<std::size_t>(L));
  std::vector<int> near;
  for (std::size_t w = 0; w < n_w; ++w) {
    const double* row = dist2.data() + w * n_points;
    double m = kInf;
    for (int l = 0; l < L; ++l) {
      d[l] = row[landmarks[l]];
      m = std::min(m, d[l]);
    }
    near.clear();
    for (int l = 0; l < L; ++l)
      if (d[l] - m <= alpha_max) near.push_back(l);
    for (std::size_t i = 0; i < near.size(); ++i)
      for (std::size_t j = i + 1; j < near.size(); ++j) {
        const int a = near[i], b = near[j];
        const double v = std::max(d[a], d[b]) - m;
        double& slot = pair[static_cast<std::size_t>(a) * L + b];
        slot = std::min(slot, v);
      }
  }

  std::vector<Edge> edges;
  for (int a = 0; a < L; ++a)
    for (int b = a + 1; b < L; ++b) {
      const double v = pair[static_cast<std::size_t>(a) * L + b];
      if (v <= alpha_max) edges.push_back({v, a, b});
    }
  std::sort(edges.begin(), edges.end(), [](const Edge& x, const Edge& y) {
    return std::tie(x.value, x.a, x.b) < std::tie(y.value, y.a, y.b);
  });
  std::vector<int> index(static_cast<std::size_t>(L) * L, -1);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    index[static_cast<std::size_t>(edges[i].a) * L + edges[i].b] = static_cast<int>(i);
    index[static_cast<std::size_t>(edges[i].b) * L + edges[i].a] = static_cast<int>(i);
  }

  std::vector<Triangle> tris;
  for (int a = 0; a < L; ++a)
    for (int b = a + 1; b < L; ++b) {
      const int ab = index[static_cast<std::size_t>(a) * L + b];
      if (ab < 0) continue;
      for (int c = b + 1; c < L; ++c) {
        const int ac = index[static_cast<std::size_t>(a) * L + c];
        const int bc = index[static_cast<std::size_t>(b) * L + c];
        if (ac < 0 || bc < 0) continue;
        Triangle t{};
        t.e[0] = ab, t.e[1] = ac, t.e[2] = bc;
        std::sort(t.e, t.e + 3);
        t.last_edge = t.e[2];
        t.value = edges[t.last_edge].value;
        tris.push_back(t);
      }
    }
  std::sort(tris.begin(), tris.end(), [](const Triangle& x, const Triangle& y) {
    return std::tie(x.last_edge, x.e[1], x.e[0]) < std::tie(y.last_edge, y.e[1], y.e[0]);
  });

  // Edges closing a cycle are the only possible H1 births.
  std::vector<int> parent(static_cast<std::size_t>(L));
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  std::vector<bool> positive(edges.size(), false);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const int ra = find(edges[i].a), rb = find(edges[i].b);
    if (ra == rb)
      positive[i] = true;
    else
      parent[ra] = rb;
  }

  std::vector<int> owner(edges.size(), -1);
  std::vector<std::vector<int>> reduced(tris.size());
  std::vector<bool> paired(edges.size(), false);
  std::vector<PersistenceInterval> out;
  std::vector<int> scratch;
  for (std::size_t t = 0; t < tris.size(); ++t) {
    std::vector<int> col(tris[t].e, tris[t].e + 3);
    while (!col.empty() && owner[col.back()] >= 0) add_mod2(col, reduced[owner[col.back()]], scratch);
    if (col.empty()) continue;
    const int low = col.back();
    owner[low] = static_cast<int>(t);
    paired[low] = true;
    if (tris[t].value > edges[low].value) out.push_back({edges[low].value, tris[t].value});
    reduced[t] = std::move(col);
  }
  for (std::size_t i = 0; i < edges.size(); ++i)
    if (positive[i] && !paired[i]) out.push_back({edges[i].value, kInf});
  return out;
}

std::vector<double> relative_living_times(const std::vector<PersistenceInterval>& intervals, double alpha_max,
                                          int i_max) {
  std::vector<double> rlt(static_cast<std::size_t>(i_max), 0.0);
  if (i_max <= 0) return rlt;
  if (!(alpha_max > 0.0)) {
    rlt[0] = 1.0;
    return rlt;
  }
  std::vector<std::pair<double, int>> events;
  for (const auto& iv : intervals) {
    const double b = std::max(iv.birth, 0.0);
    const double e = std::min(iv.death, alpha_max);
    if (b >= e) continue;
    events.emplace_back(b, +1);
    events.emplace_back(e, -1);
  }
  std::sort(events.begin(), events.end());
  double at = 0.0;
  int alive = 0;
  for (const auto& [x, delta] : events) {
    if (x > at && alive < i_max) rlt[alive] += x - at;
    at = std::max(at, x);
    alive += delta;
  }
  if (alpha_max > at && alive < i_max) rlt[alive] += alpha_max - at;
  for (auto& v : rlt) v /= alpha_max;
  return rlt;
}

std::vector<double> mean_relative_living_times(const FeatureSet& points, const GeometryScoreParams& params) {
  const std::size_t n = points.size();
  if (n < std::max<std::size_t>(params.min_samples, 2)) throw TooFewSamples(n, std::max<std::size_t>(params.min_samples, 2));
  const auto dim = static_cast<Eigen::Index>(points.front().size());
  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), dim);
  for (std::size_t i = 0; i < n; ++i) {
    if (static_cast<Eigen::Index>(points[i].size()) != dim) throw DimensionMismatch();
    for (Eigen::Index j = 0; j < dim; ++j) x(static_cast<Eigen::Index>(i), j) = points[i][static_cast<std::size_t>(j)];
  }
  const Eigen::VectorXd sq = x.rowwise().squaredNorm();
  const Eigen::MatrixXd gram = x * x.transpose();
  std::vector<double> dist2(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const auto a = static_cast<Eigen::Index>(i), b = static_cast<Eigen::Index>(j);
      dist2[i * n + j] = i == j ? 0.0 : std::max(sq(a) + sq(b) - 2.0 * gram(a, b), 0.0);
    }

  const std::size_t L = std::min<std::size_t>(static_cast<std::size_t>(std::max(params.landmarks, 2)), n);
  std::mt19937_64 rng(params.seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> mean(static_cast<std::size_t>(params.i_max), 0.0);
  const int iters = std::max(params.iterations, 1);
  for (int it = 0; it < iters; ++it) {
    for (std::size_t k = 0; k < L; ++k) {
      std::uniform_int_distribution<std::size_t> pick(k, n - 1);
      std::swap(order[k], order[pick(rng)]);
    }
    std::vector<std::size_t> lm(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(L));
    double far = 0.0;
    for (std::size_t w = 0; w < n; ++w)
      for (std::size_t l : lm) far = std::max(far, dist2[w * n + l]);
    const double alpha_max = params.gamma * far;
    const auto rlt = relative_living_times(witness_h1_intervals(dist2, n, lm, alpha_max), alpha_max, params.i_max);
    for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += rlt[i];
  }
  for (auto& v : mean) v /= iters;
  return mean;
}

double geometry_score(const FeatureSet& real, const FeatureSet& generated, const GeometryScoreParams& params) {
  const auto a = mean_relative_living_times(real, params);
  const auto b = mean_relative_living_times(generated, params);
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

FeatureSet flatten_images(const std::vector<GlyphImage>& images) {
  int w = 0, h = 0;
  for (const auto& img : images) {
    w = std::max(w, img.width);
    h = std::max(h, img.height);
  }
  FeatureSet out;
  out.reserve(images.size());
  for (const auto& img : images) {
    FeatureVector v(static_cast<std::size_t>(w) * h, 1.0f);
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x) v[static_cast<std::size_t>(y) * w + x] = img.at(x, y) / 255.0f;
    out.push_back(std::move(v));
  }
  return out;
}

}  // namespace behgan
