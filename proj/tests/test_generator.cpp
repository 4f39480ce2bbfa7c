#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "behgan/errors.hpp"
#include "behgan/generator.hpp"
#include "behgan/trainer.hpp"
#include "test_util.hpp"

using namespace behgan;

namespace {

// Trace the horizontal span reached by one latent column through the layer
// list: each k-wide conv widens it by (k-1)/2 per side, each nearest 2x
// upsample doubles the coordinates.
int traced_overlap(const GeneratorConfig& c) {
  int lo = 0, hi = c.char_base_width;  // slot 0 of a 1-char-wide latent, [lo, hi)
  for (int s = 0; s <= c.n_upsample_stages; ++s) {
    const int r = (c.kernel_sizes[s] - 1) / 2;
    lo -= r;
    hi += r;
    if (s < c.n_upsample_stages) {
      lo *= 2;
      hi *= 2;
    }
  }
  return std::max(0, -lo);
}

// Widest distance outside slot i at which zeroing row i changes a pixel.
int measured_reach(Generator& g, const WordSpec& word, const NoiseVector& z, int i) {
  CharConditioning c = g.make_conditioning(word, z);
  const nn::Tensor a = g.forward(std::vector<CharConditioning>{c});
  for (auto& v : c.row(i)) v = 0.0f;
  const nn::Tensor b = g.forward(std::vector<CharConditioning>{c});
  int reach = 0;
  for (int y = 0; y < a.h(); ++y)
    for (int x = 0; x < a.w(); ++x)
      if (a(0, 0, y, x) != b(0, 0, y, x)) {
        const int left = 16 * i - x, right = x - (16 * (i + 1) - 1);
        reach = std::max({reach, left, right});
      }
  return reach;
}

WordSpec word_of(std::vector<int> ids) {
  WordSpec w;
  for (int id : ids) w.keys.push_back("klmnp"[id]);
  w.class_ids = std::move(ids);
  return w;
}

GeneratorConfig small_config() {
  GeneratorConfig c;
  c.d_z = 16;
  c.channels = {16, 8, 8};
  return c;
}

}  // namespace

TEST_CASE("width law for n = 1..8 on an untrained model") {
  Generator g(small_config(), 5, 1);
  for (int n = 1; n <= 8; ++n) {
    std::vector<int> ids(n);
    for (int i = 0; i < n; ++i) ids[i] = i % 5;
    const GlyphImage img = g.generate(word_of(ids), NoiseVector::sample(16, 3));
    CHECK(img.width == 16 * n);
    CHECK(img.height == 32);
    CHECK(img.n_chars == n);
  }
}

TEST_CASE("conditioning rows") {
  Generator g(small_config(), 5, 2);
  const NoiseVector z = NoiseVector::sample(16, 4);
  const auto c = g.make_conditioning(word_of({0, 1, 2}), z);
  CHECK(c.n_chars == 3);
  CHECK(c.rows.size() == 3 * 16);

  const auto kk = g.make_conditioning(word_of({0, 0}), z);
  CHECK(std::equal(kk.row(0).begin(), kk.row(0).end(), kk.row(1).begin()));

  const auto zero = g.make_conditioning(word_of({0, 3, 4}), NoiseVector::zeros(16));
  CHECK(std::all_of(zero.rows.begin(), zero.rows.end(), [](float v) { return v == 0.0f; }));

  // "k" at position 0 of "kl" and position 1 of "lk" share one row.
  const auto a = g.make_conditioning(word_of({0, 1}), z), b = g.make_conditioning(word_of({1, 0}), z);
  CHECK(std::equal(a.row(0).begin(), a.row(0).end(), b.row(1).begin()));
}

TEST_CASE("shared letters diverge only within the overlap") {
  Generator g(small_config(), 5, 5);
  const NoiseVector z = NoiseVector::sample(16, 6);
  const GlyphImage a = g.generate(word_of({0, 1, 2}), z), b = g.generate(word_of({0, 3, 2}), z);
  const int ov = receptive_field_overlap(g.config());
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 16 - ov; ++x) CHECK(a.at(x, y) == b.at(x, y));
}

TEST_CASE("receptive field overlap matches the layer trace") {
  GeneratorConfig def;
  CHECK(receptive_field_overlap(def) == traced_overlap(def));
  CHECK(receptive_field_overlap(def) >= 4);

  GeneratorConfig one;
  one.n_upsample_stages = 1;
  one.char_base_width = 8;
  one.base_height = 16;
  one.channels = {16, 8};
  one.kernel_sizes = {3, 1};
  CHECK(receptive_field_overlap(one) == 2);
  CHECK(traced_overlap(one) == 2);

  GeneratorConfig pointwise = def;
  pointwise.kernel_sizes = {1, 1, 1};
  CHECK(receptive_field_overlap(pointwise) == 0);
}

TEST_CASE("locality: zeroing a character stays within the overlap") {
  GeneratorConfig c = small_config();
  Generator g(c, 5, 7);
  const NoiseVector z = NoiseVector::sample(16, 8);
  const WordSpec w = word_of({0, 1, 2, 3, 4});
  for (int i = 0; i < 5; ++i) {
    const int reach = measured_reach(g, w, z, i);
    CHECK(reach <= receptive_field_overlap(c));
    if (i > 0 && i < 4) CHECK(reach == receptive_field_overlap(c));
  }
  GeneratorConfig pointwise = c;
  pointwise.kernel_sizes = {1, 1, 1};
  Generator p(pointwise, 5, 7);
  CHECK(measured_reach(p, w, z, 2) == 0);
}

TEST_CASE("generate is deterministic and noise-sensitive") {
  Generator g(small_config(), 5, 9);
  const WordSpec w = word_of({1, 2});
  const NoiseVector z = NoiseVector::sample(16, 1);
  CHECK(g.generate(w, z) == g.generate(w, z));
  CHECK(g.generate(w, z) != g.generate(w, NoiseVector::sample(16, 2)));
}

TEST_CASE("errors") {
  Generator unloaded;
  CHECK_THROWS_AS(unloaded.generate(word_of({0}), NoiseVector::sample(16, 1)), ModelNotLoaded);
  Generator g(small_config(), 5, 1);
  CHECK_THROWS_AS(g.generate(word_of({7}), NoiseVector::sample(16, 1)), ClassOutOfRange);
  CHECK_THROWS_AS(g.generate(word_of({0}), NoiseVector::sample(8, 1)), DimensionMismatch);
  GeneratorConfig bad = small_config();
  bad.kernel_sizes = {2, 3, 3};
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("generator gradients match finite differences on the embedding") {
  Generator g(small_config(), 5, 11);
  const std::vector<WordSpec> words = {word_of({0, 1})};
  const std::vector<NoiseVector> zs = {NoiseVector::sample(16, 2)};
  const nn::Tensor out = g.forward(words, zs);
  nn::Tensor r(out.n(), out.c(), out.h(), out.w());
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = std::sin(0.37f * static_cast<float>(i));
  auto loss = [&] {
    const nn::Tensor y = g.forward(words, zs);
    double s = 0;
    for (std::size_t i = 0; i < y.size(); ++i) s += static_cast<double>(y[i]) * r[i];
    return s;
  };
  auto params = g.parameters();
  for (auto* p : params) p->zero_grad();
  (void)g.forward(words, zs);
  g.backward(r);
  auto numeric = [&](nn::Param* p, std::size_t i, float eps) {
    const float keep = p->value[i];
    p->value[i] = keep + eps;
    const double up = loss();
    p->value[i] = keep - eps;
    const double down = loss();
    p->value[i] = keep;
    return (up - down) / (2.0 * eps);
  };
  // Probes whose two step sizes disagree straddle a ReLU kink and are skipped.
  int checked = 0, skipped = 0;
  for (auto* p : params) {
    for (std::size_t i = 0; i < p->size(); i += std::max<std::size_t>(1, p->size() / 7)) {
      const double a = numeric(p, i, 1e-3f), b = numeric(p, i, 5e-4f);
      if (std::fabs(a - b) > 1e-2 * std::max(1.0, std::fabs(a))) {
        ++skipped;
        continue;
      }
      ++checked;
      INFO(p->name, " ", i, " ", p->grad[i], " ", a);
      CHECK(std::fabs(p->grad[i] - a) <= 2e-2 * std::max(1.0, std::fabs(a)));
    }
  }
  CHECK(skipped * 5 < checked);
}

TEST_CASE("noise changes the output of a trained model") {
  Trainer t(TrainConfig{}, CharVocabulary::default_bengali(), testing::tiny_models());
  t.set_data(testing::stroke_samples(32, 3));
  t.run_epoch();
  Generator& g = t.generator();
  const WordSpec w = word_of({0, 2, 4});
  const GlyphImage ref = g.generate(w, NoiseVector::sample(16, 100));
  double total = 0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const GlyphImage other = g.generate(w, NoiseVector::sample(16, s));
    double diff = 0;
    for (std::size_t i = 0; i < ref.pixels.size(); ++i) diff += std::abs(ref.pixels[i] - other.pixels[i]);
    total += diff / static_cast<double>(ref.pixels.size());
  }
  CHECK(total / 20 > 0.0);
}
