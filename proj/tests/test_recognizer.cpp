#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "behgan/errors.hpp"
#include "behgan/recognizer.hpp"
#include "behgan/trainer.hpp"
#include "test_util.hpp"

using namespace behgan;

TEST_CASE("frame count follows the slot count") {
  Recognizer r(testing::tiny_models().recognizer, 5, 1);
  CHECK(r.recognize(testing::stroke_image(3)).frames == 12);
  CHECK(r.recognize(testing::stroke_image(1)).frames == 4);
  CHECK(r.recognize(testing::stroke_image(2)).classes == 6);
  CHECK(r.blank_id() == 5);
}

TEST_CASE("white input gives finite output") {
  Recognizer r(RecognizerConfig{}, 5, 2);
  const auto seq = r.recognize(GlyphImage(32, 32, 2));
  for (double v : seq.values) CHECK(std::isfinite(v));
  CHECK(r.embed(GlyphImage(32, 32, 2)).size() == static_cast<std::size_t>(r.feature_dim()));
}

TEST_CASE("updates accept dataset batches only") {
  Recognizer r(testing::tiny_models().recognizer, 5, 3);
  nn::Adam opt(r.parameters(), {1e-3, 0.9, 0.999, 1e-8});
  const auto img = testing::stroke_image(1);
  WordSpec w;
  w.keys = "k";
  w.class_ids = {0};
  RecognizerBatch b{images_to_tensor({&img}), {w}, SampleSource::generator};
  CHECK_THROWS_AS(r.fit_step(b, opt), std::logic_error);
  b.source = SampleSource::dataset;
  CHECK(std::isfinite(r.fit_step(b, opt)));
}

TEST_CASE("recognizer learns a small stroke alphabet") {
  const auto vocab = CharVocabulary::default_bengali();
  const auto train = testing::stroke_samples(300, 1), held = testing::stroke_samples(60, 2);
  Recognizer r(RecognizerConfig{}, vocab.size(), 4);
  RecognizerTraining cfg;
  cfg.epochs = 12;
  const auto losses = train_recognizer(r, train, cfg);
  CHECK(losses.size() == 12);
  CHECK(losses.back() < losses.front());
  CHECK(word_accuracy(r, held, vocab) >= 0.9);
}

TEST_CASE("input gradient matches finite differences") {
  Recognizer r(testing::tiny_models().recognizer, 5, 5);
  std::mt19937_64 rng(3);
  const auto img = testing::random_image(32, 32, rng, 2);
  nn::Tensor x = images_to_tensor({&img});
  WordSpec w;
  w.keys = "kl";
  w.class_ids = {0, 1};
  nn::Tensor g;
  r.set_accumulate(false);
  (void)batch_ctc_loss(r.forward(x), {w}, &g);
  const nn::Tensor gx = r.backward(g);
  for (std::size_t i = 0; i < x.size(); i += 53) {
    nn::Tensor a = x, b = x;
    a[i] += 1e-2f;
    b[i] -= 1e-2f;
    const double num = (batch_ctc_loss(r.forward(a), {w}, nullptr) - batch_ctc_loss(r.forward(b), {w}, nullptr)) / 2e-2;
    CHECK(std::fabs(gx[i] - num) <= 2e-2 * std::max(1.0, std::fabs(num)));
  }
}
