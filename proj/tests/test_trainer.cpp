#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "behgan/checkpoint.hpp"
#include "behgan/errors.hpp"
#include "behgan/trainer.hpp"
#include "test_util.hpp"

using namespace behgan;

namespace {

TrainConfig small_config(std::uint64_t seed = 5) {
  TrainConfig c;
  c.batch_size = 4;
  c.epochs = 2;
  c.seed = seed;
  return c;
}

Trainer make_trainer(TrainConfig c = small_config(), std::size_t n = 24) {
  Trainer t(c, CharVocabulary::default_bengali(), testing::tiny_models());
  t.set_data(testing::stroke_samples(n, 11));
  return t;
}

std::vector<const LabeledImage*> first_batch(const Trainer& t, std::vector<std::size_t>* idx = nullptr) {
  const auto batches = t.epoch_batches(1);
  std::vector<const LabeledImage*> out;
  for (std::size_t i : batches.front()) out.push_back(&t.data()[i]);
  if (idx) *idx = batches.front();
  return out;
}

std::vector<float> flat_values(const std::vector<nn::Param*>& ps) {
  std::vector<float> out;
  for (auto* p : ps) out.insert(out.end(), p->value.begin(), p->value.end());
  return out;
}

}  // namespace

TEST_CASE("config parsing and validation") {
  std::istringstream in("# comment\ngamma = 0.5\nbatch_size=8\nmodel=desk\nseed=42 # tail\n");
  const TrainConfig c = TrainConfig::parse(in);
  CHECK(c.gamma == 0.5);
  CHECK(c.batch_size == 8);
  CHECK(c.model == "desk");
  CHECK(c.seed == 42);
  std::istringstream back(c.to_text());
  CHECK(TrainConfig::parse(back).to_text() == c.to_text());

  TrainConfig e = c;
  e.epochs = 99;
  CHECK(e.fingerprint() == c.fingerprint());
  e.gamma = 0.25;
  CHECK(e.fingerprint() != c.fingerprint());

  std::istringstream bad("warmup=3\n");
  CHECK_THROWS_AS(TrainConfig::parse(bad), ParseError);
  TrainConfig neg;
  neg.gamma = -1.0;
  CHECK_THROWS(neg.validate());
  TrainConfig zero_batch;
  CHECK_THROWS_AS(zero_batch.set("batch_size", "abc"), ParseError);
}

TEST_CASE("loss law with frozen critic and recognizer") {
  for (double gamma : {0.0, 1.0, 2.5}) {
    TrainConfig cfg = small_config();
    cfg.gamma = gamma;
    Trainer t = make_trainer(cfg);
    t.options.freeze_critic = true;
    t.options.freeze_recognizer = true;
    Generator g = t.generator();
    Critic d = t.critic();
    Recognizer r = t.recognizer();

    const auto batch = first_batch(t);
    const auto z = t.epoch_noise(1, 0, batch.size());
    std::vector<WordSpec> words;
    for (auto* s : batch) words.push_back(s->word);
    const nn::Tensor fake = g.forward(words, z);
    double pooled = 0;
    for (const auto& s : to_scores(d.forward(fake))) pooled += s.pooled;
    const double want_d = -pooled / static_cast<double>(batch.size());
    const double want_r = batch_ctc_loss(r.forward(fake), words, nullptr);

    const LossRecord rec = t.train_step(batch, z);
    CHECK(std::fabs(rec.L_D - want_d) <= 1e-6);
    CHECK(std::fabs(rec.L_R - want_r) <= 1e-6);
    CHECK(std::fabs(rec.L_G - (want_d + gamma * want_r)) <= 1e-6);
    CHECK(rec.generator_updated);
    CHECK(flat_values(t.critic().parameters()) == flat_values(d.parameters()));
    CHECK(flat_values(t.recognizer().parameters()) == flat_values(r.parameters()));
    CHECK(flat_values(t.generator().parameters()) != flat_values(g.parameters()));
  }
}

TEST_CASE("gradient of L_D + gamma * L_R is linear in gamma") {
  Trainer t = make_trainer();
  const auto batch = first_batch(t);
  std::vector<WordSpec> words;
  for (auto* s : batch) words.push_back(s->word);
  const auto z = t.epoch_noise(1, 0, batch.size());

  // pure adversarial gradient, assembled by hand
  Generator& g = t.generator();
  Critic& d = t.critic();
  const nn::Tensor fake = g.forward(words, z);
  d.set_accumulate(false);
  const nn::Tensor patches = d.forward(fake);
  const std::vector<float> dp(batch.size(), -1.0f / static_cast<float>(batch.size()));
  const nn::Tensor dx = d.backward(pooled_grad_to_patches(dp, patches.w()));
  d.set_accumulate(true);
  nn::zero_grads(g.parameters());
  g.backward(dx);
  std::vector<float> adv;
  for (auto* p : g.parameters()) adv.insert(adv.end(), p->grad.begin(), p->grad.end());
  nn::zero_grads(g.parameters());

  const auto g0 = t.generator_gradient(words, z, 0.0);
  const auto g1 = t.generator_gradient(words, z, 1.0);
  const auto g2 = t.generator_gradient(words, z, 2.0);
  REQUIRE(g0.grad.size() == adv.size());
  double max_diff = 0, scale = 0;
  for (std::size_t i = 0; i < adv.size(); ++i) {
    max_diff = std::max(max_diff, static_cast<double>(std::fabs(g0.grad[i] - adv[i])));
    scale = std::max(scale, static_cast<double>(std::fabs(g1.grad[i])));
  }
  CHECK(max_diff <= 1e-7);
  CHECK(g0.total == doctest::Approx(g0.adversarial));
  CHECK(g2.total == doctest::Approx(g2.adversarial + 2.0 * g2.recognition));
  for (std::size_t i = 0; i < adv.size(); ++i)
    CHECK(std::fabs((g2.grad[i] - g0.grad[i]) - 2.0 * (g1.grad[i] - g0.grad[i])) <= 1e-5 * std::max(1.0, scale));
}

TEST_CASE("training is deterministic for a fixed seed") {
  Trainer a = make_trainer(), b = make_trainer();
  a.run_epoch(), a.run_epoch();
  b.run_epoch(), b.run_epoch();
  REQUIRE(a.history().size() == b.history().size());
  CHECK(loss_csv(a.history()) == loss_csv(b.history()));
  CHECK(flat_values(a.generator().parameters()) == flat_values(b.generator().parameters()));

  Trainer c = make_trainer(small_config(6));
  c.run_epoch();
  CHECK(c.history().front().L_G != a.history().front().L_G);
}

TEST_CASE("recognizer only sees dataset batches") {
  Trainer t = make_trainer();
  t.run_epoch();
  CHECK(t.recognizer_update_sources().size() == t.history().size());
  for (auto s : t.recognizer_update_sources()) CHECK(s == SampleSource::dataset);
}

TEST_CASE("checkpoint cadence and resume") {
  testing::TempDir dir("trainer");
  TrainConfig cfg = small_config();
  cfg.epochs = 5;
  cfg.checkpoint_every = 2;
  Trainer full = make_trainer(cfg);
  const auto written = full.train(dir / "full");
  CHECK(written.size() == 3);
  CHECK(list_checkpoints(dir / "full").size() == 3);
  CHECK(checkpoint_epoch(written.back()) == 5);

  std::ifstream csv(dir / "full" / "losses.csv");
  std::string header;
  std::getline(csv, header);
  CHECK(header == "step,L_D,L_R,L_G");

  Trainer resumed = Trainer::resume(written[1], cfg, CharVocabulary::default_bengali());
  CHECK(resumed.epoch() == 4);
  resumed.set_data(testing::stroke_samples(24, 11));
  resumed.run_epoch();
  CHECK(loss_csv(resumed.history()) == loss_csv(full.history()));
  CHECK(flat_values(resumed.generator().parameters()) == flat_values(full.generator().parameters()));
  CHECK(flat_values(resumed.critic().parameters()) == flat_values(full.critic().parameters()));

  TrainConfig other = cfg;
  other.gamma = 0.5;
  CHECK_THROWS_AS(Trainer::resume(written[1], other, CharVocabulary::default_bengali()), CheckpointMismatch);
  CHECK_THROWS_AS(Trainer::resume(written[1], cfg, CharVocabulary({{"ক", 'k'}})), CheckpointMismatch);

  const auto loaded = load_generator(written.back());
  CHECK(loaded.epoch == 5);
  WordSpec w = map_word("kl", loaded.vocab);
  const auto z = NoiseVector::sample(16, 1);
  CHECK(LoadedGenerator(loaded).generator.generate(w, z) == full.generator().generate(w, z));
}

TEST_CASE("generator updates every k steps") {
  TrainConfig cfg = small_config();
  cfg.steps_per_generator_update = 2;
  Trainer t = make_trainer(cfg);
  t.run_epoch();
  for (const auto& r : t.history()) CHECK(r.generator_updated == ((r.step + 1) % 2 == 0));
}

TEST_CASE("non-finite losses abort") {
  Trainer t = make_trainer();
  for (auto* p : t.generator().parameters()) std::fill(p->value.begin(), p->value.end(), NAN);
  CHECK_THROWS_AS(t.run_epoch(), NumericalDivergence);
}

TEST_CASE("data must have slot geometry") {
  Trainer t = make_trainer();
  auto bad = testing::stroke_samples(2, 1);
  bad[0].image = GlyphImage(20, 32, 1);
  CHECK_THROWS_AS(t.set_data(bad), BadGeometry);
}
