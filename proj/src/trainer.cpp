#include "behgan/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "behgan/checkpoint.hpp"
#include "behgan/errors.hpp"
#include "json.hpp"

namespace behgan {

using nlohmann::json;

// ------------------------------------------------------------ TrainConfig

void TrainConfig::validate() const {
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw Error("gamma must be >= 0");
  if (batch_size < 1) throw Error("batch_size must be >= 1");
  if (epochs < 0) throw Error("epochs must be >= 0");
  if (!(lr_g > 0.0) || !(lr_d > 0.0) || !(lr_r > 0.0)) throw Error("learning rates must be > 0");
  if (checkpoint_every < 1) throw Error("checkpoint_every must be >= 1");
  if (steps_per_generator_update < 1) throw Error("steps_per_generator_update must be >= 1");
  (void)ModelConfig::preset(model);
}

namespace {

template <class T>
T parse_number(const std::string& key, const std::string& value) {
  std::istringstream is(value);
  T out{};
  is >> out;
  if (!is || !(is >> std::ws).eof()) throw ParseError("bad value for " + key + ": '" + value + "'");
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace

void TrainConfig::set(const std::string& key, const std::string& value) {
  if (key == "gamma") gamma = parse_number<double>(key, value);
  else if (key == "batch_size") batch_size = parse_number<int>(key, value);
  else if (key == "epochs") epochs = parse_number<int>(key, value);
  else if (key == "lr_g") lr_g = parse_number<double>(key, value);
  else if (key == "lr_d") lr_d = parse_number<double>(key, value);
  else if (key == "lr_r") lr_r = parse_number<double>(key, value);
  else if (key == "seed") seed = parse_number<std::uint64_t>(key, value);
  else if (key == "checkpoint_every") checkpoint_every = parse_number<int>(key, value);
  else if (key == "steps_per_generator_update") steps_per_generator_update = parse_number<int>(key, value);
  else if (key == "model") model = value;
  else throw ParseError("unknown config key '" + key + "'");
}

std::string TrainConfig::to_text() const {
  std::ostringstream os;
  os.precision(17);
  os << "gamma=" << gamma << "\nbatch_size=" << batch_size << "\nepochs=" << epochs << "\nlr_g=" << lr_g
     << "\nlr_d=" << lr_d << "\nlr_r=" << lr_r << "\nseed=" << seed << "\ncheckpoint_every=" << checkpoint_every
     << "\nsteps_per_generator_update=" << steps_per_generator_update << "\nmodel=" << model << "\n";
  return os.str();
}

std::string TrainConfig::fingerprint() const {
  TrainConfig c = *this;
  c.epochs = 0;
  return hex64(fnv1a(c.to_text()));
}

TrainConfig TrainConfig::parse(std::istream& in) {
  TrainConfig c;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("config line " + std::to_string(lineno) + ": expected key=value");
    c.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return c;
}

TrainConfig TrainConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw PathError("cannot open config", path);
  return parse(in);
}

ModelConfig ModelConfig::preset(const std::string& name) {
  ModelConfig m;
  if (name == "default") return m;
  if (name == "desk") {
    m.generator = GeneratorConfig::desk();
    m.critic = CriticConfig::desk();
    return m;
  }
  throw Error("unknown model preset '" + name + "'");
}

// ------------------------------------------------------ config <-> json

namespace {

json to_json(const GeneratorConfig& g) {
  return {{"d_z", g.d_z},
          {"char_base_width", g.char_base_width},
          {"base_height", g.base_height},
          {"n_upsample_stages", g.n_upsample_stages},
          {"channels", g.channels},
          {"kernel_sizes", g.kernel_sizes}};
}

GeneratorConfig generator_config(const json& j) {
  GeneratorConfig g;
  g.d_z = j.at("d_z");
  g.char_base_width = j.at("char_base_width");
  g.base_height = j.at("base_height");
  g.n_upsample_stages = j.at("n_upsample_stages");
  g.channels = j.at("channels").get<std::vector<int>>();
  g.kernel_sizes = j.at("kernel_sizes").get<std::vector<int>>();
  return g;
}

json to_json(const CriticConfig& c) {
  return {{"channels", c.channels}, {"head_width", c.head_width}, {"spectral_norm", c.spectral_norm}};
}

CriticConfig critic_config(const json& j) {
  CriticConfig c;
  c.channels = j.at("channels").get<std::vector<int>>();
  c.head_width = j.at("head_width");
  c.spectral_norm = j.at("spectral_norm");
  return c;
}

json to_json(const RecognizerConfig& r) {
  return {{"channels", r.channels}, {"feature_width", r.feature_width}, {"frames_per_slot", r.frames_per_slot}};
}

RecognizerConfig recognizer_config(const json& j) {
  RecognizerConfig r;
  r.channels = j.at("channels").get<std::vector<int>>();
  r.feature_width = j.at("feature_width");
  r.frames_per_slot = j.at("frames_per_slot");
  return r;
}

json to_json(const CharVocabulary& v) {
  json arr = json::array();
  for (const auto& e : v.entries()) arr.push_back({e.glyph, std::string(1, e.key)});
  return arr;
}

CharVocabulary vocab_from_json(const json& j) {
  std::vector<std::pair<std::string, char>> pairs;
  for (const auto& e : j) pairs.emplace_back(e.at(0).get<std::string>(), e.at(1).get<std::string>().at(0));
  return CharVocabulary(pairs);
}

json parse_meta(const Archive& a) {
  try {
    return json::parse(a.meta_json);
  } catch (const json::exception& e) {
    throw CheckpointMismatch(std::string("bad checkpoint metadata: ") + e.what());
  }
}

nn::Tensor concat_batch(const nn::Tensor& a, const nn::Tensor& b) {
  if (a.c() != b.c() || a.h() != b.h() || a.w() != b.w()) throw DimensionMismatch();
  nn::Tensor out(a.n() + b.n(), a.c(), a.h(), a.w());
  std::copy(a.data(), a.data() + a.size(), out.data());
  std::copy(b.data(), b.data() + b.size(), out.data() + a.size());
  return out;
}

void check_finite(double v, const char* which) {
  if (!std::isfinite(v)) throw NumericalDivergence(which);
}

}  // namespace

// ---------------------------------------------------------------- Trainer

Trainer::Trainer(TrainConfig config, CharVocabulary vocab)
    : Trainer(config, std::move(vocab), ModelConfig::preset(config.model)) {}

Trainer::Trainer(TrainConfig config, CharVocabulary vocab, ModelConfig models)
    : config_(std::move(config)), vocab_(std::move(vocab)), models_(std::move(models)) {
  config_.validate();
  const int n = vocab_.size();
  gen_ = Generator(models_.generator, n, mix_seed(config_.seed, 1));
  critic_ = Critic(models_.critic, mix_seed(config_.seed, 2));
  rec_ = Recognizer(models_.recognizer, n, mix_seed(config_.seed, 3));
  build_optimizers();
}

void Trainer::build_optimizers() {
  adam_g_ = nn::Adam(gen_.parameters(), {config_.lr_g, 0.5, 0.999, 1e-8});
  adam_d_ = nn::Adam(critic_.parameters(), {config_.lr_d, 0.5, 0.999, 1e-8});
  adam_r_ = nn::Adam(rec_.parameters(), {config_.lr_r, 0.9, 0.999, 1e-8});
}

void Trainer::rebind_optimizers() {
  adam_g_.rebind(gen_.parameters());
  adam_d_.rebind(critic_.parameters());
  adam_r_.rebind(rec_.parameters());
}

void Trainer::set_data(std::vector<LabeledImage> data) {
  for (const auto& s : data)
    if (!has_slot_geometry(s.image) || s.word.length() != static_cast<std::size_t>(s.image.n_chars))
      throw BadGeometry(s.image.width, s.image.height);
  data_ = std::move(data);
}

GeneratorGradient Trainer::generator_terms(const nn::Tensor& fake, const std::vector<WordSpec>& words, double gamma,
                                           nn::Tensor& grad_image) {
  GeneratorGradient out;
  const int B = fake.n();

  critic_.set_accumulate(false);
  const nn::Tensor patches = critic_.forward(fake);
  const auto scores = to_scores(patches);
  double pooled = 0.0;
  for (const auto& s : scores) pooled += s.pooled;
  out.adversarial = -pooled / B;
  const std::vector<float> d_pooled(static_cast<std::size_t>(B), -1.0f / static_cast<float>(B));
  grad_image = critic_.backward(pooled_grad_to_patches(d_pooled, patches.w()));
  critic_.set_accumulate(true);

  rec_.set_accumulate(false);
  const nn::Tensor logits = rec_.forward(fake);
  nn::Tensor d_logits;
  out.recognition = batch_ctc_loss(logits, words, &d_logits);
  if (gamma != 0.0) {
    const nn::Tensor d_rec = rec_.backward(d_logits);
    const float g = static_cast<float>(gamma);
    for (std::size_t i = 0; i < grad_image.size(); ++i) grad_image[i] += g * d_rec[i];
  }
  rec_.set_accumulate(true);

  out.total = out.adversarial + gamma * out.recognition;
  return out;
}

GeneratorGradient Trainer::generator_gradient(const std::vector<WordSpec>& words, const std::vector<NoiseVector>& z,
                                              double gamma) {
  const nn::Tensor fake = gen_.forward(words, z);
  nn::Tensor grad;
  GeneratorGradient out = generator_terms(fake, words, gamma, grad);
  const auto params = gen_.parameters();
  nn::zero_grads(params);
  gen_.set_accumulate(true);
  gen_.backward(grad);
  for (const nn::Param* p : params) out.grad.insert(out.grad.end(), p->grad.begin(), p->grad.end());
  nn::zero_grads(params);
  return out;
}

LossRecord Trainer::train_step(const std::vector<const LabeledImage*>& batch, const std::vector<NoiseVector>& z) {
  if (batch.empty()) throw EmptyBatch();
  if (z.size() != batch.size()) throw DimensionMismatch();
  std::vector<const GlyphImage*> imgs;
  std::vector<WordSpec> words;
  for (const LabeledImage* s : batch) {
    if (!has_slot_geometry(s->image)) throw BadGeometry(s->image.width, s->image.height);
    imgs.push_back(&s->image);
    words.push_back(s->word);
  }
  const nn::Tensor real = images_to_tensor(imgs);
  rebind_optimizers();

  LossRecord rec;
  rec.step = step_;
  rec.epoch = epoch_;

  // Generated batch for both the critic and the generator update; the
  // generator's forward cache stays valid until its backward below.
  gen_.set_accumulate(true);
  const nn::Tensor fake = gen_.forward(words, z);

  // Critic: hinge loss on real and generated in one pass.
  {
    if (!options.freeze_critic) critic_.refresh_spectral();
    critic_.set_accumulate(!options.freeze_critic);
    adam_d_.zero_grad();
    const nn::Tensor patches = critic_.forward(concat_batch(real, fake));
    const auto scores = to_scores(patches);
    const std::span<const CriticScore> all(scores);
    const auto real_s = all.subspan(0, batch.size()), fake_s = all.subspan(batch.size());
    rec.critic_loss = critic_loss(real_s, fake_s);
    check_finite(rec.critic_loss, "critic");
    if (!options.freeze_critic) {
      std::vector<float> d_real, d_fake;
      critic_loss_grad(real_s, fake_s, d_real, d_fake);
      d_real.insert(d_real.end(), d_fake.begin(), d_fake.end());
      critic_.backward(pooled_grad_to_patches(d_real, patches.w()));
      adam_d_.step();
    }
    critic_.set_accumulate(true);
  }

  // Recognizer: real annotated samples only.
  {
    RecognizerBatch rb{real, words, SampleSource::dataset};
    if (!options.freeze_recognizer) {
      rec.recognizer_loss = rec_.fit_step(rb, adam_r_);
      r_sources_.push_back(rb.source);
    } else {
      rec_.set_accumulate(false);
      rec.recognizer_loss = batch_ctc_loss(rec_.forward(real), words, nullptr);
      rec_.set_accumulate(true);
    }
    check_finite(rec.recognizer_loss, "recognizer");
  }

  // Generator: L_G = L_D + gamma * L_R on the generated batch.
  {
    nn::Tensor grad;
    const GeneratorGradient g = generator_terms(fake, words, config_.gamma, grad);
    rec.L_D = g.adversarial;
    rec.L_R = g.recognition;
    rec.L_G = g.total;
    check_finite(rec.L_D, "generator adversarial");
    check_finite(rec.L_R, "generator recognition");
    rec.generator_updated = (step_ + 1) % config_.steps_per_generator_update == 0;
    if (rec.generator_updated) {
      adam_g_.zero_grad();
      gen_.backward(grad);
      adam_g_.step();
    }
  }

  ++step_;
  history_.push_back(rec);
  return rec;
}

std::vector<std::vector<std::size_t>> length_batches(const std::vector<LabeledImage>& samples, int batch_size,
                                                     std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::map<int, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < samples.size(); ++i) groups[samples[i].image.n_chars].push_back(i);
  std::vector<std::vector<std::size_t>> batches;
  for (auto& [len, idx] : groups) {
    std::shuffle(idx.begin(), idx.end(), rng);
    for (std::size_t b = 0; b < idx.size(); b += static_cast<std::size_t>(batch_size))
      batches.emplace_back(idx.begin() + static_cast<std::ptrdiff_t>(b),
                           idx.begin() + static_cast<std::ptrdiff_t>(std::min(idx.size(), b + batch_size)));
  }
  std::shuffle(batches.begin(), batches.end(), rng);
  return batches;
}

std::vector<std::vector<std::size_t>> Trainer::epoch_batches(int epoch) const {
  return length_batches(data_, config_.batch_size, mix_seed(config_.seed, 0x1000 + static_cast<std::uint64_t>(epoch)));
}

std::vector<NoiseVector> Trainer::epoch_noise(int epoch, std::size_t batch_index, std::size_t count) const {
  const std::uint64_t base = mix_seed(config_.seed, 0x2000 + static_cast<std::uint64_t>(epoch));
  std::vector<NoiseVector> z;
  for (std::size_t i = 0; i < count; ++i)
    z.push_back(NoiseVector::sample(models_.generator.d_z, mix_seed(base, batch_index * 4096 + i)));
  return z;
}

std::vector<LossRecord> Trainer::run_epoch() {
  if (data_.empty()) throw EmptyBatch();
  const int epoch = epoch_ + 1;
  const auto batches = epoch_batches(epoch);
  std::vector<LossRecord> out;
  epoch_ = epoch;
  for (std::size_t b = 0; b < batches.size(); ++b) {
    std::vector<const LabeledImage*> batch;
    for (std::size_t i : batches[b]) batch.push_back(&data_[i]);
    out.push_back(train_step(batch, epoch_noise(epoch, b, batch.size())));
  }
  return out;
}

std::vector<std::filesystem::path> Trainer::train(const std::filesystem::path& out_dir, const EpochCallback& on_epoch) {
  std::filesystem::create_directories(out_dir);
  std::vector<std::filesystem::path> written;
  while (epoch_ < config_.epochs) {
    const auto records = run_epoch();
    if (on_epoch) on_epoch(epoch_, records);
    if (epoch_ % config_.checkpoint_every == 0 || epoch_ == config_.epochs) {
      const auto path = out_dir / checkpoint_name(epoch_);
      save(path);
      written.push_back(path);
      write_loss_csv(history_, out_dir / "losses.csv");
    }
  }
  write_loss_csv(history_, out_dir / "losses.csv");
  return written;
}

void Trainer::save(const std::filesystem::path& path) {
  json meta;
  meta["format"] = 1;
  meta["epoch"] = epoch_;
  meta["step"] = step_;
  meta["train_config"] = config_.to_text();
  meta["train_fingerprint"] = config_.fingerprint();
  meta["vocab"] = to_json(vocab_);
  meta["vocab_fingerprint"] = hex64(vocab_.fingerprint());
  meta["generator"] = to_json(models_.generator);
  meta["critic"] = to_json(models_.critic);
  meta["recognizer"] = to_json(models_.recognizer);
  meta["adam_steps"] = {adam_g_.steps(), adam_d_.steps(), adam_r_.steps()};
  json hist = json::array();
  for (const auto& r : history_)
    hist.push_back({r.step, r.epoch, r.L_D, r.L_R, r.L_G, r.critic_loss, r.recognizer_loss, r.generator_updated});
  meta["history"] = std::move(hist);
  meta["recognizer_sources"] = r_sources_.size();

  Archive a;
  a.meta_json = meta.dump();
  store_params(a, "G.", gen_.parameters());
  store_params(a, "D.", critic_.parameters());
  store_buffers(a, "D.", critic_.buffers());
  store_params(a, "R.", rec_.parameters());
  write_archive(a, path);
}

Trainer Trainer::resume(const std::filesystem::path& checkpoint, TrainConfig config, const CharVocabulary& vocab) {
  const Archive a = read_archive(checkpoint);
  const json meta = parse_meta(a);
  try {
    if (meta.at("train_fingerprint").get<std::string>() != config.fingerprint())
      throw CheckpointMismatch("training config differs from the checkpoint's");
    if (meta.at("vocab_fingerprint").get<std::string>() != hex64(vocab.fingerprint()))
      throw CheckpointMismatch("vocabulary differs from the checkpoint's");
    ModelConfig models{generator_config(meta.at("generator")), critic_config(meta.at("critic")),
                       recognizer_config(meta.at("recognizer"))};
    Trainer t(std::move(config), vocab, std::move(models));
    restore_params(a, "G.", t.gen_.parameters());
    restore_params(a, "D.", t.critic_.parameters());
    restore_buffers(a, "D.", t.critic_.buffers());
    restore_params(a, "R.", t.rec_.parameters());
    const auto steps = meta.at("adam_steps");
    t.adam_g_.set_steps(steps.at(0));
    t.adam_d_.set_steps(steps.at(1));
    t.adam_r_.set_steps(steps.at(2));
    t.epoch_ = meta.at("epoch");
    t.step_ = meta.at("step");
    for (const auto& h : meta.at("history")) {
      LossRecord r;
      r.step = h.at(0);
      r.epoch = h.at(1);
      r.L_D = h.at(2);
      r.L_R = h.at(3);
      r.L_G = h.at(4);
      r.critic_loss = h.at(5);
      r.recognizer_loss = h.at(6);
      r.generator_updated = h.at(7);
      t.history_.push_back(r);
    }
    t.r_sources_.assign(meta.at("recognizer_sources").get<std::size_t>(), SampleSource::dataset);
    return t;
  } catch (const json::exception& e) {
    throw CheckpointMismatch(std::string("bad checkpoint metadata: ") + e.what());
  }
}

std::string loss_csv(const std::vector<LossRecord>& history) {
  std::string out = "step,L_D,L_R,L_G\n";
  char buf[128];
  for (const auto& r : history) {
    std::snprintf(buf, sizeof buf, "%lld,%.9g,%.9g,%.9g\n", static_cast<long long>(r.step), r.L_D, r.L_R, r.L_G);
    out += buf;
  }
  return out;
}

void write_loss_csv(const std::vector<LossRecord>& history, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw PathError("cannot write loss curve", path);
  os << loss_csv(history);
}

LoadedGenerator load_generator(const std::filesystem::path& checkpoint) {
  const Archive a = read_archive(checkpoint);
  const json meta = parse_meta(a);
  try {
    LoadedGenerator out;
    out.vocab = vocab_from_json(meta.at("vocab"));
    out.generator = Generator(generator_config(meta.at("generator")), out.vocab.size(), 0);
    restore_params(a, "G.", out.generator.parameters(), false);
    out.epoch = meta.at("epoch");
    out.fingerprint = meta.at("train_fingerprint");
    return out;
  } catch (const json::exception& e) {
    throw CheckpointMismatch(std::string("bad checkpoint metadata: ") + e.what());
  }
}

Recognizer load_recognizer(const std::filesystem::path& checkpoint) {
  const Archive a = read_archive(checkpoint);
  const json meta = parse_meta(a);
  try {
    const CharVocabulary vocab = vocab_from_json(meta.at("vocab"));
    Recognizer r(recognizer_config(meta.at("recognizer")), vocab.size(), 0);
    restore_params(a, "R.", r.parameters(), false);
    return r;
  } catch (const json::exception& e) {
    throw CheckpointMismatch(std::string("bad checkpoint metadata: ") + e.what());
  }
}

// ------------------------------------------------- standalone recognizer

std::vector<double> train_recognizer(Recognizer& rec, const std::vector<LabeledImage>& samples,
                                     const RecognizerTraining& cfg, const std::function<void(int, double)>& on_epoch) {
  if (samples.empty()) throw EmptyBatch();
  nn::Adam adam(rec.parameters(), {cfg.lr, 0.9, 0.999, 1e-8});
  std::vector<double> losses;
  for (int e = 1; e <= cfg.epochs; ++e) {
    double total = 0.0;
    const auto batches = length_batches(samples, cfg.batch_size, mix_seed(cfg.seed, static_cast<std::uint64_t>(e)));
    for (const auto& idx : batches) {
      std::vector<const GlyphImage*> imgs;
      std::vector<WordSpec> words;
      for (std::size_t i : idx) {
        imgs.push_back(&samples[i].image);
        words.push_back(samples[i].word);
      }
      const double l = rec.fit_step({images_to_tensor(imgs), words, SampleSource::dataset}, adam);
      check_finite(l, "recognizer");
      total += l;
    }
    losses.push_back(total / static_cast<double>(batches.size()));
    if (on_epoch) on_epoch(e, losses.back());
  }
  return losses;
}

double word_accuracy(Recognizer& rec, const std::vector<LabeledImage>& samples, const CharVocabulary& vocab) {
  if (samples.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& s : samples) hits += rec.read(s.image, vocab) == s.word.keys;
  return static_cast<double>(hits) / static_cast<double>(samples.size());
}

}  // namespace behgan
