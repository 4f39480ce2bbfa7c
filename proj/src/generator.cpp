#include "behgan/generator.hpp"

#include <cmath>
#include <random>

#include "behgan/errors.hpp"

namespace behgan {

NoiseVector NoiseVector::sample(int dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> d(0.0f, 1.0f);
  NoiseVector z;
  z.seed = seed;
  z.values.resize(static_cast<std::size_t>(dim));
  for (auto& v : z.values) v = d(rng);
  return z;
}

void GeneratorConfig::validate() const {
  if (d_z < 1) throw Error("generator: d_z must be positive");
  if (n_upsample_stages < 0) throw Error("generator: negative stage count");
  const int scale = 1 << n_upsample_stages;
  if (char_base_width * scale != kSlotWidth)
    throw Error("generator: char_base_width * 2^stages must equal the 16 px slot width");
  if (base_height * scale != kImageHeight) throw Error("generator: base_height * 2^stages must equal 32");
  if (static_cast<int>(channels.size()) != n_upsample_stages + 1)
    throw Error("generator: need one channel count per stage plus the output conv");
  if (kernel_sizes.size() != channels.size()) throw Error("generator: need one kernel size per conv");
  for (int k : kernel_sizes)
    if (k < 1 || k % 2 == 0) throw Error("generator: kernel sizes must be odd and positive");
  for (int c : channels)
    if (c < 1) throw Error("generator: channel counts must be positive");
}

GeneratorConfig GeneratorConfig::desk() {
  GeneratorConfig c;
  c.d_z = 64;
  c.channels = {64, 32, 16};
  return c;
}

int receptive_field_overlap(const GeneratorConfig& config) {
  // Conv s runs at 1/2^(S-s) of the output resolution; the output conv at 1.
  int overlap = 0;
  const int stages = config.n_upsample_stages;
  for (int s = 0; s <= stages; ++s) overlap += (config.kernel_sizes[s] - 1) / 2 * (1 << (stages - s));
  return overlap;
}

Generator::Generator(GeneratorConfig config, int n_classes, std::uint64_t seed)
    : config_(std::move(config)), n_classes_(n_classes), loaded_(true) {
  config_.validate();
  if (n_classes < 1) throw Error("generator: need at least one class");
  std::mt19937_64 rng(seed);
  const int S = config_.n_upsample_stages;
  embedding_ = nn::Param("gen.embedding", static_cast<std::size_t>(n_classes) * config_.d_z);
  embedding_.init_normal(rng, 1.0f);
  const int base_out = config_.channels[0] * config_.base_height * config_.char_base_width;
  base_ = nn::Linear("gen.base", config_.d_z, base_out, rng);
  for (int s = 0; s <= S; ++s) {
    const int cin = config_.channels[s];
    const int cout = s < S ? config_.channels[s + 1] : 1;
    const int k = config_.kernel_sizes[s];
    const std::string tag = "gen.stage" + std::to_string(s);
    norms_.emplace_back(tag + ".norm", cin, config_.d_z, rng);
    acts_.emplace_back(nn::ActKind::relu);
    convs_.emplace_back(tag + ".conv", cin, cout, k, k, 1, k / 2, k / 2, rng);
    if (s < S) ups_.emplace_back();
  }
}

CharConditioning Generator::make_conditioning(const WordSpec& word, const NoiseVector& z) const {
  if (!loaded_) throw ModelNotLoaded();
  if (z.dim() != config_.d_z) throw DimensionMismatch();
  CharConditioning c;
  c.n_chars = static_cast<int>(word.length());
  c.dim = config_.d_z;
  c.class_ids = word.class_ids;
  c.z = z.values;
  c.base_width = config_.char_base_width;
  c.base_height = config_.base_height;
  c.channels = config_.channels[0];
  c.rows.resize(static_cast<std::size_t>(c.n_chars) * c.dim);
  for (int i = 0; i < c.n_chars; ++i) {
    const int id = word.class_ids[i];
    if (id < 0 || id >= n_classes_) throw ClassOutOfRange(id, n_classes_);
    const float* mask = embedding_.value.data() + static_cast<std::size_t>(id) * c.dim;
    for (int d = 0; d < c.dim; ++d) c.rows[static_cast<std::size_t>(i) * c.dim + d] = mask[d] * z.values[d];
  }
  return c;
}

nn::Tensor Generator::forward(const std::vector<WordSpec>& words, const std::vector<NoiseVector>& zs) {
  if (!loaded_) throw ModelNotLoaded();
  if (words.empty() || words.size() != zs.size()) throw EmptyBatch();
  std::vector<CharConditioning> conds;
  conds.reserve(words.size());
  cached_ids_.clear();
  cached_z_.clear();
  for (std::size_t b = 0; b < words.size(); ++b) {
    conds.push_back(make_conditioning(words[b], zs[b]));
    cached_ids_.insert(cached_ids_.end(), words[b].class_ids.begin(), words[b].class_ids.end());
    cached_z_.insert(cached_z_.end(), zs[b].values.begin(), zs[b].values.end());
  }
  nn::Tensor out = forward(conds);
  from_words_ = true;
  return out;
}

nn::Tensor Generator::forward(const std::vector<CharConditioning>& conditioning) {
  if (!loaded_) throw ModelNotLoaded();
  if (conditioning.empty()) throw EmptyBatch();
  from_words_ = false;
  batch_ = static_cast<int>(conditioning.size());
  n_chars_ = conditioning.front().n_chars;
  if (n_chars_ < 1) throw InvalidCharCount(n_chars_);
  const int d = config_.d_z;
  cond_.clear();
  cond_.reserve(static_cast<std::size_t>(batch_) * n_chars_ * d);
  for (const auto& c : conditioning) {
    if (c.n_chars != n_chars_) throw Error("generator: batch mixes word lengths");
    if (c.dim != d) throw DimensionMismatch();
    cond_.insert(cond_.end(), c.rows.begin(), c.rows.end());
  }

  const int C0 = config_.channels[0], bh = config_.base_height, bw = config_.char_base_width;
  const auto base = base_.forward(cond_, batch_ * n_chars_);
  nn::Tensor x(batch_, C0, bh, bw * n_chars_);
  for (int b = 0; b < batch_; ++b)
    for (int i = 0; i < n_chars_; ++i) {
      const float* src = base.data() + (static_cast<std::size_t>(b) * n_chars_ + i) * C0 * bh * bw;
      for (int c = 0; c < C0; ++c)
        for (int y = 0; y < bh; ++y)
          for (int xx = 0; xx < bw; ++xx) x(b, c, y, i * bw + xx) = src[(c * bh + y) * bw + xx];
    }

  const int S = config_.n_upsample_stages;
  for (int s = 0; s <= S; ++s) {
    x = norms_[s].forward(x, cond_, n_chars_);
    x = acts_[s].forward(x);
    x = convs_[s].forward(x);
    if (s < S) x = ups_[s].forward(x);
  }
  return out_act_.forward(x);
}

void Generator::backward(const nn::Tensor& grad_image) {
  const int S = config_.n_upsample_stages;
  nn::FloatBuffer dcond(cond_.size(), 0.0f);
  nn::Tensor g = out_act_.backward(grad_image);
  for (int s = S; s >= 0; --s) {
    if (s < S) g = ups_[s].backward(g);
    g = convs_[s].backward(g);
    g = acts_[s].backward(g);
    g = norms_[s].backward(g, dcond);
  }

  const int C0 = config_.channels[0], bh = config_.base_height, bw = config_.char_base_width;
  nn::FloatBuffer dbase(static_cast<std::size_t>(batch_) * n_chars_ * C0 * bh * bw);
  for (int b = 0; b < batch_; ++b)
    for (int i = 0; i < n_chars_; ++i) {
      float* dst = dbase.data() + (static_cast<std::size_t>(b) * n_chars_ + i) * C0 * bh * bw;
      for (int c = 0; c < C0; ++c)
        for (int y = 0; y < bh; ++y)
          for (int xx = 0; xx < bw; ++xx) dst[(c * bh + y) * bw + xx] = g(b, c, y, i * bw + xx);
    }
  const auto dc = base_.backward(dbase);
  for (std::size_t i = 0; i < dc.size(); ++i) dcond[i] += dc[i];

  // cond row = embedding[id] * z
  if (!from_words_ || !base_.accumulate) return;
  const int d = config_.d_z;
  for (int b = 0; b < batch_; ++b)
    for (int i = 0; i < n_chars_; ++i) {
      const std::size_t row = static_cast<std::size_t>(b) * n_chars_ + i;
      const int id = cached_ids_[row];
      float* ge = embedding_.grad.data() + static_cast<std::size_t>(id) * d;
      const float* z = cached_z_.data() + static_cast<std::size_t>(b) * d;
      for (int k = 0; k < d; ++k) ge[k] += dcond[row * d + k] * z[k];
    }
}

GlyphImage Generator::generate(const WordSpec& word, const NoiseVector& z) {
  const nn::Tensor out = forward({word}, {z});
  const int n = static_cast<int>(word.length());
  return from_unit_range(out.span(), kSlotWidth * n, kImageHeight, n);
}

std::vector<nn::Param*> Generator::parameters() {
  std::vector<nn::Param*> out{&embedding_};
  base_.collect(out);
  for (std::size_t s = 0; s < convs_.size(); ++s) {
    norms_[s].collect(out);
    convs_[s].collect(out);
  }
  return out;
}

void Generator::set_accumulate(bool on) {
  base_.accumulate = on;
  for (auto& n : norms_) n.set_accumulate(on);
  for (auto& c : convs_) c.accumulate = on;
}

}  // namespace behgan
