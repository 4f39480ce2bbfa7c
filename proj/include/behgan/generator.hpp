#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "behgan/image.hpp"
#include "behgan/nn/layers.hpp"
#include "behgan/vocab.hpp"

namespace behgan {

/// Style vector shared by every character of one word.
struct NoiseVector {
  std::vector<float> values;
  std::uint64_t seed = 0;

  static NoiseVector sample(int dim, std::uint64_t seed);
  static NoiseVector zeros(int dim) { return {std::vector<float>(static_cast<std::size_t>(dim), 0.0f), 0}; }
  int dim() const noexcept { return static_cast<int>(values.size()); }
};

/// Per-character rows embedding(class_i) * z, plus the layout of the base
/// grid they are projected onto.
struct CharConditioning {
  int n_chars = 0;
  int dim = 0;
  std::vector<float> rows;  // n_chars * dim
  std::vector<int> class_ids;
  std::vector<float> z;     // the single noise vector every row was built from
  int base_width = 0;       // latent columns per character
  int base_height = 0;
  int channels = 0;

  std::span<const float> row(int i) const { return {rows.data() + static_cast<std::size_t>(i) * dim, static_cast<std::size_t>(dim)}; }
  std::span<float> row(int i) { return {rows.data() + static_cast<std::size_t>(i) * dim, static_cast<std::size_t>(dim)}; }
};

struct GeneratorConfig {
  int d_z = 128;
  int char_base_width = 4;
  int base_height = 8;
  int n_upsample_stages = 2;
  // channels[s] feeds stage s; the last entry feeds the output conv.
  std::vector<int> channels = {256, 128, 64};
  // One kernel per conv: one per stage plus the output conv.
  std::vector<int> kernel_sizes = {3, 3, 3};

  void validate() const;
  /// Narrow preset for single-core training runs.
  static GeneratorConfig desk();
};

/// Half-width, in output pixels, by which one character's latent columns
/// reach into its neighbours' slots.
int receptive_field_overlap(const GeneratorConfig& config);

class Generator {
 public:
  Generator() = default;  // unloaded; generate() throws ModelNotLoaded
  Generator(GeneratorConfig config, int n_classes, std::uint64_t seed);

  bool loaded() const noexcept { return loaded_; }
  const GeneratorConfig& config() const noexcept { return config_; }
  int n_classes() const noexcept { return n_classes_; }

  CharConditioning make_conditioning(const WordSpec& word, const NoiseVector& z) const;

  /// Batched forward; every word in the batch must have the same length.
  /// Returns (B, 1, 32, 16n) in [-1, 1].
  nn::Tensor forward(const std::vector<WordSpec>& words, const std::vector<NoiseVector>& zs);
  nn::Tensor forward(const std::vector<CharConditioning>& conditioning);
  // Backpropagates from d loss / d image into parameter gradients.
  void backward(const nn::Tensor& grad_image);

  GlyphImage generate(const WordSpec& word, const NoiseVector& z);

  std::vector<nn::Param*> parameters();
  void set_accumulate(bool on);

 private:
  GeneratorConfig config_;
  int n_classes_ = 0;
  bool loaded_ = false;

  nn::Param embedding_;  // n_classes x d_z
  nn::Linear base_;
  std::vector<nn::CondPixelNorm> norms_;
  std::vector<nn::Activation> acts_;
  std::vector<nn::Conv2d> convs_;
  std::vector<nn::Upsample2x> ups_;
  nn::Activation out_act_{nn::ActKind::tanh};

  // forward cache
  int batch_ = 0, n_chars_ = 0;
  nn::FloatBuffer cond_;
  std::vector<int> cached_ids_;
  std::vector<float> cached_z_;
  bool from_words_ = false;
};

}  // namespace behgan
