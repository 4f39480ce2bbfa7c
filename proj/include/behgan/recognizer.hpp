#pragma once

#include <cstdint>
#include <vector>

#include "behgan/ctc.hpp"
#include "behgan/image.hpp"
#include "behgan/nn/layers.hpp"
#include "behgan/nn/optim.hpp"
#include "behgan/vocab.hpp"

namespace behgan {

struct RecognizerConfig {
  std::vector<int> channels = {32, 64, 64};  // 3x3 conv stages
  int feature_width = 128;                   // per-frame feature (penultimate) size
  int frames_per_slot = 4;                   // must divide 16 and be >= 2

  void validate() const;
  // Number of leading stages followed by a 2x max-pool.
  int pool_stages() const;
};

/// Where a batch came from. Recognizer updates accept dataset batches only.
enum class SampleSource { dataset, generator };

struct RecognizerBatch {
  nn::Tensor images;  // (B, 1, 32, 16n) in [-1, 1]
  std::vector<WordSpec> words;
  SampleSource source = SampleSource::dataset;
};

/// Conv feature stack with a per-frame linear head, no recurrence.
class Recognizer {
 public:
  Recognizer() = default;
  Recognizer(RecognizerConfig config, int n_classes, std::uint64_t seed);

  const RecognizerConfig& config() const noexcept { return config_; }
  int n_classes() const noexcept { return n_classes_; }
  int blank_id() const noexcept { return n_classes_; }
  int feature_dim() const noexcept { return config_.feature_width; }

  /// images -> logits (B, N+1, 1, T) with T = frames_per_slot * W / 16.
  nn::Tensor forward(const nn::Tensor& images);
  nn::Tensor backward(const nn::Tensor& grad_logits);
  // Penultimate activations of the last forward, (B, F, 1, T).
  const nn::Tensor& features() const noexcept { return features_; }

  LogitsSequence recognize(const GlyphImage& img);
  /// Frame-averaged penultimate features.
  std::vector<float> embed(const GlyphImage& img);
  std::string read(const GlyphImage& img, const CharVocabulary& vocab);

  /// One optimizer step on a dataset batch. Throws std::logic_error for
  /// generator batches. Returns the mean CTC loss before the step.
  double fit_step(const RecognizerBatch& batch, nn::Adam& optimizer);

  std::vector<nn::Param*> parameters();
  void set_accumulate(bool on);

 private:
  RecognizerConfig config_;
  int n_classes_ = 0;
  std::vector<nn::Conv2d> convs_;
  std::vector<nn::Activation> acts_;
  std::vector<nn::MaxPool2x> pools_;
  nn::Conv2d project_;
  nn::Activation project_act_{nn::ActKind::relu};
  nn::Conv2d head_;
  nn::Tensor features_;
};

std::vector<LogitsSequence> to_sequences(const nn::Tensor& logits);

/// Mean CTC loss over a batch; fills grad (same shape as logits) when given.
double batch_ctc_loss(const nn::Tensor& logits, const std::vector<WordSpec>& words, nn::Tensor* grad);

nn::Tensor images_to_tensor(const std::vector<const GlyphImage*>& images);

}  // namespace behgan
