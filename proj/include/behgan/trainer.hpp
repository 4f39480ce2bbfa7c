#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <istream>
#include <string>
#include <vector>

#include "behgan/critic.hpp"
#include "behgan/dataio.hpp"
#include "behgan/generator.hpp"
#include "behgan/nn/optim.hpp"
#include "behgan/recognizer.hpp"
#include "behgan/vocab.hpp"

namespace behgan {

/// Schema of the key=value config file (`#` starts a comment):
///   gamma, batch_size, epochs, lr_g, lr_d, lr_r, seed, checkpoint_every,
///   steps_per_generator_update, model (default | desk)
struct TrainConfig {
  double gamma = 1.0;
  int batch_size = 16;
  int epochs = 30;
  double lr_g = 2e-4;
  double lr_d = 2e-4;
  double lr_r = 1e-4;
  std::uint64_t seed = 0;
  int checkpoint_every = 1;
  int steps_per_generator_update = 1;
  std::string model = "default";

  void validate() const;
  /// Sets one field from its textual value; throws ParseError on an unknown
  /// key or a malformed value.
  void set(const std::string& key, const std::string& value);
  std::string to_text() const;
  /// Hash over every field except `epochs`, so a run can be extended.
  std::string fingerprint() const;

  static TrainConfig parse(std::istream& in);
  static TrainConfig load(const std::filesystem::path& path);
};

struct ModelConfig {
  GeneratorConfig generator;
  CriticConfig critic;
  RecognizerConfig recognizer;

  /// "default" or "desk".
  static ModelConfig preset(const std::string& name);
};

/// Per-step scalars. L_D and L_R are the two terms of the generator
/// objective L_G = L_D + gamma * L_R; critic_loss and recognizer_loss are the
/// losses of the critic and recognizer updates of the same step.
struct LossRecord {
  std::int64_t step = 0;
  int epoch = 0;
  double L_D = 0.0;
  double L_R = 0.0;
  double L_G = 0.0;
  double critic_loss = 0.0;
  double recognizer_loss = 0.0;
  bool generator_updated = false;
};

struct TrainOptions {
  bool freeze_critic = false;
  bool freeze_recognizer = false;
};

struct GeneratorGradient {
  double adversarial = 0.0;
  double recognition = 0.0;
  double total = 0.0;
  std::vector<float> grad;  // flattened over Generator::parameters()
};

class Trainer {
 public:
  Trainer(TrainConfig config, CharVocabulary vocab);
  Trainer(TrainConfig config, CharVocabulary vocab, ModelConfig models);

  /// Resumes from a checkpoint. The config must carry the same fingerprint
  /// and the vocabulary must match; throws CheckpointMismatch otherwise.
  static Trainer resume(const std::filesystem::path& checkpoint, TrainConfig config, const CharVocabulary& vocab);

  void set_data(std::vector<LabeledImage> data);
  const std::vector<LabeledImage>& data() const noexcept { return data_; }

  /// One critic update on (real, generated), one recognizer update on real
  /// only, and a generator update on L_D + gamma * L_R of the generated
  /// batch. Generated words are the real batch's labels.
  LossRecord train_step(const std::vector<const LabeledImage*>& batch, const std::vector<NoiseVector>& z);

  /// Generator gradient without updating anything; critic and recognizer
  /// receive no parameter gradients.
  GeneratorGradient generator_gradient(const std::vector<WordSpec>& words, const std::vector<NoiseVector>& z,
                                       double gamma);

  /// Batches of equal word length, shuffled with a seed derived from
  /// (seed, epoch).
  std::vector<std::vector<std::size_t>> epoch_batches(int epoch) const;
  std::vector<NoiseVector> epoch_noise(int epoch, std::size_t batch_index, std::size_t count) const;

  std::vector<LossRecord> run_epoch();

  using EpochCallback = std::function<void(int epoch, const std::vector<LossRecord>& records)>;
  /// Trains until config().epochs, writing `ckpt_epoch_<N>` every
  /// checkpoint_every epochs (and after the last one) plus losses.csv.
  /// Returns the checkpoints written by this call.
  std::vector<std::filesystem::path> train(const std::filesystem::path& out_dir, const EpochCallback& on_epoch = {});

  void save(const std::filesystem::path& path);

  const TrainConfig& config() const noexcept { return config_; }
  const ModelConfig& models() const noexcept { return models_; }
  const CharVocabulary& vocab() const noexcept { return vocab_; }
  int epoch() const noexcept { return epoch_; }
  std::int64_t step() const noexcept { return step_; }
  const std::vector<LossRecord>& history() const noexcept { return history_; }
  // Source tag of every batch the recognizer was updated on.
  const std::vector<SampleSource>& recognizer_update_sources() const noexcept { return r_sources_; }

  Generator& generator() noexcept { return gen_; }
  Critic& critic() noexcept { return critic_; }
  Recognizer& recognizer() noexcept { return rec_; }

  TrainOptions options;

 private:
  // Critic and recognizer terms for a generated batch; fills d loss / d image.
  GeneratorGradient generator_terms(const nn::Tensor& fake, const std::vector<WordSpec>& words, double gamma,
                                    nn::Tensor& grad_image);
  void build_optimizers();
  // The optimizers hold parameter pointers, which a move or copy invalidates.
  void rebind_optimizers();

  TrainConfig config_;
  CharVocabulary vocab_;
  ModelConfig models_;
  Generator gen_;
  Critic critic_;
  Recognizer rec_;
  nn::Adam adam_g_, adam_d_, adam_r_;
  std::vector<LabeledImage> data_;
  int epoch_ = 0;
  std::int64_t step_ = 0;
  std::vector<LossRecord> history_;
  std::vector<SampleSource> r_sources_;
};

void write_loss_csv(const std::vector<LossRecord>& history, const std::filesystem::path& path);
std::string loss_csv(const std::vector<LossRecord>& history);

struct LoadedGenerator {
  Generator generator;
  CharVocabulary vocab;
  int epoch = 0;
  std::string fingerprint;
};

/// Generator weights, config and vocabulary from a checkpoint.
LoadedGenerator load_generator(const std::filesystem::path& checkpoint);
/// Recognizer weights from a checkpoint.
Recognizer load_recognizer(const std::filesystem::path& checkpoint);

// Standalone recognizer training on annotated samples.
struct RecognizerTraining {
  int epochs = 10;
  int batch_size = 16;
  double lr = 1e-3;
  std::uint64_t seed = 0;
};

/// Returns the mean training loss of every epoch.
std::vector<double> train_recognizer(Recognizer& rec, const std::vector<LabeledImage>& samples,
                                     const RecognizerTraining& cfg,
                                     const std::function<void(int, double)>& on_epoch = {});

/// Fraction of samples whose greedy decode equals the label.
double word_accuracy(Recognizer& rec, const std::vector<LabeledImage>& samples, const CharVocabulary& vocab);

/// Groups sample indices by word length, shuffles within groups and chunks
/// into batches, then shuffles the batch order.
std::vector<std::vector<std::size_t>> length_batches(const std::vector<LabeledImage>& samples, int batch_size,
                                                     std::uint64_t seed);

}  // namespace behgan
