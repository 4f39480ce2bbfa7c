#include "behgan/recognizer.hpp"

#include <random>
#include <stdexcept>

#include "behgan/errors.hpp"

namespace behgan {

void RecognizerConfig::validate() const {
  if (frames_per_slot < 2) throw Error("recognizer: frames_per_slot must be >= 2");
  if (kSlotWidth % frames_per_slot != 0) throw Error("recognizer: frames_per_slot must divide 16");
  if (pool_stages() > static_cast<int>(channels.size())) throw Error("recognizer: not enough stages to pool");
  if (feature_width < 1) throw Error("recognizer: feature width must be positive");
}

int RecognizerConfig::pool_stages() const {
  int pools = 0;
  for (int w = kSlotWidth; w > frames_per_slot; w /= 2) ++pools;
  return pools;
}

Recognizer::Recognizer(RecognizerConfig config, int n_classes, std::uint64_t seed)
    : config_(std::move(config)), n_classes_(n_classes) {
  config_.validate();
  std::mt19937_64 rng(seed);
  int cin = 1;
  for (std::size_t s = 0; s < config_.channels.size(); ++s) {
    convs_.emplace_back("rec.conv" + std::to_string(s), cin, config_.channels[s], 3, 3, 1, 1, 1, rng);
    acts_.emplace_back(nn::ActKind::relu);
    cin = config_.channels[s];
  }
  pools_.resize(static_cast<std::size_t>(config_.pool_stages()));
  const int h = kImageHeight >> config_.pool_stages();
  project_ = nn::Conv2d("rec.project", cin, config_.feature_width, h, 1, 1, 0, 0, rng);
  head_ = nn::Conv2d("rec.head", config_.feature_width, n_classes + 1, 1, 1, 1, 0, 0, rng);
}

nn::Tensor Recognizer::forward(const nn::Tensor& images) {
  if (images.h() != kImageHeight || images.w() == 0 || images.w() % kSlotWidth != 0)
    throw BadGeometry(images.w(), images.h());
  nn::Tensor x = images;
  for (std::size_t s = 0; s < convs_.size(); ++s) {
    x = convs_[s].forward(x);
    x = acts_[s].forward(x);
    if (s < pools_.size()) x = pools_[s].forward(x);
  }
  x = project_.forward(x);
  features_ = project_act_.forward(x);
  return head_.forward(features_);
}

nn::Tensor Recognizer::backward(const nn::Tensor& grad_logits) {
  nn::Tensor g = head_.backward(grad_logits);
  g = project_act_.backward(g);
  g = project_.backward(g);
  for (std::size_t s = convs_.size(); s-- > 0;) {
    if (s < pools_.size()) g = pools_[s].backward(g);
    g = acts_[s].backward(g);
    g = convs_[s].backward(g);
  }
  return g;
}

LogitsSequence Recognizer::recognize(const GlyphImage& img) {
  if (!has_slot_geometry(img)) throw BadGeometry(img.width, img.height);
  nn::Tensor x(1, 1, img.height, img.width);
  to_unit_range(img, x.span());
  return to_sequences(forward(x)).front();
}

std::vector<float> Recognizer::embed(const GlyphImage& img) {
  (void)recognize(img);
  const int F = features_.c(), T = features_.w();
  std::vector<float> out(static_cast<std::size_t>(F), 0.0f);
  for (int f = 0; f < F; ++f) {
    double s = 0.0;
    for (int t = 0; t < T; ++t) s += features_(0, f, 0, t);
    out[f] = static_cast<float>(s / T);
  }
  return out;
}

std::string Recognizer::read(const GlyphImage& img, const CharVocabulary& vocab) {
  return decode_greedy(recognize(img), vocab);
}

double Recognizer::fit_step(const RecognizerBatch& batch, nn::Adam& optimizer) {
  if (batch.source != SampleSource::dataset)
    throw std::logic_error("recognizer updates must use real annotated samples only");
  if (batch.words.empty()) throw EmptyBatch();
  set_accumulate(true);
  optimizer.zero_grad();
  const nn::Tensor logits = forward(batch.images);
  nn::Tensor grad;
  const double loss = batch_ctc_loss(logits, batch.words, &grad);
  backward(grad);
  optimizer.step();
  return loss;
}

std::vector<nn::Param*> Recognizer::parameters() {
  std::vector<nn::Param*> out;
  for (auto& c : convs_) c.collect(out);
  project_.collect(out);
  head_.collect(out);
  return out;
}

void Recognizer::set_accumulate(bool on) {
  for (auto& c : convs_) c.accumulate = on;
  project_.accumulate = on;
  head_.accumulate = on;
}

std::vector<LogitsSequence> to_sequences(const nn::Tensor& logits) {
  std::vector<LogitsSequence> out;
  const int K = logits.c(), T = logits.w();
  for (int b = 0; b < logits.n(); ++b) {
    LogitsSequence seq(T, K);
    for (int t = 0; t < T; ++t)
      for (int k = 0; k < K; ++k) seq.at(t, k) = logits(b, k, 0, t);
    out.push_back(std::move(seq));
  }
  return out;
}

double batch_ctc_loss(const nn::Tensor& logits, const std::vector<WordSpec>& words, nn::Tensor* grad) {
  if (words.empty() || static_cast<int>(words.size()) != logits.n()) throw EmptyBatch();
  const auto seqs = to_sequences(logits);
  const int K = logits.c(), T = logits.w();
  const double inv_b = 1.0 / static_cast<double>(words.size());
  if (grad != nullptr) *grad = nn::Tensor(logits.n(), K, 1, T);
  double total = 0.0;
  for (std::size_t b = 0; b < words.size(); ++b) {
    const CtcResult r = ctc_loss_and_grad(seqs[b], words[b].class_ids);
    total += r.loss;
    if (grad != nullptr)
      for (int t = 0; t < T; ++t)
        for (int k = 0; k < K; ++k)
          (*grad)(static_cast<int>(b), k, 0, t) = static_cast<float>(r.grad[static_cast<std::size_t>(t) * K + k] * inv_b);
  }
  return total * inv_b;
}

nn::Tensor images_to_tensor(const std::vector<const GlyphImage*>& images) {
  if (images.empty()) throw EmptyBatch();
  const int h = images.front()->height, w = images.front()->width;
  nn::Tensor t(static_cast<int>(images.size()), 1, h, w);
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (images[i]->width != w || images[i]->height != h) throw DimensionMismatch();
    to_unit_range(*images[i], {t.sample(static_cast<int>(i)), t.sample_size()});
  }
  return t;
}

}  // namespace behgan
