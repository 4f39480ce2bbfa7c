#include "behgan/critic.hpp"

#include <random>

#include "behgan/errors.hpp"

namespace behgan {

void CriticConfig::validate() const {
  if (channels.empty()) throw Error("critic: need at least one stage");
  if ((1 << channels.size()) > kImageHeight) throw Error("critic: too many downsample stages for 32 px height");
  if ((1 << channels.size()) > kSlotWidth) throw Error("critic: downsampling beyond one column per slot");
  if (head_width < 1) throw Error("critic: head width must be positive");
  for (int c : channels)
    if (c < 1) throw Error("critic: channel counts must be positive");
}

int CriticConfig::patches_for_width(int width) const {
  return width / (1 << channels.size()) - head_width + 1;
}

CriticConfig CriticConfig::desk() {
  CriticConfig c;
  c.channels = {16, 32, 64, 64};
  return c;
}

Critic::Critic(CriticConfig config, std::uint64_t seed) : config_(std::move(config)) {
  config_.validate();
  std::mt19937_64 rng(seed);
  int cin = 1;
  for (std::size_t s = 0; s < config_.channels.size(); ++s) {
    const int cout = config_.channels[s];
    convs_.emplace_back("critic.conv" + std::to_string(s), cin, cout, 3, 3, 1, 1, 1, rng, config_.spectral_norm);
    acts_.emplace_back(nn::ActKind::leaky_relu, 0.2f);
    pools_.emplace_back();
    cin = cout;
  }
  const int final_h = kImageHeight >> config_.channels.size();
  head_ = nn::Conv2d("critic.head", cin, 1, final_h, config_.head_width, 1, 0, 0, rng, config_.spectral_norm);
}

nn::Tensor Critic::forward(const nn::Tensor& images) {
  if (images.h() != kImageHeight || images.w() % kSlotWidth != 0 || images.w() == 0) throw BadGeometry(images.w(), images.h());
  nn::Tensor x = images;
  for (std::size_t s = 0; s < convs_.size(); ++s) {
    x = convs_[s].forward(x);
    x = acts_[s].forward(x);
    x = pools_[s].forward(x);
  }
  return head_.forward(x);
}

nn::Tensor Critic::backward(const nn::Tensor& grad_patches) {
  nn::Tensor g = head_.backward(grad_patches);
  for (std::size_t s = convs_.size(); s-- > 0;) {
    g = pools_[s].backward(g);
    g = acts_[s].backward(g);
    g = convs_[s].backward(g);
  }
  return g;
}

CriticScore Critic::score(const GlyphImage& img) {
  if (!has_slot_geometry(img)) throw BadGeometry(img.width, img.height);
  nn::Tensor x(1, 1, img.height, img.width);
  to_unit_range(img, x.span());
  return to_scores(forward(x)).front();
}

void Critic::refresh_spectral() {
  for (auto& c : convs_) c.refresh_spectral();
  head_.refresh_spectral();
}

std::vector<nn::Param*> Critic::parameters() {
  std::vector<nn::Param*> out;
  for (auto& c : convs_) c.collect(out);
  head_.collect(out);
  return out;
}

std::vector<nn::FloatBuffer*> Critic::buffers() {
  std::vector<nn::FloatBuffer*> out;
  for (auto& c : convs_) c.collect_buffers(out);
  head_.collect_buffers(out);
  return out;
}

void Critic::set_accumulate(bool on) {
  for (auto& c : convs_) c.accumulate = on;
  head_.accumulate = on;
}

std::vector<CriticScore> to_scores(const nn::Tensor& patches) {
  std::vector<CriticScore> out(static_cast<std::size_t>(patches.n()));
  const int P = patches.w();
  for (int b = 0; b < patches.n(); ++b) {
    auto& s = out[b];
    s.patch_scores.assign(patches.sample(b), patches.sample(b) + P);
    double sum = 0.0;
    for (float v : s.patch_scores) sum += v;
    s.pooled = static_cast<float>(sum / P);
  }
  return out;
}

double critic_loss(std::span<const CriticScore> real, std::span<const CriticScore> fake) {
  if (real.empty() || fake.empty()) throw EmptyBatch();
  double lr = 0.0, lf = 0.0;
  for (const auto& s : real) lr += std::max(0.0, 1.0 - static_cast<double>(s.pooled));
  for (const auto& s : fake) lf += std::max(0.0, 1.0 + static_cast<double>(s.pooled));
  return lr / static_cast<double>(real.size()) + lf / static_cast<double>(fake.size());
}

void critic_loss_grad(std::span<const CriticScore> real, std::span<const CriticScore> fake, std::vector<float>& d_real,
                      std::vector<float>& d_fake) {
  if (real.empty() || fake.empty()) throw EmptyBatch();
  d_real.assign(real.size(), 0.0f);
  d_fake.assign(fake.size(), 0.0f);
  const float inv_r = 1.0f / static_cast<float>(real.size()), inv_f = 1.0f / static_cast<float>(fake.size());
  for (std::size_t i = 0; i < real.size(); ++i)
    if (real[i].pooled < 1.0f) d_real[i] = -inv_r;
  for (std::size_t i = 0; i < fake.size(); ++i)
    if (fake[i].pooled > -1.0f) d_fake[i] = inv_f;
}

nn::Tensor pooled_grad_to_patches(const std::vector<float>& d_pooled, int patches) {
  nn::Tensor g(static_cast<int>(d_pooled.size()), 1, 1, patches);
  for (std::size_t b = 0; b < d_pooled.size(); ++b)
    for (int p = 0; p < patches; ++p) g(static_cast<int>(b), 0, 0, p) = d_pooled[b] / static_cast<float>(patches);
  return g;
}

}  // namespace behgan
