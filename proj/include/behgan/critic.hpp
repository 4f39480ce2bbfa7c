#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "behgan/image.hpp"
#include "behgan/nn/layers.hpp"

namespace behgan {

struct CriticConfig {
  // One conv + 2x average-pool per entry. Four stages map each 16 px slot
  // onto one column of the final feature map.
  std::vector<int> channels = {32, 64, 128, 128};
  int head_width = 1;  // columns seen by each real/fake classifier
  bool spectral_norm = true;

  void validate() const;
  int patches_for_width(int width) const;
  static CriticConfig desk();
};

struct CriticScore {
  std::vector<float> patch_scores;
  float pooled = 0.0f;  // mean of patch_scores
};

/// Fully convolutional real/fake critic. The head is a row of classifiers
/// with contiguous receptive fields; their logits are mean-pooled.
class Critic {
 public:
  Critic() = default;
  Critic(CriticConfig config, std::uint64_t seed);

  const CriticConfig& config() const noexcept { return config_; }

  /// images (B, 1, 32, W) in [-1, 1] -> patch logits (B, 1, 1, P).
  nn::Tensor forward(const nn::Tensor& images);
  /// grad w.r.t. patch logits -> grad w.r.t. images.
  nn::Tensor backward(const nn::Tensor& grad_patches);

  CriticScore score(const GlyphImage& img);

  void refresh_spectral();
  std::vector<nn::Param*> parameters();
  std::vector<nn::FloatBuffer*> buffers();
  void set_accumulate(bool on);

 private:
  CriticConfig config_;
  std::vector<nn::Conv2d> convs_;
  std::vector<nn::Activation> acts_;
  std::vector<nn::AvgPool2x> pools_;
  nn::Conv2d head_;
};

std::vector<CriticScore> to_scores(const nn::Tensor& patches);

/// Hinge loss: mean(relu(1 - real)) + mean(relu(1 + fake)) over pooled scores.
double critic_loss(std::span<const CriticScore> real, std::span<const CriticScore> fake);

/// d critic_loss / d pooled for each sample.
void critic_loss_grad(std::span<const CriticScore> real, std::span<const CriticScore> fake, std::vector<float>& d_real,
                      std::vector<float>& d_fake);

/// Spreads d loss / d pooled over patches as d / d patch = d_pooled / P.
nn::Tensor pooled_grad_to_patches(const std::vector<float>& d_pooled, int patches);

}  // namespace behgan
