#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "behgan/dataio.hpp"
#include "behgan/image.hpp"
#include "behgan/trainer.hpp"

namespace behgan::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("behgan_" + tag + "_" + std::to_string(rd()));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& p) const { return path_ / p; }

 private:
  std::filesystem::path path_;
};

inline GlyphImage random_image(int w, int h, std::mt19937_64& rng, int n_chars = 1) {
  GlyphImage img(w, h, n_chars);
  std::uniform_int_distribution<int> d(0, 255);
  for (auto& p : img.pixels) p = static_cast<std::uint8_t>(d(rng));
  return img;
}

// Dark rectangular strokes on white, slot geometry.
inline GlyphImage stroke_image(int n_chars, std::uint8_t paper = 255, std::uint8_t ink = 0) {
  GlyphImage img(16 * n_chars, 32, n_chars, paper);
  for (int c = 0; c < n_chars; ++c)
    for (int y = 6; y < 26; ++y)
      for (int x = 4; x < 7; ++x) img.at(16 * c + x + (y / 8), y) = ink;
  for (int x = 2; x < 16 * n_chars - 2; ++x) img.at(x, 6) = ink;
  return img;
}

// Small networks for fast training tests.
inline ModelConfig tiny_models() {
  ModelConfig m;
  m.generator.d_z = 16;
  m.generator.channels = {16, 8, 8};
  m.critic.channels = {8, 8, 8, 8};
  m.recognizer.channels = {8, 8, 8};
  m.recognizer.feature_width = 16;
  return m;
}

// Labeled stroke images over the default vocabulary, lengths 1 and 2.
inline std::vector<LabeledImage> stroke_samples(std::size_t count, std::uint64_t seed) {
  const CharVocabulary vocab = CharVocabulary::default_bengali();
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> cls(0, vocab.size() - 1), len(1, 2), shift(0, 6);
  std::vector<LabeledImage> out;
  for (std::size_t i = 0; i < count; ++i) {
    const int n = len(rng);
    WordSpec w;
    GlyphImage img(16 * n, 32, n);
    for (int c = 0; c < n; ++c) {
      const int id = cls(rng);
      w.class_ids.push_back(id);
      w.keys.push_back(vocab.key_of(id));
      const int dx = shift(rng);
      for (int y = 4; y < 28; ++y)
        for (int x = 0; x < 3 + id; ++x) img.at(16 * c + (dx + x) % 16, y) = static_cast<std::uint8_t>(40 * (x % 2));
    }
    out.push_back({img, w, Provenance::raw});
  }
  return out;
}

}  // namespace behgan::testing
