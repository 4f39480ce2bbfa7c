#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace behgan {

inline constexpr int kSlotWidth = 16;
inline constexpr int kImageHeight = 32;
inline constexpr std::uint8_t kBackground = 255;

/// 8-bit single-channel word image, row-major. 0 is ink, 255 is paper.
struct GlyphImage {
  int width = 0;
  int height = 0;
  int n_chars = 1;
  std::vector<std::uint8_t> pixels;

  GlyphImage() = default;
  GlyphImage(int w, int h, int chars, std::uint8_t fill = kBackground)
      : width(w), height(h), n_chars(chars), pixels(static_cast<std::size_t>(w) * h, fill) {}

  std::uint8_t& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
  bool empty() const noexcept { return pixels.empty(); }
  bool operator==(const GlyphImage&) const = default;
};

// Height 32, width 16 * n_chars.
bool has_slot_geometry(const GlyphImage& img);
// Fraction of pixels darker than 128.
double ink_ratio(const GlyphImage& img);
double median_intensity(const GlyphImage& img);

GlyphImage read_png(const std::filesystem::path& path, int n_chars = 1);
void write_png(const GlyphImage& img, const std::filesystem::path& path);
std::vector<std::uint8_t> encode_png(const GlyphImage& img);

// intensity / 127.5 - 1: paper is +1, ink is -1.
void to_unit_range(const GlyphImage& img, std::span<float> out);
GlyphImage from_unit_range(std::span<const float> values, int width, int height, int n_chars);

}  // namespace behgan
