#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "behgan/image.hpp"
#include "behgan/vocab.hpp"

namespace behgan {

using StrokePoint = std::array<float, 2>;
using Stroke = std::vector<StrokePoint>;

/// Centerline font: each glyph is a set of polylines in a unit box (x right,
/// y down), keyed by vocabulary key letter. Stored as JSON:
///   {"name": "...", "glyphs": {"k": [[[x,y],[x,y],...], ...], ...}}
class StrokeFont {
 public:
  static StrokeFont load(const std::filesystem::path& path);
  static StrokeFont parse(const std::string& json_text, const std::string& origin = "<memory>");

  const std::string& name() const noexcept { return name_; }
  bool has_glyph(char key) const { return glyphs_.count(key) != 0; }
  // Throws GlyphNotInFont.
  const std::vector<Stroke>& glyph(char key) const;

 private:
  std::string name_;
  std::map<char, std::vector<Stroke>> glyphs_;
};

/// Per-sample variation of the pen and the page.
struct PenStyle {
  double thickness = 2.0;  // stroke width in output pixels
  double slant = 0.0;      // horizontal shear, x += slant * (0.5 - y)
  double wobble = 0.02;    // per-point jitter in glyph units
  int paper_level = 200;
  int ink_level = 30;
  double paper_noise = 4.0;
};

PenStyle sample_pen_style(std::mt19937_64& rng);

/// Renders a word at `supersample` times the slot-grid resolution, on a
/// gray page with random margins. The result still needs preprocessing.
GlyphImage render_word(const StrokeFont& font, const WordSpec& word, const PenStyle& style, std::mt19937_64& rng,
                       int supersample = 4);

}  // namespace behgan
