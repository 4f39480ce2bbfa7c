#include "behgan/stroke_font.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include "json.hpp"
#include <opencv2/imgproc.hpp>
#include <sstream>

#include "behgan/errors.hpp"

namespace behgan {

StrokeFont StrokeFont::parse(const std::string& json_text, const std::string& origin) {
  StrokeFont font;
  try {
    const auto doc = nlohmann::json::parse(json_text);
    font.name_ = doc.value("name", origin);
    for (const auto& [key, strokes] : doc.at("glyphs").items()) {
      if (key.size() != 1) throw FontLoadError(origin, "glyph key must be one letter: " + key);
      std::vector<Stroke> glyph;
      for (const auto& s : strokes) {
        Stroke stroke;
        for (const auto& p : s) stroke.push_back({p.at(0).get<float>(), p.at(1).get<float>()});
        if (stroke.size() < 2) throw FontLoadError(origin, "stroke with fewer than two points");
        glyph.push_back(std::move(stroke));
      }
      font.glyphs_[key[0]] = std::move(glyph);
    }
  } catch (const nlohmann::json::exception& e) {
    throw FontLoadError(origin, e.what());
  }
  return font;
}

StrokeFont StrokeFont::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FontLoadError(path, "cannot open");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.string());
}

const std::vector<Stroke>& StrokeFont::glyph(char key) const {
  auto it = glyphs_.find(key);
  if (it == glyphs_.end()) throw GlyphNotInFont(key, name_);
  return it->second;
}

PenStyle sample_pen_style(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> thick(1.6, 3.0), slant(-0.25, 0.25), wobble(0.0, 0.035), noise(1.0, 8.0);
  std::uniform_int_distribution<int> paper(150, 235), ink(5, 70);
  PenStyle s;
  s.thickness = thick(rng);
  s.slant = slant(rng);
  s.wobble = wobble(rng);
  s.paper_level = paper(rng);
  s.ink_level = ink(rng);
  s.paper_noise = noise(rng);
  return s;
}

GlyphImage render_word(const StrokeFont& font, const WordSpec& word, const PenStyle& style, std::mt19937_64& rng,
                       int supersample) {
  const int n = static_cast<int>(word.length());
  const double slot_w = kSlotWidth * supersample;
  const double slot_h = kImageHeight * supersample;
  std::uniform_int_distribution<int> margin(0, 3 * supersample);
  const int left = margin(rng), right = margin(rng), top = margin(rng), bottom = margin(rng);
  const int width = static_cast<int>(slot_w) * n + left + right;
  const int height = static_cast<int>(slot_h) + top + bottom;

  cv::Mat page(height, width, CV_8UC1, cv::Scalar(style.paper_level));
  std::normal_distribution<double> jitter(0.0, style.wobble);
  std::uniform_real_distribution<double> shift(-0.04, 0.04), scale(0.85, 1.05);
  const int thickness = std::max(1, static_cast<int>(std::lround(style.thickness * supersample)));

  for (int i = 0; i < n; ++i) {
    const auto& strokes = font.glyph(word.keys[i]);
    const double dx = shift(rng), dy = shift(rng), s = scale(rng);
    for (const auto& stroke : strokes) {
      std::vector<cv::Point> pts;
      pts.reserve(stroke.size());
      for (const auto& p : stroke) {
        double u = 0.5 + (p[0] - 0.5) * s + dx + jitter(rng);
        double v = 0.5 + (p[1] - 0.5) * s + dy + jitter(rng);
        u += style.slant * (0.5 - v);
        const double x = left + (i + 0.1 + 0.8 * u) * slot_w;
        const double y = top + (0.1 + 0.8 * v) * slot_h;
        pts.emplace_back(static_cast<int>(std::lround(x)), static_cast<int>(std::lround(y)));
      }
      cv::polylines(page, pts, false, cv::Scalar(style.ink_level), thickness, cv::LINE_AA);
    }
  }

  GlyphImage out(width, height, n);
  std::normal_distribution<double> grain(0.0, style.paper_noise);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      const double v = page.at<std::uint8_t>(y, x) + grain(rng);
      out.at(x, y) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
    }
  return out;
}

}  // namespace behgan
