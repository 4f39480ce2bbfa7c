#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "behgan/image.hpp"

namespace behgan {

/// Post-hoc image enhancer. The output is `scale` times larger in both axes
/// and keeps n_chars.
struct Enhancer {
  std::string id;
  int scale = 1;
  std::function<GlyphImage(const GlyphImage&)> apply;
};

class EnhancerRegistry {
 public:
  void add(Enhancer enhancer);
  const Enhancer& get(const std::string& id) const;  // throws UnknownEnhancer
  bool contains(const std::string& id) const { return enhancers_.count(id) != 0; }
  std::vector<std::string> ids() const;

  /// "identity" and "baseline".
  static EnhancerRegistry with_builtins();

 private:
  std::map<std::string, Enhancer> enhancers_;
};

inline constexpr int kBaselineScale = 4;

/// Bicubic 4x upscale followed by an unsharp mask (amount 0.6, sigma 1.5).
GlyphImage enhance_baseline(const GlyphImage& img);

/// Area-resamples an enhanced image back to 16*n_chars x 32.
GlyphImage to_slot_geometry(const GlyphImage& img);

}  // namespace behgan
