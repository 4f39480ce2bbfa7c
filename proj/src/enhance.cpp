#include "behgan/enhance.hpp"

#include <opencv2/imgproc.hpp>

#include "behgan/errors.hpp"

namespace behgan {

namespace {

cv::Mat view(const GlyphImage& img) {
  return cv::Mat(img.height, img.width, CV_8UC1, const_cast<std::uint8_t*>(img.pixels.data()));
}

GlyphImage from_mat(const cv::Mat& m, int n_chars) {
  GlyphImage out(m.cols, m.rows, n_chars);
  for (int y = 0; y < m.rows; ++y)
    std::copy(m.ptr<std::uint8_t>(y), m.ptr<std::uint8_t>(y) + m.cols, out.pixels.begin() + static_cast<std::ptrdiff_t>(y) * m.cols);
  return out;
}

}  // namespace

void EnhancerRegistry::add(Enhancer enhancer) {
  const std::string id = enhancer.id;
  enhancers_[id] = std::move(enhancer);
}

const Enhancer& EnhancerRegistry::get(const std::string& id) const {
  const auto it = enhancers_.find(id);
  if (it == enhancers_.end()) throw UnknownEnhancer(id);
  return it->second;
}

std::vector<std::string> EnhancerRegistry::ids() const {
  std::vector<std::string> out;
  for (const auto& [id, e] : enhancers_) out.push_back(id);
  return out;
}

EnhancerRegistry EnhancerRegistry::with_builtins() {
  EnhancerRegistry r;
  r.add({"identity", 1, [](const GlyphImage& img) { return img; }});
  r.add({"baseline", kBaselineScale, enhance_baseline});
  return r;
}

GlyphImage enhance_baseline(const GlyphImage& img) {
  if (img.empty()) throw BadGeometry(img.width, img.height);
  cv::Mat up, blur;
  cv::resize(view(img), up, cv::Size(img.width * kBaselineScale, img.height * kBaselineScale), 0, 0, cv::INTER_CUBIC);
  cv::GaussianBlur(up, blur, cv::Size(0, 0), 1.5);
  cv::Mat sharp;
  cv::addWeighted(up, 1.6, blur, -0.6, 0.0, sharp);  // saturates to [0, 255]
  return from_mat(sharp, img.n_chars);
}

GlyphImage to_slot_geometry(const GlyphImage& img) {
  if (img.empty() || img.n_chars < 1) throw BadGeometry(img.width, img.height);
  if (has_slot_geometry(img)) return img;
  cv::Mat small;
  const cv::Size target(kSlotWidth * img.n_chars, kImageHeight);
  const bool shrinking = img.width >= target.width && img.height >= target.height;
  cv::resize(view(img), small, target, 0, 0, shrinking ? cv::INTER_AREA : cv::INTER_LINEAR);
  return from_mat(small, img.n_chars);
}

}  // namespace behgan
