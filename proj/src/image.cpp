#include "behgan/image.hpp"

#include <algorithm>
#include <cmath>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "behgan/errors.hpp"

namespace behgan {

bool has_slot_geometry(const GlyphImage& img) {
  return img.height == kImageHeight && img.n_chars >= 1 && img.width == kSlotWidth * img.n_chars &&
         img.pixels.size() == static_cast<std::size_t>(img.width) * img.height;
}

double ink_ratio(const GlyphImage& img) {
  if (img.pixels.empty()) return 0.0;
  const auto ink = std::count_if(img.pixels.begin(), img.pixels.end(), [](std::uint8_t p) { return p < 128; });
  return static_cast<double>(ink) / static_cast<double>(img.pixels.size());
}

double median_intensity(const GlyphImage& img) {
  if (img.pixels.empty()) return 0.0;
  std::vector<std::uint8_t> v = img.pixels;
  auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  return *mid;
}

GlyphImage read_png(const std::filesystem::path& path, int n_chars) {
  cv::Mat m = cv::imread(path.string(), cv::IMREAD_GRAYSCALE);
  if (m.empty()) throw PathError("cannot read image", path);
  GlyphImage img(m.cols, m.rows, n_chars);
  for (int y = 0; y < m.rows; ++y) std::copy_n(m.ptr<std::uint8_t>(y), m.cols, &img.at(0, y));
  return img;
}

namespace {
cv::Mat as_mat(const GlyphImage& img) {
  return cv::Mat(img.height, img.width, CV_8UC1, const_cast<std::uint8_t*>(img.pixels.data()));
}
}  // namespace

std::vector<std::uint8_t> encode_png(const GlyphImage& img) {
  std::vector<std::uint8_t> buf;
  cv::imencode(".png", as_mat(img), buf, {cv::IMWRITE_PNG_COMPRESSION, 6});
  return buf;
}

void write_png(const GlyphImage& img, const std::filesystem::path& path) {
  if (!cv::imwrite(path.string(), as_mat(img), {cv::IMWRITE_PNG_COMPRESSION, 6}))
    throw PathError("cannot write image", path);
}

void to_unit_range(const GlyphImage& img, std::span<float> out) {
  if (out.size() != img.pixels.size()) throw DimensionMismatch();
  std::transform(img.pixels.begin(), img.pixels.end(), out.begin(),
                 [](std::uint8_t p) { return static_cast<float>(p) / 127.5f - 1.0f; });
}

GlyphImage from_unit_range(std::span<const float> values, int width, int height, int n_chars) {
  if (values.size() != static_cast<std::size_t>(width) * height) throw DimensionMismatch();
  GlyphImage img(width, height, n_chars);
  std::transform(values.begin(), values.end(), img.pixels.begin(), [](float v) {
    const float p = std::round((std::clamp(v, -1.0f, 1.0f) + 1.0f) * 127.5f);
    return static_cast<std::uint8_t>(p);
  });
  return img;
}

}  // namespace behgan
