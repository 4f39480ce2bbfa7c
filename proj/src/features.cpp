#include <opencv2/imgproc.hpp>

#include "behgan/errors.hpp"
#include "behgan/metrics.hpp"
#include "behgan/nn/layers.hpp"
#include "behgan/recognizer.hpp"

namespace behgan {

void ExtractorRegistry::add(FeatureExtractor extractor) {
  const std::string id = extractor.id;
  extractors_[id] = std::move(extractor);
}

const FeatureExtractor& ExtractorRegistry::get(const std::string& id) const {
  const auto it = extractors_.find(id);
  if (it == extractors_.end()) throw UnknownExtractor(id);
  return it->second;
}

std::vector<std::string> ExtractorRegistry::ids() const {
  std::vector<std::string> out;
  for (const auto& [id, e] : extractors_) out.push_back(id);
  return out;
}

ExtractorRegistry ExtractorRegistry::with_builtins() {
  ExtractorRegistry r;
  r.add(downsample_extractor());
  r.add(random_conv_extractor());
  return r;
}

FeatureExtractor downsample_extractor() {
  FeatureExtractor e;
  e.id = "downsample";
  e.dim = 128;
  e.extract = [](const GlyphImage& img) {
    if (img.empty()) throw BadGeometry(img.width, img.height);
    const cv::Mat src(img.height, img.width, CV_8UC1, const_cast<std::uint8_t*>(img.pixels.data()));
    cv::Mat small;
    cv::resize(src, small, cv::Size(16, 32), 0, 0, cv::INTER_AREA);
    FeatureVector v;
    v.reserve(128);
    for (int y = 0; y < 32; y += 2)
      for (int x = 0; x < 16; x += 2) {
        const int s = small.at<std::uint8_t>(y, x) + small.at<std::uint8_t>(y, x + 1) +
                      small.at<std::uint8_t>(y + 1, x) + small.at<std::uint8_t>(y + 1, x + 1);
        v.push_back(static_cast<float>(s) / (4.0f * 255.0f));
      }
    return v;
  };
  return e;
}

namespace {

struct RandomConvNet {
  std::vector<nn::Conv2d> convs;
  std::vector<nn::Activation> acts;

  explicit RandomConvNet(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const int ch[] = {1, 16, 32, 64};
    for (int s = 0; s < 3; ++s) {
      convs.emplace_back("rc" + std::to_string(s), ch[s], ch[s + 1], 3, 3, 2, 1, 1, rng);
      acts.emplace_back(nn::ActKind::leaky_relu, 0.2f);
    }
  }

  FeatureVector operator()(const GlyphImage& img) {
    nn::Tensor x(1, 1, img.height, img.width);
    to_unit_range(img, x.span());
    for (std::size_t s = 0; s < convs.size(); ++s) {
      convs[s].accumulate = false;
      x = acts[s].forward(convs[s].forward(x));
    }
    FeatureVector v(static_cast<std::size_t>(x.c()), 0.0f);
    const int hw = x.h() * x.w();
    for (int c = 0; c < x.c(); ++c) {
      double s = 0.0;
      for (int y = 0; y < x.h(); ++y)
        for (int xx = 0; xx < x.w(); ++xx) s += x(0, c, y, xx);
      v[static_cast<std::size_t>(c)] = static_cast<float>(s / hw);
    }
    return v;
  }
};

}  // namespace

FeatureExtractor random_conv_extractor(std::uint64_t seed) {
  auto net = std::make_shared<RandomConvNet>(seed);
  FeatureExtractor e;
  e.id = "random-conv";
  e.dim = 64;
  e.extract = [net](const GlyphImage& img) {
    if (img.empty()) throw BadGeometry(img.width, img.height);
    return (*net)(img);
  };
  return e;
}

FeatureExtractor recognizer_extractor(std::shared_ptr<Recognizer> recognizer) {
  FeatureExtractor e;
  e.id = "recognizer";
  e.dim = recognizer->feature_dim();
  e.extract = [recognizer](const GlyphImage& img) { return recognizer->embed(img); };
  return e;
}

FeatureSet extract_features(const std::vector<GlyphImage>& images, const ExtractorRegistry& registry,
                            const std::string& extractor_id) {
  const FeatureExtractor& e = registry.get(extractor_id);
  FeatureSet out;
  out.reserve(images.size());
  for (const auto& img : images) {
    out.push_back(e.extract(img));
    if (static_cast<int>(out.back().size()) != e.dim) throw DimensionMismatch();
  }
  return out;
}

}  // namespace behgan
