#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "behgan/dataio.hpp"
#include "behgan/image.hpp"

namespace behgan {

class Recognizer;

using FeatureVector = std::vector<float>;
using FeatureSet = std::vector<FeatureVector>;

// ------------------------------------------------------------------ SSIM

inline constexpr int kSsimWindow = 8;

/// Mean SSIM over every 8x8 uniform window (stride 1) with
/// C1 = (0.01*255)^2 and C2 = (0.03*255)^2. Raw value in [-1, 1].
/// Images smaller than the window use one window covering the image.
double ssim(const GlyphImage& a, const GlyphImage& b);

// ------------------------------------------------------------------- FID

struct FidResult {
  double value = 0.0;
  bool regularized = false;  // epsilon * I added to both covariances
};

inline constexpr double kFidEpsilon = 1e-6;

/// Squared Frechet distance between Gaussian fits of the two sets.
FidResult fid(const FeatureSet& real, const FeatureSet& generated);

// -------------------------------------------------------- Geometry Score

struct GeometryScoreParams {
  int landmarks = 64;
  int iterations = 2500;
  int i_max = 100;
  // Filtration cut-off as a fraction of the largest squared
  // witness-landmark distance.
  double gamma = 1.0 / 128.0;
  std::uint64_t seed = 0;
  std::size_t min_samples = 100;
};

struct PersistenceInterval {
  double birth = 0.0;
  double death = 0.0;  // +inf for essential classes
};

/// Lazy witness complex on the chosen landmarks (filtration by squared
/// distances relaxed by each witness's nearest-landmark distance), flag
/// expanded to triangles and cut at alpha_max. Returns 1-dimensional
/// persistence intervals over Z/2. dist2 is witnesses x all points; the
/// landmark indices select columns.
std::vector<PersistenceInterval> witness_h1_intervals(const std::vector<double>& dist2, std::size_t n_points,
                                                      const std::vector<std::size_t>& landmarks, double alpha_max);

/// Fraction of [0, alpha_max] during which exactly i classes are alive,
/// for i in [0, i_max).
std::vector<double> relative_living_times(const std::vector<PersistenceInterval>& intervals, double alpha_max, int i_max);

/// Mean RLT histogram over params.iterations random landmark draws.
std::vector<double> mean_relative_living_times(const FeatureSet& points, const GeometryScoreParams& params);

/// Sum of squared differences of the two mean-RLT histograms; both sets use
/// the same landmark-sampling seed.
double geometry_score(const FeatureSet& real, const FeatureSet& generated, const GeometryScoreParams& params);

/// Images are padded with background to the widest image and flattened to
/// [0, 1] intensities.
FeatureSet flatten_images(const std::vector<GlyphImage>& images);

// ---------------------------------------------------- feature extractors

struct FeatureExtractor {
  std::string id;
  int dim = 0;
  std::function<FeatureVector(const GlyphImage&)> extract;
};

class ExtractorRegistry {
 public:
  void add(FeatureExtractor extractor);
  const FeatureExtractor& get(const std::string& id) const;  // throws UnknownExtractor
  bool contains(const std::string& id) const { return extractors_.count(id) != 0; }
  std::vector<std::string> ids() const;

  /// "downsample" and "random-conv".
  static ExtractorRegistry with_builtins();

 private:
  std::map<std::string, FeatureExtractor> extractors_;
};

/// Area-resamples to 16x32, then 2x2 mean-pools to an 8x16 grid (128 values).
FeatureExtractor downsample_extractor();
/// Seeded random conv net, global average pooled.
FeatureExtractor random_conv_extractor(std::uint64_t seed = 7);
/// Frame-averaged penultimate recognizer features.
FeatureExtractor recognizer_extractor(std::shared_ptr<Recognizer> recognizer);

FeatureSet extract_features(const std::vector<GlyphImage>& images, const ExtractorRegistry& registry,
                            const std::string& extractor_id);

// --------------------------------------------------------- MetricReport

struct MetricReport {
  double ssim = 0.0;
  double fid = 0.0;
  double geometry_score = 0.0;
  std::size_t n_real = 0;
  std::size_t n_generated = 0;
  std::string extractor_id;
  std::string fingerprint;
  bool fid_regularized = false;
};

struct EvaluationOptions {
  std::string extractor_id = "downsample";
  GeometryScoreParams gs;
  std::string fingerprint;
};

/// SSIM pairs each generated image with real images of the same label
/// (round robin), falling back to any real image of the same width; the
/// reported mean is clamped to [0, 1].
MetricReport evaluate(const std::vector<LabeledImage>& real, const std::vector<LabeledImage>& generated,
                      const ExtractorRegistry& registry, const EvaluationOptions& options);

std::string to_json(const MetricReport& report);
MetricReport report_from_json(const std::string& text);
/// Two-column "Evaluation Metric,Score" table.
std::string to_score_table_csv(const MetricReport& report);

}  // namespace behgan
