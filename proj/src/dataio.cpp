#include "behgan/dataio.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include "json.hpp"
#include <opencv2/imgproc.hpp>
#include <random>

#include "behgan/errors.hpp"
#include "behgan/stroke_font.hpp"

namespace fs = std::filesystem;

namespace behgan {

namespace {

constexpr double kMinInkRatio = 0.005;
constexpr double kMaxInkRatio = 0.40;
constexpr int kWhitePoint = 240;

cv::Mat view(const GlyphImage& img) {
  return cv::Mat(img.height, img.width, CV_8UC1, const_cast<std::uint8_t*>(img.pixels.data()));
}

GlyphImage from_mat(const cv::Mat& m, int n_chars) {
  GlyphImage out(m.cols, m.rows, n_chars);
  for (int y = 0; y < m.rows; ++y) std::copy_n(m.ptr<std::uint8_t>(y), m.cols, &out.at(0, y));
  return out;
}

// Smallest intensity v with at least q * N pixels <= v.
int percentile(const std::array<std::size_t, 256>& hist, std::size_t total, double q) {
  const auto need = static_cast<std::size_t>(std::ceil(q * static_cast<double>(total)));
  std::size_t acc = 0;
  for (int v = 0; v < 256; ++v) {
    acc += hist[v];
    if (acc >= std::max<std::size_t>(need, 1)) return v;
  }
  return 255;
}

std::string read_label(const fs::path& path) {
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back()))) line.pop_back();
  std::size_t start = 0;
  while (start < line.size() && std::isspace(static_cast<unsigned char>(line[start]))) ++start;
  return line.substr(start);
}

void write_label(const fs::path& path, const std::string& label) {
  std::ofstream out(path);
  if (!out) throw PathError("cannot write label", path);
  out << label << '\n';
}

std::string numbered(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%05zu", i);
  return buf;
}

}  // namespace

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

const char* to_string(Provenance p) {
  switch (p) {
    case Provenance::raw: return "raw";
    case Provenance::augmented: return "augmented";
    case Provenance::synthetic: return "synthetic";
  }
  return "raw";
}

Provenance provenance_from_string(const std::string& s) {
  if (s == "raw") return Provenance::raw;
  if (s == "augmented") return Provenance::augmented;
  if (s == "synthetic") return Provenance::synthetic;
  throw ParseError("unknown provenance '" + s + "'");
}

std::map<int, int> DatasetManifest::counts_by_length() const {
  std::map<int, int> counts;
  for (const auto& r : records) ++counts[r.n_chars];
  return counts;
}

std::string length_dir_name(int n_chars) {
  if (n_chars < 1) throw InvalidCharCount(n_chars);
  static const char* names[] = {"one", "two", "three"};
  if (n_chars <= 3) return names[n_chars - 1];
  return "len_" + std::to_string(n_chars);
}

int length_from_dir_name(const std::string& name) {
  if (name == "one") return 1;
  if (name == "two") return 2;
  if (name == "three") return 3;
  if (name.rfind("len_", 0) == 0 && name.size() > 4) {
    try {
      std::size_t used = 0;
      const int n = std::stoi(name.substr(4), &used);
      if (used == name.size() - 4 && n >= 1) return n;
    } catch (const std::exception&) {
    }
  }
  return 0;
}

DatasetManifest build_manifest(const fs::path& root, const CharVocabulary* vocab, Provenance provenance) {
  DatasetManifest manifest;
  if (!fs::is_directory(root)) throw PathError("dataset root is not a directory", root);

  std::vector<std::pair<int, fs::path>> dirs;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (!entry.is_directory()) continue;
    if (const int n = length_from_dir_name(entry.path().filename().string()); n > 0) dirs.emplace_back(n, entry.path());
  }
  std::sort(dirs.begin(), dirs.end());

  for (const auto& [n, dir] : dirs) {
    std::vector<fs::path> images;
    for (const auto& entry : fs::directory_iterator(dir))
      if (entry.is_regular_file() && entry.path().extension() == ".png") images.push_back(entry.path());
    std::sort(images.begin(), images.end());

    for (const auto& image : images) {
      fs::path label_path = image;
      label_path.replace_extension(".txt");
      if (!fs::exists(label_path)) throw MissingLabel(image);
      std::string label = read_label(label_path);
      if (vocab != nullptr) {
        const WordSpec word = map_word(label, *vocab);
        if (static_cast<int>(word.length()) != n) throw LabelLengthMismatch(image);
        label = word.keys;
      } else if (static_cast<int>(split_utf8(label).size()) != n) {
        throw LabelLengthMismatch(image);
      }
      manifest.records.push_back({image, label, n, provenance});
    }
  }
  return manifest;
}

void save_manifest(const DatasetManifest& manifest, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw PathError("cannot write manifest", path);
  const fs::path base = path.parent_path().empty() ? fs::path(".") : path.parent_path();
  for (const auto& r : manifest.records) {
    nlohmann::json j;
    j["image_path"] = r.image_path.lexically_proximate(base).generic_string();
    j["label"] = r.label;
    j["n_chars"] = r.n_chars;
    j["provenance"] = to_string(r.provenance);
    out << j.dump() << '\n';
  }
}

DatasetManifest load_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw PathError("cannot open manifest", path);
  const fs::path base = path.parent_path();
  DatasetManifest manifest;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      fs::path image = j.at("image_path").get<std::string>();
      if (image.is_relative()) image = base / image;
      manifest.records.push_back({image, j.at("label").get<std::string>(), j.at("n_chars").get<int>(),
                                  provenance_from_string(j.at("provenance").get<std::string>())});
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("manifest: ") + e.what());
    }
  }
  return manifest;
}

std::vector<fs::path> validate_manifest(const DatasetManifest& manifest) {
  std::vector<fs::path> bad;
  for (const auto& r : manifest.records) {
    try {
      const GlyphImage img = read_png(r.image_path, r.n_chars);
      if (!has_slot_geometry(img) || median_intensity(img) < 200 ||
          static_cast<int>(r.label.size()) != r.n_chars)
        bad.push_back(r.image_path);
    } catch (const Error&) {
      bad.push_back(r.image_path);
    }
  }
  return bad;
}

GlyphImage normalize_background(const GlyphImage& raw) {
  if (raw.empty()) throw BlankImage();
  std::array<std::size_t, 256> hist{};
  for (auto p : raw.pixels) ++hist[p];
  const std::size_t total = raw.pixels.size();

  const int hi = percentile(hist, total, 0.95);
  int lo = percentile(hist, total, 0.05);
  // When ink covers less than 5% of the page the 5th percentile lands in the
  // paper grain; fall back to a point inside the ink mode.
  const int deep = percentile(hist, total, 0.0025);
  if (hi - lo < (hi - deep) / 2) lo = deep;

  GlyphImage out(raw.width, raw.height, raw.n_chars);
  if (hi > lo) {
    const double gain = 255.0 / static_cast<double>(hi - lo);
    std::array<std::uint8_t, 256> lut{};
    for (int v = 0; v < 256; ++v) {
      const double s = std::clamp((v - lo) * gain, 0.0, 255.0);
      int mapped = static_cast<int>(std::lround(s));
      if (mapped >= kWhitePoint) mapped = 255;
      lut[v] = static_cast<std::uint8_t>(mapped);
    }
    std::transform(raw.pixels.begin(), raw.pixels.end(), out.pixels.begin(), [&](std::uint8_t p) { return lut[p]; });
  }
  if (ink_ratio(out) < kMinInkRatio) throw BlankImage();
  return out;
}

GlyphImage resize_to_slots(const GlyphImage& img, int n_chars) {
  if (n_chars < 1) throw InvalidCharCount(n_chars);
  if (img.empty()) throw DimensionMismatch();
  const int tw = kSlotWidth * n_chars, th = kImageHeight;
  if (img.width == tw && img.height == th) {
    GlyphImage out = img;
    out.n_chars = n_chars;
    return out;
  }

  // Pad to the target aspect ratio, centred.
  int pw = img.width, ph = img.height;
  if (static_cast<long>(img.width) * th < static_cast<long>(tw) * img.height)
    pw = static_cast<int>(std::lround(static_cast<double>(img.height) * tw / th));
  else
    ph = static_cast<int>(std::lround(static_cast<double>(img.width) * th / tw));
  cv::Mat padded(ph, pw, CV_8UC1, cv::Scalar(kBackground));
  view(img).copyTo(padded(cv::Rect((pw - img.width) / 2, (ph - img.height) / 2, img.width, img.height)));

  cv::Mat resized;
  const int interp = (pw >= tw && ph >= th) ? cv::INTER_AREA : cv::INTER_LINEAR;
  cv::resize(padded, resized, cv::Size(tw, th), 0, 0, interp);
  return from_mat(resized, n_chars);
}

GlyphImage preprocess(const GlyphImage& raw, int n_chars) {
  return resize_to_slots(normalize_background(raw), n_chars);
}

QualityVerdict quality_gate(const GlyphImage& img) {
  QualityVerdict v;
  v.ink_ratio = ink_ratio(img);
  cv::Mat ink;
  cv::threshold(view(img), ink, 127, 255, cv::THRESH_BINARY_INV);
  cv::Mat labels;
  v.components = cv::connectedComponents(ink, labels, 8) - 1;
  if (v.ink_ratio < kMinInkRatio || v.ink_ratio > kMaxInkRatio) {
    v.accepted = false;
    v.reason = "ink ratio out of range";
  } else if (v.components > 3 * std::max(1, img.n_chars)) {
    v.accepted = false;
    v.reason = "too many ink components";
  }
  return v;
}

void AugmentParams::validate() const {
  if (copies_per_image < 1) throw Error("augment: copies_per_image must be >= 1");
  if (!(scale_min > 0.0) || scale_max < scale_min) throw Error("augment: invalid scale range");
  if (rotation_deg < 0.0 || translation_px < 0.0) throw Error("augment: ranges must be non-negative");
}

std::vector<GlyphImage> augment(const GlyphImage& img, const AugmentParams& params, std::uint64_t seed) {
  params.validate();
  std::vector<GlyphImage> out;
  out.reserve(params.copies_per_image);
  const cv::Point2f centre(static_cast<float>(img.width - 1) / 2.0f, static_cast<float>(img.height - 1) / 2.0f);
  for (int k = 0; k < params.copies_per_image; ++k) {
    std::mt19937_64 rng(mix_seed(seed, static_cast<std::uint64_t>(k)));
    std::uniform_real_distribution<double> scale(params.scale_min, params.scale_max);
    std::uniform_real_distribution<double> rot(-params.rotation_deg, params.rotation_deg);
    std::uniform_real_distribution<double> shift(-params.translation_px, params.translation_px);
    const double s = scale(rng), a = rot(rng), tx = shift(rng), ty = shift(rng);
    if (s == 1.0 && a == 0.0 && tx == 0.0 && ty == 0.0) {
      out.push_back(img);
      continue;
    }
    cv::Mat m = cv::getRotationMatrix2D(centre, a, s);
    m.at<double>(0, 2) += tx;
    m.at<double>(1, 2) += ty;
    cv::Mat warped;
    cv::warpAffine(view(img), warped, m, cv::Size(img.width, img.height), cv::INTER_LINEAR, cv::BORDER_CONSTANT,
                   cv::Scalar(kBackground));
    out.push_back(from_mat(warped, img.n_chars));
  }
  return out;
}

std::vector<LabeledImage> load_samples(const DatasetManifest& manifest, const CharVocabulary& vocab) {
  std::vector<LabeledImage> out;
  out.reserve(manifest.size());
  for (const auto& r : manifest.records) {
    LabeledImage s;
    s.image = read_png(r.image_path, r.n_chars);
    s.word = map_word(r.label, vocab);
    if (static_cast<int>(s.word.length()) != r.n_chars) throw LabelLengthMismatch(r.image_path);
    s.provenance = r.provenance;
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<LabeledImage> augment_samples(const std::vector<LabeledImage>& samples, const AugmentParams& params,
                                          std::uint64_t seed) {
  params.validate();
  std::vector<LabeledImage> out = samples;
  out.reserve(samples.size() * (1 + params.copies_per_image));
  for (std::size_t i = 0; i < samples.size(); ++i)
    for (auto& img : augment(samples[i].image, params, mix_seed(seed, i)))
      out.push_back({std::move(img), samples[i].word, Provenance::augmented});
  return out;
}

DatasetManifest augment_dataset(const DatasetManifest& manifest, const AugmentParams& params, std::uint64_t seed,
                                const fs::path& out_root) {
  params.validate();
  DatasetManifest out;
  std::map<int, std::size_t> next;
  auto emit = [&](const GlyphImage& img, const ManifestRecord& src, Provenance prov) {
    const fs::path dir = out_root / length_dir_name(src.n_chars);
    fs::create_directories(dir);
    const std::string stem = numbered(next[src.n_chars]++);
    write_png(img, dir / (stem + ".png"));
    write_label(dir / (stem + ".txt"), src.label);
    out.records.push_back({dir / (stem + ".png"), src.label, src.n_chars, prov});
  };
  for (std::size_t i = 0; i < manifest.size(); ++i) {
    const auto& r = manifest.records[i];
    const GlyphImage img = read_png(r.image_path, r.n_chars);
    emit(img, r, r.provenance);
    for (const auto& copy : augment(img, params, mix_seed(seed, i))) emit(copy, r, Provenance::augmented);
  }
  save_manifest(out, out_root / "manifest.jsonl");
  return out;
}

DatasetManifest synth_corpus(const CharVocabulary& vocab, const std::vector<WordSpec>& words,
                             const std::vector<fs::path>& fonts, int n_per_word, std::uint64_t seed,
                             const fs::path& out_root) {
  if (fonts.empty()) throw Error("synth_corpus: at least one font is required");
  if (words.empty()) throw Error("synth_corpus: empty word list");
  std::vector<StrokeFont> loaded;
  for (const auto& f : fonts) loaded.push_back(StrokeFont::load(f));
  for (const auto& font : loaded)
    for (const auto& w : words) {
      for (int id : w.class_ids)
        if (id < 0 || id >= vocab.size()) throw ClassOutOfRange(id, vocab.size());
      for (char k : w.keys) (void)font.glyph(k);
    }

  DatasetManifest manifest;
  fs::create_directories(out_root);
  std::map<int, std::size_t> next;
  std::uint64_t stream = 0;
  for (const auto& w : words) {
    const int n = static_cast<int>(w.length());
    for (int j = 0; j < n_per_word; ++j, ++stream) {
      const StrokeFont& font = loaded[static_cast<std::size_t>(j) % loaded.size()];
      std::mt19937_64 rng(mix_seed(seed, stream));
      GlyphImage img;
      for (int attempt = 0; attempt < 8; ++attempt) {
        const PenStyle style = sample_pen_style(rng);
        try {
          img = preprocess(render_word(font, w, style, rng), n);
        } catch (const BlankImage&) {
          continue;
        }
        if (quality_gate(img).accepted) break;
      }
      const fs::path dir = out_root / length_dir_name(n);
      fs::create_directories(dir);
      const std::string stem = numbered(next[n]++);
      write_png(img, dir / (stem + ".png"));
      write_label(dir / (stem + ".txt"), w.keys);
      manifest.records.push_back({dir / (stem + ".png"), w.keys, n, Provenance::synthetic});
    }
  }
  save_manifest(manifest, out_root / "manifest.jsonl");
  return manifest;
}

}  // namespace behgan
