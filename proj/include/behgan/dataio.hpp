#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "behgan/image.hpp"
#include "behgan/vocab.hpp"

namespace behgan {

enum class Provenance { raw, augmented, synthetic };

const char* to_string(Provenance p);
Provenance provenance_from_string(const std::string& s);

struct ManifestRecord {
  std::filesystem::path image_path;
  std::string label;  // key letters
  int n_chars = 1;
  Provenance provenance = Provenance::raw;

  bool operator==(const ManifestRecord&) const = default;
};

struct DatasetManifest {
  std::vector<ManifestRecord> records;

  std::map<int, int> counts_by_length() const;
  std::size_t size() const noexcept { return records.size(); }
  bool empty() const noexcept { return records.empty(); }
};

// "one", "two", "three", then "len_4", "len_5", ...
std::string length_dir_name(int n_chars);
// Inverse of length_dir_name; 0 if the name is not a length directory.
int length_from_dir_name(const std::string& name);

/// Pairs `<root>/<lendir>/NAME.png` with `NAME.txt`. Labels are validated
/// against the directory length and, when given, the vocabulary.
DatasetManifest build_manifest(const std::filesystem::path& root, const CharVocabulary* vocab = nullptr,
                               Provenance provenance = Provenance::raw);

// JSON lines; paths are written relative to the manifest's directory.
void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);
DatasetManifest load_manifest(const std::filesystem::path& path);

/// Reads every record's image and checks slot geometry and the background
/// rule. Returns the offending paths.
std::vector<std::filesystem::path> validate_manifest(const DatasetManifest& manifest);

// ---------------------------------------------------------------------------
// Preprocessing

/// Percentile contrast stretch (5th -> 0, 95th -> 255) followed by a
/// white-point clamp. Throws BlankImage when under 0.5% of pixels are ink.
GlyphImage normalize_background(const GlyphImage& raw);

/// Pads with background to the n_chars/2 aspect ratio, then area-resamples
/// (bilinear when upscaling) to 16*n_chars x 32.
GlyphImage resize_to_slots(const GlyphImage& img, int n_chars);

// normalize_background then resize_to_slots.
GlyphImage preprocess(const GlyphImage& raw, int n_chars);

struct QualityVerdict {
  bool accepted = true;
  double ink_ratio = 0.0;
  int components = 0;
  std::string reason;
};

/// Automatable stand-in for manual selection of well-written samples:
/// ink ratio within [0.5%, 40%] and at most 3 connected ink components per
/// expected glyph.
QualityVerdict quality_gate(const GlyphImage& img);

// ---------------------------------------------------------------------------
// Augmentation

struct AugmentParams {
  double scale_min = 0.9;
  double scale_max = 1.1;
  double rotation_deg = 8.0;     // uniform in [-r, r]
  double translation_px = 2.0;   // uniform in [-t, t], both axes
  int copies_per_image = 3;

  void validate() const;
  static AugmentParams identity(int copies = 1) { return {1.0, 1.0, 0.0, 0.0, copies}; }
};

std::vector<GlyphImage> augment(const GlyphImage& img, const AugmentParams& params, std::uint64_t seed);

// ---------------------------------------------------------------------------
// In-memory samples

struct LabeledImage {
  GlyphImage image;
  WordSpec word;
  Provenance provenance = Provenance::raw;
};

std::vector<LabeledImage> load_samples(const DatasetManifest& manifest, const CharVocabulary& vocab);

/// Originals followed by copies_per_image augmented copies of each, so the
/// result has size * (1 + copies) entries.
std::vector<LabeledImage> augment_samples(const std::vector<LabeledImage>& samples, const AugmentParams& params,
                                          std::uint64_t seed);

/// Writes originals plus augmented copies under out_root and returns the
/// combined manifest.
DatasetManifest augment_dataset(const DatasetManifest& manifest, const AugmentParams& params, std::uint64_t seed,
                                const std::filesystem::path& out_root);

/// Renders every word n_per_word times, cycling through the fonts,
/// preprocesses, and writes
/// `<out_root>/<lendir>/NNNNN.{png,txt}` plus manifest.jsonl.
DatasetManifest synth_corpus(const CharVocabulary& vocab, const std::vector<WordSpec>& words,
                             const std::vector<std::filesystem::path>& fonts, int n_per_word, std::uint64_t seed,
                             const std::filesystem::path& out_root);

// splitmix64 step; used to derive independent per-item seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace behgan
