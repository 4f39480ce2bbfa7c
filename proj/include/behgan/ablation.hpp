#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "behgan/dataio.hpp"
#include "behgan/enhance.hpp"
#include "behgan/metrics.hpp"
#include "behgan/trainer.hpp"

namespace behgan {

/// Row order of the ablation table.
enum class AblationStage { baseline, oversampling, augmentation, additional_samples, enhancement };

const char* to_string(AblationStage stage);
AblationStage ablation_stage_from_string(const std::string& s);

struct AblationVariant {
  std::string label;
  AblationStage stage = AblationStage::baseline;
  int oversample_factor = 1;
  int augment_copies = 0;
  bool additional_samples = false;
  std::string enhancer = "identity";
};

struct AblationResult {
  std::string configuration;
  double ssim = 0.0;
  double fid = 0.0;
  double geometry_score = 0.0;

  bool operator==(const AblationResult&) const = default;
};

struct AblationSetup {
  TrainConfig train;
  ModelConfig models;
  CharVocabulary vocab;
  std::vector<LabeledImage> base;
  std::vector<LabeledImage> additional;
  std::vector<LabeledImage> eval;
  AugmentParams augment;  // copies_per_image is taken from each variant
  ExtractorRegistry registry = ExtractorRegistry::with_builtins();
  EnhancerRegistry enhancers = EnhancerRegistry::with_builtins();
  EvaluationOptions evaluation;
  std::function<void(const std::string&)> log;
};

/// The five cumulative rows: baseline, oversampling x4, + augmentation
/// (3 copies), + additional samples, + baseline enhancement.
std::vector<AblationVariant> default_ablation_plan();

/// Training set of one variant: base (+ additional), augmented, then
/// oversampled.
std::vector<LabeledImage> variant_dataset(const AblationVariant& variant, const AblationSetup& setup);

/// Trains every variant from the same seed, evaluates its final generator on
/// the eval set, and returns rows sorted by stage (stable).
std::vector<AblationResult> run_ablation(const std::vector<AblationVariant>& variants, const AblationSetup& setup);

/// "Configuration,SSIM,FID,GS" table.
std::string ablation_csv(const std::vector<AblationResult>& rows);

/// Each record repeated `factor` times in place; paths are shared.
DatasetManifest oversample(const DatasetManifest& manifest, int factor);
std::vector<LabeledImage> oversample(const std::vector<LabeledImage>& samples, int factor);

}  // namespace behgan
