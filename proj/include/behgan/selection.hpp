#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "behgan/dataio.hpp"
#include "behgan/enhance.hpp"
#include "behgan/generator.hpp"
#include "behgan/metrics.hpp"

namespace behgan {

/// One generated image per requested word; sample i uses the noise seed
/// mix_seed(seed, i). With an enhancer the output is enhanced and resampled
/// back to slot geometry.
std::vector<LabeledImage> generate_samples(Generator& generator, const std::vector<WordSpec>& words,
                                           std::uint64_t seed, const Enhancer* enhancer = nullptr);

std::vector<WordSpec> words_of(const std::vector<LabeledImage>& samples);

/// Competition ranks (1 = best, ties share the lower rank) per metric:
/// SSIM descending, FID and GS ascending.
std::vector<int> rank_sums(const std::vector<MetricReport>& reports);

/// Index of the report with the lowest rank sum; ties go to the lower FID,
/// then to the earlier entry. Throws EmptyCheckpointList when empty.
std::size_t rank_select(const std::vector<MetricReport>& reports);

struct EpochScore {
  int epoch = 0;
  MetricReport report;
  int rank_sum = 0;
};

struct SelectionResult {
  int epoch = 0;
  MetricReport report;
  std::vector<EpochScore> table;
};

struct SelectionOptions {
  EvaluationOptions evaluation;
  std::uint64_t seed = 0;
  std::string enhancer = "identity";
};

/// Generates the eval set's words from every checkpoint, scores each against
/// the eval set and picks the winner by rank_select.
SelectionResult select_best_epoch(const std::vector<std::filesystem::path>& checkpoints,
                                  const std::vector<LabeledImage>& eval_set, const ExtractorRegistry& registry,
                                  const EnhancerRegistry& enhancers, const SelectionOptions& options);

}  // namespace behgan
