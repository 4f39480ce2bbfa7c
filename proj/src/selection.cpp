#include "behgan/selection.hpp"

#include <algorithm>

#include "behgan/errors.hpp"
#include "behgan/checkpoint.hpp"
#include "behgan/trainer.hpp"

namespace behgan {

std::vector<LabeledImage> generate_samples(Generator& generator, const std::vector<WordSpec>& words,
                                           std::uint64_t seed, const Enhancer* enhancer) {
  std::vector<LabeledImage> out;
  out.reserve(words.size());
  for (std::size_t i = 0; i < words.size(); ++i) {
    const NoiseVector z = NoiseVector::sample(generator.config().d_z, mix_seed(seed, i));
    GlyphImage img = generator.generate(words[i], z);
    if (enhancer != nullptr) img = to_slot_geometry(enhancer->apply(img));
    out.push_back({std::move(img), words[i], Provenance::synthetic});
  }
  return out;
}

std::vector<WordSpec> words_of(const std::vector<LabeledImage>& samples) {
  std::vector<WordSpec> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(s.word);
  return out;
}

namespace {

// Competition ranking of `keys` in ascending order.
std::vector<int> ranks(const std::vector<double>& keys) {
  std::vector<int> r(keys.size());
  for (std::size_t i = 0; i < keys.size(); ++i)
    r[i] = 1 + static_cast<int>(std::count_if(keys.begin(), keys.end(), [&](double k) { return k < keys[i]; }));
  return r;
}

}  // namespace

std::vector<int> rank_sums(const std::vector<MetricReport>& reports) {
  std::vector<double> s, f, g;
  for (const auto& r : reports) {
    s.push_back(-r.ssim);
    f.push_back(r.fid);
    g.push_back(r.geometry_score);
  }
  const auto rs = ranks(s), rf = ranks(f), rg = ranks(g);
  std::vector<int> out(reports.size());
  for (std::size_t i = 0; i < reports.size(); ++i) out[i] = rs[i] + rf[i] + rg[i];
  return out;
}

std::size_t rank_select(const std::vector<MetricReport>& reports) {
  if (reports.empty()) throw EmptyCheckpointList();
  const auto sums = rank_sums(reports);
  std::size_t best = 0;
  for (std::size_t i = 1; i < reports.size(); ++i)
    if (sums[i] < sums[best] || (sums[i] == sums[best] && reports[i].fid < reports[best].fid)) best = i;
  return best;
}

SelectionResult select_best_epoch(const std::vector<std::filesystem::path>& checkpoints,
                                  const std::vector<LabeledImage>& eval_set, const ExtractorRegistry& registry,
                                  const EnhancerRegistry& enhancers, const SelectionOptions& options) {
  if (checkpoints.empty()) throw EmptyCheckpointList();
  if (eval_set.empty()) throw EmptyBatch();
  const Enhancer& enhancer = enhancers.get(options.enhancer);
  const auto words = words_of(eval_set);

  SelectionResult result;
  std::vector<MetricReport> reports;
  for (const auto& path : checkpoints) {
    LoadedGenerator g = load_generator(path);
    const auto generated = generate_samples(g.generator, words, options.seed, &enhancer);
    EvaluationOptions eo = options.evaluation;
    if (eo.fingerprint.empty()) eo.fingerprint = g.fingerprint;
    reports.push_back(evaluate(eval_set, generated, registry, eo));
    result.table.push_back({g.epoch, reports.back(), 0});
  }
  const auto sums = rank_sums(reports);
  for (std::size_t i = 0; i < sums.size(); ++i) result.table[i].rank_sum = sums[i];
  const std::size_t best = rank_select(reports);
  result.epoch = result.table[best].epoch;
  result.report = reports[best];
  return result;
}

}  // namespace behgan
