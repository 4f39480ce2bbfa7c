#include "behgan/ablation.hpp"

#include <algorithm>
#include <cstdio>

#include "behgan/errors.hpp"
#include "behgan/selection.hpp"

namespace behgan {

const char* to_string(AblationStage stage) {
  switch (stage) {
    case AblationStage::baseline: return "baseline";
    case AblationStage::oversampling: return "oversampling";
    case AblationStage::augmentation: return "augmentation";
    case AblationStage::additional_samples: return "additional_samples";
    case AblationStage::enhancement: return "enhancement";
  }
  return "baseline";
}

AblationStage ablation_stage_from_string(const std::string& s) {
  for (auto st : {AblationStage::baseline, AblationStage::oversampling, AblationStage::augmentation,
                  AblationStage::additional_samples, AblationStage::enhancement})
    if (s == to_string(st)) return st;
  throw ParseError("unknown ablation stage '" + s + "'");
}

std::vector<AblationVariant> default_ablation_plan() {
  return {
      {"Baseline (limited dataset)", AblationStage::baseline, 1, 0, false, "identity"},
      {"Oversampling", AblationStage::oversampling, 4, 0, false, "identity"},
      {"Augmentation", AblationStage::augmentation, 4, 3, false, "identity"},
      {"Additional samples", AblationStage::additional_samples, 4, 3, true, "identity"},
      {"Enhancement", AblationStage::enhancement, 4, 3, true, "baseline"},
  };
}

DatasetManifest oversample(const DatasetManifest& manifest, int factor) {
  if (factor < 1) throw Error("oversampling factor must be >= 1");
  DatasetManifest out;
  out.records.reserve(manifest.size() * static_cast<std::size_t>(factor));
  for (const auto& r : manifest.records)
    for (int k = 0; k < factor; ++k) out.records.push_back(r);
  return out;
}

std::vector<LabeledImage> oversample(const std::vector<LabeledImage>& samples, int factor) {
  if (factor < 1) throw Error("oversampling factor must be >= 1");
  std::vector<LabeledImage> out;
  out.reserve(samples.size() * static_cast<std::size_t>(factor));
  for (const auto& s : samples)
    for (int k = 0; k < factor; ++k) out.push_back(s);
  return out;
}

std::vector<LabeledImage> variant_dataset(const AblationVariant& variant, const AblationSetup& setup) {
  std::vector<LabeledImage> data = setup.base;
  if (variant.additional_samples) data.insert(data.end(), setup.additional.begin(), setup.additional.end());
  if (variant.augment_copies > 0) {
    AugmentParams p = setup.augment;
    p.copies_per_image = variant.augment_copies;
    data = augment_samples(data, p, mix_seed(setup.train.seed, 0xA06));
  }
  return oversample(data, variant.oversample_factor);
}

std::vector<AblationResult> run_ablation(const std::vector<AblationVariant>& variants, const AblationSetup& setup) {
  if (setup.eval.empty()) throw EmptyBatch();
  const auto words = words_of(setup.eval);
  std::vector<std::pair<AblationStage, AblationResult>> rows;
  for (const auto& v : variants) {
    const Enhancer& enhancer = setup.enhancers.get(v.enhancer);
    Trainer trainer(setup.train, setup.vocab, setup.models);
    trainer.set_data(variant_dataset(v, setup));
    if (setup.log) setup.log(v.label + ": " + std::to_string(trainer.data().size()) + " training images");
    while (trainer.epoch() < setup.train.epochs) trainer.run_epoch();
    const auto generated = generate_samples(trainer.generator(), words, mix_seed(setup.train.seed, 0xE7A1), &enhancer);
    EvaluationOptions eo = setup.evaluation;
    if (eo.fingerprint.empty()) eo.fingerprint = setup.train.fingerprint();
    const MetricReport m = evaluate(setup.eval, generated, setup.registry, eo);
    if (setup.log) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "%s: SSIM %.4f FID %.4f GS %.6f", v.label.c_str(), m.ssim, m.fid, m.geometry_score);
      setup.log(buf);
    }
    rows.push_back({v.stage, {v.label, m.ssim, m.fid, m.geometry_score}});
  }
  std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<AblationResult> out;
  for (auto& [stage, r] : rows) out.push_back(std::move(r));
  return out;
}

std::string ablation_csv(const std::vector<AblationResult>& rows) {
  std::string out = "Configuration,SSIM,FID,GS\n";
  char buf[96];
  for (const auto& r : rows) {
    std::string label = r.configuration;
    if (label.find_first_of(",\"") != std::string::npos) {
      std::string q = "\"";
      for (char c : label) q += c == '"' ? std::string("\"\"") : std::string(1, c);
      label = q + "\"";
    }
    std::snprintf(buf, sizeof buf, ",%.4f,%.4f,%.6f\n", r.ssim, r.fid, r.geometry_score);
    out += label + buf;
  }
  return out;
}

}  // namespace behgan
