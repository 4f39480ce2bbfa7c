#include <algorithm>
#include <cstdio>
#include <map>
#include "json.hpp"

#include "behgan/errors.hpp"
#include "behgan/metrics.hpp"

namespace behgan {

MetricReport evaluate(const std::vector<LabeledImage>& real, const std::vector<LabeledImage>& generated,
                      const ExtractorRegistry& registry, const EvaluationOptions& options) {
  if (real.empty() || generated.empty()) throw TooFewSamples(std::min(real.size(), generated.size()), 1);
  MetricReport r;
  r.n_real = real.size();
  r.n_generated = generated.size();
  r.extractor_id = options.extractor_id;
  r.fingerprint = options.fingerprint;

  std::map<std::vector<int>, std::vector<std::size_t>> by_label;
  std::map<int, std::vector<std::size_t>> by_width;
  for (std::size_t i = 0; i < real.size(); ++i) {
    by_label[real[i].word.class_ids].push_back(i);
    by_width[real[i].image.width].push_back(i);
  }
  std::map<std::vector<int>, std::size_t> label_cursor;
  std::map<int, std::size_t> width_cursor;
  double total = 0.0;
  std::size_t pairs = 0;
  for (const auto& g : generated) {
    const std::vector<std::size_t>* pool = nullptr;
    std::size_t* cursor = nullptr;
    if (auto it = by_label.find(g.word.class_ids);
        it != by_label.end() && real[it->second.front()].image.width == g.image.width) {
      pool = &it->second;
      cursor = &label_cursor[g.word.class_ids];
    } else if (auto wt = by_width.find(g.image.width); wt != by_width.end()) {
      pool = &wt->second;
      cursor = &width_cursor[g.image.width];
    }
    if (pool == nullptr) continue;
    const auto& ref = real[(*pool)[(*cursor)++ % pool->size()]].image;
    if (ref.height != g.image.height) continue;
    total += ssim(ref, g.image);
    ++pairs;
  }
  r.ssim = pairs == 0 ? 0.0 : std::clamp(total / static_cast<double>(pairs), 0.0, 1.0);

  std::vector<GlyphImage> ri, gi;
  for (const auto& s : real) ri.push_back(s.image);
  for (const auto& s : generated) gi.push_back(s.image);

  const FidResult f = fid(extract_features(ri, registry, options.extractor_id),
                          extract_features(gi, registry, options.extractor_id));
  r.fid = f.value;
  r.fid_regularized = f.regularized;

  std::vector<GlyphImage> all = ri;
  all.insert(all.end(), gi.begin(), gi.end());
  FeatureSet flat = flatten_images(all);
  FeatureSet fr(flat.begin(), flat.begin() + static_cast<std::ptrdiff_t>(ri.size()));
  FeatureSet fg(flat.begin() + static_cast<std::ptrdiff_t>(ri.size()), flat.end());
  r.geometry_score = geometry_score(fr, fg, options.gs);
  return r;
}

std::string to_json(const MetricReport& report) {
  nlohmann::json j;
  j["ssim"] = report.ssim;
  j["fid"] = report.fid;
  j["geometry_score"] = report.geometry_score;
  j["n_real"] = report.n_real;
  j["n_generated"] = report.n_generated;
  j["extractor"] = report.extractor_id;
  j["fingerprint"] = report.fingerprint;
  j["fid_regularized"] = report.fid_regularized;
  return j.dump(2);
}

MetricReport report_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    MetricReport r;
    r.ssim = j.at("ssim").get<double>();
    r.fid = j.at("fid").get<double>();
    r.geometry_score = j.at("geometry_score").get<double>();
    r.n_real = j.value("n_real", std::size_t{0});
    r.n_generated = j.value("n_generated", std::size_t{0});
    r.extractor_id = j.value("extractor", std::string());
    r.fingerprint = j.value("fingerprint", std::string());
    r.fid_regularized = j.value("fid_regularized", false);
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("metric report: ") + e.what());
  }
}

std::string to_score_table_csv(const MetricReport& report) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "Evaluation Metric,Score\nSSIM,%.4f\nFID,%.4f\nGeometric Score,%.6f\n", report.ssim,
                report.fid, report.geometry_score);
  return buf;
}

}  // namespace behgan
