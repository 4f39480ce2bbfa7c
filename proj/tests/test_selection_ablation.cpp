#include <doctest.h>

#include "behgan/ablation.hpp"
#include "behgan/checkpoint.hpp"
#include "behgan/errors.hpp"
#include "behgan/selection.hpp"
#include "test_util.hpp"

using namespace behgan;

namespace {

MetricReport report(double ssim, double fid, double gs) {
  MetricReport r;
  r.ssim = ssim;
  r.fid = fid;
  r.geometry_score = gs;
  return r;
}

AblationSetup tiny_setup() {
  AblationSetup s;
  s.train.batch_size = 4;
  s.train.epochs = 1;
  s.train.seed = 3;
  s.models = testing::tiny_models();
  s.vocab = CharVocabulary::default_bengali();
  s.base = testing::stroke_samples(12, 1);
  s.additional = testing::stroke_samples(8, 2);
  s.eval = testing::stroke_samples(20, 3);
  s.evaluation.gs.iterations = 3;
  s.evaluation.gs.min_samples = 10;
  return s;
}

}  // namespace

TEST_CASE("rank sums on three reports") {
  const std::vector<MetricReport> r = {report(0.8, 5.0, 0.3), report(0.9, 6.0, 0.1), report(0.7, 4.0, 0.2)};
  // SSIM ranks 2 1 3, FID 2 3 1, GS 3 1 2.
  CHECK(rank_sums(r) == std::vector<int>{7, 5, 6});
  CHECK(rank_select(r) == 1);
}

TEST_CASE("rank selection ties and dominance") {
  // every sum is 6; the lowest FID wins
  const std::vector<MetricReport> tie = {report(0.9, 2.0, 0.3), report(0.8, 3.0, 0.1), report(0.7, 1.0, 0.2)};
  CHECK(rank_select(tie) == 2);
  const std::vector<MetricReport> same = {report(0.5, 1.0, 0.1), report(0.5, 1.0, 0.1)};
  CHECK(rank_sums(same) == std::vector<int>{3, 3});
  CHECK(rank_select(same) == 0);
  const std::vector<MetricReport> dom = {report(0.1, 9, 0.9), report(0.2, 8, 0.8), report(0.99, 0.1, 0.01),
                                         report(0.3, 7, 0.7)};
  CHECK(rank_select(dom) == 2);
  CHECK(rank_select({report(0.1, 1, 1)}) == 0);
  CHECK_THROWS_AS(rank_select({}), EmptyCheckpointList);
}

TEST_CASE("oversampling arithmetic") {
  DatasetManifest m;
  for (int i = 0; i < 10; ++i) m.records.push_back({"img" + std::to_string(i) + ".png", "k", 1, Provenance::raw});
  CHECK(oversample(m, 1).records == m.records);
  const auto twice = oversample(m, 2);
  CHECK(twice.size() == 20);
  CHECK(twice.records[0].image_path == twice.records[1].image_path);
  CHECK(oversample(testing::stroke_samples(7, 1), 3).size() == 21);
  CHECK_THROWS(oversample(m, 0));
  DatasetManifest big;
  big.records.resize(2756);
  CHECK(oversample(big, 9).size() == 24804);
}

TEST_CASE("variant datasets are cumulative") {
  const AblationSetup s = tiny_setup();
  const auto plan = default_ablation_plan();
  REQUIRE(plan.size() == 5);
  CHECK(variant_dataset(plan[0], s).size() == 12);
  CHECK(variant_dataset(plan[1], s).size() == 48);
  CHECK(variant_dataset(plan[2], s).size() == 12 * 4 * 4);
  CHECK(variant_dataset(plan[3], s).size() == 20 * 4 * 4);
  CHECK(plan[4].enhancer == "baseline");
  CHECK(ablation_stage_from_string("augmentation") == AblationStage::augmentation);
  CHECK_THROWS_AS(ablation_stage_from_string("dropout"), ParseError);
}

TEST_CASE("ablation rows: identical variants agree, order follows stage") {
  const AblationSetup s = tiny_setup();
  AblationVariant over{"Over", AblationStage::oversampling, 2, 0, false, "identity"};
  AblationVariant base{"Base", AblationStage::baseline, 1, 0, false, "identity"};
  AblationVariant base2 = base;
  base2.label = "Base";
  const auto rows = run_ablation({over, base, base2}, s);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].configuration == "Base");
  CHECK(rows[2].configuration == "Over");
  CHECK(rows[0] == rows[1]);

  const std::string csv = ablation_csv({{"Plain", 0.5, 1.25, 0.01}, {"With, comma", 0.25, 2.0, 0.5}});
  CHECK(csv == "Configuration,SSIM,FID,GS\nPlain,0.5000,1.2500,0.010000\n\"With, comma\",0.2500,2.0000,0.500000\n");
}

TEST_CASE("epoch selection across checkpoints") {
  testing::TempDir dir("select");
  TrainConfig cfg;
  cfg.batch_size = 4;
  cfg.epochs = 3;
  Trainer t(cfg, CharVocabulary::default_bengali(), testing::tiny_models());
  t.set_data(testing::stroke_samples(16, 4));
  const auto ckpts = t.train(dir.path());
  REQUIRE(ckpts.size() == 3);
  SelectionOptions opt;
  opt.evaluation.gs.iterations = 3;
  opt.evaluation.gs.min_samples = 10;
  const auto eval = testing::stroke_samples(20, 5);
  const auto r = select_best_epoch(ckpts, eval, ExtractorRegistry::with_builtins(), EnhancerRegistry::with_builtins(), opt);
  CHECK(r.table.size() == 3);
  std::vector<MetricReport> reports;
  for (const auto& e : r.table) reports.push_back(e.report);
  CHECK(r.epoch == r.table[rank_select(reports)].epoch);
  CHECK_THROWS_AS(select_best_epoch({}, eval, ExtractorRegistry::with_builtins(), EnhancerRegistry::with_builtins(), opt),
                  EmptyCheckpointList);
}

TEST_CASE("generated samples carry labels and geometry") {
  Generator g(testing::tiny_models().generator, 5, 1);
  const auto eval = testing::stroke_samples(6, 1);
  const auto enh = EnhancerRegistry::with_builtins();
  const auto a = generate_samples(g, words_of(eval), 9), b = generate_samples(g, words_of(eval), 9, &enh.get("baseline"));
  for (std::size_t i = 0; i < eval.size(); ++i) {
    CHECK(a[i].word == eval[i].word);
    CHECK(a[i].provenance == Provenance::synthetic);
    CHECK(has_slot_geometry(a[i].image));
    CHECK(has_slot_geometry(b[i].image));
    CHECK(a[i].image.width == eval[i].image.width);
  }
  CHECK(generate_samples(g, words_of(eval), 9)[3].image == a[3].image);
}
