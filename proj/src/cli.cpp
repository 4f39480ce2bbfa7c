#include "behgan/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include "behgan/ablation.hpp"
#include "behgan/checkpoint.hpp"
#include "behgan/dataio.hpp"
#include "behgan/enhance.hpp"
#include "behgan/errors.hpp"
#include "behgan/metrics.hpp"
#include "behgan/selection.hpp"
#include "behgan/trainer.hpp"
#include "json.hpp"

namespace behgan::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

fs::path data_root() {
  const char* env = std::getenv("BEHGAN_DATA_ROOT");
  return env != nullptr && *env != '\0' ? fs::path(env) : fs::current_path() / "data";
}

fs::path or_default(const std::string& given, const fs::path& fallback) { return given.empty() ? fallback : fs::path(given); }

CharVocabulary vocab_from(const std::string& path) {
  return path.empty() ? CharVocabulary::load(asset_dir() / "vocab.tsv") : CharVocabulary::load(path);
}

/// A dataset directory: manifest.jsonl when present, else the length-directory layout.
std::vector<LabeledImage> load_dataset(const fs::path& dir, const CharVocabulary& vocab) {
  const fs::path manifest = dir / "manifest.jsonl";
  if (fs::is_regular_file(manifest)) return load_samples(load_manifest(manifest), vocab);
  return load_samples(build_manifest(dir, &vocab), vocab);
}

std::vector<fs::path> default_fonts() {
  std::vector<fs::path> fonts;
  for (const auto& e : fs::directory_iterator(asset_dir() / "fonts"))
    if (e.path().extension() == ".json") fonts.push_back(e.path());
  std::sort(fonts.begin(), fonts.end());
  return fonts;
}

DatasetManifest write_samples(const std::vector<LabeledImage>& samples, const fs::path& out_root) {
  DatasetManifest m;
  std::map<int, int> counters;
  for (const auto& s : samples) {
    const int n = static_cast<int>(s.word.length());
    char name[32];
    std::snprintf(name, sizeof name, "%05d", counters[n]++);
    const fs::path dir = out_root / length_dir_name(n);
    fs::create_directories(dir);
    const fs::path png = dir / (std::string(name) + ".png");
    write_png(s.image, png);
    std::ofstream(dir / (std::string(name) + ".txt")) << s.word.keys << "\n";
    m.records.push_back({png, s.word.keys, n, s.provenance});
  }
  save_manifest(m, out_root / "manifest.jsonl");
  return m;
}

std::vector<WordSpec> words_from(const std::string& list, const std::string& file, const CharVocabulary& vocab) {
  std::vector<WordSpec> out;
  if (!file.empty()) out = load_word_list(file, vocab);
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(map_word(item, vocab));
  return out;
}

// Contact sheet: one block of rows per checkpoint, one row per word, one
// column per style; 2 px grey rules between cells.
GlyphImage contact_sheet(const std::vector<std::vector<std::vector<GlyphImage>>>& blocks) {
  constexpr int rule = 2;
  int cell_w = 0, rows = 0, cols = 0;
  for (const auto& block : blocks)
    for (const auto& row : block) {
      ++rows;
      cols = std::max(cols, static_cast<int>(row.size()));
      for (const auto& img : row) cell_w = std::max(cell_w, img.width);
    }
  const int gaps = rows - 1 + static_cast<int>(blocks.size()) - 1;
  GlyphImage sheet(cols * cell_w + (cols - 1) * rule, rows * kImageHeight + std::max(gaps, 0) * rule, 1, 160);
  int y = 0;
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    if (b > 0) y += rule;
    for (const auto& row : blocks[b]) {
      for (std::size_t c = 0; c < row.size(); ++c) {
        const int x0 = static_cast<int>(c) * (cell_w + rule);
        for (int yy = 0; yy < kImageHeight; ++yy)
          for (int xx = 0; xx < cell_w; ++xx)
            sheet.at(x0 + xx, y + yy) = xx < row[c].width ? row[c].at(xx, yy) : kBackground;
      }
      y += kImageHeight + rule;
    }
    y -= rule;
  }
  return sheet;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw PathError("cannot write", path);
  os << text;
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"Word-level handwriting synthesis toolkit"};
  app.require_subcommand(1);
  std::uint64_t seed = 0;
  std::string vocab_path;

  // synth
  auto* synth = app.add_subcommand("synth", "Render a synthetic stroke-font corpus");
  std::string synth_out, synth_words;
  std::vector<std::string> synth_fonts;
  int per_word = 100;
  synth->add_option("--out", synth_out, "Output dataset directory (default $BEHGAN_DATA_ROOT/synth)");
  synth->add_option("--words", synth_words, "Word list file (default assets/words.txt)");
  synth->add_option("--font", synth_fonts, "Stroke font JSON, repeatable (default assets/fonts/*.json)");
  synth->add_option("--per-word", per_word, "Images per word")->check(CLI::PositiveNumber);

  // preprocess
  auto* prep = app.add_subcommand("preprocess", "Normalize and resize a raw dataset to the slot grid");
  std::string prep_in, prep_out;
  bool prep_gate = false;
  prep->add_option("--in", prep_in, "Raw dataset root (length directories)")->required();
  prep->add_option("--out", prep_out, "Output directory")->required();
  prep->add_flag("--quality-gate", prep_gate, "Drop images that fail the ink/component gate");

  // augment
  auto* aug = app.add_subcommand("augment", "Write augmented copies of a dataset");
  std::string aug_in, aug_out;
  AugmentParams aug_params;
  aug->add_option("--in", aug_in, "Dataset directory")->required();
  aug->add_option("--out", aug_out, "Output directory")->required();
  aug->add_option("--copies", aug_params.copies_per_image, "Augmented copies per image");
  aug->add_option("--rotation", aug_params.rotation_deg, "Max rotation in degrees");
  aug->add_option("--translation", aug_params.translation_px, "Max translation in pixels");
  aug->add_option("--scale-min", aug_params.scale_min);
  aug->add_option("--scale-max", aug_params.scale_max);

  // train
  auto* train = app.add_subcommand("train", "Adversarial training with checkpoints");
  std::string train_data, train_out, train_config, resume;
  TrainConfig flags;
  train->add_option("--data", train_data, "Training dataset (default $BEHGAN_DATA_ROOT/synth)");
  train->add_option("--out", train_out, "Run directory for checkpoints and losses.csv")->required();
  train->add_option("--config", train_config, "key=value config file; flags win");
  train->add_option("--resume", resume, "Checkpoint to continue from");
  auto* o_gamma = train->add_option("--gamma", flags.gamma);
  auto* o_batch = train->add_option("--batch-size", flags.batch_size);
  auto* o_epochs = train->add_option("--epochs", flags.epochs);
  auto* o_lrg = train->add_option("--lr-g", flags.lr_g);
  auto* o_lrd = train->add_option("--lr-d", flags.lr_d);
  auto* o_lrr = train->add_option("--lr-r", flags.lr_r);
  auto* o_every = train->add_option("--checkpoint-every", flags.checkpoint_every);
  auto* o_spgu = train->add_option("--steps-per-generator-update", flags.steps_per_generator_update);
  auto* o_model = train->add_option("--model", flags.model, "default | desk");

  // generate
  auto* gen = app.add_subcommand("generate", "Render words from a checkpoint");
  std::string gen_text, gen_words, gen_ckpt, gen_out, gen_enhance = "identity";
  int gen_count = 1;
  gen->add_option("--text", gen_text, "Word to render (glyphs or key letters)");
  gen->add_option("--words", gen_words, "Word list file; writes a dataset directory");
  gen->add_option("--count", gen_count, "Images per listed word")->check(CLI::PositiveNumber);
  gen->add_option("--ckpt", gen_ckpt, "Checkpoint file")->required();
  gen->add_option("--out", gen_out, "Output PNG (--text) or directory (--words)")->required();
  gen->add_option("--enhance", gen_enhance, "Enhancer id");

  // evaluate
  auto* eval = app.add_subcommand("evaluate", "SSIM, FID and Geometry Score of generated vs real");
  std::string ev_real, ev_gen, ev_out, ev_table, ev_extractor = "downsample", ev_rec;
  GeometryScoreParams gs;
  eval->add_option("--real", ev_real, "Real dataset (default $BEHGAN_DATA_ROOT/synth)");
  eval->add_option("--gen", ev_gen, "Generated dataset")->required();
  eval->add_option("--out", ev_out, "Report JSON (default stdout)");
  eval->add_option("--table", ev_table, "Also write the Evaluation Metric,Score CSV");
  eval->add_option("--extractor", ev_extractor, "FID feature extractor id");
  eval->add_option("--recognizer-ckpt", ev_rec, "Checkpoint for the recognizer extractor");
  eval->add_option("--gs-iterations", gs.iterations);
  eval->add_option("--gs-landmarks", gs.landmarks);

  // ablate
  auto* ablate = app.add_subcommand("ablate", "Run an ablation plan and write the table CSV");
  std::string plan_path, ablate_out;
  ablate->add_option("--plan", plan_path, "Plan JSON")->required();
  ablate->add_option("--out", ablate_out, "CSV path (default stdout)");

  // grid
  auto* grid = app.add_subcommand("grid", "Contact sheet of words x styles across checkpoints");
  std::vector<std::string> grid_ckpts;
  std::string grid_words, grid_out;
  int styles = 4;
  grid->add_option("--ckpt", grid_ckpts, "Checkpoint file or run directory, repeatable")->required();
  grid->add_option("--words", grid_words, "Comma-separated words")->required();
  grid->add_option("--styles", styles, "Noise draws per word")->check(CLI::PositiveNumber);
  grid->add_option("--out", grid_out, "Output PNG")->required();

  auto* enh = app.add_subcommand("enhancers", "List registered enhancers");

  for (auto* sub : {synth, prep, aug, train, gen, eval, ablate, grid}) {
    sub->add_option("--seed", seed, "Seed for every random draw");
    sub->add_option("--vocab", vocab_path, "Vocabulary TSV (default assets/vocab.tsv)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return 1;
  }

  try {
    if (*synth) {
      const CharVocabulary vocab = vocab_from(vocab_path);
      const auto words = synth_words.empty() ? load_word_list(asset_dir() / "words.txt", vocab)
                                             : load_word_list(synth_words, vocab);
      std::vector<fs::path> fonts(synth_fonts.begin(), synth_fonts.end());
      if (fonts.empty()) fonts = default_fonts();
      const fs::path out = or_default(synth_out, data_root() / "synth");
      const auto m = synth_corpus(vocab, words, fonts, per_word, seed, out);
      std::cout << "wrote " << m.size() << " images to " << out.string() << "\n";
    } else if (*prep) {
      const CharVocabulary vocab = vocab_from(vocab_path);
      const DatasetManifest raw = build_manifest(prep_in, &vocab);
      std::vector<LabeledImage> kept;
      std::size_t dropped = 0;
      for (const auto& r : raw.records) {
        try {
          GlyphImage img = preprocess(read_png(r.image_path, r.n_chars), r.n_chars);
          if (prep_gate && !quality_gate(img).accepted) {
            ++dropped;
            continue;
          }
          kept.push_back({std::move(img), map_word(r.label, vocab), Provenance::raw});
        } catch (const BlankImage&) {
          std::cerr << "skipping blank image " << r.image_path.string() << "\n";
          ++dropped;
        }
      }
      write_samples(kept, prep_out);
      std::cout << "kept " << kept.size() << ", dropped " << dropped << "\n";
    } else if (*aug) {
      const CharVocabulary vocab = vocab_from(vocab_path);
      const fs::path in = aug_in;
      const DatasetManifest m = fs::is_regular_file(in / "manifest.jsonl") ? load_manifest(in / "manifest.jsonl")
                                                                            : build_manifest(in, &vocab);
      const auto out = augment_dataset(m, aug_params, seed, aug_out);
      std::cout << "wrote " << out.size() << " records (" << m.size() << " originals)\n";
    } else if (*train) {
      TrainConfig cfg = train_config.empty() ? TrainConfig{} : TrainConfig::load(train_config);
      if (o_gamma->count()) cfg.gamma = flags.gamma;
      if (o_batch->count()) cfg.batch_size = flags.batch_size;
      if (o_epochs->count()) cfg.epochs = flags.epochs;
      if (o_lrg->count()) cfg.lr_g = flags.lr_g;
      if (o_lrd->count()) cfg.lr_d = flags.lr_d;
      if (o_lrr->count()) cfg.lr_r = flags.lr_r;
      if (o_every->count()) cfg.checkpoint_every = flags.checkpoint_every;
      if (o_spgu->count()) cfg.steps_per_generator_update = flags.steps_per_generator_update;
      if (o_model->count()) cfg.model = flags.model;
      if (train->get_option("--seed")->count()) cfg.seed = seed;
      cfg.validate();
      const CharVocabulary vocab = vocab_from(vocab_path);
      Trainer t = resume.empty() ? Trainer(cfg, vocab) : Trainer::resume(resume, cfg, vocab);
      t.set_data(load_dataset(or_default(train_data, data_root() / "synth"), vocab));
      write_text(fs::path(train_out) / "config.txt", cfg.to_text());
      const auto ckpts = t.train(train_out, [](int epoch, const std::vector<LossRecord>& recs) {
        double d = 0, r = 0, g = 0;
        for (const auto& x : recs) d += x.critic_loss, r += x.recognizer_loss, g += x.L_G;
        const double n = static_cast<double>(std::max<std::size_t>(recs.size(), 1));
        std::cerr << "epoch " << epoch << "  critic " << d / n << "  recognizer " << r / n << "  L_G " << g / n << "\n";
      });
      std::cout << "wrote " << ckpts.size() << " checkpoints to " << train_out << "\n";
    } else if (*gen) {
      if (gen_text.empty() == gen_words.empty()) throw UsageError("generate needs exactly one of --text or --words");
      LoadedGenerator g = load_generator(gen_ckpt);
      const Enhancer& e = EnhancerRegistry::with_builtins().get(gen_enhance);
      if (!gen_text.empty()) {
        const WordSpec w = map_word(gen_text, g.vocab);
        const GlyphImage img = e.apply(g.generator.generate(w, NoiseVector::sample(g.generator.config().d_z, seed)));
        if (fs::path(gen_out).has_parent_path()) fs::create_directories(fs::path(gen_out).parent_path());
        write_png(img, gen_out);
      } else {
        std::vector<WordSpec> words;
        for (const auto& w : load_word_list(gen_words, g.vocab))
          for (int k = 0; k < gen_count; ++k) words.push_back(w);
        write_samples(generate_samples(g.generator, words, seed, gen_enhance == "identity" ? nullptr : &e), gen_out);
      }
    } else if (*eval) {
      const CharVocabulary vocab = vocab_from(vocab_path);
      ExtractorRegistry reg = ExtractorRegistry::with_builtins();
      if (!ev_rec.empty()) reg.add(recognizer_extractor(std::make_shared<Recognizer>(load_recognizer(ev_rec))));
      EvaluationOptions eo;
      eo.extractor_id = ev_extractor;
      eo.gs = gs;
      eo.gs.seed = seed;
      (void)reg.get(ev_extractor);
      const MetricReport r =
          evaluate(load_dataset(or_default(ev_real, data_root() / "synth"), vocab), load_dataset(ev_gen, vocab), reg, eo);
      if (ev_out.empty())
        std::cout << to_json(r) << "\n";
      else
        write_text(ev_out, to_json(r) + "\n");
      if (!ev_table.empty()) write_text(ev_table, to_score_table_csv(r));
    } else if (*ablate) {
      std::ifstream in(plan_path);
      if (!in) throw PathError("cannot open plan", plan_path);
      json plan;
      try {
        plan = json::parse(in);
      } catch (const json::exception& e) {
        throw ParseError(std::string("plan: ") + e.what());
      }
      const fs::path base = fs::path(plan_path).parent_path();
      auto rel = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base / p; };
      AblationSetup setup;
      setup.vocab = vocab_from(vocab_path);
      try {
        if (plan.contains("train"))
          for (const auto& [k, v] : plan["train"].items()) setup.train.set(k, v.is_string() ? v.get<std::string>() : v.dump());
        if (plan.contains("seed")) setup.train.seed = plan["seed"].get<std::uint64_t>();
        if (app.get_subcommand("ablate")->get_option("--seed")->count()) setup.train.seed = seed;
        setup.train.validate();
        setup.models = ModelConfig::preset(setup.train.model);
        setup.base = load_dataset(rel(plan.at("data").get<std::string>()), setup.vocab);
        setup.eval = load_dataset(rel(plan.at("eval").get<std::string>()), setup.vocab);
        if (plan.contains("additional"))
          setup.additional = load_dataset(rel(plan["additional"].get<std::string>()), setup.vocab);
        setup.evaluation.extractor_id = plan.value("extractor", std::string("downsample"));
        setup.evaluation.gs.iterations = plan.value("gs_iterations", setup.evaluation.gs.iterations);
        setup.evaluation.gs.seed = setup.train.seed;
        std::vector<AblationVariant> variants;
        if (plan.contains("variants")) {
          for (const auto& v : plan["variants"]) {
            AblationVariant av;
            av.label = v.at("label").get<std::string>();
            av.stage = ablation_stage_from_string(v.value("stage", std::string("baseline")));
            av.oversample_factor = v.value("oversample", 1);
            av.augment_copies = v.value("augment_copies", 0);
            av.additional_samples = v.value("additional", false);
            av.enhancer = v.value("enhance", std::string("identity"));
            variants.push_back(av);
          }
        } else {
          variants = default_ablation_plan();
        }
        setup.log = [](const std::string& s) { std::cerr << s << "\n"; };
        const std::string csv = ablation_csv(run_ablation(variants, setup));
        if (ablate_out.empty())
          std::cout << csv;
        else
          write_text(ablate_out, csv);
      } catch (const json::exception& e) {
        throw ParseError(std::string("plan: ") + e.what());
      }
    } else if (*grid) {
      std::vector<fs::path> ckpts;
      for (const auto& c : grid_ckpts) {
        if (fs::is_directory(c)) {
          const auto listed = list_checkpoints(c);
          ckpts.insert(ckpts.end(), listed.begin(), listed.end());
        } else {
          ckpts.emplace_back(c);
        }
      }
      std::vector<std::vector<std::vector<GlyphImage>>> blocks;
      for (const auto& path : ckpts) {
        LoadedGenerator g = load_generator(path);
        const auto words = words_from(grid_words, "", g.vocab);
        if (words.empty()) throw UsageError("grid needs at least one word");
        std::vector<std::vector<GlyphImage>> block;
        for (const auto& w : words) {
          std::vector<GlyphImage> row;
          for (int s = 0; s < styles; ++s)
            row.push_back(g.generator.generate(w, NoiseVector::sample(g.generator.config().d_z,
                                                                      mix_seed(seed, static_cast<std::uint64_t>(s)))));
          block.push_back(std::move(row));
        }
        blocks.push_back(std::move(block));
      }
      if (blocks.empty()) throw UsageError("grid found no checkpoints");
      if (fs::path(grid_out).has_parent_path()) fs::create_directories(fs::path(grid_out).parent_path());
      write_png(contact_sheet(blocks), grid_out);
    } else if (*enh) {
      for (const auto& id : EnhancerRegistry::with_builtins().ids()) std::cout << id << "\n";
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n" << app.help();
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

int run(const std::vector<std::string>& args) {
  std::vector<std::string> copy = args;
  std::vector<char*> argv;
  for (auto& a : copy) argv.push_back(a.data());
  argv.push_back(nullptr);
  return run(static_cast<int>(copy.size()), argv.data());
}

}  // namespace behgan::cli
