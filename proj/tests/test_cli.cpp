#include <doctest.h>

#include <fstream>
#include <sstream>

#include "behgan/cli.hpp"
#include "behgan/image.hpp"
#include "json.hpp"
#include "test_util.hpp"

using namespace behgan;

namespace {

int run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "behgan");
  return cli::run(args);
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("usage errors exit with 1") {
  CHECK(run_cli({}) == 1);
  CHECK(run_cli({"frobnicate"}) == 1);
  CHECK(run_cli({"generate", "--out", "x.png"}) == 1);
  CHECK(run_cli({"generate", "--ckpt", "nothing", "--out", "x.png"}) == 1);  // neither --text nor --words
  CHECK(run_cli({"enhancers"}) == 0);
}

TEST_CASE("runtime failures exit with 2") {
  testing::TempDir dir("cli_err");
  CHECK(run_cli({"generate", "--ckpt", (dir / "missing").string(), "--text", "kl", "--out", (dir / "a.png").string()}) == 2);
}

TEST_CASE("synth, train, generate and evaluate end to end") {
  testing::TempDir dir("cli");
  {
    std::ofstream w(dir / "words.txt");
    w << "k\nkl\nmnp\n";
  }
  const std::string corpus = (dir / "corpus").string(), corpus2 = (dir / "corpus2").string();
  REQUIRE(run_cli({"synth", "--out", corpus, "--words", (dir / "words.txt").string(), "--per-word", "40", "--seed", "2"}) == 0);
  REQUIRE(run_cli({"synth", "--out", corpus2, "--words", (dir / "words.txt").string(), "--per-word", "40", "--seed", "2"}) == 0);
  CHECK(slurp(dir / "corpus" / "two" / "00040.png") == slurp(dir / "corpus2" / "two" / "00040.png"));
  CHECK(slurp(dir / "corpus" / "manifest.jsonl").size() > 0);

  const std::string run = (dir / "run").string();
  REQUIRE(run_cli({"train", "--data", corpus, "--out", run, "--epochs", "2", "--model", "desk", "--seed", "1"}) == 0);
  const auto ckpt = (dir / "run" / "ckpt_epoch_2").string();
  CHECK(std::filesystem::exists(ckpt));
  CHECK(std::filesystem::exists(dir / "run" / "losses.csv"));
  CHECK(std::filesystem::exists(dir / "run" / "ckpt_epoch_1"));

  const auto png = dir / "kmn.png";
  REQUIRE(run_cli({"generate", "--ckpt", ckpt, "--text", "kmn", "--out", png.string(), "--seed", "4"}) == 0);
  const GlyphImage img = read_png(png, 3);
  CHECK(img.width == 48);
  CHECK(img.height == 32);
  const auto png2 = dir / "kmn2.png";
  REQUIRE(run_cli({"generate", "--ckpt", ckpt, "--text", "kmn", "--out", png2.string(), "--seed", "4"}) == 0);
  CHECK(slurp(png) == slurp(png2));
  const auto big = dir / "big.png";
  REQUIRE(run_cli({"generate", "--ckpt", ckpt, "--text", "kl", "--out", big.string(), "--enhance", "baseline"}) == 0);
  CHECK(read_png(big, 2).width == 128);
  CHECK(run_cli({"generate", "--ckpt", ckpt, "--text", "kl", "--out", big.string(), "--enhance", "nope"}) == 2);

  const std::string gen = (dir / "gen").string();
  REQUIRE(run_cli({"generate", "--ckpt", ckpt, "--words", (dir / "words.txt").string(), "--count", "40", "--out", gen}) == 0);
  const auto report = dir / "report.json", table = dir / "table.csv";
  REQUIRE(run_cli({"evaluate", "--real", corpus, "--gen", gen, "--out", report.string(), "--table", table.string(),
               "--gs-iterations", "5"}) == 0);
  const auto j = nlohmann::json::parse(slurp(report));
  for (const char* key : {"ssim", "fid", "geometry_score", "n_real", "n_generated", "extractor", "fingerprint"})
    CHECK(j.contains(key));
  CHECK(j["n_real"] == 120);
  CHECK(j["n_generated"] == 120);
  CHECK(slurp(table).rfind("Evaluation Metric,Score\n", 0) == 0);
  CHECK(run_cli({"evaluate", "--real", corpus, "--gen", gen, "--extractor", "inception"}) == 2);

  const auto sheet = dir / "grid.png";
  REQUIRE(run_cli({"grid", "--ckpt", run, "--words", "k,kl", "--styles", "3", "--out", sheet.string()}) == 0);
  CHECK(std::filesystem::exists(sheet));
}
