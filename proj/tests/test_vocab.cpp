#include <doctest.h>

#include <map>
#include <sstream>

#include "behgan/errors.hpp"
#include "behgan/vocab.hpp"

using namespace behgan;

TEST_CASE("map_word maps the three-glyph word to klm") {
  const auto v = CharVocabulary::default_bengali();
  const WordSpec w = map_word("কলম", v);
  CHECK(w.keys == "klm");
  CHECK(w.class_ids == std::vector<int>{0, 1, 2});
}

TEST_CASE("map_word on a key letter") {
  const auto v = CharVocabulary::default_bengali();
  const WordSpec w = map_word("k", v);
  CHECK(w.keys == "k");
  CHECK(w.length() == 1);
}

TEST_CASE("map_word accepts glyphs and keys mixed") {
  const auto v = CharVocabulary::default_bengali();
  CHECK(map_word("কlম", v) == map_word("klm", v));
}

TEST_CASE("map_word errors") {
  const auto v = CharVocabulary::default_bengali();
  CHECK_THROWS_AS(map_word("", v), EmptyWord);
  try {
    map_word("kx", v);
    FAIL("expected UnknownCharacter");
  } catch (const UnknownCharacter& e) {
    CHECK(e.position() == 1);
    CHECK(e.grapheme() == "x");
  }
  // positions count graphemes, not bytes
  try {
    map_word("কলz", v);
    FAIL("expected UnknownCharacter");
  } catch (const UnknownCharacter& e) {
    CHECK(e.position() == 2);
  }
}

TEST_CASE("round trip through render_keys for every enumerated word") {
  const auto v = CharVocabulary::default_bengali();
  for (const auto& w : enumerate_words(v, 3)) CHECK(map_word(w.render_keys(), v) == w);
}

TEST_CASE("map_word is position preserving") {
  const auto v = CharVocabulary::default_bengali();
  const std::string keys = "klmnp";
  for (char a : keys)
    for (char b : keys) {
      const WordSpec w = map_word(std::string{a, b}, v);
      CHECK(w.class_ids[0] == map_word(std::string{a}, v).class_ids[0]);
      CHECK(w.class_ids[1] == map_word(std::string{b}, v).class_ids[0]);
    }
}

TEST_CASE("full enumeration counts and ordering") {
  const auto v = CharVocabulary::default_bengali();
  const auto all = enumerate_words(v, 3);
  CHECK(all.size() == 5 + 25 + 125);
  for (std::size_t i = 1; i < all.size(); ++i) {
    const bool ordered = all[i - 1].length() < all[i].length() ||
                         (all[i - 1].length() == all[i].length() && all[i - 1].class_ids < all[i].class_ids);
    CHECK(ordered);
  }
  CHECK(enumerate_words(v, 1).size() == 5);
}

TEST_CASE("single-glyph vocabulary") {
  const CharVocabulary v({{"ক", 'k'}});
  CHECK(enumerate_words(v, 1).size() == 1);
}

TEST_CASE("word-list asset yields 5 / 16 / 9 by length") {
  const auto v = CharVocabulary::load(asset_dir() / "vocab.tsv");
  const auto words = enumerate_words(v, 3, load_word_list(asset_dir() / "words.txt", v));
  std::map<std::size_t, int> counts;
  for (const auto& w : words) ++counts[w.length()];
  CHECK(counts[1] == 5);
  CHECK(counts[2] == 16);
  CHECK(counts[3] == 9);
  CHECK(words.size() == 30);
}

TEST_CASE("vocabulary file parsing") {
  std::istringstream in("# comment\nক\tk\n\nল\tl  # trailing\n");
  const auto v = CharVocabulary::parse(in);
  CHECK(v.size() == 2);
  CHECK(v.blank_id() == 2);
  CHECK(v.key_of(1) == 'l');
  CHECK(v.glyph_of(0) == "ক");
  CHECK(v.class_of_key('l') == 1);
  CHECK_FALSE(v.class_of_key('z').has_value());

  std::istringstream dup("ক\tk\nল\tk\n");
  CHECK_THROWS_AS(CharVocabulary::parse(dup), ParseError);
}

TEST_CASE("fingerprint tracks the mapping") {
  const auto a = CharVocabulary::default_bengali();
  const CharVocabulary b({{"ক", 'k'}, {"ল", 'l'}});
  CHECK(a.fingerprint() == CharVocabulary::default_bengali().fingerprint());
  CHECK(a.fingerprint() != b.fingerprint());
}

TEST_CASE("word list comments and dedup") {
  const auto v = CharVocabulary::default_bengali();
  std::istringstream in("# header\nkl\nk\nkl\n");
  const auto words = enumerate_words(v, 3, parse_word_list(in, v));
  REQUIRE(words.size() == 2);
  CHECK(words[0].keys == "k");
  CHECK(words[1].keys == "kl");
}
