#include "behgan/vocab.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "behgan/errors.hpp"

namespace behgan {

namespace {

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

bool word_less(const WordSpec& a, const WordSpec& b) {
  if (a.length() != b.length()) return a.length() < b.length();
  return a.class_ids < b.class_ids;
}

}  // namespace

std::vector<std::string> split_utf8(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    const auto lead = static_cast<unsigned char>(text[i]);
    std::size_t len = 1;
    if (lead >= 0xF0) len = 4;
    else if (lead >= 0xE0) len = 3;
    else if (lead >= 0xC0) len = 2;
    len = std::min(len, text.size() - i);
    out.emplace_back(text.substr(i, len));
    i += len;
  }
  return out;
}

CharVocabulary::CharVocabulary(const std::vector<std::pair<std::string, char>>& glyph_keys) {
  std::set<std::string> glyphs;
  std::set<char> keys;
  for (const auto& [glyph, key] : glyph_keys) {
    if (glyph.empty()) throw ParseError("vocabulary: empty glyph");
    if (!std::isalpha(static_cast<unsigned char>(key))) throw ParseError("vocabulary: key must be a Latin letter");
    if (!glyphs.insert(glyph).second) throw ParseError("vocabulary: duplicate glyph " + glyph);
    if (!keys.insert(key).second) throw ParseError(std::string("vocabulary: duplicate key ") + key);
    entries_.push_back({glyph, key, static_cast<int>(entries_.size())});
  }
  if (entries_.empty()) throw ParseError("vocabulary: no entries");
}

CharVocabulary CharVocabulary::parse(std::istream& in) {
  std::vector<std::pair<std::string, char>> pairs;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw ParseError("vocabulary line " + std::to_string(lineno) + ": expected glyph<TAB>key");
    std::string glyph = trim(line.substr(0, tab));
    std::string key = trim(line.substr(tab + 1));
    if (key.size() != 1) throw ParseError("vocabulary line " + std::to_string(lineno) + ": key must be one letter");
    pairs.emplace_back(std::move(glyph), key[0]);
  }
  return CharVocabulary(pairs);
}

CharVocabulary CharVocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw PathError("cannot open vocabulary", path);
  return parse(in);
}

CharVocabulary CharVocabulary::default_bengali() {
  return CharVocabulary({{"ক", 'k'}, {"ল", 'l'}, {"ম", 'm'}, {"ন", 'n'}, {"প", 'p'}});
}

std::optional<int> CharVocabulary::class_of_key(char key) const {
  for (const auto& e : entries_)
    if (e.key == key) return e.class_id;
  return std::nullopt;
}

std::optional<int> CharVocabulary::class_of_glyph(std::string_view glyph) const {
  for (const auto& e : entries_)
    if (e.glyph == glyph) return e.class_id;
  return std::nullopt;
}

char CharVocabulary::key_of(int class_id) const {
  if (class_id < 0 || class_id >= size()) throw ClassOutOfRange(class_id, size());
  return entries_[class_id].key;
}

const std::string& CharVocabulary::glyph_of(int class_id) const {
  if (class_id < 0 || class_id >= size()) throw ClassOutOfRange(class_id, size());
  return entries_[class_id].glyph;
}

std::uint64_t CharVocabulary::fingerprint() const {
  // FNV-1a over "glyph\tkey\n" records.
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](unsigned char c) {
    h ^= c;
    h *= 1099511628211ull;
  };
  for (const auto& e : entries_) {
    for (unsigned char c : e.glyph) mix(c);
    mix('\t');
    mix(static_cast<unsigned char>(e.key));
    mix('\n');
  }
  return h;
}

WordSpec map_word(std::string_view text, const CharVocabulary& vocab) {
  if (text.empty()) throw EmptyWord();
  WordSpec word;
  const auto graphemes = split_utf8(text);
  for (std::size_t i = 0; i < graphemes.size(); ++i) {
    const auto& g = graphemes[i];
    std::optional<int> id = vocab.class_of_glyph(g);
    if (!id && g.size() == 1) id = vocab.class_of_key(g[0]);
    if (!id) throw UnknownCharacter(i, g);
    word.class_ids.push_back(*id);
    word.keys.push_back(vocab.key_of(*id));
  }
  return word;
}

std::vector<WordSpec> enumerate_words(const CharVocabulary& vocab, int max_len) {
  std::vector<WordSpec> out;
  const int n = vocab.size();
  for (int len = 1; len <= max_len; ++len) {
    std::vector<int> digits(len, 0);
    while (true) {
      WordSpec w;
      for (int d : digits) {
        w.class_ids.push_back(d);
        w.keys.push_back(vocab.key_of(d));
      }
      out.push_back(std::move(w));
      int pos = len - 1;
      while (pos >= 0 && ++digits[pos] == n) digits[pos--] = 0;
      if (pos < 0) break;
    }
  }
  return out;
}

std::vector<WordSpec> enumerate_words(const CharVocabulary& vocab, int max_len,
                                      const std::vector<WordSpec>& word_list) {
  std::vector<WordSpec> out;
  for (const auto& w : word_list) {
    if (static_cast<int>(w.length()) > max_len) continue;
    for (int id : w.class_ids)
      if (id < 0 || id >= vocab.size()) throw ClassOutOfRange(id, vocab.size());
    out.push_back(w);
  }
  std::sort(out.begin(), out.end(), word_less);
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<WordSpec> parse_word_list(std::istream& in, const CharVocabulary& vocab) {
  std::vector<WordSpec> out;
  std::string line;
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    out.push_back(map_word(line, vocab));
  }
  return out;
}

std::vector<WordSpec> load_word_list(const std::filesystem::path& path, const CharVocabulary& vocab) {
  std::ifstream in(path);
  if (!in) throw PathError("cannot open word list", path);
  return parse_word_list(in, vocab);
}

std::filesystem::path asset_dir() {
  if (const char* env = std::getenv("BEHGAN_ASSET_DIR")) return env;
  return BEHGAN_ASSET_DIR;
}

}  // namespace behgan
