#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace behgan {

struct VocabEntry {
  std::string glyph;  // UTF-8, one grapheme
  char key;           // Latin key letter used as the class label
  int class_id;
};

/// Bijection between script glyphs and Latin key letters. Class ids are
/// 0..N-1 in file order; the CTC blank is N.
class CharVocabulary {
 public:
  CharVocabulary() = default;
  explicit CharVocabulary(const std::vector<std::pair<std::string, char>>& glyph_keys);

  /// Parses `glyph<TAB>key` lines; `#` starts a comment.
  static CharVocabulary parse(std::istream& in);
  static CharVocabulary load(const std::filesystem::path& path);
  /// ক ল ম ন প mapped to k l m n p.
  static CharVocabulary default_bengali();

  int size() const noexcept { return static_cast<int>(entries_.size()); }
  int blank_id() const noexcept { return size(); }
  const std::vector<VocabEntry>& entries() const noexcept { return entries_; }

  std::optional<int> class_of_key(char key) const;
  std::optional<int> class_of_glyph(std::string_view glyph) const;
  char key_of(int class_id) const;
  const std::string& glyph_of(int class_id) const;

  // Stable hash of the mapping, stored in checkpoints.
  std::uint64_t fingerprint() const;

 private:
  std::vector<VocabEntry> entries_;
};

struct WordSpec {
  std::string keys;
  std::vector<int> class_ids;

  std::size_t length() const noexcept { return class_ids.size(); }
  const std::string& render_keys() const noexcept { return keys; }
  bool operator==(const WordSpec&) const = default;
};

/// Accepts glyphs and key letters, mixed freely. Positions in errors count
/// graphemes, not bytes.
WordSpec map_word(std::string_view text, const CharVocabulary& vocab);

/// Full combination space: every word of length 1..max_len, ordered by
/// length and then lexicographically by class ids.
std::vector<WordSpec> enumerate_words(const CharVocabulary& vocab, int max_len);

/// Words from a word list, restricted to length <= max_len, same ordering.
std::vector<WordSpec> enumerate_words(const CharVocabulary& vocab, int max_len,
                                      const std::vector<WordSpec>& word_list);

std::vector<WordSpec> load_word_list(const std::filesystem::path& path, const CharVocabulary& vocab);
std::vector<WordSpec> parse_word_list(std::istream& in, const CharVocabulary& vocab);

// Splits UTF-8 text into code-point strings.
std::vector<std::string> split_utf8(std::string_view text);

std::filesystem::path asset_dir();

}  // namespace behgan
