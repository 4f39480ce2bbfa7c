#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

namespace behgan {

// Root of every error the library throws. The CLI maps these to exit code 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EmptyWord : public Error {
 public:
  EmptyWord() : Error("empty word") {}
};

class UnknownCharacter : public Error {
 public:
  UnknownCharacter(std::size_t position, std::string grapheme)
      : Error("unknown character '" + grapheme + "' at position " + std::to_string(position)),
        position_(position),
        grapheme_(std::move(grapheme)) {}

  std::size_t position() const noexcept { return position_; }
  const std::string& grapheme() const noexcept { return grapheme_; }

 private:
  std::size_t position_;
  std::string grapheme_;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class BlankImage : public Error {
 public:
  BlankImage() : Error("image contains no ink after normalization") {}
};

class InvalidCharCount : public Error {
 public:
  explicit InvalidCharCount(int n) : Error("invalid character count " + std::to_string(n)) {}
};

class PathError : public Error {
 public:
  PathError(const std::string& what, std::filesystem::path path)
      : Error(what + ": " + path.string()), path_(std::move(path)) {}
  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  std::filesystem::path path_;
};

class MissingLabel : public PathError {
 public:
  explicit MissingLabel(std::filesystem::path image) : PathError("missing label file", std::move(image)) {}
};

class LabelLengthMismatch : public PathError {
 public:
  explicit LabelLengthMismatch(std::filesystem::path image)
      : PathError("label length does not match directory", std::move(image)) {}
};

class FontLoadError : public PathError {
 public:
  FontLoadError(std::filesystem::path font, const std::string& why)
      : PathError("cannot load font (" + why + ")", std::move(font)) {}
};

class GlyphNotInFont : public Error {
 public:
  GlyphNotInFont(char key, const std::string& font)
      : Error(std::string("glyph '") + key + "' not in font " + font) {}
};

class ClassOutOfRange : public Error {
 public:
  ClassOutOfRange(int id, int n) : Error("class id " + std::to_string(id) + " outside [0," + std::to_string(n) + ")") {}
};

class ModelNotLoaded : public Error {
 public:
  ModelNotLoaded() : Error("model weights not loaded") {}
};

class BadGeometry : public Error {
 public:
  BadGeometry(int width, int height)
      : Error("bad image geometry " + std::to_string(width) + "x" + std::to_string(height) +
              " (height must be 32, width a positive multiple of 16)") {}
};

class TargetTooLong : public Error {
 public:
  TargetTooLong(std::size_t frames, std::size_t required)
      : Error("target needs " + std::to_string(required) + " frames, only " + std::to_string(frames) + " available") {}
};

class EmptyBatch : public Error {
 public:
  EmptyBatch() : Error("empty batch") {}
};

class NumericalDivergence : public Error {
 public:
  explicit NumericalDivergence(const std::string& which) : Error("non-finite loss: " + which) {}
};

class EmptyCheckpointList : public Error {
 public:
  EmptyCheckpointList() : Error("no checkpoints to select from") {}
};

class CheckpointMismatch : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  DimensionMismatch() : Error("dimension mismatch") {}
};

class TooFewSamples : public Error {
 public:
  TooFewSamples(std::size_t have, std::size_t need)
      : Error("need at least " + std::to_string(need) + " samples, got " + std::to_string(have)) {}
};

class UnknownExtractor : public Error {
 public:
  explicit UnknownExtractor(const std::string& id) : Error("unknown feature extractor '" + id + "'") {}
};

class UnknownEnhancer : public Error {
 public:
  explicit UnknownEnhancer(const std::string& id) : Error("unknown enhancer '" + id + "'") {}
};

}  // namespace behgan
