#pragma once

#include <span>
#include <string>
#include <vector>

#include "behgan/vocab.hpp"

namespace behgan {

/// Per-frame class scores, row-major (frames x classes). The last class is
/// the CTC blank.
struct LogitsSequence {
  int frames = 0;
  int classes = 0;
  std::vector<double> values;

  LogitsSequence() = default;
  LogitsSequence(int t, int k) : frames(t), classes(k), values(static_cast<std::size_t>(t) * k, 0.0) {}

  double& at(int t, int k) { return values[static_cast<std::size_t>(t) * classes + k]; }
  double at(int t, int k) const { return values[static_cast<std::size_t>(t) * classes + k]; }
  int blank() const noexcept { return classes - 1; }

  // Row-wise softmax, same layout.
  std::vector<double> softmax() const;
  std::vector<double> log_softmax() const;
};

/// Frames the target needs: its length plus one separating blank per
/// adjacent repeated label.
std::size_t ctc_min_frames(std::span<const int> target);

struct CtcResult {
  double loss = 0.0;
  std::vector<double> grad;  // d loss / d logits, frames x classes
};

/// -log sum over blank-augmented alignments, by the log-space
/// forward-backward recursion. Throws TargetTooLong when no alignment fits.
double ctc_loss(const LogitsSequence& logits, std::span<const int> target);
double ctc_loss(const LogitsSequence& logits, const WordSpec& target);
CtcResult ctc_loss_and_grad(const LogitsSequence& logits, std::span<const int> target);

/// Argmax per frame, collapse repeats, drop blanks.
std::vector<int> decode_greedy_ids(const LogitsSequence& logits);
std::string decode_greedy(const LogitsSequence& logits, const CharVocabulary& vocab);

}  // namespace behgan
