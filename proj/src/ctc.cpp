#include "behgan/ctc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "behgan/errors.hpp"

namespace behgan {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::fabs(a - b)));
}

}  // namespace

std::vector<double> LogitsSequence::log_softmax() const {
  std::vector<double> out(values.size());
  for (int t = 0; t < frames; ++t) {
    const double* row = values.data() + static_cast<std::size_t>(t) * classes;
    const double m = *std::max_element(row, row + classes);
    double s = 0.0;
    for (int k = 0; k < classes; ++k) s += std::exp(row[k] - m);
    const double lse = m + std::log(s);
    for (int k = 0; k < classes; ++k) out[static_cast<std::size_t>(t) * classes + k] = row[k] - lse;
  }
  return out;
}

std::vector<double> LogitsSequence::softmax() const {
  auto out = log_softmax();
  for (auto& v : out) v = std::exp(v);
  return out;
}

std::size_t ctc_min_frames(std::span<const int> target) {
  std::size_t n = target.size();
  for (std::size_t i = 1; i < target.size(); ++i)
    if (target[i] == target[i - 1]) ++n;
  return n;
}

CtcResult ctc_loss_and_grad(const LogitsSequence& logits, std::span<const int> target) {
  const int T = logits.frames, K = logits.classes, blank = logits.blank();
  if (T < 1 || K < 2) throw DimensionMismatch();
  for (int id : target)
    if (id < 0 || id >= blank) throw ClassOutOfRange(id, blank);
  const std::size_t need = ctc_min_frames(target);
  if (static_cast<std::size_t>(T) < need) throw TargetTooLong(static_cast<std::size_t>(T), need);

  const int S = 2 * static_cast<int>(target.size()) + 1;
  std::vector<int> ext(S, blank);
  for (std::size_t i = 0; i < target.size(); ++i) ext[2 * i + 1] = target[i];

  const auto logp = logits.log_softmax();
  auto lp = [&](int t, int k) { return logp[static_cast<std::size_t>(t) * K + k]; };
  auto can_skip = [&](int s) { return s >= 2 && ext[s] != blank && ext[s] != ext[s - 2]; };

  std::vector<double> alpha(static_cast<std::size_t>(T) * S, kNegInf), beta(alpha);
  auto A = [&](int t, int s) -> double& { return alpha[static_cast<std::size_t>(t) * S + s]; };
  auto B = [&](int t, int s) -> double& { return beta[static_cast<std::size_t>(t) * S + s]; };

  A(0, 0) = lp(0, ext[0]);
  if (S > 1) A(0, 1) = lp(0, ext[1]);
  for (int t = 1; t < T; ++t)
    for (int s = 0; s < S; ++s) {
      double v = A(t - 1, s);
      if (s >= 1) v = log_add(v, A(t - 1, s - 1));
      if (can_skip(s)) v = log_add(v, A(t - 1, s - 2));
      A(t, s) = v == kNegInf ? kNegInf : v + lp(t, ext[s]);
    }

  B(T - 1, S - 1) = lp(T - 1, ext[S - 1]);
  if (S > 1) B(T - 1, S - 2) = lp(T - 1, ext[S - 2]);
  for (int t = T - 2; t >= 0; --t)
    for (int s = 0; s < S; ++s) {
      double v = B(t + 1, s);
      if (s + 1 < S) v = log_add(v, B(t + 1, s + 1));
      if (s + 2 < S && ext[s + 2] != blank && ext[s + 2] != ext[s]) v = log_add(v, B(t + 1, s + 2));
      B(t, s) = v == kNegInf ? kNegInf : v + lp(t, ext[s]);
    }

  double log_total = A(T - 1, S - 1);
  if (S > 1) log_total = log_add(log_total, A(T - 1, S - 2));
  if (log_total == kNegInf) throw TargetTooLong(static_cast<std::size_t>(T), need);

  CtcResult r;
  r.loss = -log_total;
  r.grad.assign(static_cast<std::size_t>(T) * K, 0.0);
  std::vector<double> occ(K);
  for (int t = 0; t < T; ++t) {
    std::fill(occ.begin(), occ.end(), kNegInf);
    for (int s = 0; s < S; ++s) {
      const double ab = A(t, s) + B(t, s);
      if (A(t, s) == kNegInf || B(t, s) == kNegInf) continue;
      occ[ext[s]] = log_add(occ[ext[s]], ab - lp(t, ext[s]));
    }
    for (int k = 0; k < K; ++k) {
      const double y = std::exp(lp(t, k));
      const double post = occ[k] == kNegInf ? 0.0 : std::exp(occ[k] - log_total);
      r.grad[static_cast<std::size_t>(t) * K + k] = y - post;
    }
  }
  return r;
}

double ctc_loss(const LogitsSequence& logits, std::span<const int> target) {
  return ctc_loss_and_grad(logits, target).loss;
}

double ctc_loss(const LogitsSequence& logits, const WordSpec& target) {
  return ctc_loss(logits, std::span<const int>(target.class_ids));
}

std::vector<int> decode_greedy_ids(const LogitsSequence& logits) {
  std::vector<int> out;
  int prev = -1;
  for (int t = 0; t < logits.frames; ++t) {
    const double* row = logits.values.data() + static_cast<std::size_t>(t) * logits.classes;
    const int best = static_cast<int>(std::max_element(row, row + logits.classes) - row);
    if (best != prev && best != logits.blank()) out.push_back(best);
    prev = best;
  }
  return out;
}

std::string decode_greedy(const LogitsSequence& logits, const CharVocabulary& vocab) {
  std::string s;
  for (int id : decode_greedy_ids(logits)) s.push_back(vocab.key_of(id));
  return s;
}

}  // namespace behgan
