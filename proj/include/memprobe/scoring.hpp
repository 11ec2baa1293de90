#pragma once

#include <algorithm>
#include <cstddef>
#include <ranges>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "memprobe/common.hpp"

namespace memprobe {

struct RougeConfig {
  double beta = 1.0;
  double high_similarity_threshold = 0.85;
  bool case_fold = true;
  bool strip_punctuation = true;

  void validate() const;
  bool operator==(const RougeConfig&) const = default;
};

// Rouge-L of a candidate against a reference. `m` is the reference length,
// `n` the candidate length, both in scoring tokens.
struct ScoreRecord {
  std::size_t lcs_len = 0;
  std::size_t m = 0;
  std::size_t n = 0;
  double recall = 0.0;
  double precision = 0.0;
  double f_measure = 0.0;
  bool high_similarity = false;

  bool operator==(const ScoreRecord&) const = default;
};

// Whitespace split, then optional ASCII lowercasing and stripping of leading
// and trailing punctuation. Tokens that strip to nothing are dropped.
Words score_tokenize(std::string_view text, const RougeConfig& cfg);

// Length of the longest common subsequence. Rolling rows over the shorter
// input: O(m*n) time, O(min(m, n)) space.
template <std::ranges::random_access_range X, std::ranges::random_access_range Y>
std::size_t lcs_length(const X& x, const Y& y) {
  const auto xs = std::ranges::size(x);
  const auto ys = std::ranges::size(y);
  if (xs < ys) return lcs_length(y, x);
  if (ys == 0) return 0;
  std::vector<std::size_t> prev(ys + 1, 0), cur(ys + 1, 0);
  for (std::size_t i = 0; i < xs; ++i) {
    const auto& xi = x[i];
    for (std::size_t j = 0; j < ys; ++j) {
      cur[j + 1] = (xi == y[j]) ? prev[j] + 1 : std::max(prev[j + 1], cur[j]);
    }
    std::swap(prev, cur);
  }
  return prev[ys];
}

// F-measure with weight beta; 0 when recall and precision are both 0.
double f_measure(double recall, double precision, double beta);

// Scores already-tokenized sequences. Throws Error when the reference is empty.
ScoreRecord rouge_l_tokens(std::span<const std::string> reference, std::span<const std::string> candidate,
                           const RougeConfig& cfg);

ScoreRecord rouge_l(std::string_view reference_text, std::string_view candidate_text, const RougeConfig& cfg);

// Inclusive: recall at exactly the threshold counts as high similarity.
bool classify_high_similarity(const ScoreRecord& record, const RougeConfig& cfg);

}  // namespace memprobe
