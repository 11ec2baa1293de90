#include "memprobe/scoring.hpp"

#include <cmath>

#include "memprobe/corpus.hpp"
#include "utf8.hpp"

namespace memprobe {

void RougeConfig::validate() const {
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw ConfigError("rouge.beta must be a finite value >= 0");
  if (!(high_similarity_threshold >= 0.0 && high_similarity_threshold <= 1.0)) {
    throw ConfigError("rouge.high_similarity_threshold must be within [0, 1]");
  }
}

namespace {

std::string strip_token(std::string_view tok) {
  std::size_t begin = 0;
  std::size_t end = tok.size();
  // leading
  while (begin < end) {
    const auto d = utf8::decode_lenient(tok, begin);
    if (utf8::is_alnum(d.cp)) break;
    begin += d.len;
  }
  // trailing: walk forward remembering the end of the last alnum code point
  std::size_t last_alnum_end = begin;
  for (std::size_t i = begin; i < end;) {
    const auto d = utf8::decode_lenient(tok, i);
    i += d.len;
    if (utf8::is_alnum(d.cp)) last_alnum_end = i;
  }
  return std::string(tok.substr(begin, last_alnum_end - begin));
}

}  // namespace

Words score_tokenize(std::string_view text, const RougeConfig& cfg) {
  Words out;
  for (auto& tok : normalize(text)) {
    std::string t = cfg.strip_punctuation ? strip_token(tok) : std::move(tok);
    if (t.empty()) continue;
    if (cfg.case_fold) {
      for (char& c : t) {
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
      }
    }
    out.push_back(std::move(t));
  }
  return out;
}

double f_measure(double recall, double precision, double beta) {
  const double b2 = beta * beta;
  const double denom = recall + b2 * precision;
  if (denom == 0.0) return 0.0;
  return (1.0 + b2) * recall * precision / denom;
}

ScoreRecord rouge_l_tokens(std::span<const std::string> reference, std::span<const std::string> candidate,
                           const RougeConfig& cfg) {
  if (reference.empty()) throw Error("rouge_l: reference is empty after tokenization");
  ScoreRecord r;
  r.lcs_len = lcs_length(reference, candidate);
  r.m = reference.size();
  r.n = candidate.size();
  r.recall = static_cast<double>(r.lcs_len) / static_cast<double>(r.m);
  r.precision = r.n > 0 ? static_cast<double>(r.lcs_len) / static_cast<double>(r.n) : 0.0;
  r.f_measure = f_measure(r.recall, r.precision, cfg.beta);
  r.high_similarity = classify_high_similarity(r, cfg);
  return r;
}

ScoreRecord rouge_l(std::string_view reference_text, std::string_view candidate_text, const RougeConfig& cfg) {
  const auto ref = score_tokenize(reference_text, cfg);
  const auto cand = score_tokenize(candidate_text, cfg);
  return rouge_l_tokens(ref, cand, cfg);
}

bool classify_high_similarity(const ScoreRecord& record, const RougeConfig& cfg) {
  return record.recall >= cfg.high_similarity_threshold;
}

}  // namespace memprobe
