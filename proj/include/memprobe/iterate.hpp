#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "memprobe/corpus.hpp"
#include "memprobe/provider.hpp"
#include "memprobe/scoring.hpp"

namespace memprobe {

struct IterationConfig {
  std::size_t seed_word_count = 20;
  std::size_t iterations = 5;
  GenerationParams params;
  RougeConfig rouge;
};

// One step of the iterative protocol. reference_window is
// doc.words[cursor_before, cursor_after).
struct IterationTrace {
  std::size_t iteration = 0;  // 1-based
  std::string prompt_text;    // text fed in: the seed, then the previous output
  std::string output_text;
  Words reference_window;
  std::size_t cursor_before = 0;
  std::size_t cursor_after = 0;
  ScoreRecord score;
  Completion completion;
};

struct IterationResult {
  std::vector<IterationTrace> traces;
  std::optional<std::string> error;  // set when the loop aborted early
  bool reached_end = false;          // cursor hit the end of the document
};

// doc.words[cursor, min(cursor + length, size)). Throws Error if cursor is
// past the end.
Words align_reference(const Document& doc, std::size_t cursor, std::size_t length);

// Seeds with the first seed_word_count words, then feeds each output back as
// the next prompt. Each output is scored against the document window at the
// running cursor, sized to the output's word count.
IterationResult run_iterative(const Document& doc, const IterationConfig& cfg, Provider& provider);

// Stable grouping key for a trace run.
std::string make_trace_id(const Document& doc, const IterationConfig& cfg, std::string_view provider_name);

}  // namespace memprobe
