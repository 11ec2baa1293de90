#include "memprobe/iterate.hpp"

#include <algorithm>

#include "memprobe/json_io.hpp"

namespace memprobe {

Words align_reference(const Document& doc, std::size_t cursor, std::size_t length) {
  const auto n = doc.words.size();
  if (cursor > n) {
    throw Error("align_reference: cursor " + std::to_string(cursor) + " past end of document (" + std::to_string(n) +
                " words)");
  }
  const auto end = cursor + std::min(length, n - cursor);
  return Words(doc.words.begin() + static_cast<std::ptrdiff_t>(cursor),
               doc.words.begin() + static_cast<std::ptrdiff_t>(end));
}

std::string make_trace_id(const Document& doc, const IterationConfig& cfg, std::string_view provider_name) {
  std::string key(provider_name);
  key.push_back('\0');
  key += doc.id;
  key.push_back('\0');
  key += to_json(cfg.params).dump();
  key += '\0' + std::to_string(cfg.seed_word_count) + '\0' + std::to_string(cfg.iterations);
  return short_hash(key, 16);
}

IterationResult run_iterative(const Document& doc, const IterationConfig& cfg, Provider& provider) {
  cfg.params.validate();
  cfg.rouge.validate();
  if (cfg.iterations == 0) throw ConfigError("iterate.iterations must be positive");
  if (cfg.seed_word_count == 0 || cfg.seed_word_count >= doc.words.size()) {
    throw ConfigError("iterate.seed_word_count must be positive and shorter than the document (" +
                      std::to_string(doc.words.size()) + " words)");
  }

  IterationResult result;
  std::string prompt = join_words(std::span<const std::string>(doc.words).first(cfg.seed_word_count));
  std::size_t cursor = cfg.seed_word_count;
  std::size_t emitted = 0;

  for (std::size_t k = 1; k <= cfg.iterations; ++k) {
    if (cursor >= doc.words.size()) {
      result.reached_end = true;
      break;
    }
    IterationTrace t;
    t.iteration = k;
    t.prompt_text = prompt;
    t.cursor_before = cursor;
    try {
      t.completion = complete(provider, prompt, cfg.params, emitted);
    } catch (const std::exception& e) {
      result.error = "iteration " + std::to_string(k) + ": " + e.what();
      break;
    }
    t.output_text = t.completion.output_text;
    const auto out_words = normalize(t.output_text).size();
    if (out_words == 0) {
      result.error = "iteration " + std::to_string(k) + ": empty completion";
      break;
    }
    t.reference_window = align_reference(doc, cursor, out_words);
    t.cursor_after = cursor + t.reference_window.size();
    try {
      t.score = rouge_l(join_words(t.reference_window), t.output_text, cfg.rouge);
    } catch (const Error& e) {
      result.error = "iteration " + std::to_string(k) + ": " + e.what();
      break;
    }
    cursor = t.cursor_after;
    emitted += out_words;
    prompt = t.output_text;
    result.traces.push_back(std::move(t));
  }
  if (cursor >= doc.words.size()) result.reached_end = true;
  return result;
}

}  // namespace memprobe
