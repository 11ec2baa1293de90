#include "memprobe/provider.hpp"

#include <algorithm>
#include <cmath>
#include <ctime>
#include <random>
#include <set>
#include <thread>

#include "memprobe/corpus.hpp"
#include "memprobe/json_io.hpp"

namespace memprobe {

std::string_view to_string(FinishReason r) {
  switch (r) {
    case FinishReason::stop: return "stop";
    case FinishReason::length: return "length";
    case FinishReason::error: return "error";
    case FinishReason::other: return "other";
  }
  return "other";
}

FinishReason parse_finish_reason(std::string_view s) {
  if (s == "stop") return FinishReason::stop;
  if (s == "length") return FinishReason::length;
  if (s == "error") return FinishReason::error;
  return FinishReason::other;
}

void GenerationParams::validate() const {
  if (max_tokens < 1) throw ConfigError("params.max_tokens must be >= 1");
  if (!(temperature >= 0.0) || !std::isfinite(temperature)) {
    throw ConfigError("params.temperature must be a finite value >= 0");
  }
  const auto first = prompt_template.find(kPrefixPlaceholder);
  if (first == std::string::npos ||
      prompt_template.find(kPrefixPlaceholder, first + kPrefixPlaceholder.size()) != std::string::npos) {
    throw ConfigError("params.prompt_template must contain exactly one {prefix} placeholder");
  }
}

std::string GenerationParams::render_prompt(std::string_view prefix) const {
  std::string out = prompt_template;
  const auto pos = out.find(kPrefixPlaceholder);
  if (pos == std::string::npos) throw ConfigError("prompt_template has no {prefix} placeholder");
  out.replace(pos, kPrefixPlaceholder.size(), prefix);
  return out;
}

ProviderError::ProviderError(Kind kind, const std::string& message, bool retryable, int status,
                             std::string body_excerpt, std::optional<std::chrono::milliseconds> retry_after)
    : Error(message),
      kind_(kind),
      retryable_(retryable),
      status_(status),
      body_excerpt_(std::move(body_excerpt)),
      retry_after_(retry_after) {}

std::string make_request_id(std::string_view provider_name, const GenerationParams& params,
                            std::string_view prompt_text) {
  std::string key(provider_name);
  key.push_back('\0');
  key += to_json(params).dump();
  key.push_back('\0');
  key.append(prompt_text);
  return short_hash(key, 24);
}

namespace {

std::string utc_now_iso8601() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900, tm.tm_mon + 1,
                tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec, static_cast<int>(ms));
  return buf;
}

constexpr std::string_view kEpochTimestamp = "1970-01-01T00:00:00.000Z";

}  // namespace

Completion complete(Provider& provider, std::string_view prefix_text, const GenerationParams& params,
                    std::size_t chain_words_emitted) {
  params.validate();
  Completion c;
  c.params = params;
  c.prompt_text = params.render_prompt(prefix_text);
  c.provider_name = provider.name();
  c.request_id = make_request_id(c.provider_name, params, c.prompt_text);
  const bool wall = provider.records_wall_clock();
  c.timestamp = wall ? utc_now_iso8601() : std::string(kEpochTimestamp);
  const auto t0 = std::chrono::steady_clock::now();
  // The memorizer sees the bare prefix; HTTP providers see the rendered prompt.
  Generation g = chain_words_emitted > 0 ? provider.generate_chained(c.prompt_text, params, chain_words_emitted)
                                         : provider.generate(c.prompt_text, params);
  if (wall) {
    c.latency = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0);
  }
  c.output_text = std::move(g.output_text);
  c.finish_reason = g.finish_reason;
  return c;
}

// ---------------------------------------------------------------------------
// Memorizer

void MemorizerModel::validate() const {
  if (context_len == 0) throw ConfigError("memorizer.context_len must be positive");
  if (!(fidelity >= 0.0 && fidelity <= 1.0)) throw ConfigError("memorizer.fidelity must be within [0, 1]");
  if (divergence_point && *divergence_point == 0) throw ConfigError("memorizer.divergence_point must be positive");
  if (source_words.empty()) throw ConfigError("memorizer has no source text");
}

namespace {

Words build_vocabulary(const Words& source) {
  std::set<std::string> uniq(source.begin(), source.end());
  return Words(uniq.begin(), uniq.end());
}

// Start of the word following the last occurrence of `ctx`, if any.
std::optional<std::size_t> find_continuation(const Words& source, std::span<const std::string> ctx) {
  if (ctx.empty() || ctx.size() > source.size()) return std::nullopt;
  for (std::size_t p = source.size() - ctx.size() + 1; p-- > 0;) {
    if (std::equal(ctx.begin(), ctx.end(), source.begin() + static_cast<std::ptrdiff_t>(p))) {
      return p + ctx.size();
    }
  }
  return std::nullopt;
}

std::string memorize(const MemorizerModel& model, const Words& vocab, std::string_view prefix_text,
                     std::size_t max_tokens, std::size_t chain_offset, FinishReason* finish) {
  const Words prefix = normalize(prefix_text);
  const std::size_t ctx_len = std::min(model.context_len, prefix.size());
  const auto ctx = std::span<const std::string>(prefix).subspan(prefix.size() - ctx_len);
  const auto next = find_continuation(model.source_words, ctx);

  std::string seed_key = std::to_string(model.rng_seed);
  seed_key.push_back('\0');
  seed_key.append(prefix_text);
  seed_key.push_back('\0');
  seed_key += std::to_string(max_tokens);
  const std::uint64_t seed = digest64(seed_key);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  std::mt19937_64 rng(seq);

  Words out;
  out.reserve(max_tokens);
  for (std::size_t i = 0; i < max_tokens; ++i) {
    // Both draws happen every step so that fidelity levels share one stream.
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    const std::size_t r = static_cast<std::size_t>(rng() % vocab.size());
    if (!next) {
      out.push_back(vocab[r]);
      continue;
    }
    const std::size_t pos = *next + i;
    if (pos >= model.source_words.size()) break;
    const bool diverged = model.divergence_point && chain_offset + i >= *model.divergence_point;
    const bool faithful = !diverged && u < model.fidelity;
    out.push_back(faithful ? model.source_words[pos] : vocab[r]);
  }
  if (finish) *finish = out.size() == max_tokens ? FinishReason::length : FinishReason::stop;
  return join_words(out);
}

}  // namespace

std::string memorizer_complete(const MemorizerModel& model, std::string_view prefix_text, std::size_t max_tokens,
                               std::size_t chain_words_emitted) {
  model.validate();
  return memorize(model, build_vocabulary(model.source_words), prefix_text, max_tokens, chain_words_emitted,
                  nullptr);
}

MemorizerProvider::MemorizerProvider(std::string name, MemorizerModel model)
    : name_(std::move(name)), model_(std::move(model)) {
  model_.validate();
  vocabulary_ = build_vocabulary(model_.source_words);
}

namespace {

// The memorizer continues the prefix itself, not the instruction wrapped
// around it: strip the template's fixed text when it is present.
std::string_view strip_template(std::string_view prompt, const std::string& tmpl) {
  const auto pos = tmpl.find(kPrefixPlaceholder);
  if (pos == std::string::npos) return prompt;
  const std::string_view head(tmpl.data(), pos);
  const std::string_view tail(tmpl.data() + pos + kPrefixPlaceholder.size());
  if (prompt.size() >= head.size() + tail.size() && prompt.starts_with(head) && prompt.ends_with(tail)) {
    return prompt.substr(head.size(), prompt.size() - head.size() - tail.size());
  }
  return prompt;
}

}  // namespace

Generation MemorizerProvider::generate(std::string_view prompt_text, const GenerationParams& params) {
  return generate_chained(prompt_text, params, 0);
}

Generation MemorizerProvider::generate_chained(std::string_view prompt_text, const GenerationParams& params,
                                               std::size_t words_emitted) {
  Generation g;
  g.output_text = memorize(model_, vocabulary_, strip_template(prompt_text, params.prompt_template),
                           static_cast<std::size_t>(params.max_tokens), words_emitted, &g.finish_reason);
  return g;
}

}  // namespace memprobe
