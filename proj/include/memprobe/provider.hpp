#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>

#include "memprobe/common.hpp"

namespace memprobe {

inline constexpr std::string_view kDefaultPromptTemplate = "Please complete the following text: {prefix}";
inline constexpr std::string_view kPrefixPlaceholder = "{prefix}";

enum class FinishReason { stop, length, error, other };

std::string_view to_string(FinishReason r);
FinishReason parse_finish_reason(std::string_view s);

struct GenerationParams {
  std::string model;
  double temperature = 0.0;
  int max_tokens = 50;
  std::string prompt_template{kDefaultPromptTemplate};
  std::optional<std::string> system_message;

  // Throws ConfigError unless max_tokens >= 1, temperature >= 0 and the
  // template holds exactly one "{prefix}".
  void validate() const;
  std::string render_prompt(std::string_view prefix) const;
  bool operator==(const GenerationParams&) const = default;
};

struct Completion {
  std::string request_id;
  GenerationParams params;
  std::string prompt_text;
  std::string output_text;
  std::string provider_name;
  std::chrono::milliseconds latency{0};
  FinishReason finish_reason = FinishReason::other;
  std::string timestamp;  // ISO-8601 UTC

  bool operator==(const Completion&) const = default;
};

// What a provider returns for a single prompt.
struct Generation {
  std::string output_text;
  FinishReason finish_reason = FinishReason::other;
};

class ProviderError : public Error {
 public:
  enum class Kind { network, status, timeout, malformed };

  ProviderError(Kind kind, const std::string& message, bool retryable, int status = 0,
                std::string body_excerpt = {}, std::optional<std::chrono::milliseconds> retry_after = {});

  Kind kind() const { return kind_; }
  bool retryable() const { return retryable_; }
  int status() const { return status_; }
  const std::string& body_excerpt() const { return body_excerpt_; }
  std::optional<std::chrono::milliseconds> retry_after() const { return retry_after_; }
  // Total HTTP attempts made before giving up, when known.
  int attempts() const { return attempts_; }
  void set_attempts(int n) { attempts_ = n; }

 private:
  Kind kind_;
  bool retryable_;
  int status_;
  std::string body_excerpt_;
  std::optional<std::chrono::milliseconds> retry_after_;
  int attempts_ = 1;
};

class Provider {
 public:
  virtual ~Provider() = default;

  virtual const std::string& name() const = 0;

  // One completion for an already-rendered prompt. Must be safe to call
  // concurrently.
  virtual Generation generate(std::string_view prompt_text, const GenerationParams& params) = 0;

  // Continuation step of an iterative chain where `words_emitted` words were
  // generated by earlier links. Stateless providers ignore the offset.
  virtual Generation generate_chained(std::string_view prompt_text, const GenerationParams& params,
                                      std::size_t words_emitted) {
    (void)words_emitted;
    return generate(prompt_text, params);
  }

  // Offline models report zero latency and the epoch as timestamp so their
  // result stores are byte-reproducible.
  virtual bool records_wall_clock() const { return true; }
};

// Deterministic id over (provider, params, prompt): reruns map to the same key.
std::string make_request_id(std::string_view provider_name, const GenerationParams& params,
                            std::string_view prompt_text);

// Renders the template around `prefix_text`, calls the provider and wraps the
// result with request metadata. Provider errors propagate.
Completion complete(Provider& provider, std::string_view prefix_text, const GenerationParams& params,
                    std::size_t chain_words_emitted = 0);

// ---------------------------------------------------------------------------
// Offline memorizer

struct MemorizerModel {
  Words source_words;
  std::size_t context_len = 8;
  double fidelity = 1.0;
  std::optional<std::size_t> divergence_point;
  std::uint64_t rng_seed = 0;

  void validate() const;
};

// Continues `prefix_text` from the last place in source_words where the
// prefix's final context_len words occur. Emits up to max_tokens words (one
// word per token): each is the true next word with probability `fidelity`,
// otherwise a random vocabulary word. Emission index i (offset by
// chain_words_emitted) at or past divergence_point is always random. An
// unmatched prefix yields max_tokens random words. Output is a pure function
// of the arguments.
std::string memorizer_complete(const MemorizerModel& model, std::string_view prefix_text, std::size_t max_tokens,
                               std::size_t chain_words_emitted = 0);

class MemorizerProvider final : public Provider {
 public:
  MemorizerProvider(std::string name, MemorizerModel model);

  const std::string& name() const override { return name_; }
  Generation generate(std::string_view prompt_text, const GenerationParams& params) override;
  Generation generate_chained(std::string_view prompt_text, const GenerationParams& params,
                              std::size_t words_emitted) override;
  bool records_wall_clock() const override { return false; }

  const MemorizerModel& model() const { return model_; }

 private:
  std::string name_;
  MemorizerModel model_;
  Words vocabulary_;
};

// ---------------------------------------------------------------------------
// OpenAI-compatible HTTP

struct RetryPolicy {
  int max_retries = 3;
  std::chrono::milliseconds initial_backoff{1000};
  double multiplier = 2.0;
  std::chrono::milliseconds max_backoff{30000};

  // Delay before retry number `retry` (1-based).
  std::chrono::milliseconds backoff(int retry) const;
};

struct HttpProviderConfig {
  std::string name;
  std::string base_url;  // e.g. https://api.openai.com/v1
  std::string api_key;
  std::chrono::milliseconds timeout{60000};
  std::size_t max_in_flight = 4;
  double requests_per_minute = 0.0;  // 0 disables the limiter
  RetryPolicy retry;
};

// Chat-completions request body. Field order is fixed:
// model, messages, temperature, max_tokens.
std::string encode_request(const GenerationParams& params, std::string_view prompt_text);

// First choice's content and finish_reason. Throws ProviderError(malformed)
// on unparsable bodies or an empty choices array.
Generation decode_response(std::string_view body);

class HttpProvider final : public Provider {
 public:
  using Sleeper = std::function<void(std::chrono::milliseconds)>;

  explicit HttpProvider(HttpProviderConfig cfg, Sleeper sleeper = {});

  const std::string& name() const override { return cfg_.name; }
  Generation generate(std::string_view prompt_text, const GenerationParams& params) override;

  const HttpProviderConfig& config() const { return cfg_; }
  std::size_t http_attempts() const;

 private:
  Generation post_once(const std::string& body);
  void acquire_slot();
  void release_slot();
  void wait_for_rate_limit();

  HttpProviderConfig cfg_;
  Sleeper sleep_;
  std::string scheme_host_port_;
  std::string path_prefix_;

  mutable std::mutex mu_;
  std::condition_variable slot_cv_;
  std::size_t in_flight_ = 0;
  std::deque<std::chrono::steady_clock::time_point> recent_;
  std::size_t attempts_ = 0;
};

}  // namespace memprobe
