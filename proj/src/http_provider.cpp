#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <thread>

#include <httplib.h>

#include "memprobe/json_io.hpp"
#include "memprobe/provider.hpp"

namespace memprobe {

std::string encode_request(const GenerationParams& params, std::string_view prompt_text) {
  ojson body;
  body["model"] = params.model;
  ojson messages = ojson::array();
  if (params.system_message) {
    messages.push_back(ojson{{"role", "system"}, {"content", *params.system_message}});
  }
  messages.push_back(ojson{{"role", "user"}, {"content", std::string(prompt_text)}});
  body["messages"] = std::move(messages);
  body["temperature"] = params.temperature;
  body["max_tokens"] = params.max_tokens;
  return body.dump();
}

Generation decode_response(std::string_view body) {
  using Kind = ProviderError::Kind;
  const auto excerpt = std::string(body.substr(0, 200));
  ojson j;
  try {
    j = ojson::parse(body);
  } catch (const nlohmann::json::parse_error& e) {
    throw ProviderError(Kind::malformed, std::string("malformed response body: ") + e.what(), false, 0, excerpt);
  }
  const auto choices = j.find("choices");
  if (choices == j.end() || !choices->is_array()) {
    throw ProviderError(Kind::malformed, "response has no choices array", false, 0, excerpt);
  }
  if (choices->empty()) throw ProviderError(Kind::malformed, "response has zero choices", false, 0, excerpt);
  const auto& first = (*choices)[0];
  Generation g;
  try {
    const auto& content = first.at("message").at("content");
    g.output_text = content.is_null() ? std::string{} : content.get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ProviderError(Kind::malformed, std::string("choice has no message content: ") + e.what(), false, 0,
                        excerpt);
  }
  const auto fr = first.find("finish_reason");
  if (fr != first.end() && fr->is_string()) {
    const auto s = fr->get<std::string>();
    g.finish_reason = s == "stop" ? FinishReason::stop : s == "length" ? FinishReason::length : FinishReason::other;
  } else {
    g.finish_reason = FinishReason::other;
  }
  return g;
}

std::chrono::milliseconds RetryPolicy::backoff(int retry) const {
  const double scaled =
      static_cast<double>(initial_backoff.count()) * std::pow(multiplier, static_cast<double>(std::max(0, retry - 1)));
  const double capped = std::min(scaled, static_cast<double>(max_backoff.count()));
  return std::chrono::milliseconds(static_cast<long long>(capped));
}

namespace {

std::optional<std::chrono::milliseconds> parse_retry_after(const httplib::Headers& headers) {
  const auto it = headers.find("Retry-After");
  if (it == headers.end()) return std::nullopt;
  char* end = nullptr;
  const double secs = std::strtod(it->second.c_str(), &end);
  if (end == it->second.c_str() || !std::isfinite(secs)) return std::nullopt;
  return std::chrono::milliseconds(static_cast<long long>(std::max(0.0, secs) * 1000.0));
}

bool retryable_status(int status) { return status == 408 || status == 429 || status >= 500; }

}  // namespace

HttpProvider::HttpProvider(HttpProviderConfig cfg, Sleeper sleeper) : cfg_(std::move(cfg)), sleep_(std::move(sleeper)) {
  if (!sleep_) sleep_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
  if (cfg_.max_in_flight == 0) throw ConfigError("provider '" + cfg_.name + "': max_in_flight must be positive");
  if (cfg_.retry.max_retries < 0) throw ConfigError("provider '" + cfg_.name + "': max_retries must be >= 0");
  const auto scheme = cfg_.base_url.find("://");
  if (scheme == std::string::npos) {
    throw ConfigError("provider '" + cfg_.name + "': base_url must start with http:// or https://");
  }
  const auto path = cfg_.base_url.find('/', scheme + 3);
  scheme_host_port_ = cfg_.base_url.substr(0, path);
  path_prefix_ = path == std::string::npos ? std::string{} : cfg_.base_url.substr(path);
  while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
}

std::size_t HttpProvider::http_attempts() const {
  std::lock_guard lock(mu_);
  return attempts_;
}

void HttpProvider::acquire_slot() {
  std::unique_lock lock(mu_);
  slot_cv_.wait(lock, [&] { return in_flight_ < cfg_.max_in_flight; });
  ++in_flight_;
}

void HttpProvider::release_slot() {
  {
    std::lock_guard lock(mu_);
    --in_flight_;
  }
  slot_cv_.notify_one();
}

void HttpProvider::wait_for_rate_limit() {
  if (cfg_.requests_per_minute <= 0.0) return;
  const auto window = std::chrono::minutes(1);
  const auto cap = static_cast<std::size_t>(std::max(1.0, std::floor(cfg_.requests_per_minute)));
  for (;;) {
    std::chrono::steady_clock::duration wait{};
    {
      std::lock_guard lock(mu_);
      const auto now = std::chrono::steady_clock::now();
      while (!recent_.empty() && now - recent_.front() >= window) recent_.pop_front();
      if (recent_.size() < cap) {
        recent_.push_back(now);
        return;
      }
      wait = recent_.front() + window - now;
    }
    sleep_(std::chrono::duration_cast<std::chrono::milliseconds>(wait) + std::chrono::milliseconds(1));
  }
}

Generation HttpProvider::post_once(const std::string& body) {
  using Kind = ProviderError::Kind;
  httplib::Client client(scheme_host_port_);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(cfg_.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(cfg_.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());
  httplib::Headers headers;
  if (!cfg_.api_key.empty()) headers.emplace("Authorization", "Bearer " + cfg_.api_key);

  {
    std::lock_guard lock(mu_);
    ++attempts_;
  }
  auto res = client.Post(path_prefix_ + "/chat/completions", headers, body, "application/json");
  if (!res) {
    const auto err = res.error();
    const auto kind = err == httplib::Error::ConnectionTimeout ? Kind::timeout : Kind::network;
    throw ProviderError(kind, "request to " + cfg_.base_url + " failed: " + httplib::to_string(err), true);
  }
  if (res->status < 200 || res->status >= 300) {
    const int status = res->status;
    throw ProviderError(Kind::status, "provider '" + cfg_.name + "' returned HTTP " + std::to_string(status),
                        retryable_status(status), status, res->body.substr(0, 200),
                        status == 429 ? parse_retry_after(res->headers) : std::nullopt);
  }
  return decode_response(res->body);
}

Generation HttpProvider::generate(std::string_view prompt_text, const GenerationParams& params) {
  const std::string body = encode_request(params, prompt_text);
  for (int attempt = 1;; ++attempt) {
    wait_for_rate_limit();
    acquire_slot();
    try {
      Generation g = post_once(body);
      release_slot();
      return g;
    } catch (ProviderError& e) {
      release_slot();
      e.set_attempts(attempt);
      if (!e.retryable() || attempt > cfg_.retry.max_retries) throw;
      auto delay = cfg_.retry.backoff(attempt);
      if (e.retry_after()) delay = std::max(delay, *e.retry_after());
      sleep_(delay);
    }
  }
}

}  // namespace memprobe
