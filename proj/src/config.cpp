#include "memprobe/config.hpp"

#include <fstream>
#include <iterator>
#include <map>
#include <set>

namespace memprobe {
namespace {

// Maps each JSON pointer in an already-validated document to the line where
// it starts (the key's line for object members). nlohmann does not keep
// source positions, so error messages use this to name a line.
class LineIndex {
 public:
  explicit LineIndex(std::string_view text) : s_(text) {
    if (s_.empty()) return;
    value("");
  }

  // Line of `pointer`, or of its nearest existing ancestor.
  std::optional<std::size_t> line_of(std::string pointer) const {
    for (;;) {
      if (const auto it = lines_.find(pointer); it != lines_.end()) return it->second;
      if (pointer.empty()) return std::nullopt;
      pointer.resize(pointer.rfind('/'));
    }
  }

 private:
  void ws() {
    while (i_ < s_.size() && (s_[i_] == ' ' || s_[i_] == '\t' || s_[i_] == '\r' || s_[i_] == '\n')) {
      if (s_[i_] == '\n') ++line_;
      ++i_;
    }
  }

  std::string string() {
    std::string out;
    ++i_;  // opening quote
    while (i_ < s_.size() && s_[i_] != '"') {
      if (s_[i_] == '\\') ++i_;
      if (i_ < s_.size()) out.push_back(s_[i_++]);
    }
    ++i_;
    return out;
  }

  static std::string escape(const std::string& key) {
    std::string out;
    for (char c : key) {
      if (c == '~') out += "~0";
      else if (c == '/') out += "~1";
      else out.push_back(c);
    }
    return out;
  }

  void value(const std::string& ptr) {
    ws();
    lines_.emplace(ptr, line_);
    if (i_ >= s_.size()) return;
    const char c = s_[i_];
    if (c == '{' || c == '[') {
      const char close = c == '{' ? '}' : ']';
      ++i_;
      for (std::size_t index = 0;; ++index) {
        ws();
        if (i_ >= s_.size() || s_[i_] == close) break;
        std::string child;
        if (c == '{') {
          child = ptr + "/" + escape(string());
          lines_.emplace(child, line_);
          ws();
          ++i_;  // ':'
        } else {
          child = ptr + "/" + std::to_string(index);
        }
        value(child);
        ws();
        if (i_ < s_.size() && s_[i_] == ',') ++i_;
      }
      ++i_;
    } else if (c == '"') {
      string();
    } else {
      while (i_ < s_.size() && s_[i_] != ',' && s_[i_] != '}' && s_[i_] != ']' && s_[i_] != ' ' &&
             s_[i_] != '\n' && s_[i_] != '\r' && s_[i_] != '\t') {
        ++i_;
      }
    }
  }

  std::string_view s_;
  std::size_t i_ = 0;
  std::size_t line_ = 1;
  std::map<std::string, std::size_t> lines_;
};

class Reader {
 public:
  explicit Reader(std::string_view source, const LineIndex* index = nullptr) : source_(source), index_(index) {}

  // "<source>:<line>: <pointer>: <what>", without the line when unknown.
  [[noreturn]] void fail(const std::string& where, const std::string& what) const {
    std::string msg(source_);
    if (index_) {
      if (const auto line = index_->line_of(where)) msg += ":" + std::to_string(*line);
    }
    throw ConfigError(msg + ": " + (where.empty() ? "/" : where) + ": " + what);
  }

  void check_keys(const ojson& obj, const std::string& where, std::initializer_list<std::string_view> allowed) const {
    if (!obj.is_object()) fail(where, "expected an object");
    for (const auto& [key, _] : obj.items()) {
      if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
        if (key == "api_key") fail(where + "/" + key, "literal API keys are not allowed; use api_key_env");
        fail(where + "/" + key, "unknown key");
      }
    }
  }

  template <typename T>
  T get(const ojson& obj, const std::string& where, std::string_view key, T fallback) const {
    const auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return fallback;
    return as<T>(*it, where + "/" + std::string(key));
  }

  template <typename T>
  T require(const ojson& obj, const std::string& where, std::string_view key) const {
    const auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) fail(where + "/" + std::string(key), "required key is missing");
    return as<T>(*it, where + "/" + std::string(key));
  }

  template <typename T>
  T as(const ojson& v, const std::string& where) const {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) fail(where, "expected true or false");
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) fail(where, "expected an integer");
      if constexpr (std::is_unsigned_v<T>) {
        if (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0) {
          fail(where, "expected a non-negative integer");
        }
      }
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) fail(where, "expected a number");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) fail(where, "expected a string");
    }
    return v.get<T>();
  }

 private:
  std::string_view source_;
  const LineIndex* index_;
};

void validate_impl(const ConfigFile& cfg, const Reader& rd);

template <typename T>
ojson opt(const std::optional<T>& v) {
  return v ? ojson(*v) : ojson(nullptr);
}

}  // namespace

bool ConfigFile::same_settings(const ConfigFile& o) const {
  return config_to_json(*this) == config_to_json(o);
}

ConfigFile parse_config(std::string_view text, std::string_view source) {
  ojson root;
  try {
    root = ojson::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    // nlohmann reports "at line L, column C" in its message.
    throw ConfigError(std::string(source) + ": " + e.what());
  }
  const LineIndex index(text);
  Reader rd(source, &index);
  rd.check_keys(root, "", {"schema_version", "corpus", "segmentation", "providers", "models", "params", "sweep",
                           "iterate", "rouge", "output_dir", "parallelism", "rng_seed"});
  ConfigFile cfg;
  cfg.schema_version = rd.require<int>(root, "", "schema_version");
  if (cfg.schema_version != kSchemaVersion) {
    rd.fail("/schema_version", "unsupported schema_version " + std::to_string(cfg.schema_version) + " (expected " +
                                   std::to_string(kSchemaVersion) + ")");
  }

  const auto& corpus = root.contains("corpus") ? root["corpus"] : ojson::array();
  if (!corpus.is_array()) rd.fail("/corpus", "expected an array");
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const std::string at = "/corpus/" + std::to_string(i);
    rd.check_keys(corpus[i], at, {"path", "title", "text_type"});
    CorpusEntry e;
    e.path = rd.require<std::string>(corpus[i], at, "path");
    e.title = rd.get<std::string>(corpus[i], at, "title", e.path);
    try {
      e.text_type = parse_text_type(rd.get<std::string>(corpus[i], at, "text_type", "other"));
    } catch (const ConfigError& err) {
      rd.fail(at + "/text_type", err.what());
    }
    cfg.corpus.push_back(std::move(e));
  }

  if (root.contains("segmentation")) {
    const auto& s = root["segmentation"];
    rd.check_keys(s, "/segmentation", {"sample_len", "prefix_len", "stride", "max_samples"});
    cfg.segmentation.sample_len = rd.get<std::size_t>(s, "/segmentation", "sample_len", cfg.segmentation.sample_len);
    cfg.segmentation.prefix_len = rd.get<std::size_t>(s, "/segmentation", "prefix_len", cfg.segmentation.prefix_len);
    // Stride defaults to the sample length (non-overlapping windows).
    cfg.segmentation.stride = rd.get<std::size_t>(s, "/segmentation", "stride", cfg.segmentation.sample_len);
    if (s.contains("max_samples")) {
      cfg.segmentation.max_samples =
          s["max_samples"].is_null() ? std::nullopt
                                     : std::optional<std::size_t>(rd.as<std::size_t>(s["max_samples"], "/segmentation/max_samples"));
    }
  }

  const auto& providers = root.contains("providers") ? root["providers"] : ojson::array();
  if (!providers.is_array()) rd.fail("/providers", "expected an array");
  for (std::size_t i = 0; i < providers.size(); ++i) {
    const std::string at = "/providers/" + std::to_string(i);
    const auto& pj = providers[i];
    rd.check_keys(pj, at, {"name", "kind", "base_url", "api_key_env", "timeout_ms", "max_in_flight",
                           "requests_per_minute", "max_retries", "initial_backoff_ms", "memorizer"});
    ProviderEntry p;
    p.name = rd.require<std::string>(pj, at, "name");
    const auto kind = rd.require<std::string>(pj, at, "kind");
    if (kind == "http") {
      p.kind = ProviderKind::http;
    } else if (kind == "memorizer") {
      p.kind = ProviderKind::memorizer;
    } else {
      rd.fail(at + "/kind", "expected \"http\" or \"memorizer\"");
    }
    p.base_url = rd.get<std::string>(pj, at, "base_url", "");
    p.api_key_env = rd.get<std::string>(pj, at, "api_key_env", "");
    p.timeout_ms = rd.get<std::int64_t>(pj, at, "timeout_ms", p.timeout_ms);
    p.max_in_flight = rd.get<std::size_t>(pj, at, "max_in_flight", p.max_in_flight);
    p.requests_per_minute = rd.get<double>(pj, at, "requests_per_minute", p.requests_per_minute);
    p.max_retries = rd.get<int>(pj, at, "max_retries", p.max_retries);
    p.initial_backoff_ms = rd.get<std::int64_t>(pj, at, "initial_backoff_ms", p.initial_backoff_ms);
    if (pj.contains("memorizer")) {
      const auto& mj = pj["memorizer"];
      const std::string mat = at + "/memorizer";
      rd.check_keys(mj, mat, {"context_len", "fidelity", "divergence_point", "rng_seed"});
      p.memorizer.context_len = rd.get<std::size_t>(mj, mat, "context_len", p.memorizer.context_len);
      p.memorizer.fidelity = rd.get<double>(mj, mat, "fidelity", p.memorizer.fidelity);
      if (mj.contains("divergence_point") && !mj["divergence_point"].is_null()) {
        p.memorizer.divergence_point = rd.as<std::size_t>(mj["divergence_point"], mat + "/divergence_point");
      }
      if (mj.contains("rng_seed") && !mj["rng_seed"].is_null()) {
        p.memorizer.rng_seed = rd.as<std::uint64_t>(mj["rng_seed"], mat + "/rng_seed");
      }
    }
    cfg.providers.push_back(std::move(p));
  }

  const auto& models = root.contains("models") ? root["models"] : ojson::array();
  if (!models.is_array()) rd.fail("/models", "expected an array");
  for (std::size_t i = 0; i < models.size(); ++i) {
    const std::string at = "/models/" + std::to_string(i);
    rd.check_keys(models[i], at, {"provider", "model", "family"});
    ModelEntry m;
    m.provider = rd.require<std::string>(models[i], at, "provider");
    m.model = rd.require<std::string>(models[i], at, "model");
    m.family = rd.get<std::string>(models[i], at, "family", "");
    cfg.models.push_back(std::move(m));
  }

  if (root.contains("params")) {
    const auto& pj = root["params"];
    rd.check_keys(pj, "/params", {"temperature", "max_tokens", "prompt_template", "system_message"});
    cfg.params.temperature = rd.get<double>(pj, "/params", "temperature", cfg.params.temperature);
    cfg.params.max_tokens = rd.get<int>(pj, "/params", "max_tokens", cfg.params.max_tokens);
    cfg.params.prompt_template = rd.get<std::string>(pj, "/params", "prompt_template", cfg.params.prompt_template);
    if (pj.contains("system_message") && !pj["system_message"].is_null()) {
      cfg.params.system_message = rd.as<std::string>(pj["system_message"], "/params/system_message");
    }
  }

  if (root.contains("sweep")) {
    const auto& sj = root["sweep"];
    rd.check_keys(sj, "/sweep", {"max_tokens"});
    if (sj.contains("max_tokens")) {
      if (!sj["max_tokens"].is_array()) rd.fail("/sweep/max_tokens", "expected an array");
      for (std::size_t i = 0; i < sj["max_tokens"].size(); ++i) {
        cfg.sweep.push_back(rd.as<int>(sj["max_tokens"][i], "/sweep/max_tokens/" + std::to_string(i)));
      }
    }
  }

  if (root.contains("iterate")) {
    const auto& ij = root["iterate"];
    rd.check_keys(ij, "/iterate", {"seed_word_count", "iterations", "max_tokens"});
    cfg.iterate.seed_word_count = rd.get<std::size_t>(ij, "/iterate", "seed_word_count", cfg.iterate.seed_word_count);
    cfg.iterate.iterations = rd.get<std::size_t>(ij, "/iterate", "iterations", cfg.iterate.iterations);
    if (ij.contains("max_tokens") && !ij["max_tokens"].is_null()) {
      cfg.iterate.max_tokens = rd.as<int>(ij["max_tokens"], "/iterate/max_tokens");
    }
  }

  if (root.contains("rouge")) {
    const auto& rj = root["rouge"];
    rd.check_keys(rj, "/rouge", {"beta", "high_similarity_threshold", "case_fold", "strip_punctuation"});
    cfg.rouge.beta = rd.get<double>(rj, "/rouge", "beta", cfg.rouge.beta);
    cfg.rouge.high_similarity_threshold =
        rd.get<double>(rj, "/rouge", "high_similarity_threshold", cfg.rouge.high_similarity_threshold);
    cfg.rouge.case_fold = rd.get<bool>(rj, "/rouge", "case_fold", cfg.rouge.case_fold);
    cfg.rouge.strip_punctuation = rd.get<bool>(rj, "/rouge", "strip_punctuation", cfg.rouge.strip_punctuation);
  }

  cfg.output_dir = rd.get<std::string>(root, "", "output_dir", cfg.output_dir);
  cfg.parallelism = rd.get<std::size_t>(root, "", "parallelism", cfg.parallelism);
  cfg.rng_seed = rd.get<std::uint64_t>(root, "", "rng_seed", cfg.rng_seed);

  validate_impl(cfg, rd);
  return cfg;
}

void validate_config(const ConfigFile& cfg, std::string_view source) { validate_impl(cfg, Reader(source)); }

namespace {

void validate_impl(const ConfigFile& cfg, const Reader& rd) {
  if (cfg.corpus.empty()) rd.fail("/corpus", "corpus list is empty");
  try {
    cfg.segmentation.validate();
  } catch (const ConfigError& e) {
    rd.fail("/segmentation", e.what());
  }
  std::set<std::string> names;
  for (std::size_t i = 0; i < cfg.providers.size(); ++i) {
    const auto& p = cfg.providers[i];
    const std::string at = "/providers/" + std::to_string(i);
    if (p.name.empty()) rd.fail(at + "/name", "provider name is empty");
    if (!names.insert(p.name).second) rd.fail(at + "/name", "duplicate provider name '" + p.name + "'");
    if (p.kind == ProviderKind::http) {
      if (!p.base_url.starts_with("http://") && !p.base_url.starts_with("https://")) {
        rd.fail(at + "/base_url", "http providers need a base_url starting with http:// or https://");
      }
      if (p.timeout_ms <= 0) rd.fail(at + "/timeout_ms", "must be positive");
      if (p.max_in_flight == 0) rd.fail(at + "/max_in_flight", "must be positive");
      if (p.requests_per_minute < 0) rd.fail(at + "/requests_per_minute", "must be >= 0");
      if (p.max_retries < 0) rd.fail(at + "/max_retries", "must be >= 0");
      if (p.initial_backoff_ms < 0) rd.fail(at + "/initial_backoff_ms", "must be >= 0");
    } else {
      if (p.memorizer.context_len == 0) rd.fail(at + "/memorizer/context_len", "must be positive");
      if (!(p.memorizer.fidelity >= 0.0 && p.memorizer.fidelity <= 1.0)) {
        rd.fail(at + "/memorizer/fidelity", "must be within [0, 1]");
      }
      if (p.memorizer.divergence_point && *p.memorizer.divergence_point == 0) {
        rd.fail(at + "/memorizer/divergence_point", "must be positive");
      }
    }
  }
  if (cfg.models.empty()) rd.fail("/models", "at least one model is required");
  std::set<std::pair<std::string, std::string>> model_keys;
  for (std::size_t i = 0; i < cfg.models.size(); ++i) {
    const auto& m = cfg.models[i];
    if (!names.contains(m.provider)) {
      rd.fail("/models/" + std::to_string(i) + "/provider", "references undeclared provider '" + m.provider + "'");
    }
    if (!model_keys.insert({m.provider, m.model}).second) {
      rd.fail("/models/" + std::to_string(i), "duplicate model entry");
    }
  }
  try {
    GenerationParams p = cfg.params;
    p.validate();
  } catch (const ConfigError& e) {
    rd.fail("/params", e.what());
  }
  std::set<int> seen;
  for (std::size_t i = 0; i < cfg.sweep.size(); ++i) {
    const std::string at = "/sweep/max_tokens/" + std::to_string(i);
    if (cfg.sweep[i] < 1) rd.fail(at, "must be positive");
    if (!seen.insert(cfg.sweep[i]).second) rd.fail(at, "value " + std::to_string(cfg.sweep[i]) + " is repeated");
  }
  if (cfg.iterate.seed_word_count == 0) rd.fail("/iterate/seed_word_count", "must be positive");
  if (cfg.iterate.iterations == 0) rd.fail("/iterate/iterations", "must be positive");
  if (cfg.iterate.max_tokens && *cfg.iterate.max_tokens < 1) rd.fail("/iterate/max_tokens", "must be positive");
  try {
    cfg.rouge.validate();
  } catch (const ConfigError& e) {
    rd.fail("/rouge", e.what());
  }
  if (cfg.output_dir.empty()) rd.fail("/output_dir", "must not be empty");
  if (cfg.parallelism == 0) rd.fail("/parallelism", "must be positive");
}

}  // namespace

ConfigFile load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file: " + path.string());
  const std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  ConfigFile cfg = parse_config(text, path.string());
  cfg.base_dir = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
  return cfg;
}

ojson config_to_json(const ConfigFile& cfg) {
  ojson j;
  j["schema_version"] = cfg.schema_version;
  ojson corpus = ojson::array();
  for (const auto& e : cfg.corpus) {
    corpus.push_back(ojson{{"path", e.path}, {"title", e.title}, {"text_type", to_string(e.text_type)}});
  }
  j["corpus"] = std::move(corpus);
  j["segmentation"] = ojson{{"sample_len", cfg.segmentation.sample_len},
                            {"prefix_len", cfg.segmentation.prefix_len},
                            {"stride", cfg.segmentation.stride},
                            {"max_samples", opt(cfg.segmentation.max_samples)}};
  ojson providers = ojson::array();
  for (const auto& p : cfg.providers) {
    ojson pj;
    pj["name"] = p.name;
    if (p.kind == ProviderKind::http) {
      pj["kind"] = "http";
      pj["base_url"] = p.base_url;
      pj["api_key_env"] = p.api_key_env;
      pj["timeout_ms"] = p.timeout_ms;
      pj["max_in_flight"] = p.max_in_flight;
      pj["requests_per_minute"] = p.requests_per_minute;
      pj["max_retries"] = p.max_retries;
      pj["initial_backoff_ms"] = p.initial_backoff_ms;
    } else {
      pj["kind"] = "memorizer";
      pj["memorizer"] = ojson{{"context_len", p.memorizer.context_len},
                              {"fidelity", p.memorizer.fidelity},
                              {"divergence_point", opt(p.memorizer.divergence_point)},
                              {"rng_seed", opt(p.memorizer.rng_seed)}};
    }
    providers.push_back(std::move(pj));
  }
  j["providers"] = std::move(providers);
  ojson models = ojson::array();
  for (const auto& m : cfg.models) {
    models.push_back(ojson{{"provider", m.provider}, {"model", m.model}, {"family", m.family}});
  }
  j["models"] = std::move(models);
  j["params"] = ojson{{"temperature", cfg.params.temperature},
                      {"max_tokens", cfg.params.max_tokens},
                      {"prompt_template", cfg.params.prompt_template},
                      {"system_message", opt(cfg.params.system_message)}};
  j["sweep"] = ojson{{"max_tokens", cfg.sweep}};
  j["iterate"] = ojson{{"seed_word_count", cfg.iterate.seed_word_count},
                       {"iterations", cfg.iterate.iterations},
                       {"max_tokens", opt(cfg.iterate.max_tokens)}};
  j["rouge"] = to_json(cfg.rouge);
  j["output_dir"] = cfg.output_dir;
  j["parallelism"] = cfg.parallelism;
  j["rng_seed"] = cfg.rng_seed;
  return j;
}

std::string serialize_config(const ConfigFile& cfg) { return config_to_json(cfg).dump(2) + "\n"; }

std::string config_hash(const ConfigFile& cfg) {
  ojson j = config_to_json(cfg);
  j.erase("output_dir");
  return short_hash(j.dump(), 16);
}

}  // namespace memprobe
