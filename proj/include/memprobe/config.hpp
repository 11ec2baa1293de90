#pragma once

// The experiment config file: one JSON document describing corpus,
// providers, models and every experiment knob.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "memprobe/corpus.hpp"
#include "memprobe/json_io.hpp"
#include "memprobe/provider.hpp"
#include "memprobe/scoring.hpp"

namespace memprobe {

inline constexpr int kSchemaVersion = 1;

struct CorpusEntry {
  std::string path;  // relative paths resolve against the config file's directory
  std::string title;
  TextType text_type = TextType::other;

  bool operator==(const CorpusEntry&) const = default;
};

struct MemorizerSettings {
  std::size_t context_len = 8;
  double fidelity = 1.0;
  std::optional<std::size_t> divergence_point;
  std::optional<std::uint64_t> rng_seed;  // defaults to the top-level rng_seed

  bool operator==(const MemorizerSettings&) const = default;
};

enum class ProviderKind { http, memorizer };

struct ProviderEntry {
  std::string name;
  ProviderKind kind = ProviderKind::memorizer;
  // http
  std::string base_url;
  std::string api_key_env;
  std::int64_t timeout_ms = 60000;
  std::size_t max_in_flight = 4;
  double requests_per_minute = 0.0;
  int max_retries = 3;
  std::int64_t initial_backoff_ms = 1000;
  // memorizer
  MemorizerSettings memorizer;

  bool operator==(const ProviderEntry&) const = default;
};

struct ModelEntry {
  std::string provider;
  std::string model;
  std::string family;  // grouping for rate tables; empty means the model id

  bool operator==(const ModelEntry&) const = default;
};

struct IterateSettings {
  std::size_t seed_word_count = 20;
  std::size_t iterations = 5;
  std::optional<int> max_tokens;  // defaults to params.max_tokens

  bool operator==(const IterateSettings&) const = default;
};

struct ConfigFile {
  int schema_version = kSchemaVersion;
  std::vector<CorpusEntry> corpus;
  SegmentationConfig segmentation;
  std::vector<ProviderEntry> providers;
  std::vector<ModelEntry> models;
  GenerationParams params;  // `model` unused here
  std::vector<int> sweep;
  IterateSettings iterate;
  RougeConfig rouge;
  std::string output_dir = "out";
  std::size_t parallelism = 4;
  std::uint64_t rng_seed = 0;

  std::filesystem::path base_dir;  // directory of the file it was loaded from; not serialized

  // Everything except base_dir.
  bool same_settings(const ConfigFile& o) const;
};

// Parses and validates. Errors name `source` plus a line/column (syntax) or a
// key path such as /providers/1/base_url (semantics).
ConfigFile parse_config(std::string_view text, std::string_view source = "<config>");
ConfigFile load_config(const std::filesystem::path& path);

// Throws ConfigError describing the first problem found.
void validate_config(const ConfigFile& cfg, std::string_view source = "<config>");

ojson config_to_json(const ConfigFile& cfg);
std::string serialize_config(const ConfigFile& cfg);

// Hash of the canonical serialization with output_dir removed, so the same
// experiment written to two places carries the same hash.
std::string config_hash(const ConfigFile& cfg);

}  // namespace memprobe
