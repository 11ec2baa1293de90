#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "memprobe/corpus.hpp"
#include "memprobe/json_io.hpp"
#include "memprobe/provider.hpp"
#include "memprobe/scoring.hpp"

namespace memprobe {

struct ModelSpec {
  std::string provider;
  std::string model;

  bool operator==(const ModelSpec&) const = default;
};

struct ExperimentConfig {
  std::vector<Document> corpus;
  SegmentationConfig segmentation;
  std::vector<ModelSpec> models;
  GenerationParams params;  // `model` is filled per task from `models`
  std::vector<int> max_tokens_sweep;
  RougeConfig rouge;
  std::filesystem::path output_dir;
  std::size_t parallelism = 4;
  std::uint64_t rng_seed = 0;
  std::string config_hash;

  void validate() const;
};

using ProviderRegistry = std::map<std::string, std::shared_ptr<Provider>, std::less<>>;

struct RunSummary {
  std::string experiment;
  std::optional<int> max_tokens;  // set for sweep runs
  std::size_t tasks = 0;
  std::size_t attempted = 0;
  std::size_t succeeded = 0;
  std::size_t failed = 0;
  std::size_t skipped = 0;
  bool interrupted = false;
  std::filesystem::path store_path;

  ojson to_json() const;
};

struct RunOptions {
  // Polled between tasks; in-flight tasks finish and are stored.
  const std::atomic<bool>* cancel = nullptr;
  std::function<void(const std::string&)> log;
};

// Every sample x model, scored against the sample's reference, appended to
// output_dir/results.jsonl. Tasks with a stored result are skipped. Writes
// output_dir/run_summary.json.
RunSummary run_probe(const ExperimentConfig& cfg, const ProviderRegistry& providers, const RunOptions& opts = {});

// One probe pass per max_tokens value with everything else fixed. For value v
// the reference is the v words following the prefix (clamped at the document
// end). Writes output_dir/sweep_summary.json.
std::vector<RunSummary> sweep_max_tokens(const ExperimentConfig& cfg, const ProviderRegistry& providers,
                                         const RunOptions& opts = {});

}  // namespace memprobe
