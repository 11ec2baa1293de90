#pragma once

// Append-only JSON-lines result store. Each line is a self-describing record
// tagged by "kind": probe, failure or iteration.

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <string>
#include <unordered_set>
#include <vector>

#include "memprobe/corpus.hpp"
#include "memprobe/json_io.hpp"
#include "memprobe/provider.hpp"
#include "memprobe/scoring.hpp"

namespace memprobe {

inline constexpr std::string_view kResultStoreName = "results.jsonl";

struct ProbeRecord {
  std::string task_id;
  std::string config_hash;
  std::string experiment;  // "probe" or "sweep"
  std::string doc_id;
  std::size_t sample_index = 0;
  std::size_t start_word = 0;
  TextType text_type = TextType::other;
  std::string model_id;
  std::string provider;
  int max_tokens = 0;
  std::string reference_text;
  Completion completion;
  ScoreRecord score;

  bool operator==(const ProbeRecord&) const = default;
};

struct FailureRecord {
  std::string task_id;
  std::string config_hash;
  std::string experiment;
  std::string doc_id;
  std::size_t sample_index = 0;
  TextType text_type = TextType::other;
  std::string model_id;
  std::string provider;
  int max_tokens = 0;
  std::string error;
  int status = 0;
  int attempts = 0;
};

struct IterationRecord {
  std::string trace_id;
  std::string config_hash;
  std::string doc_id;
  std::string model_id;
  std::string provider;
  std::size_t iteration = 0;
  std::string prompt_text;
  std::string output_text;
  Words reference_window;
  std::size_t cursor_before = 0;
  std::size_t cursor_after = 0;
  std::string request_id;
  ScoreRecord score;
};

ojson to_json(const ProbeRecord& r);
ojson to_json(const FailureRecord& r);
ojson to_json(const IterationRecord& r);

struct StoreContents {
  std::vector<ProbeRecord> probes;
  std::vector<FailureRecord> failures;
  std::vector<IterationRecord> iterations;
};

// Parses a store file. Throws Error with the offending line number on
// malformed lines. A missing file yields empty contents.
StoreContents read_store(const std::filesystem::path& path);

// Thread-safe appender. On open, indexes the task ids that already have a
// probe record so callers can skip them.
class ResultStore {
 public:
  explicit ResultStore(std::filesystem::path path);

  const std::filesystem::path& path() const { return path_; }
  bool has_result(const std::string& task_id) const;
  std::size_t completed() const;

  // Writes one compact JSON line and flushes.
  void append(const ojson& record);

 private:
  std::filesystem::path path_;
  mutable std::mutex mu_;
  std::ofstream out_;
  std::unordered_set<std::string> done_;
};

// Exclusive lock on an output directory for the lifetime of the object.
class OutputLock {
 public:
  explicit OutputLock(const std::filesystem::path& dir);
  ~OutputLock();
  OutputLock(const OutputLock&) = delete;
  OutputLock& operator=(const OutputLock&) = delete;

 private:
  std::filesystem::path lock_path_;
};

}  // namespace memprobe
