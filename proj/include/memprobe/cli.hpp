#pragma once

#include <atomic>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "memprobe/config.hpp"
#include "memprobe/runner.hpp"

namespace memprobe::cli {

enum ExitCode : int { kOk = 0, kFatal = 1, kTaskFailures = 2 };

struct GlobalOptions {
  std::filesystem::path config;
  std::optional<std::filesystem::path> output_dir;
  bool verbose = false;
};

// Loaded config plus everything derived from it.
struct Workspace {
  ConfigFile config;
  std::vector<Document> docs;
  std::filesystem::path output_dir;
  std::string config_hash;
};

Workspace open_workspace(const GlobalOptions& opts);
ProviderRegistry build_providers(const Workspace& ws);
ExperimentConfig experiment_config(const Workspace& ws);

inline const std::vector<std::string> kReportTables = {"by_model",      "by_text_type",        "by_family",
                                                       "by_max_tokens", "by_model_max_tokens", "iterations"};

int cmd_segment(const GlobalOptions& opts, std::ostream& out, std::ostream& err);
int cmd_probe(const GlobalOptions& opts, std::ostream& out, std::ostream& err,
              const std::atomic<bool>* cancel = nullptr);
int cmd_sweep(const GlobalOptions& opts, std::ostream& out, std::ostream& err,
              const std::atomic<bool>* cancel = nullptr);
int cmd_iterate(const GlobalOptions& opts, const std::string& doc_id, std::ostream& out, std::ostream& err);
// Empty `tables` means all.
int cmd_report(const GlobalOptions& opts, const std::vector<std::string>& tables, std::ostream& out,
               std::ostream& err);

// Argument parsing and dispatch for the memprobe executable.
int run(int argc, char** argv);

}  // namespace memprobe::cli
