#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <random>
#include <sstream>
#include <string>

#include <unistd.h>

#include "memprobe/corpus.hpp"
#include "memprobe/provider.hpp"

namespace testing {

inline std::filesystem::path fixture(const std::string& rel) { return std::filesystem::path(MEMPROBE_FIXTURES) / rel; }

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void spit(const std::filesystem::path& p, const std::string& text) {
  std::filesystem::create_directories(p.parent_path());
  std::ofstream(p, std::ios::binary | std::ios::trunc) << text;
}

inline memprobe::Document alice() {
  return memprobe::load_document(fixture("corpus/alice_ch1.txt"), memprobe::TextType::novel,
                                 "Alice's Adventures in Wonderland, Chapter I");
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("memprobe-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

// Echoes a fixed reply and counts calls; optionally raises a flag after a
// given number of calls.
class CountingProvider : public memprobe::Provider {
 public:
  explicit CountingProvider(std::string name, std::string reply = "reply")
      : name_(std::move(name)), reply_(std::move(reply)) {}

  const std::string& name() const override { return name_; }
  memprobe::Generation generate(std::string_view, const memprobe::GenerationParams&) override {
    const int n = ++calls;
    if (cancel_after > 0 && n >= cancel_after && cancel) cancel->store(true);
    return {reply_, memprobe::FinishReason::stop};
  }
  bool records_wall_clock() const override { return false; }

  std::atomic<int> calls{0};
  int cancel_after = 0;
  std::atomic<bool>* cancel = nullptr;

 private:
  std::string name_;
  std::string reply_;
};

}  // namespace testing
