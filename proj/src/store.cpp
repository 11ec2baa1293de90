#include "memprobe/store.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

namespace memprobe {

ojson to_json(const ProbeRecord& r) {
  ojson j;
  j["kind"] = "probe";
  j["task_id"] = r.task_id;
  j["config_hash"] = r.config_hash;
  j["experiment"] = r.experiment;
  j["doc_id"] = r.doc_id;
  j["sample_index"] = r.sample_index;
  j["start_word"] = r.start_word;
  j["text_type"] = to_string(r.text_type);
  j["model_id"] = r.model_id;
  j["provider"] = r.provider;
  j["max_tokens"] = r.max_tokens;
  j["reference"] = r.reference_text;
  j["completion"] = to_json(r.completion);
  j["score"] = to_json(r.score);
  return j;
}

ojson to_json(const FailureRecord& r) {
  ojson j;
  j["kind"] = "failure";
  j["task_id"] = r.task_id;
  j["config_hash"] = r.config_hash;
  j["experiment"] = r.experiment;
  j["doc_id"] = r.doc_id;
  j["sample_index"] = r.sample_index;
  j["text_type"] = to_string(r.text_type);
  j["model_id"] = r.model_id;
  j["provider"] = r.provider;
  j["max_tokens"] = r.max_tokens;
  j["error"] = r.error;
  j["status"] = r.status;
  j["attempts"] = r.attempts;
  return j;
}

ojson to_json(const IterationRecord& r) {
  ojson j;
  j["kind"] = "iteration";
  j["trace_id"] = r.trace_id;
  j["config_hash"] = r.config_hash;
  j["doc_id"] = r.doc_id;
  j["model_id"] = r.model_id;
  j["provider"] = r.provider;
  j["iteration"] = r.iteration;
  j["prompt_text"] = r.prompt_text;
  j["output_text"] = r.output_text;
  j["reference_window"] = r.reference_window;
  j["cursor_before"] = r.cursor_before;
  j["cursor_after"] = r.cursor_after;
  j["request_id"] = r.request_id;
  j["score"] = to_json(r.score);
  return j;
}

namespace {

ProbeRecord probe_from_json(const ojson& j) {
  ProbeRecord r;
  r.task_id = j.at("task_id").get<std::string>();
  r.config_hash = j.at("config_hash").get<std::string>();
  r.experiment = j.at("experiment").get<std::string>();
  r.doc_id = j.at("doc_id").get<std::string>();
  r.sample_index = j.at("sample_index").get<std::size_t>();
  r.start_word = j.at("start_word").get<std::size_t>();
  r.text_type = parse_text_type(j.at("text_type").get<std::string>());
  r.model_id = j.at("model_id").get<std::string>();
  r.provider = j.at("provider").get<std::string>();
  r.max_tokens = j.at("max_tokens").get<int>();
  r.reference_text = j.at("reference").get<std::string>();
  r.completion = completion_from_json(j.at("completion"));
  r.score = score_from_json(j.at("score"));
  return r;
}

FailureRecord failure_from_json(const ojson& j) {
  FailureRecord r;
  r.task_id = j.at("task_id").get<std::string>();
  r.config_hash = j.at("config_hash").get<std::string>();
  r.experiment = j.at("experiment").get<std::string>();
  r.doc_id = j.at("doc_id").get<std::string>();
  r.sample_index = j.at("sample_index").get<std::size_t>();
  r.text_type = parse_text_type(j.at("text_type").get<std::string>());
  r.model_id = j.at("model_id").get<std::string>();
  r.provider = j.at("provider").get<std::string>();
  r.max_tokens = j.at("max_tokens").get<int>();
  r.error = j.at("error").get<std::string>();
  r.status = j.value("status", 0);
  r.attempts = j.value("attempts", 0);
  return r;
}

IterationRecord iteration_from_json(const ojson& j) {
  IterationRecord r;
  r.trace_id = j.at("trace_id").get<std::string>();
  r.config_hash = j.at("config_hash").get<std::string>();
  r.doc_id = j.at("doc_id").get<std::string>();
  r.model_id = j.at("model_id").get<std::string>();
  r.provider = j.at("provider").get<std::string>();
  r.iteration = j.at("iteration").get<std::size_t>();
  r.prompt_text = j.at("prompt_text").get<std::string>();
  r.output_text = j.at("output_text").get<std::string>();
  r.reference_window = j.at("reference_window").get<Words>();
  r.cursor_before = j.at("cursor_before").get<std::size_t>();
  r.cursor_after = j.at("cursor_after").get<std::size_t>();
  r.request_id = j.value("request_id", std::string{});
  r.score = score_from_json(j.at("score"));
  return r;
}

}  // namespace

StoreContents read_store(const std::filesystem::path& path) {
  StoreContents contents;
  std::ifstream in(path);
  if (!in) {
    if (!std::filesystem::exists(path)) return contents;
    throw Error("cannot read result store: " + path.string());
  }
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const auto j = ojson::parse(line);
      const auto kind = j.at("kind").get<std::string>();
      if (kind == "probe") {
        contents.probes.push_back(probe_from_json(j));
      } else if (kind == "failure") {
        contents.failures.push_back(failure_from_json(j));
      } else if (kind == "iteration") {
        contents.iterations.push_back(iteration_from_json(j));
      } else {
        throw Error("unknown record kind '" + kind + "'");
      }
    } catch (const std::exception& e) {
      throw Error(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return contents;
}

ResultStore::ResultStore(std::filesystem::path path) : path_(std::move(path)) {
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
  for (const auto& r : read_store(path_).probes) done_.insert(r.task_id);
  out_.open(path_, std::ios::app | std::ios::binary);
  if (!out_) throw Error("cannot open result store for append: " + path_.string());
}

bool ResultStore::has_result(const std::string& task_id) const {
  std::lock_guard lock(mu_);
  return done_.contains(task_id);
}

std::size_t ResultStore::completed() const {
  std::lock_guard lock(mu_);
  return done_.size();
}

void ResultStore::append(const ojson& record) {
  const std::string line = record.dump();
  std::lock_guard lock(mu_);
  out_ << line << '\n';
  out_.flush();
  if (!out_) throw Error("write to result store failed: " + path_.string());
  if (record.value("kind", std::string{}) == "probe") done_.insert(record.at("task_id").get<std::string>());
}

OutputLock::OutputLock(const std::filesystem::path& dir) : lock_path_(dir / ".memprobe.lock") {
  std::filesystem::create_directories(dir);
  const int fd = ::open(lock_path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
  if (fd < 0) {
    if (errno == EEXIST) {
      throw Error("output directory is in use by another run (remove " + lock_path_.string() +
                  " if no run is active)");
    }
    throw Error("cannot create lock file " + lock_path_.string() + ": " + std::strerror(errno));
  }
  const std::string pid = std::to_string(::getpid()) + "\n";
  [[maybe_unused]] auto n = ::write(fd, pid.data(), pid.size());
  ::close(fd);
}

OutputLock::~OutputLock() {
  std::error_code ec;
  std::filesystem::remove(lock_path_, ec);
}

}  // namespace memprobe
