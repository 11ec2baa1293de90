#include "memprobe/runner.hpp"

#include <algorithm>
#include <fstream>
#include <mutex>
#include <set>
#include <thread>

#include "memprobe/iterate.hpp"
#include "memprobe/store.hpp"

namespace memprobe {

void ExperimentConfig::validate() const {
  if (corpus.empty()) throw ConfigError("corpus is empty");
  segmentation.validate();
  if (models.empty()) throw ConfigError("at least one model is required");
  GenerationParams p = params;
  if (p.model.empty()) p.model = "placeholder";
  p.validate();
  rouge.validate();
  if (parallelism == 0) throw ConfigError("parallelism must be positive");
  std::set<int> seen;
  for (int v : max_tokens_sweep) {
    if (v < 1) throw ConfigError("sweep values must be positive");
    if (!seen.insert(v).second) throw ConfigError("sweep value " + std::to_string(v) + " is repeated");
  }
  std::set<std::string> ids;
  for (const auto& d : corpus) {
    if (!ids.insert(d.id).second) throw ConfigError("duplicate document id '" + d.id + "'");
  }
}

ojson RunSummary::to_json() const {
  ojson j;
  j["experiment"] = experiment;
  j["max_tokens"] = max_tokens ? ojson(*max_tokens) : ojson(nullptr);
  j["tasks"] = tasks;
  j["attempted"] = attempted;
  j["succeeded"] = succeeded;
  j["failed"] = failed;
  j["skipped"] = skipped;
  j["interrupted"] = interrupted;
  j["store"] = store_path.filename().string();
  return j;
}

namespace {

struct Task {
  const Document* doc;
  std::size_t sample_index;
  std::size_t start_word;
  std::string prefix_text;
  std::string reference_text;
  ModelSpec model;
  GenerationParams params;
  std::string task_id;
};

std::vector<Task> build_tasks(const ExperimentConfig& cfg, const ProviderRegistry& providers,
                              std::string_view experiment, std::optional<int> max_tokens) {
  std::vector<Task> tasks;
  for (const auto& doc : cfg.corpus) {
    for (const auto& sample : segment(doc, cfg.segmentation)) {
      for (const auto& model : cfg.models) {
        const auto provider = providers.find(model.provider);
        if (provider == providers.end()) {
          throw ConfigError("model '" + model.model + "' references unknown provider '" + model.provider + "'");
        }
        Task t{&doc, sample.index, sample.start_word, sample.prefix_text(), {}, model, cfg.params, {}};
        t.params.model = model.model;
        if (max_tokens) {
          t.params.max_tokens = *max_tokens;
          t.reference_text = join_words(align_reference(doc, sample.start_word + sample.prefix.size(),
                                                        static_cast<std::size_t>(*max_tokens)));
        } else {
          t.reference_text = sample.reference_text();
        }
        const auto request_id = make_request_id(model.provider, t.params, t.params.render_prompt(t.prefix_text));
        t.task_id = short_hash(std::string(experiment) + '\0' + request_id + '\0' + doc.id + '\0' +
                                   std::to_string(sample.index) + '\0' + t.reference_text,
                               24);
        tasks.push_back(std::move(t));
      }
    }
  }
  return tasks;
}

// Commits results to the store in task order regardless of completion order,
// so that parallel runs produce byte-identical stores.
class OrderedCommitter {
 public:
  OrderedCommitter(ResultStore& store, std::size_t n) : store_(store), slots_(n) {}

  void finish(std::size_t idx, std::optional<ojson> record) {
    std::lock_guard lock(mu_);
    slots_[idx].done = true;
    slots_[idx].record = std::move(record);
    drain_locked(false);
  }

  // Writes everything completed, leaving gaps for tasks that never ran.
  void flush() {
    std::lock_guard lock(mu_);
    drain_locked(true);
  }

 private:
  struct Slot {
    bool done = false;
    std::optional<ojson> record;
  };

  void drain_locked(bool skip_gaps) {
    while (next_ < slots_.size()) {
      auto& s = slots_[next_];
      if (!s.done && !skip_gaps) break;
      if (s.done && s.record) store_.append(*s.record);
      s.record.reset();
      ++next_;
    }
  }

  ResultStore& store_;
  std::mutex mu_;
  std::vector<Slot> slots_;
  std::size_t next_ = 0;
};

RunSummary run_tasks(const ExperimentConfig& cfg, const ProviderRegistry& providers, const RunOptions& opts,
                     std::string experiment, std::optional<int> max_tokens) {
  cfg.validate();
  const auto tasks = build_tasks(cfg, providers, experiment, max_tokens);
  ResultStore store(cfg.output_dir / kResultStoreName);

  RunSummary summary;
  summary.experiment = experiment;
  summary.max_tokens = max_tokens;
  summary.tasks = tasks.size();
  summary.store_path = store.path();

  OrderedCommitter committer(store, tasks.size());
  std::atomic<std::size_t> next{0}, attempted{0}, succeeded{0}, failed{0}, skipped{0};
  std::atomic<bool> interrupted{false};
  std::mutex log_mu;
  auto log = [&](const std::string& msg) {
    if (!opts.log) return;
    std::lock_guard lock(log_mu);
    opts.log(msg);
  };

  auto worker = [&] {
    for (;;) {
      const std::size_t idx = next.fetch_add(1);
      if (idx >= tasks.size()) return;
      if (opts.cancel && opts.cancel->load()) {
        interrupted = true;
        return;
      }
      const Task& t = tasks[idx];
      if (store.has_result(t.task_id)) {
        ++skipped;
        committer.finish(idx, std::nullopt);
        continue;
      }
      ++attempted;
      Provider& provider = *providers.find(t.model.provider)->second;
      try {
        ProbeRecord r;
        r.completion = complete(provider, t.prefix_text, t.params);
        r.score = rouge_l(t.reference_text, r.completion.output_text, cfg.rouge);
        r.task_id = t.task_id;
        r.config_hash = cfg.config_hash;
        r.experiment = experiment;
        r.doc_id = t.doc->id;
        r.sample_index = t.sample_index;
        r.start_word = t.start_word;
        r.text_type = t.doc->text_type;
        r.model_id = t.model.model;
        r.provider = t.model.provider;
        r.max_tokens = t.params.max_tokens;
        r.reference_text = t.reference_text;
        ++succeeded;
        committer.finish(idx, to_json(r));
      } catch (const std::exception& e) {
        FailureRecord f;
        f.task_id = t.task_id;
        f.config_hash = cfg.config_hash;
        f.experiment = experiment;
        f.doc_id = t.doc->id;
        f.sample_index = t.sample_index;
        f.text_type = t.doc->text_type;
        f.model_id = t.model.model;
        f.provider = t.model.provider;
        f.max_tokens = t.params.max_tokens;
        f.error = e.what();
        f.attempts = 1;
        if (const auto* pe = dynamic_cast<const ProviderError*>(&e)) {
          f.status = pe->status();
          f.attempts = pe->attempts();
        }
        ++failed;
        log("task " + t.doc->id + "#" + std::to_string(t.sample_index) + " on " + t.model.model +
            " failed: " + e.what());
        committer.finish(idx, to_json(f));
      }
    }
  };

  {
    const std::size_t n_workers = std::max<std::size_t>(1, std::min(cfg.parallelism, tasks.size()));
    std::vector<std::jthread> workers;
    workers.reserve(n_workers);
    for (std::size_t i = 0; i < n_workers; ++i) workers.emplace_back(worker);
  }
  committer.flush();

  summary.attempted = attempted;
  summary.succeeded = succeeded;
  summary.failed = failed;
  summary.skipped = skipped;
  summary.interrupted = interrupted;
  log(experiment + (max_tokens ? " max_tokens=" + std::to_string(*max_tokens) : std::string{}) + ": " +
      std::to_string(summary.succeeded) + " ok, " + std::to_string(summary.failed) + " failed, " +
      std::to_string(summary.skipped) + " skipped");
  return summary;
}

void write_json(const std::filesystem::path& path, const ojson& j) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace

RunSummary run_probe(const ExperimentConfig& cfg, const ProviderRegistry& providers, const RunOptions& opts) {
  auto summary = run_tasks(cfg, providers, opts, "probe", std::nullopt);
  write_json(cfg.output_dir / "run_summary.json", summary.to_json());
  return summary;
}

std::vector<RunSummary> sweep_max_tokens(const ExperimentConfig& cfg, const ProviderRegistry& providers,
                                         const RunOptions& opts) {
  cfg.validate();
  if (cfg.max_tokens_sweep.empty()) throw ConfigError("sweep requires a non-empty max_tokens list");
  std::vector<RunSummary> out;
  ojson all = ojson::array();
  for (int v : cfg.max_tokens_sweep) {
    out.push_back(run_tasks(cfg, providers, opts, "sweep", v));
    all.push_back(out.back().to_json());
    if (out.back().interrupted) break;
  }
  write_json(cfg.output_dir / "sweep_summary.json", all);
  return out;
}

}  // namespace memprobe
