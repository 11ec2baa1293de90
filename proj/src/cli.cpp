#include "memprobe/cli.hpp"

#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <set>

#include <CLI11.hpp>

#include "memprobe/iterate.hpp"
#include "memprobe/report.hpp"
#include "memprobe/store.hpp"

namespace memprobe::cli {

Workspace open_workspace(const GlobalOptions& opts) {
  Workspace ws;
  ws.config = load_config(opts.config);
  for (std::size_t i = 0; i < ws.config.corpus.size(); ++i) {
    const auto& e = ws.config.corpus[i];
    std::filesystem::path path = e.path;
    if (path.is_relative()) path = (ws.config.base_dir / path).lexically_normal();
    try {
      ws.docs.push_back(load_document(path, e.text_type, e.title));
    } catch (const Error& err) {
      throw ConfigError(opts.config.string() + ": /corpus/" + std::to_string(i) + ": " + err.what());
    }
  }
  std::set<std::string> ids;
  for (const auto& d : ws.docs) {
    if (!ids.insert(d.id).second) throw ConfigError(opts.config.string() + ": duplicate corpus document '" + d.title + "'");
  }
  if (opts.output_dir) {
    ws.output_dir = opts.output_dir->lexically_normal();
  } else {
    std::filesystem::path out = ws.config.output_dir;
    ws.output_dir = (out.is_relative() ? ws.config.base_dir / out : out).lexically_normal();
  }
  ws.config_hash = config_hash(ws.config);
  return ws;
}

ProviderRegistry build_providers(const Workspace& ws) {
  ProviderRegistry registry;
  Words source;
  for (const auto& d : ws.docs) source.insert(source.end(), d.words.begin(), d.words.end());
  for (const auto& p : ws.config.providers) {
    if (p.kind == ProviderKind::memorizer) {
      MemorizerModel m;
      m.source_words = source;
      m.context_len = p.memorizer.context_len;
      m.fidelity = p.memorizer.fidelity;
      m.divergence_point = p.memorizer.divergence_point;
      m.rng_seed = p.memorizer.rng_seed.value_or(ws.config.rng_seed);
      registry.emplace(p.name, std::make_shared<MemorizerProvider>(p.name, std::move(m)));
    } else {
      HttpProviderConfig h;
      h.name = p.name;
      h.base_url = p.base_url;
      if (!p.api_key_env.empty()) {
        if (const char* key = std::getenv(p.api_key_env.c_str())) h.api_key = key;
      }
      h.timeout = std::chrono::milliseconds(p.timeout_ms);
      h.max_in_flight = p.max_in_flight;
      h.requests_per_minute = p.requests_per_minute;
      h.retry.max_retries = p.max_retries;
      h.retry.initial_backoff = std::chrono::milliseconds(p.initial_backoff_ms);
      registry.emplace(p.name, std::make_shared<HttpProvider>(std::move(h)));
    }
  }
  return registry;
}

ExperimentConfig experiment_config(const Workspace& ws) {
  ExperimentConfig e;
  e.corpus = ws.docs;
  e.segmentation = ws.config.segmentation;
  for (const auto& m : ws.config.models) e.models.push_back({m.provider, m.model});
  e.params = ws.config.params;
  e.max_tokens_sweep = ws.config.sweep;
  e.rouge = ws.config.rouge;
  e.output_dir = ws.output_dir;
  e.parallelism = ws.config.parallelism;
  e.rng_seed = ws.config.rng_seed;
  e.config_hash = ws.config_hash;
  return e;
}

namespace {

template <typename Fn>
int guarded(std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kFatal;
  }
}

void print_summary(std::ostream& out, const RunSummary& s) {
  out << s.experiment;
  if (s.max_tokens) out << " max_tokens=" << *s.max_tokens;
  out << ": tasks: " << s.tasks << ", attempted: " << s.attempted << ", succeeded: " << s.succeeded
      << ", failed: " << s.failed << ", skipped: " << s.skipped;
  if (s.interrupted) out << " (interrupted)";
  out << '\n';
}

RunOptions run_options(const GlobalOptions& opts, std::ostream& err, const std::atomic<bool>* cancel) {
  RunOptions ro;
  ro.cancel = cancel;
  if (opts.verbose) ro.log = [&err](const std::string& msg) { err << msg << '\n'; };
  return ro;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot write " + path.string());
  f << text;
}

}  // namespace

int cmd_segment(const GlobalOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto ws = open_workspace(opts);
    OutputLock lock(ws.output_dir);
    std::string manifest;
    std::size_t total = 0;
    for (const auto& doc : ws.docs) {
      const auto samples = segment(doc, ws.config.segmentation);
      for (const auto& s : samples) {
        ojson j;
        j["doc_id"] = s.doc_id;
        j["index"] = s.index;
        j["start_word"] = s.start_word;
        j["prefix"] = s.prefix_text();
        j["reference"] = s.reference_text();
        manifest += j.dump() + "\n";
      }
      out << doc.id << " (" << to_string(doc.text_type) << ", " << doc.words.size() << " words): " << samples.size()
          << " samples\n";
      total += samples.size();
    }
    const auto path = ws.output_dir / "samples.jsonl";
    write_text(path, manifest);
    out << total << " samples\n";
    out << "manifest: " << path.string() << '\n';
    return kOk;
  });
}

int cmd_probe(const GlobalOptions& opts, std::ostream& out, std::ostream& err, const std::atomic<bool>* cancel) {
  return guarded(err, [&] {
    const auto ws = open_workspace(opts);
    OutputLock lock(ws.output_dir);
    const auto providers = build_providers(ws);
    const auto summary = run_probe(experiment_config(ws), providers, run_options(opts, err, cancel));
    print_summary(out, summary);
    out << "store: " << summary.store_path.string() << '\n';
    return summary.failed > 0 ? kTaskFailures : kOk;
  });
}

int cmd_sweep(const GlobalOptions& opts, std::ostream& out, std::ostream& err, const std::atomic<bool>* cancel) {
  return guarded(err, [&] {
    const auto ws = open_workspace(opts);
    if (ws.config.sweep.empty()) throw ConfigError(opts.config.string() + ": /sweep/max_tokens: list is empty");
    OutputLock lock(ws.output_dir);
    const auto providers = build_providers(ws);
    const auto summaries = sweep_max_tokens(experiment_config(ws), providers, run_options(opts, err, cancel));
    std::size_t failed = 0;
    for (const auto& s : summaries) {
      print_summary(out, s);
      failed += s.failed;
    }
    out << "store: " << (ws.output_dir / kResultStoreName).string() << '\n';
    return failed > 0 ? kTaskFailures : kOk;
  });
}

int cmd_iterate(const GlobalOptions& opts, const std::string& doc_id, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto ws = open_workspace(opts);
    const auto doc = std::find_if(ws.docs.begin(), ws.docs.end(), [&](const Document& d) { return d.id == doc_id; });
    if (doc == ws.docs.end()) {
      std::string known;
      for (const auto& d : ws.docs) known += (known.empty() ? "" : ", ") + d.id;
      throw Error("unknown doc id '" + doc_id + "' (known: " + known + ")");
    }
    OutputLock lock(ws.output_dir);
    const auto providers = build_providers(ws);
    ResultStore store(ws.output_dir / kResultStoreName);
    std::set<std::string> stored_traces;
    for (const auto& r : read_store(store.path()).iterations) stored_traces.insert(r.trace_id);

    bool any_error = false;
    for (const auto& model : ws.config.models) {
      IterationConfig ic;
      ic.seed_word_count = ws.config.iterate.seed_word_count;
      ic.iterations = ws.config.iterate.iterations;
      ic.params = ws.config.params;
      ic.params.model = model.model;
      if (ws.config.iterate.max_tokens) ic.params.max_tokens = *ws.config.iterate.max_tokens;
      ic.rouge = ws.config.rouge;
      Provider& provider = *providers.at(model.provider);
      const auto trace_id = make_trace_id(*doc, ic, provider.name());
      if (stored_traces.contains(trace_id)) {
        out << "trace " << trace_id << " (" << model.model << "): already stored, skipped\n";
        continue;
      }
      const auto result = run_iterative(*doc, ic, provider);
      for (const auto& t : result.traces) {
        IterationRecord r;
        r.trace_id = trace_id;
        r.config_hash = ws.config_hash;
        r.doc_id = doc->id;
        r.model_id = model.model;
        r.provider = model.provider;
        r.iteration = t.iteration;
        r.prompt_text = t.prompt_text;
        r.output_text = t.output_text;
        r.reference_window = t.reference_window;
        r.cursor_before = t.cursor_before;
        r.cursor_after = t.cursor_after;
        r.request_id = t.completion.request_id;
        r.score = t.score;
        store.append(to_json(r));
        out << "trace " << trace_id << " (" << model.model << ") iteration " << t.iteration
            << ": recall=" << format_3dp(t.score.recall) << " cursor " << t.cursor_before << "->" << t.cursor_after
            << '\n';
      }
      if (result.reached_end) out << "trace " << trace_id << ": reached end of document\n";
      if (result.error) {
        err << "trace " << trace_id << ": " << *result.error << '\n';
        any_error = true;
      }
    }
    return any_error ? kTaskFailures : kOk;
  });
}

namespace {

std::vector<ProbeRecord> select(const std::vector<ProbeRecord>& all, std::string_view experiment) {
  std::vector<ProbeRecord> out;
  for (const auto& r : all) {
    if (r.experiment == experiment) out.push_back(r);
  }
  return out;
}

ChartSpec bar_chart(const std::vector<AggregateRow>& rows, std::string title, std::string x_label,
                    std::string y_label, bool rate) {
  ChartSpec c;
  c.kind = ChartKind::bar;
  c.title = std::move(title);
  c.x_label = std::move(x_label);
  c.y_label = std::move(y_label);
  Series s{rate ? "R-L >= threshold rate" : "mean Rouge-L recall", {}, false};
  for (const auto& r : rows) {
    c.categories.push_back(r.group);
    s.values.push_back(rate ? r.high_rate : r.mean);
  }
  c.series.push_back(std::move(s));
  return c;
}

ojson rows_json(const std::vector<AggregateRow>& rows) {
  ojson a = ojson::array();
  for (const auto& r : rows) {
    a.push_back(ojson{{"group", r.group},
                      {"count", r.count},
                      {"mean", r.mean},
                      {"min", r.min},
                      {"max", r.max},
                      {"high_count", r.high_count},
                      {"high_rate", r.high_rate}});
  }
  return a;
}

}  // namespace

int cmd_report(const GlobalOptions& opts, const std::vector<std::string>& tables, std::ostream& out,
               std::ostream& err) {
  return guarded(err, [&] {
    for (const auto& t : tables) {
      if (t != "all" && std::find(kReportTables.begin(), kReportTables.end(), t) == kReportTables.end()) {
        std::string known;
        for (const auto& k : kReportTables) known += (known.empty() ? "" : ", ") + k;
        throw Error("unknown table '" + t + "' (known: " + known + ", all)");
      }
    }
    const bool all = tables.empty() || std::find(tables.begin(), tables.end(), "all") != tables.end();
    auto wanted = [&](std::string_view name) {
      return all || std::find(tables.begin(), tables.end(), name) != tables.end();
    };

    const auto ws = open_workspace(opts);
    OutputLock lock(ws.output_dir);
    const auto store = read_store(ws.output_dir / kResultStoreName);
    const auto probes = select(store.probes, "probe");
    const auto sweeps = select(store.probes, "sweep");
    const auto& rouge = ws.config.rouge;
    const auto& dir = ws.output_dir;

    ojson summary;
    summary["config_hash"] = ws.config_hash;
    summary["threshold"] = rouge.high_similarity_threshold;
    summary["tables"] = ojson::object();
    auto wrote = [&](const std::filesystem::path& p) { out << "wrote " << p.string() << '\n'; };
    auto skip = [&](std::string_view name, std::string_view why) {
      out << "skipped " << name << ": " << why << '\n';
    };

    if (wanted("by_model")) {
      if (probes.empty()) {
        skip("by_model", "no probe records");
      } else {
        const auto rows = aggregate(probes, GroupBy::model, rouge);
        emit_csv(rows, dir / "by_model.csv");
        emit_chart(bar_chart(rows, "Mean Rouge-L recall by model", "model", "mean Rouge-L recall", false),
                   dir / "by_model.svg");
        summary["tables"]["by_model"] = rows_json(rows);
        wrote(dir / "by_model.csv");
        wrote(dir / "by_model.svg");
      }
    }

    if (wanted("by_text_type")) {
      if (probes.empty()) {
        skip("by_text_type", "no probe records");
      } else {
        const auto rows = aggregate(probes, GroupBy::text_type, rouge);
        emit_csv(rows, dir / "by_text_type.csv");
        // models on x, one bar per text type
        const auto models = aggregate(probes, GroupBy::model, rouge);
        ChartSpec c;
        c.kind = ChartKind::grouped_bar;
        c.title = "Mean Rouge-L recall by text type";
        c.x_label = "model";
        c.y_label = "mean Rouge-L recall";
        for (const auto& m : models) c.categories.push_back(m.group);
        for (const auto& tt : rows) {
          Series s{tt.group, {}, false};
          for (const auto& m : models) {
            std::vector<ProbeRecord> cell;
            for (const auto& r : probes) {
              if (r.model_id == m.group && to_string(r.text_type) == tt.group) cell.push_back(r);
            }
            s.values.push_back(cell.empty() ? 0.0 : aggregate(cell, GroupBy::model, rouge).front().mean);
          }
          c.series.push_back(std::move(s));
        }
        emit_chart(c, dir / "by_text_type.svg");
        summary["tables"]["by_text_type"] = rows_json(rows);
        wrote(dir / "by_text_type.csv");
        wrote(dir / "by_text_type.svg");
      }
    }

    if (wanted("by_family")) {
      if (probes.empty()) {
        skip("by_family", "no probe records");
      } else {
        std::map<std::string, std::string, std::less<>> families;
        for (const auto& m : ws.config.models) families[m.model] = m.family.empty() ? m.model : m.family;
        const auto rows = rate_table(probes, families, rouge);
        emit_csv(rows, dir / "by_family.csv");
        emit_chart(bar_chart(rows, "Share of outputs with Rouge-L >= threshold", "family", "rate", true),
                   dir / "by_family.svg");
        summary["tables"]["by_family"] = rows_json(rows);
        wrote(dir / "by_family.csv");
        wrote(dir / "by_family.svg");
      }
    }

    if (wanted("by_max_tokens")) {
      if (sweeps.empty()) {
        skip("by_max_tokens", "no sweep records");
      } else {
        const auto rows = aggregate(sweeps, GroupBy::max_tokens, rouge);
        emit_csv(rows, dir / "by_max_tokens.csv");
        ChartSpec c;
        c.kind = ChartKind::line;
        c.title = "Mean Rouge-L and high-score count by max_tokens";
        c.x_label = "max_tokens";
        c.y_label = "mean Rouge-L recall";
        c.y2_label = "count R-L >= threshold";
        Series mean{"mean Rouge-L", {}, false};
        Series high{"count R-L >= threshold", {}, true};
        for (const auto& r : rows) {
          c.categories.push_back(r.group);
          mean.values.push_back(r.mean);
          high.values.push_back(static_cast<double>(r.high_count));
        }
        c.series = {std::move(mean), std::move(high)};
        emit_chart(c, dir / "by_max_tokens.svg");
        summary["tables"]["by_max_tokens"] = rows_json(rows);
        wrote(dir / "by_max_tokens.csv");
        wrote(dir / "by_max_tokens.svg");
      }
    }

    if (wanted("by_model_max_tokens")) {
      if (sweeps.empty()) {
        skip("by_model_max_tokens", "no sweep records");
      } else {
        const auto rows = aggregate(sweeps, GroupBy::model_max_tokens, rouge);
        emit_csv(rows, dir / "by_model_max_tokens.csv");
        const auto models = aggregate(sweeps, GroupBy::model, rouge);
        const auto budgets = aggregate(sweeps, GroupBy::max_tokens, rouge);
        ChartSpec c;
        c.kind = ChartKind::heatmap;
        c.title = "Mean Rouge-L recall by max_tokens and model";
        c.x_label = "model";
        c.y_label = "max_tokens";
        for (const auto& m : models) c.categories.push_back(m.group);
        for (const auto& b : budgets) {
          Series s{b.group, {}, false};
          for (const auto& m : models) {
            const auto key = m.group + "|" + b.group;
            const auto it = std::find_if(rows.begin(), rows.end(), [&](const AggregateRow& r) { return r.group == key; });
            s.values.push_back(it == rows.end() ? 0.0 : it->mean);
          }
          c.series.push_back(std::move(s));
        }
        emit_chart(c, dir / "by_model_max_tokens.svg");
        summary["tables"]["by_model_max_tokens"] = rows_json(rows);
        wrote(dir / "by_model_max_tokens.csv");
        wrote(dir / "by_model_max_tokens.svg");
      }
    }

    if (wanted("iterations")) {
      if (store.iterations.empty()) {
        skip("iterations", "no iteration records");
      } else {
        std::string csv = "trace_id,doc_id,model_id,iteration,recall,precision,f_measure\n";
        std::map<std::string, std::vector<const IterationRecord*>> traces;
        std::size_t max_iter = 0;
        for (const auto& r : store.iterations) {
          csv += csv_field(r.trace_id) + ',' + csv_field(r.doc_id) + ',' + csv_field(r.model_id) + ',' +
                 std::to_string(r.iteration) + ',' + format_3dp(r.score.recall) + ',' +
                 format_3dp(r.score.precision) + ',' + format_3dp(r.score.f_measure) + '\n';
          traces[r.trace_id].push_back(&r);
          max_iter = std::max(max_iter, r.iteration);
        }
        write_text(dir / "iterations.csv", csv);
        ChartSpec c;
        c.kind = ChartKind::line;
        c.title = "Rouge-L recall across iterations";
        c.x_label = "iteration";
        c.y_label = "Rouge-L recall";
        for (std::size_t i = 1; i <= max_iter; ++i) c.categories.push_back(std::to_string(i));
        ojson series_json = ojson::array();
        for (const auto& [id, recs] : traces) {
          Series s{recs.front()->doc_id + " / " + recs.front()->model_id, std::vector<double>(max_iter, 0.0), false};
          for (const auto* r : recs) s.values[r->iteration - 1] = r->score.recall;
          series_json.push_back(ojson{{"trace_id", id}, {"label", s.label}, {"recall", s.values}});
          c.series.push_back(std::move(s));
        }
        emit_chart(c, dir / "iterations.svg");
        summary["tables"]["iterations"] = std::move(series_json);
        wrote(dir / "iterations.csv");
        wrote(dir / "iterations.svg");
      }
    }

    write_text(dir / "report_summary.json", summary.dump(2) + "\n");
    wrote(dir / "report_summary.json");
    return kOk;
  });
}

namespace {

std::atomic<bool> g_interrupted{false};

extern "C" void on_sigint(int) { g_interrupted.store(true); }

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"memprobe: measure verbatim reproduction of text by language models"};
  app.require_subcommand(1);
  GlobalOptions opts;
  std::string output_dir;
  app.add_option("-c,--config", opts.config, "Experiment config file (JSON)")->required();
  app.add_option("-o,--output-dir", output_dir, "Override the config's output_dir");
  app.add_flag("-v,--verbose", opts.verbose, "Log per-task progress to stderr");

  auto* segment_cmd = app.add_subcommand("segment", "Segment the corpus and write the sample manifest");
  auto* probe_cmd = app.add_subcommand("probe", "Prefix-probe every sample on every model");
  auto* sweep_cmd = app.add_subcommand("sweep", "Repeat the probe for each max_tokens value");
  auto* iterate_cmd = app.add_subcommand("iterate", "Iterative prompting on one document");
  std::string doc_id;
  iterate_cmd->add_option("--doc", doc_id, "Document id (see `segment` output)")->required();
  auto* report_cmd = app.add_subcommand("report", "Aggregate the result store into tables and charts");
  std::vector<std::string> tables;
  report_cmd->add_option("--tables", tables, "Tables to emit (default: all)")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kFatal;
  }
  if (!output_dir.empty()) opts.output_dir = output_dir;

  std::signal(SIGINT, on_sigint);
  if (*segment_cmd) return cmd_segment(opts, std::cout, std::cerr);
  if (*probe_cmd) return cmd_probe(opts, std::cout, std::cerr, &g_interrupted);
  if (*sweep_cmd) return cmd_sweep(opts, std::cout, std::cerr, &g_interrupted);
  if (*iterate_cmd) return cmd_iterate(opts, doc_id, std::cout, std::cerr);
  if (*report_cmd) return cmd_report(opts, tables, std::cout, std::cerr);
  return kFatal;
}

}  // namespace memprobe::cli
