// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include "lcs_oracle.hpp"
#include "memprobe/cli.hpp"
#include "memprobe/iterate.hpp"
#include "memprobe/report.hpp"
#include "memprobe/runner.hpp"
#include "memprobe/store.hpp"
#include "support.hpp"

using namespace memprobe;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) {
      pass = false;
      detail = what;
    }
  }
};

int failures = 0;

void criterion(const std::string& name, double limit_s, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail = std::string("exception: ") + e.what();
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (limit_s > 0 && secs >= limit_s) {
    o.pass = false;
    o.detail = "took " + std::to_string(secs) + " s, limit " + std::to_string(limit_s) + " s";
  }
  char t[32];
  std::snprintf(t, sizeof t, "%.2fs", secs);
  std::cout << (o.pass ? "PASS " : "FAIL ") << name << " [" << t << "]";
  if (!o.detail.empty()) std::cout << ": " << o.detail;
  std::cout << std::endl;
  if (!o.pass) ++failures;
}

std::string fmt(double v) {
  char b[32];
  std::snprintf(b, sizeof b, "%.4f", v);
  return b;
}

ProviderRegistry memorizer(const Words& source, double fidelity, std::optional<std::size_t> divergence = {},
                           std::uint64_t seed = 17) {
  MemorizerModel m;
  m.source_words = source;
  m.fidelity = fidelity;
  m.divergence_point = divergence;
  m.rng_seed = seed;
  return {{"mem", std::make_shared<MemorizerProvider>("mem", m)}};
}

ExperimentConfig experiment(const Document& doc, const std::filesystem::path& out) {
  ExperimentConfig c;
  c.corpus = {doc};
  c.models = {{"mem", "memorizer"}};
  c.output_dir = out;
  return c;
}

std::vector<ProbeRecord> probe_records(const std::filesystem::path& out) {
  return read_store(out / kResultStoreName).probes;
}

AggregateRow overall(const std::vector<ProbeRecord>& rs) {
  return aggregate(rs, GroupBy::model, RougeConfig{}).front();
}

Words symbols(const oracle::Seq& s) {
  static const char* kSym[] = {"a", "b", "c", "d"};
  Words w;
  for (int c : s) w.emplace_back(kSym[c]);
  return w;
}

Outcome lcs_oracle() {
  Outcome o;
  const oracle::SmallUniverse u;
  std::size_t pairs = 0;
  for (std::size_t a = 0; a < u.size() && o.pass; ++a) {
    const auto& x = u.at(a);
    for (std::size_t b = 0; b < u.size(); ++b) {
      ++pairs;
      if (lcs_length(x, u.at(b)) != u.lcs(a, b)) {
        o.require(false, "mismatch on exhaustive pair " + std::to_string(a) + "," + std::to_string(b));
        break;
      }
    }
  }
  std::mt19937_64 rng(20240601);
  const RougeConfig rouge;
  for (int i = 0; i < 5000 && o.pass; ++i) {
    oracle::Seq x(7 + rng() % 6), y(1 + rng() % 12);
    for (auto& c : x) c = static_cast<int>(rng() % 4);
    for (auto& c : y) c = static_cast<int>(rng() % 4);
    const auto l = oracle::lcs_by_subsets(x, y);
    o.require(lcs_length(x, y) == l, "mismatch on random pair " + std::to_string(i));
    // LCS recall, precision and F1 with x as reference and y as candidate.
    const double r = static_cast<double>(l) / static_cast<double>(x.size());
    const double p = static_cast<double>(l) / static_cast<double>(y.size());
    const double f = (r + p) == 0 ? 0.0 : 2 * r * p / (r + p);
    const auto s = rouge_l_tokens(symbols(x), symbols(y), rouge);
    o.require(std::abs(s.recall - r) <= 1e-12 && std::abs(s.precision - p) <= 1e-12 &&
                  std::abs(s.f_measure - f) <= 1e-12,
              "score mismatch on random pair " + std::to_string(i));
  }
  if (o.pass) o.detail = std::to_string(pairs) + " exhaustive pairs + 5000 random pairs";
  return o;
}

Outcome perfect_memorizer() {
  Outcome o;
  const auto doc = testing::alice();
  testing::TempDir a("accept"), b("accept");
  const auto s = run_probe(experiment(doc, a.path()), memorizer(doc.words, 1.0));
  const auto rs = probe_records(a.path());
  o.require(s.tasks == 20 && rs.size() == 20, "expected 20 samples, got " + std::to_string(rs.size()));
  for (const auto& r : rs) o.require(r.score.recall == 1.0, "sample " + std::to_string(r.sample_index) + " < 1.0");
  run_probe(experiment(doc, b.path()), memorizer(doc.words, 0.0));
  const double mean0 = overall(probe_records(b.path())).mean;
  o.require(mean0 < 0.2, "fidelity 0 mean recall " + fmt(mean0));
  if (o.pass) o.detail = "20/20 at recall 1.0; fidelity 0 mean " + fmt(mean0);
  return o;
}

Outcome fidelity_monotonicity() {
  Outcome o;
  const auto doc = testing::alice();
  std::string detail;
  double prev_mean = -1;
  std::size_t prev_high = 0;
  for (double f : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    testing::TempDir tmp("accept");
    run_probe(experiment(doc, tmp.path()), memorizer(doc.words, f));
    const auto row = overall(probe_records(tmp.path()));
    o.require(row.mean > prev_mean, "mean not increasing at fidelity " + fmt(f));
    o.require(row.high_count >= prev_high, "high_count decreased at fidelity " + fmt(f));
    prev_mean = row.mean;
    prev_high = row.high_count;
    detail += (detail.empty() ? "" : ", ") + fmt(f) + "->" + fmt(row.mean) + "/" + std::to_string(row.high_count);
  }
  o.detail = "fidelity->mean/high: " + detail;
  return o;
}

Outcome max_tokens_trend() {
  Outcome o;
  const auto doc = testing::alice();
  testing::TempDir tmp("accept");
  auto cfg = experiment(doc, tmp.path());
  cfg.max_tokens_sweep = {50, 100, 200, 300};
  sweep_max_tokens(cfg, memorizer(doc.words, 1.0, 60));
  const auto rows = aggregate(probe_records(tmp.path()), GroupBy::max_tokens, RougeConfig{});
  o.require(rows.size() == 4, "expected 4 sweep groups");
  std::string detail;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (i > 0) {
      o.require(rows[i].mean < rows[i - 1].mean, "mean not strictly decreasing at " + rows[i].group);
      o.require(rows[i].high_count <= rows[i - 1].high_count, "high_count increased at " + rows[i].group);
    }
    detail += (detail.empty() ? "" : ", ") + rows[i].group + "->" + fmt(rows[i].mean) + "/" +
              std::to_string(rows[i].high_count);
  }
  o.detail = "max_tokens->mean/high: " + detail;
  return o;
}

Outcome iterative_decay() {
  Outcome o;
  const auto doc = testing::alice();
  IterationConfig cfg;
  cfg.iterations = 5;
  cfg.params.model = "memorizer";
  cfg.params.max_tokens = 50;
  auto perfect = memorizer(doc.words, 1.0).at("mem");
  const auto p = run_iterative(doc, cfg, *perfect);
  o.require(p.traces.size() == 5, "perfect trace has " + std::to_string(p.traces.size()) + " iterations");
  for (const auto& t : p.traces) o.require(t.score.recall == 1.0, "perfect recall < 1 at " + std::to_string(t.iteration));

  cfg.iterations = 3;
  auto diverging = memorizer(doc.words, 1.0, 50).at("mem");
  const auto d = run_iterative(doc, cfg, *diverging);
  o.require(d.traces.size() == 3, "diverging trace too short");
  if (d.traces.size() == 3) {
    o.require(d.traces[0].score.recall >= 0.9, "iteration 1 recall " + fmt(d.traces[0].score.recall));
    o.require(d.traces[2].score.recall < 0.3, "iteration 3 recall " + fmt(d.traces[2].score.recall));
    if (o.pass) {
      o.detail = "perfect 5x1.0; diverging " + fmt(d.traces[0].score.recall) + ", " +
                 fmt(d.traces[1].score.recall) + ", " + fmt(d.traces[2].score.recall);
    }
  }
  return o;
}

Outcome family_rate_arithmetic() {
  Outcome o;
  struct Pair {
    std::size_t high, count;
    const char* rate;
  };
  const Pair pairs[] = {{73, 1908, "0.038"}, {129, 1272, "0.101"}, {50, 2544, "0.020"}, {63, 1272, "0.050"},
                        {192, 1908, "0.101"}};
  std::vector<ProbeRecord> rs;
  std::map<std::string, std::string, std::less<>> families;
  for (std::size_t k = 0; k < 5; ++k) {
    const std::string model = "family" + std::to_string(k);
    families[model] = model;
    for (std::size_t i = 0; i < pairs[k].count; ++i) {
      ProbeRecord r;
      r.model_id = model;
      r.score.recall = i < pairs[k].high ? 0.9 : 0.3;
      rs.push_back(r);
    }
  }
  const auto rows = rate_table(rs, families, RougeConfig{});
  const auto csv = parse_csv(render_csv(rows));  // rates as rendered, 3 d.p.
  std::string got;
  for (std::size_t k = 0; k < 5; ++k) {
    const auto rendered = format_3dp(csv[k].high_rate);
    o.require(rows[k].high_count == pairs[k].high && rows[k].count == pairs[k].count, "counts differ");
    o.require(rendered == pairs[k].rate, std::to_string(pairs[k].high) + "/" + std::to_string(pairs[k].count) +
                                             " rendered " + rendered + ", expected " + pairs[k].rate);
    got += (got.empty() ? "" : ", ") + rendered;
  }
  o.detail = got;
  return o;
}

Outcome wire_fixtures() {
  Outcome o;
  GenerationParams p;
  p.model = "gpt-4o-mini";
  p.max_tokens = 50;
  p.system_message = "You are a helpful assistant.";
  const auto body =
      encode_request(p, p.render_prompt("It was the best of times, it was the \"worst\" of times,\nit was"));
  o.require(body == testing::slurp(testing::fixture("wire/request_full.json")), "request bytes differ");
  const auto stop = decode_response(testing::slurp(testing::fixture("wire/response_stop.json")));
  o.require(stop.output_text == "hello" && stop.finish_reason == FinishReason::stop, "stop fixture");
  const auto length = decode_response(testing::slurp(testing::fixture("wire/response_length.json")));
  o.require(length.finish_reason == FinishReason::length, "length fixture");
  bool threw = false;
  try {
    decode_response(testing::slurp(testing::fixture("wire/response_empty_choices.json")));
  } catch (const ProviderError&) {
    threw = true;
  }
  o.require(threw, "zero choices accepted");
  return o;
}

Outcome resume() {
  Outcome o;
  const auto doc = testing::alice();
  testing::TempDir tmp("accept");
  auto cfg = experiment(doc, tmp.path());
  cfg.models = {{"count", "m"}};
  cfg.parallelism = 1;
  std::atomic<bool> cancel{false};
  auto first = std::make_shared<testing::CountingProvider>("count");
  first->cancel_after = 10;
  first->cancel = &cancel;
  RunOptions opts;
  opts.cancel = &cancel;
  const auto s1 = run_probe(cfg, {{"count", first}}, opts);
  o.require(s1.tasks == 20, "expected 20 tasks");
  o.require(first->calls == 10 && s1.succeeded == 10, "first run completed " + std::to_string(s1.succeeded));
  auto second = std::make_shared<testing::CountingProvider>("count");
  run_probe(cfg, {{"count", second}});
  o.require(second->calls == 10, "rerun issued " + std::to_string(second->calls.load()) + " calls");
  if (o.pass) o.detail = "10 calls, then 10 on rerun";
  return o;
}

std::string determinism_config() {
  const auto dir = testing::fixture("corpus").string();
  return R"({"schema_version": 1,
  "corpus": [
    {"path": ")" + dir + R"(/alice_ch1.txt", "title": "Alice", "text_type": "novel"},
    {"path": ")" + dir + R"(/gettysburg.txt", "title": "Gettysburg", "text_type": "news"},
    {"path": ")" + dir + R"(/twinkle.txt", "title": "Twinkle", "text_type": "lyrics"}],
  "providers": [
    {"name": "a", "kind": "memorizer", "memorizer": {"fidelity": 0.8}},
    {"name": "b", "kind": "memorizer", "memorizer": {"fidelity": 1.0, "divergence_point": 25}}],
  "models": [{"provider": "a", "model": "noisy", "family": "x"}, {"provider": "b", "model": "drift", "family": "y"}],
  "sweep": {"max_tokens": [50, 100, 200, 300]},
  "parallelism": 4,
  "rng_seed": 99})";
}

Outcome determinism() {
  Outcome o;
  testing::TempDir a("accept"), b("accept");
  for (const auto* dir : {&a, &b}) {
    testing::spit(dir->path() / "config.json", determinism_config());
    cli::GlobalOptions g;
    g.config = dir->path() / "config.json";
    std::ostringstream sink;
    o.require(cli::cmd_probe(g, sink, sink) == cli::kOk, "probe failed");
    o.require(cli::cmd_sweep(g, sink, sink) == cli::kOk, "sweep failed");
    for (const auto& doc : cli::open_workspace(g).docs) {
      o.require(cli::cmd_iterate(g, doc.id, sink, sink) == cli::kOk, "iterate failed");
    }
    o.require(cli::cmd_report(g, {}, sink, sink) == cli::kOk, "report failed");
  }
  std::size_t files = 0;
  for (const auto& e : std::filesystem::directory_iterator(a.path() / "out")) {
    const auto name = e.path().filename();
    const auto ext = name.extension();
    if (ext != ".jsonl" && ext != ".csv" && ext != ".svg") continue;
    ++files;
    o.require(testing::slurp(e.path()) == testing::slurp(b.path() / "out" / name), name.string() + " differs");
  }
  o.require(files >= 13, "only " + std::to_string(files) + " artifacts compared");
  if (o.pass) o.detail = std::to_string(files) + " stores/tables/charts byte-identical";
  return o;
}

Outcome table_shapes() {
  // Published per-model values come from specific hosted models at one point
  // in time and are not reproduced; what is checked is that the tables have
  // the published shape: columns, grouping keys and the inclusive threshold.
  Outcome o;
  const std::string header = "group,count,mean,min,max,high_count,high_rate";
  const auto golden = testing::slurp(testing::fixture("golden/by_model.csv"));
  o.require(golden.rfind(header + "\n", 0) == 0, "golden header");

  std::vector<ProbeRecord> rs;
  const TextType types[] = {TextType::novel, TextType::news, TextType::lyrics};
  int i = 0;
  for (const char* model : {"m-a", "m-b"}) {
    for (int mt : {50, 100, 200, 300}) {
      for (double recall : {0.85, 0.84999, 1.0, 0.1}) {
        ProbeRecord r;
        r.model_id = model;
        r.max_tokens = mt;
        r.text_type = types[i++ % 3];
        r.score.recall = recall;
        rs.push_back(r);
      }
    }
  }
  const RougeConfig rouge;
  const auto by_model = aggregate(rs, GroupBy::model, rouge);
  const auto by_type = aggregate(rs, GroupBy::text_type, rouge);
  const auto by_mt = aggregate(rs, GroupBy::max_tokens, rouge);
  const auto by_family = rate_table(rs, {{"m-a", "F"}, {"m-b", "F"}}, rouge);
  o.require(render_csv(by_model).rfind(header + "\n", 0) == 0, "by_model header");
  o.require(by_model.size() == 2 && by_model[0].count == 16 && by_model[0].high_count == 8, "per-model grouping");
  o.require(by_type.size() == 3, "per-text-type grouping");
  o.require(by_mt.size() == 4 && by_mt[0].group == "50" && by_mt[3].group == "300", "per-max_tokens grouping");
  o.require(by_family.size() == 1 && by_family[0].high_count == 16 && format_3dp(by_family[0].high_rate) == "0.500",
            "family rate table");
  if (o.pass) o.detail = "columns, grouping and >= threshold verified; published values not reproducible";
  return o;
}

}  // namespace

int main() {
  criterion("LCS oracle equivalence", 30, lcs_oracle);
  criterion("Perfect-memorizer end-to-end", 5, perfect_memorizer);
  criterion("Fidelity monotonicity", 10, fidelity_monotonicity);
  criterion("Max-tokens trend", 0, max_tokens_trend);
  criterion("Iterative-prompting decay", 0, iterative_decay);
  criterion("Family rate arithmetic", 0, family_rate_arithmetic);
  criterion("Wire-format fixtures", 0, wire_fixtures);
  criterion("Resume idempotence", 0, resume);
  criterion("Determinism", 0, determinism);
  criterion("Table shapes (values not reproducible)", 0, table_shapes);
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures;
}
