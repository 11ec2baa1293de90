#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "memprobe/scoring.hpp"
#include "memprobe/store.hpp"

namespace memprobe {

// Summary of Rouge-L recall over one group of probe records.
struct AggregateRow {
  std::string group;
  std::size_t count = 0;
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
  std::size_t high_count = 0;  // recall >= threshold
  double high_rate = 0.0;      // high_count / count

  bool operator==(const AggregateRow&) const = default;
};

enum class GroupBy { model, text_type, max_tokens, model_max_tokens, doc };

std::string_view to_string(GroupBy g);

// One row per non-empty group, sorted by key (numerically for max_tokens).
// Throws Error on an empty selection.
std::vector<AggregateRow> aggregate(std::span<const ProbeRecord> records, GroupBy group_by, const RougeConfig& rouge);

// Rows per model family (model_id -> family). Throws Error when a record's
// model has no family.
std::vector<AggregateRow> rate_table(std::span<const ProbeRecord> records,
                                     const std::map<std::string, std::string, std::less<>>& families,
                                     const RougeConfig& rouge);

// Round half away from zero to 3 decimals, printed with exactly 3 decimals.
std::string format_3dp(double v);

enum class CsvPrecision { display, full };

// Header plus one line per row. `display` renders reals at 3 decimals;
// `full` renders them round-trip exact.
std::string render_csv(std::span<const AggregateRow> rows, CsvPrecision precision = CsvPrecision::display);
std::vector<AggregateRow> parse_csv(std::string_view text);
void emit_csv(std::span<const AggregateRow> rows, const std::filesystem::path& path,
              CsvPrecision precision = CsvPrecision::display);

// RFC 4180 field quoting.
std::string csv_field(std::string_view s);

// ---------------------------------------------------------------------------
// Charts

enum class ChartKind { bar, grouped_bar, line, heatmap };

struct Series {
  std::string label;
  std::vector<double> values;  // one per category (heatmap: one per row cell)
  bool secondary_axis = false; // line charts only
};

struct ChartSpec {
  ChartKind kind = ChartKind::bar;
  std::string title;
  std::string x_label;
  std::string y_label;
  std::string y2_label;
  std::vector<std::string> categories;  // x-axis labels (heatmap columns)
  std::vector<Series> series;           // heatmap: one series per row
};

// Static SVG. Bars and heatmap cells are <rect>, line series are <path>;
// axes, ticks and legend markers use <line>/<circle>/<text> only. Throws
// Error on empty series or non-finite values.
std::string render_svg(const ChartSpec& chart);
void emit_chart(const ChartSpec& chart, const std::filesystem::path& path);

}  // namespace memprobe
