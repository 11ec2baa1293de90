#include "memprobe/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

namespace memprobe {

std::string_view to_string(GroupBy g) {
  switch (g) {
    case GroupBy::model: return "model";
    case GroupBy::text_type: return "text_type";
    case GroupBy::max_tokens: return "max_tokens";
    case GroupBy::model_max_tokens: return "model_max_tokens";
    case GroupBy::doc: return "doc";
  }
  return "model";
}

namespace {

struct GroupKey {
  std::string primary;
  long number = 0;
  std::string label;

  bool operator<(const GroupKey& o) const {
    if (primary != o.primary) return primary < o.primary;
    return number < o.number;
  }
};

template <typename KeyFn>
std::vector<AggregateRow> aggregate_with(std::span<const ProbeRecord> records, const RougeConfig& rouge,
                                         KeyFn&& key_of) {
  if (records.empty()) throw Error("aggregate: empty selection");
  struct Acc {
    std::string label;
    std::size_t count = 0;
    double sum = 0.0;
    double min = std::numeric_limits<double>::infinity();
    double max = -std::numeric_limits<double>::infinity();
    std::size_t high = 0;
  };
  std::map<GroupKey, Acc> groups;
  for (const auto& r : records) {
    GroupKey k = key_of(r);
    auto& a = groups[k];
    a.label = k.label;
    const double recall = r.score.recall;
    ++a.count;
    a.sum += recall;
    a.min = std::min(a.min, recall);
    a.max = std::max(a.max, recall);
    if (recall >= rouge.high_similarity_threshold) ++a.high;
  }
  std::vector<AggregateRow> rows;
  rows.reserve(groups.size());
  for (const auto& [key, a] : groups) {
    AggregateRow row;
    row.group = a.label;
    row.count = a.count;
    row.mean = a.sum / static_cast<double>(a.count);
    // Keep mean inside [min, max] despite summation rounding.
    row.mean = std::clamp(row.mean, a.min, a.max);
    row.min = a.min;
    row.max = a.max;
    row.high_count = a.high;
    row.high_rate = static_cast<double>(a.high) / static_cast<double>(a.count);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

std::vector<AggregateRow> aggregate(std::span<const ProbeRecord> records, GroupBy group_by, const RougeConfig& rouge) {
  return aggregate_with(records, rouge, [group_by](const ProbeRecord& r) -> GroupKey {
    switch (group_by) {
      case GroupBy::model: return {r.model_id, 0, r.model_id};
      case GroupBy::text_type: {
        std::string t(to_string(r.text_type));
        return {t, 0, t};
      }
      case GroupBy::max_tokens: return {{}, r.max_tokens, std::to_string(r.max_tokens)};
      case GroupBy::model_max_tokens:
        return {r.model_id, r.max_tokens, r.model_id + "|" + std::to_string(r.max_tokens)};
      case GroupBy::doc: return {r.doc_id, 0, r.doc_id};
    }
    return {r.model_id, 0, r.model_id};
  });
}

std::vector<AggregateRow> rate_table(std::span<const ProbeRecord> records,
                                     const std::map<std::string, std::string, std::less<>>& families,
                                     const RougeConfig& rouge) {
  return aggregate_with(records, rouge, [&](const ProbeRecord& r) -> GroupKey {
    const auto it = families.find(r.model_id);
    if (it == families.end()) throw Error("rate_table: model '" + r.model_id + "' has no family mapping");
    return {it->second, 0, it->second};
  });
}

std::string format_3dp(double v) {
  // Half-way cases are decided with a small tolerance so that decimal inputs
  // such as 0.0385 round up even when their binary value sits just below.
  const double scaled = std::abs(v) * 1000.0;
  double units = std::floor(scaled);
  if (scaled - units >= 0.5 - 1e-9) units += 1.0;
  const double r = units == 0.0 ? 0.0 : std::copysign(units / 1000.0, v);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", r);
  return buf;
}

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out.push_back('"');
  return out;
}

namespace {

std::string format_real(double v, CsvPrecision p) {
  if (p == CsvPrecision::display) return format_3dp(v);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

constexpr std::string_view kCsvHeader = "group,count,mean,min,max,high_count,high_rate";

std::vector<std::vector<std::string>> split_csv(std::string_view text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"': quoted = true, any = true; break;
      case ',': row.push_back(std::move(field)), field.clear(), any = true; break;
      case '\r': break;
      case '\n':
        if (any || !field.empty()) {
          row.push_back(std::move(field));
          rows.push_back(std::move(row));
        }
        row.clear(), field.clear(), any = false;
        break;
      default: field.push_back(c), any = true;
    }
  }
  if (quoted) throw Error("csv: unterminated quoted field");
  if (any || !field.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

template <typename T>
T parse_number(const std::string& s) {
  T v{};
  if constexpr (std::is_floating_point_v<T>) {
    char* end = nullptr;
    v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0') throw Error("csv: bad number '" + s + "'");
  } else {
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size()) throw Error("csv: bad integer '" + s + "'");
  }
  return v;
}

}  // namespace

std::string render_csv(std::span<const AggregateRow> rows, CsvPrecision precision) {
  std::string out(kCsvHeader);
  out.push_back('\n');
  for (const auto& r : rows) {
    out += csv_field(r.group);
    out += ',' + std::to_string(r.count);
    out += ',' + format_real(r.mean, precision);
    out += ',' + format_real(r.min, precision);
    out += ',' + format_real(r.max, precision);
    out += ',' + std::to_string(r.high_count);
    out += ',' + format_real(r.high_rate, precision);
    out.push_back('\n');
  }
  return out;
}

std::vector<AggregateRow> parse_csv(std::string_view text) {
  const auto table = split_csv(text);
  if (table.empty()) throw Error("csv: missing header");
  std::string header;
  for (std::size_t i = 0; i < table[0].size(); ++i) header += (i ? "," : "") + table[0][i];
  if (header != kCsvHeader) throw Error("csv: unexpected header '" + header + "'");
  std::vector<AggregateRow> rows;
  for (std::size_t i = 1; i < table.size(); ++i) {
    const auto& f = table[i];
    if (f.size() != 7) throw Error("csv: line " + std::to_string(i + 1) + " has " + std::to_string(f.size()) + " fields");
    AggregateRow r;
    r.group = f[0];
    r.count = parse_number<std::size_t>(f[1]);
    r.mean = parse_number<double>(f[2]);
    r.min = parse_number<double>(f[3]);
    r.max = parse_number<double>(f[4]);
    r.high_count = parse_number<std::size_t>(f[5]);
    r.high_rate = parse_number<double>(f[6]);
    rows.push_back(std::move(r));
  }
  return rows;
}

void emit_csv(std::span<const AggregateRow> rows, const std::filesystem::path& path, CsvPrecision precision) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << render_csv(rows, precision);
  if (!out) throw Error("write failed: " + path.string());
}

}  // namespace memprobe
