#include "memprobe/corpus.hpp"

#include <cctype>
#include <fstream>
#include <iterator>

#include "utf8.hpp"

namespace memprobe {

std::string_view to_string(TextType t) {
  switch (t) {
    case TextType::novel: return "novel";
    case TextType::news: return "news";
    case TextType::lyrics: return "lyrics";
    case TextType::other: return "other";
  }
  return "other";
}

TextType parse_text_type(std::string_view s) {
  if (s == "novel") return TextType::novel;
  if (s == "news") return TextType::news;
  if (s == "lyrics") return TextType::lyrics;
  if (s == "other") return TextType::other;
  throw ConfigError("unknown text_type '" + std::string(s) + "' (expected novel, news, lyrics or other)");
}

void SegmentationConfig::validate() const {
  if (sample_len == 0) throw ConfigError("segmentation.sample_len must be positive");
  if (prefix_len == 0 || prefix_len >= sample_len) {
    throw ConfigError("segmentation.prefix_len must satisfy 0 < prefix_len < sample_len");
  }
  if (stride == 0) throw ConfigError("segmentation.stride must be at least 1");
  if (max_samples && *max_samples == 0) throw ConfigError("segmentation.max_samples must be positive");
}

std::string Sample::prefix_text() const { return join_words(prefix); }
std::string Sample::reference_text() const { return join_words(reference); }

Words normalize(std::string_view raw) {
  Words words;
  std::size_t start = 0;
  bool in_word = false;
  for (std::size_t i = 0; i < raw.size();) {
    const auto d = utf8::decode_lenient(raw, i);
    if (utf8::is_space(d.cp)) {
      if (in_word) words.emplace_back(raw.substr(start, i - start));
      in_word = false;
    } else if (!in_word) {
      start = i;
      in_word = true;
    }
    i += d.len;
  }
  if (in_word) words.emplace_back(raw.substr(start));
  return words;
}

std::string join_words(std::span<const std::string> words) {
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) out.push_back(' ');
    out += words[i];
  }
  return out;
}

namespace {

std::string slugify(std::string_view title) {
  std::string slug;
  bool dash = false;
  for (char c : title) {
    const auto u = static_cast<unsigned char>(c);
    if (std::isalnum(u) && u < 0x80) {
      slug.push_back(static_cast<char>(std::tolower(u)));
      dash = false;
    } else if (!slug.empty() && !dash) {
      slug.push_back('-');
      dash = true;
    }
  }
  while (!slug.empty() && slug.back() == '-') slug.pop_back();
  if (slug.size() > 40) slug.resize(40);
  return slug.empty() ? "doc" : slug;
}

}  // namespace

Document make_document(std::string raw, TextType text_type, std::string title) {
  Document doc;
  doc.words = normalize(raw);
  if (doc.words.empty()) throw Error("document '" + title + "' is empty after normalization");
  doc.id = slugify(title) + "-" + short_hash(title + '\0' + raw, 8);
  doc.title = std::move(title);
  doc.text_type = text_type;
  doc.raw = std::move(raw);
  return doc;
}

Document load_document(const std::filesystem::path& path, TextType text_type, std::string title) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read corpus file: " + path.string());
  std::string raw{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  if (in.bad()) throw Error("error reading corpus file: " + path.string());
  if (!utf8::valid(raw)) throw Error("corpus file is not valid UTF-8: " + path.string());
  try {
    return make_document(std::move(raw), text_type, std::move(title));
  } catch (const Error& e) {
    throw Error(std::string(e.what()) + " (" + path.string() + ")");
  }
}

std::vector<Sample> segment(const Document& doc, const SegmentationConfig& cfg) {
  cfg.validate();
  const auto n = doc.words.size();
  if (n < cfg.sample_len) {
    throw Error("document '" + doc.id + "' has " + std::to_string(n) + " words, fewer than sample_len " +
                std::to_string(cfg.sample_len));
  }
  std::vector<Sample> samples;
  for (std::size_t start = 0; start + cfg.sample_len <= n; start += cfg.stride) {
    if (cfg.max_samples && samples.size() >= *cfg.max_samples) break;
    Sample s;
    s.doc_id = doc.id;
    s.index = samples.size();
    s.start_word = start;
    const auto first = doc.words.begin() + static_cast<std::ptrdiff_t>(start);
    const auto split = first + static_cast<std::ptrdiff_t>(cfg.prefix_len);
    const auto last = first + static_cast<std::ptrdiff_t>(cfg.sample_len);
    s.prefix.assign(first, split);
    s.reference.assign(split, last);
    samples.push_back(std::move(s));
  }
  return samples;
}

}  // namespace memprobe
