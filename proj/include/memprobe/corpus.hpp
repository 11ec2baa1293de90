#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "memprobe/common.hpp"

namespace memprobe {

enum class TextType { novel, news, lyrics, other };

std::string_view to_string(TextType t);
// Throws ConfigError on anything other than novel/news/lyrics/other.
TextType parse_text_type(std::string_view s);

// A source text and its word tokens. `words` is always normalize(raw).
struct Document {
  std::string id;
  std::string title;
  TextType text_type = TextType::other;
  std::string raw;
  Words words;
};

struct SegmentationConfig {
  std::size_t sample_len = 50;
  std::size_t prefix_len = 20;
  std::size_t stride = 50;
  std::optional<std::size_t> max_samples = 20;

  void validate() const;
  bool operator==(const SegmentationConfig&) const = default;
};

// A fixed-length window of a document split into the prefix shown to the
// model and the held-out reference continuation.
struct Sample {
  std::string doc_id;
  std::size_t index = 0;
  std::size_t start_word = 0;
  Words prefix;
  Words reference;

  std::string prefix_text() const;
  std::string reference_text() const;
};

// Splits on runs of Unicode whitespace. Tokens keep their casing and
// punctuation. Never produces empty tokens.
Words normalize(std::string_view raw);

// Joins tokens with single spaces.
std::string join_words(std::span<const std::string> words);

// Builds a Document from in-memory text. The id is a slug of the title plus a
// content hash, so it is stable across runs and machines.
Document make_document(std::string raw, TextType text_type, std::string title);

// Reads a UTF-8 text file. Throws Error when the file is unreadable, is not
// valid UTF-8, or contains no words.
Document load_document(const std::filesystem::path& path, TextType text_type, std::string title);

// Non-overlapping (by default) windows from the start of the document:
// offsets 0, stride, 2*stride, ... while the window fits, capped at
// max_samples.
std::vector<Sample> segment(const Document& doc, const SegmentationConfig& cfg);

}  // namespace memprobe
