#pragma once

// Minimal UTF-8 helpers shared by tokenization code. Internal header.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>

namespace memprobe::utf8 {

struct Decoded {
  char32_t cp;
  std::size_t len;
};

// Decodes one code point at `pos`. Returns nullopt for malformed, overlong,
// surrogate, or truncated sequences.
inline std::optional<Decoded> decode(std::string_view s, std::size_t pos) {
  const auto b0 = static_cast<unsigned char>(s[pos]);
  if (b0 < 0x80) return Decoded{b0, 1};
  std::size_t len = 0;
  char32_t cp = 0;
  char32_t min = 0;
  if ((b0 & 0xE0) == 0xC0) {
    len = 2, cp = b0 & 0x1F, min = 0x80;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3, cp = b0 & 0x0F, min = 0x800;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4, cp = b0 & 0x07, min = 0x10000;
  } else {
    return std::nullopt;
  }
  if (pos + len > s.size()) return std::nullopt;
  for (std::size_t i = 1; i < len; ++i) {
    const auto b = static_cast<unsigned char>(s[pos + i]);
    if ((b & 0xC0) != 0x80) return std::nullopt;
    cp = (cp << 6) | (b & 0x3F);
  }
  if (cp < min || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) return std::nullopt;
  return Decoded{cp, len};
}

// Decodes leniently: malformed bytes come back as single-byte U+FFFD.
inline Decoded decode_lenient(std::string_view s, std::size_t pos) {
  if (auto d = decode(s, pos)) return *d;
  return Decoded{0xFFFD, 1};
}

inline bool valid(std::string_view s) {
  for (std::size_t i = 0; i < s.size();) {
    auto d = decode(s, i);
    if (!d) return false;
    i += d->len;
  }
  return true;
}

// Unicode White_Space property.
constexpr bool is_space(char32_t c) {
  return (c >= 0x09 && c <= 0x0D) || c == 0x20 || c == 0x85 || c == 0xA0 || c == 0x1680 ||
         (c >= 0x2000 && c <= 0x200A) || c == 0x2028 || c == 0x2029 || c == 0x202F ||
         c == 0x205F || c == 0x3000;
}

// Treats ASCII letters/digits and non-ASCII letters as alphanumeric. Latin-1
// symbols, General Punctuation, CJK punctuation and a few symbol blocks count
// as punctuation.
constexpr bool is_alnum(char32_t c) {
  if (c < 0x80) {
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
  }
  if (c >= 0x80 && c <= 0xBF) return false;
  if (c == 0xD7 || c == 0xF7) return false;
  if (c >= 0x2000 && c <= 0x2BFF) return false;
  if (c >= 0x3000 && c <= 0x303F) return false;
  if (c >= 0xFE30 && c <= 0xFE6F) return false;
  if (c >= 0xFF00 && c <= 0xFF0F) return false;
  if (c == 0xFFFD) return false;
  return true;
}

}  // namespace memprobe::utf8
