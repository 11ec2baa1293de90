#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace memprobe {

using Words = std::vector<std::string>;

// Base for every error this library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration value; raised before any work starts.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Lowercase hex SHA-256 of the bytes in `data`.
std::string sha256_hex(std::string_view data);

// First 64 bits of SHA-256, used for stable ids and RNG seeding.
std::uint64_t digest64(std::string_view data);

// Short stable id: the first `hex_chars` characters of sha256_hex.
std::string short_hash(std::string_view data, std::size_t hex_chars = 16);

}  // namespace memprobe
