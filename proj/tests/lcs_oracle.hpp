#pragma once

// Brute-force LCS by subsequence enumeration, independent of the dynamic
// program under test.

#include <algorithm>
#include <bitset>
#include <cstdint>
#include <vector>

namespace oracle {

using Seq = std::vector<int>;

inline bool is_subsequence(const Seq& needle, const Seq& hay) {
  std::size_t j = 0;
  for (int h : hay) {
    if (j < needle.size() && needle[j] == h) ++j;
  }
  return j == needle.size();
}

// Tries every subset of x's positions; exponential in x.size().
inline std::size_t lcs_by_subsets(const Seq& x, const Seq& y) {
  std::size_t best = 0;
  const std::uint32_t n = static_cast<std::uint32_t>(x.size());
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    const auto bits = static_cast<std::size_t>(__builtin_popcount(mask));
    if (bits <= best) continue;
    Seq sub;
    for (std::uint32_t i = 0; i < n; ++i) {
      if (mask & (1u << i)) sub.push_back(x[i]);
    }
    if (is_subsequence(sub, y)) best = bits;
  }
  return best;
}

// All sequences of length <= kMaxLen over a 4-symbol alphabet, each with its
// full set of subsequences, for exhaustive pair checks.
class SmallUniverse {
 public:
  static constexpr int kMaxLen = 6;
  static constexpr std::size_t kCount = 5461;  // sum of 4^k for k = 0..6

  SmallUniverse() {
    for (int len = 0; len <= kMaxLen; ++len) {
      const int total = 1 << (2 * len);
      for (int v = 0; v < total; ++v) {
        Seq s(static_cast<std::size_t>(len));
        for (int i = 0; i < len; ++i) s[static_cast<std::size_t>(i)] = (v >> (2 * (len - 1 - i))) & 3;
        seqs_.push_back(s);
      }
    }
    subs_.resize(seqs_.size());
    sets_.resize(seqs_.size());
    for (std::size_t k = 0; k < seqs_.size(); ++k) {
      const auto& s = seqs_[k];
      const std::uint32_t n = static_cast<std::uint32_t>(s.size());
      for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
        Seq sub;
        for (std::uint32_t i = 0; i < n; ++i) {
          if (mask & (1u << i)) sub.push_back(s[i]);
        }
        const auto id = index_of(sub);
        if (!sets_[k].test(id)) {
          sets_[k].set(id);
          subs_[k].push_back({static_cast<int>(sub.size()), static_cast<std::uint16_t>(id)});
        }
      }
      std::sort(subs_[k].begin(), subs_[k].end(), [](const Entry& a, const Entry& b) { return a.len > b.len; });
    }
  }

  std::size_t size() const { return seqs_.size(); }
  const Seq& at(std::size_t k) const { return seqs_[k]; }

  // Longest subsequence of seq a that is also a subsequence of seq b.
  std::size_t lcs(std::size_t a, std::size_t b) const {
    for (const auto& e : subs_[a]) {
      if (sets_[b].test(e.id)) return static_cast<std::size_t>(e.len);
    }
    return 0;
  }

  static std::size_t index_of(const Seq& s) {
    std::size_t offset = 0;
    for (std::size_t l = 0; l < s.size(); ++l) offset += std::size_t{1} << (2 * l);
    std::size_t v = 0;
    for (int c : s) v = v * 4 + static_cast<std::size_t>(c);
    return offset + v;
  }

 private:
  struct Entry {
    int len;
    std::uint16_t id;
  };
  std::vector<Seq> seqs_;
  std::vector<std::vector<Entry>> subs_;
  std::vector<std::bitset<kCount>> sets_;
};

}  // namespace oracle
