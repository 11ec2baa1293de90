#include <doctest.h>

#include <cmath>
#include <random>

#include "lcs_oracle.hpp"
#include "memprobe/scoring.hpp"

using namespace memprobe;

namespace {

Words to_words(const oracle::Seq& s) {
  static const char* kSym[] = {"a", "b", "c", "d"};
  Words w;
  for (int c : s) w.emplace_back(kSym[c]);
  return w;
}

oracle::Seq random_seq(std::mt19937_64& rng, std::size_t len) {
  oracle::Seq s(len);
  for (auto& c : s) c = static_cast<int>(rng() % 4);
  return s;
}

}  // namespace

TEST_CASE("score_tokenize") {
  const RougeConfig def;
  CHECK(score_tokenize("The cat.", def) == Words{"the", "cat"});
  CHECK(score_tokenize("Hello, 'world'!", def) == Words{"hello", "world"});
  RougeConfig raw;
  raw.case_fold = false;
  raw.strip_punctuation = false;
  CHECK(score_tokenize("a b", raw) == Words{"a", "b"});
  CHECK(score_tokenize("The cat.", raw) == Words{"The", "cat."});
  CHECK(score_tokenize("-- ... !", def).empty());
  CHECK(score_tokenize("don't \"stop—now\"", def) == Words{"don't", "stop—now"});
  CHECK(score_tokenize("“Quoted”", def) == Words{"quoted"});
  CHECK(score_tokenize("Éclair", def) == Words{"Éclair"});  // ASCII-only folding
}

TEST_CASE("lcs_length examples") {
  CHECK(lcs_length(Words{"a", "b", "c"}, Words{"a", "b", "c"}) == 3);
  CHECK(lcs_length(Words{"a", "b"}, Words{"c", "d"}) == 0);
  CHECK(lcs_length(Words{"the", "cat", "sat", "on", "mat"}, Words{"the", "dog", "sat", "on", "log"}) == 3);
  CHECK(lcs_length(Words{}, Words{"a"}) == 0);
  CHECK(lcs_length(Words{"a"}, Words{}) == 0);
  CHECK(lcs_length(std::string("ABCBDAB"), std::string("BDCABA")) == 4);
}

TEST_CASE("lcs_length matches the brute-force oracle on all short pairs") {
  // Lengths <= 5 here; the acceptance suite covers <= 6.
  const oracle::SmallUniverse u;
  std::size_t limit = 0;
  while (limit < u.size() && u.at(limit).size() <= 5) ++limit;
  std::size_t mismatches = 0;
  for (std::size_t a = 0; a < limit; ++a) {
    const auto& x = u.at(a);
    for (std::size_t b = 0; b < limit; ++b) {
      if (lcs_length(x, u.at(b)) != u.lcs(a, b)) ++mismatches;
    }
  }
  CHECK(mismatches == 0);
}

TEST_CASE("lcs_length matches subset enumeration on longer random pairs") {
  std::mt19937_64 rng(99);
  for (int i = 0; i < 1000; ++i) {
    const auto x = random_seq(rng, 7 + rng() % 6);
    const auto y = random_seq(rng, rng() % 13);
    const auto expect = oracle::lcs_by_subsets(x, y);
    REQUIRE(lcs_length(x, y) == expect);
    REQUIRE(lcs_length(to_words(x), to_words(y)) == expect);
  }
}

TEST_CASE("lcs properties") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 500; ++i) {
    const auto x = random_seq(rng, rng() % 20);
    auto y = random_seq(rng, rng() % 20);
    const auto base = lcs_length(x, y);
    CHECK(base == lcs_length(y, x));
    CHECK(base <= std::min(x.size(), y.size()));
    y.push_back(static_cast<int>(rng() % 4));
    CHECK(lcs_length(x, y) >= base);
  }
}

TEST_CASE("rouge_l equations") {
  const RougeConfig cfg;

  SUBCASE("identity") {
    const auto s = rouge_l("the quick brown fox", "the quick brown fox", cfg);
    CHECK(s.recall == 1.0);
    CHECK(s.precision == 1.0);
    CHECK(s.f_measure == 1.0);
    CHECK(s.high_similarity);
  }
  SUBCASE("10 reference tokens, 20 candidate tokens, LCS 5") {
    const std::string ref = "r0 r1 r2 r3 r4 s0 s1 s2 s3 s4";
    const std::string cand = "r0 x r1 x r2 x r3 x r4 x x x x x x x x x x x";
    const auto s = rouge_l(ref, cand, cfg);
    CHECK(s.m == 10);
    CHECK(s.n == 20);
    CHECK(s.lcs_len == 5);
    CHECK(s.lcs_len == oracle::lcs_by_subsets({0, 1, 2, 3, 4, 5, 6, 7, 8, 9},
                                              {0, 10, 1, 10, 2, 10, 3, 10, 4, 10, 10, 10, 10, 10, 10, 10, 10, 10,
                                               10, 10}));
    CHECK(s.recall == 0.5);
    CHECK(s.precision == 0.25);
    CHECK(s.f_measure == doctest::Approx(2 * 0.5 * 0.25 / 0.75).epsilon(1e-12));
  }
  SUBCASE("empty candidate") {
    const auto s = rouge_l("a b c", "", cfg);
    CHECK(s.recall == 0.0);
    CHECK(s.precision == 0.0);
    CHECK(s.f_measure == 0.0);
    CHECK(s.n == 0);
  }
  SUBCASE("empty reference is an error") { CHECK_THROWS_AS(rouge_l("...", "a b", cfg), Error); }
  SUBCASE("subsequence gives full recall") {
    CHECK(rouge_l("a c e", "a b c d e", cfg).recall == 1.0);
  }
}

TEST_CASE("f_measure weighting") {
  CHECK(f_measure(0.0, 0.0, 1.0) == 0.0);
  CHECK(f_measure(0.5, 0.5, 1.0) == doctest::Approx(0.5));
  // beta = 0 reduces to precision
  CHECK(f_measure(0.8, 0.4, 0.0) == doctest::Approx(0.4));
  // large beta approaches recall
  CHECK(f_measure(0.8, 0.4, 1000.0) == doctest::Approx(0.8).epsilon(1e-5));
}

TEST_CASE("score records are consistent with their counts") {
  std::mt19937_64 rng(3);
  const RougeConfig cfg;
  for (int i = 0; i < 300; ++i) {
    const auto ref = to_words(random_seq(rng, 1 + rng() % 15));
    const auto cand = to_words(random_seq(rng, rng() % 15));
    const auto s = rouge_l_tokens(ref, cand, cfg);
    CHECK(s.lcs_len == lcs_length(ref, cand));
    CHECK(s.recall * static_cast<double>(s.m) == doctest::Approx(static_cast<double>(s.lcs_len)));
    if (s.n > 0) CHECK(s.precision * static_cast<double>(s.n) == doctest::Approx(static_cast<double>(s.lcs_len)));
    CHECK(s.recall >= 0.0);
    CHECK(s.recall <= 1.0);
    CHECK(s.precision <= 1.0);
    CHECK(s.f_measure <= 1.0);
    CHECK(s.f_measure >= 0.0);
  }
}

TEST_CASE("high similarity threshold is inclusive") {
  const RougeConfig cfg;
  ScoreRecord r;
  r.recall = 1.0;
  CHECK(classify_high_similarity(r, cfg));
  r.recall = 0.85;
  CHECK(classify_high_similarity(r, cfg));
  r.recall = 0.849;
  CHECK_FALSE(classify_high_similarity(r, cfg));
}

TEST_CASE("rouge config validation") {
  RougeConfig c;
  CHECK_NOTHROW(c.validate());
  c.beta = -1;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.high_similarity_threshold = 1.5;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}
