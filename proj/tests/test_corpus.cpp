#include <doctest.h>

#include <random>

#include "memprobe/corpus.hpp"
#include "support.hpp"

using namespace memprobe;

namespace {

Document doc_of(std::size_t n_words) {
  std::string raw;
  for (std::size_t i = 0; i < n_words; ++i) raw += "w" + std::to_string(i) + " ";
  return make_document(raw, TextType::other, "synthetic " + std::to_string(n_words));
}

}  // namespace

TEST_CASE("normalize splits on whitespace runs only") {
  CHECK(normalize("a b c") == Words{"a", "b", "c"});
  CHECK(normalize("  a\nb  ") == Words{"a", "b"});
  CHECK(normalize("don't stop—now") == Words{"don't", "stop—now"});
  CHECK(normalize("a  b\t c\n\nd") == Words{"a", "b", "c", "d"});
  CHECK(normalize("").empty());
  CHECK(normalize(" \t\r\n").empty());
}

TEST_CASE("normalize treats Unicode whitespace as separators") {
  // no-break space, ideographic space, line separator, em space
  CHECK(normalize("a b　c d e") == Words{"a", "b", "c", "d", "e"});
  // zero-width space is not White_Space
  CHECK(normalize("a​b") == Words{"a​b"});
}

TEST_CASE("join_words uses single spaces") {
  const Words w{"one", "two", "three"};
  CHECK(join_words(w) == "one two three");
  CHECK(join_words(Words{}).empty());
  CHECK(normalize(join_words(w)) == w);
}

TEST_CASE("load_document") {
  testing::TempDir tmp("corpus");

  SUBCASE("simple file") {
    testing::spit(tmp.path() / "hello.txt", "Hello world.\n");
    const auto d = load_document(tmp.path() / "hello.txt", TextType::news, "Hello");
    CHECK(d.words == Words{"Hello", "world."});
    CHECK(d.text_type == TextType::news);
    CHECK(d.raw == "Hello world.\n");
  }
  SUBCASE("mixed whitespace") {
    testing::spit(tmp.path() / "ws.txt", "a  b\t c\n\nd");
    CHECK(load_document(tmp.path() / "ws.txt", TextType::other, "ws").words == Words{"a", "b", "c", "d"});
  }
  SUBCASE("empty file is an error") {
    testing::spit(tmp.path() / "empty.txt", "");
    CHECK_THROWS_WITH_AS(load_document(tmp.path() / "empty.txt", TextType::other, "e"),
                         doctest::Contains("empty"), Error);
    testing::spit(tmp.path() / "blank.txt", " \n\t ");
    CHECK_THROWS_AS(load_document(tmp.path() / "blank.txt", TextType::other, "b"), Error);
  }
  SUBCASE("missing file names the path") {
    const auto p = tmp.path() / "nope.txt";
    CHECK_THROWS_WITH_AS(load_document(p, TextType::other, "x"), doctest::Contains(p.string().c_str()), Error);
  }
  SUBCASE("invalid UTF-8") {
    testing::spit(tmp.path() / "bad.txt", std::string("ok \xC3\x28 bad"));
    CHECK_THROWS_WITH_AS(load_document(tmp.path() / "bad.txt", TextType::other, "bad"),
                         doctest::Contains("UTF-8"), Error);
  }
}

TEST_CASE("document ids are stable and content dependent") {
  const auto a = make_document("some text here", TextType::novel, "My Book: Part 1");
  const auto b = make_document("some text here", TextType::novel, "My Book: Part 1");
  const auto c = make_document("some other text", TextType::novel, "My Book: Part 1");
  CHECK(a.id == b.id);
  CHECK(a.id != c.id);
  CHECK(a.id.rfind("my-book-part-1-", 0) == 0);
  CHECK(a.id.size() == std::string("my-book-part-1-").size() + 8);
}

TEST_CASE("text type names round-trip") {
  for (auto t : {TextType::novel, TextType::news, TextType::lyrics, TextType::other}) {
    CHECK(parse_text_type(to_string(t)) == t);
  }
  CHECK_THROWS_AS(parse_text_type("poem"), ConfigError);
}

TEST_CASE("segment examples") {
  const SegmentationConfig cfg{50, 20, 50, 20};

  SUBCASE("100 words gives two samples") {
    const auto d = doc_of(100);
    const auto s = segment(d, cfg);
    REQUIRE(s.size() == 2);
    CHECK(s[0].start_word == 0);
    CHECK(s[1].start_word == 50);
    CHECK(s[1].index == 1);
    for (const auto& x : s) {
      CHECK(x.prefix.size() == 20);
      CHECK(x.reference.size() == 30);
      CHECK(x.doc_id == d.id);
    }
    CHECK(s[1].prefix.front() == "w50");
    CHECK(s[1].reference.front() == "w70");
    CHECK(s[0].prefix_text() == join_words(s[0].prefix));
  }
  SUBCASE("exact fit") { CHECK(segment(doc_of(50), cfg).size() == 1); }
  SUBCASE("too short") { CHECK_THROWS_AS(segment(doc_of(49), cfg), Error); }
  SUBCASE("max_samples caps the count") {
    CHECK(segment(doc_of(1000), cfg).size() == 20);
    SegmentationConfig uncapped = cfg;
    uncapped.max_samples.reset();
    CHECK(segment(doc_of(1000), uncapped).size() == 20);
    CHECK(segment(doc_of(1100), uncapped).size() == 22);
  }
}

TEST_CASE("segmentation config validation") {
  CHECK_NOTHROW(SegmentationConfig{}.validate());
  CHECK_THROWS_AS((SegmentationConfig{50, 50, 50, 20}.validate()), ConfigError);  // no reference left
  CHECK_THROWS_AS((SegmentationConfig{50, 0, 50, 20}.validate()), ConfigError);
  CHECK_THROWS_AS((SegmentationConfig{50, 20, 0, 20}.validate()), ConfigError);
  CHECK_THROWS_AS((SegmentationConfig{50, 20, 50, 0}.validate()), ConfigError);
}

TEST_CASE("segment properties on random documents") {
  std::mt19937_64 rng(12345);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 5 + rng() % 400;
    const auto d = doc_of(n);
    SegmentationConfig cfg;
    cfg.sample_len = 2 + rng() % 60;
    cfg.prefix_len = 1 + rng() % (cfg.sample_len - 1);
    cfg.stride = 1 + rng() % 70;
    if (rng() % 3 == 0) {
      cfg.max_samples.reset();
    } else {
      cfg.max_samples = 1 + rng() % 30;
    }
    if (n < cfg.sample_len) {
      CHECK_THROWS_AS(segment(d, cfg), Error);
      continue;
    }
    const auto samples = segment(d, cfg);
    const std::size_t full = (n - cfg.sample_len) / cfg.stride + 1;
    CHECK(samples.size() == (cfg.max_samples ? std::min(*cfg.max_samples, full) : full));
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const auto& s = samples[i];
      CHECK(s.index == i);
      CHECK(s.start_word == i * cfg.stride);
      Words joined = s.prefix;
      joined.insert(joined.end(), s.reference.begin(), s.reference.end());
      const Words expect(d.words.begin() + static_cast<std::ptrdiff_t>(s.start_word),
                         d.words.begin() + static_cast<std::ptrdiff_t>(s.start_word + cfg.sample_len));
      CHECK(joined == expect);
      CHECK(s.prefix.size() == cfg.prefix_len);
    }
    const auto again = segment(d, cfg);
    CHECK(again.size() == samples.size());
    if (!again.empty()) CHECK(again.back().reference == samples.back().reference);
  }
}

TEST_CASE("fixture corpus shape") {
  const auto d = testing::alice();
  CHECK(d.words.size() >= 1000);
  CHECK(segment(d, SegmentationConfig{}).size() == 20);
}
