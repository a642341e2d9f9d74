#include <catch2/catch_amalgamated.hpp>

#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "metagen/text.hpp"

using metagen::normalize_text;
using metagen::tokenize;

namespace {

nlohmann::json load_fixture(const std::string& name) {
  std::ifstream in(std::string(METAGEN_FIXTURE_DIR) + "/" + name);
  REQUIRE(in.good());
  return nlohmann::json::parse(in);
}

// Deterministic junk-string generator for property tests.
std::string random_string(std::mt19937& rng) {
  static const std::vector<std::string> pool = {
      "a",  "B",  " ",  "\t", "\n", "9",        "\xc3\xa9" /* e-acute */,
      "\xcc\x81" /* combining acute */,          "\xe1\x84\x80" /* hangul L */,
      "\xe1\x85\xa1" /* hangul V */,             "\xe4\xb8\xad" /* CJK */,
      "\xc3\x9f" /* sharp s */,                  "\x01",
      ".",  "-",  "\xe2\x80\xa8" /* LS */,       "\xc2\xa0" /* NBSP */,
      "\xf0\x9f\x98\x80" /* emoji */,            "\xe2\x84\xab" /* angstrom */,
  };
  std::uniform_int_distribution<std::size_t> len(0, 24);
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  std::string out;
  std::size_t n = len(rng);
  for (std::size_t i = 0; i < n; ++i) {
    out += pool[pick(rng)];
  }
  return out;
}

}  // namespace

TEST_CASE("normalize_text collapses whitespace") {
  CHECK(normalize_text("a  b\n\nc") == "a b c");
  CHECK(normalize_text("") == "");
  CHECK(normalize_text("  x  ") == "x");
}

TEST_CASE("nfc matches the reference implementation") {
  auto fixture = load_fixture("text_cases.json");
  REQUIRE(std::string(fixture["unicode_version"]) ==
          std::string(metagen::unicode_data::kUnicodeVersion));
  for (const auto& c : fixture["nfc"]) {
    INFO("input: " << nlohmann::json(c["input"]).dump());
    CHECK(metagen::nfc_utf8(c["input"].get<std::string>()) == c["expected"].get<std::string>());
  }
}

TEST_CASE("normalize_text matches the reference implementation") {
  auto fixture = load_fixture("text_cases.json");
  for (const auto& c : fixture["normalize"]) {
    INFO("input: " << nlohmann::json(c["input"]).dump());
    CHECK(normalize_text(c["input"].get<std::string>()) == c["expected"].get<std::string>());
  }
}

TEST_CASE("tokenize matches the reference segmenter on the 100-string fixture") {
  auto fixture = load_fixture("text_cases.json");
  REQUIRE(fixture["tokenize"].size() == 100);
  for (const auto& c : fixture["tokenize"]) {
    INFO("input: " << nlohmann::json(c["input"]).dump());
    CHECK(tokenize(c["input"].get<std::string>()) ==
          c["expected"].get<std::vector<std::string>>());
  }
}

TEST_CASE("tokenize basics") {
  CHECK(tokenize("Aspirin reduces MI.") == std::vector<std::string>{"aspirin", "reduces", "mi"});
  CHECK(tokenize("").empty());
  CHECK(tokenize("state-of-the-art") == std::vector<std::string>{"state", "of", "the", "art"});
}

TEST_CASE("normalize_text is idempotent") {
  std::mt19937 rng(1234);
  for (int i = 0; i < 500; ++i) {
    std::string s = random_string(rng);
    std::string once = normalize_text(s);
    INFO("input bytes: " << nlohmann::json(s).dump());
    CHECK(normalize_text(once) == once);
  }
}

TEST_CASE("tokenize is stable under normalize_text") {
  std::mt19937 rng(99);
  for (int i = 0; i < 200; ++i) {
    std::string s = random_string(rng);
    CHECK(tokenize(normalize_text(s)) == tokenize(normalize_text(normalize_text(s))));
  }
}

TEST_CASE("sentence splitting") {
  auto s = metagen::split_sentences("First one. Second one! Third?\nFourth");
  REQUIRE(s.size() == 4);
  CHECK(s[0] == "First one");
  CHECK(s[3] == "Fourth");
  CHECK(metagen::split_sentences("").empty());
  CHECK(metagen::split_sentences("...").empty());
}

TEST_CASE("stopword list is fixed and versioned") {
  CHECK(std::string(metagen::kStopwordsVersion) == "en-1");
  CHECK(metagen::is_stopword("the"));
  CHECK(metagen::is_stopword("of"));
  CHECK_FALSE(metagen::is_stopword("aspirin"));
}
