#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <fstream>

#include "metagen/jsonl.hpp"
#include "metagen/stat_keyphrase.hpp"
#include "test_util.hpp"

using namespace metagen;

namespace {

json load_cases() {
  std::ifstream in(testutil::fixture_path("yake_cases.json"));
  REQUIRE(in.good());
  json j;
  in >> j;
  return j;
}

Document doc_with_body(std::string body) {
  Document d;
  d.doc_id = "t";
  d.body = normalize_text(body);
  return d;
}

}  // namespace

TEST_CASE("candidate scoring matches the independent oracle") {
  json root = load_cases();
  for (const auto& c : root["cases"]) {
    INFO("case: " << c["name"].get<std::string>() << " window=" << c["window"].get<int>()
                  << " max_ngram=" << c["max_ngram"].get<int>());
    EnrichConfig cfg;
    cfg.stat_window = c["window"].get<int>();
    cfg.max_ngram = c["max_ngram"].get<int>();
    std::string body = normalize_text(c["body"].get<std::string>());
    auto got = score_stat_candidates(body, cfg);
    CHECK(got.size() == c["candidate_count"].get<std::size_t>());
    const auto& expected = c["candidates"];
    REQUIRE(got.size() >= expected.size());
    for (std::size_t i = 0; i < expected.size(); ++i) {
      INFO("rank " << i << ": got '" << got[i].text << "' expected '"
                   << expected[i]["text"].get<std::string>() << "'");
      CHECK(got[i].text == expected[i]["text"].get<std::string>());
      CHECK(got[i].first_pos == expected[i]["first_pos"].get<std::size_t>());
      double want = expected[i]["score"].get<double>();
      CHECK(std::abs(got[i].score - want) <=
            1e-9 * std::max({1.0, std::abs(want), std::abs(got[i].score)}));
    }
    if (!c["winner"].is_null()) {
      CHECK(got.front().text == c["winner"].get<std::string>());
    }
  }
}

TEST_CASE("extract_stat_keyphrase returns the best candidate") {
  EnrichConfig cfg;

  SECTION("a document of one repeated token yields that token") {
    MetaRecord r = extract_stat_keyphrase(doc_with_body("aspirin aspirin aspirin"), cfg);
    CHECK(r.stream == MetaStream::keyphrase_stat);
    CHECK(r.values == std::vector<std::string>{"aspirin"});
  }

  SECTION("toy abstract yields the early repeated bigram") {
    MetaRecord r = extract_stat_keyphrase(
        doc_with_body("Myocardial infarction is a leading cause of death. "
                      "Early treatment of myocardial infarction is critical for survival. "
                      "We studied outcomes after myocardial infarction in older adults."),
        cfg);
    CHECK(r.values == std::vector<std::string>{"myocardial infarction"});
  }

  SECTION("one-token document returns that token") {
    MetaRecord r = extract_stat_keyphrase(doc_with_body("hello"), cfg);
    CHECK(r.values == std::vector<std::string>{"hello"});
  }

  SECTION("all-stopword document falls back to the first token") {
    MetaRecord r = extract_stat_keyphrase(doc_with_body("the of and"), cfg);
    CHECK(r.values == std::vector<std::string>{"the"});
  }

  SECTION("empty body is a precondition error") {
    Document d;
    d.doc_id = "t";
    CHECK_THROWS_AS(extract_stat_keyphrase(d, cfg), DataError);
  }

  SECTION("punctuation-only body is an error") {
    CHECK_THROWS_AS(extract_stat_keyphrase(doc_with_body("... !!! ???"), cfg), DataError);
  }
}

TEST_CASE("stat keyphrase determinism and n-gram bounds") {
  EnrichConfig cfg;
  std::string body =
      "Chronic kidney disease progresses silently over years. "
      "Patients with chronic kidney disease often develop anemia.";
  auto a = score_stat_candidates(body, cfg);
  auto b = score_stat_candidates(body, cfg);
  CHECK(a == b);
  for (const auto& c : a) {
    CHECK(c.length >= 1);
    CHECK(c.length <= cfg.max_ngram);
    // no stopword members and no repeats
    auto toks = tokenize(c.text);
    std::set<std::string> uniq(toks.begin(), toks.end());
    CHECK(uniq.size() == toks.size());
    for (const auto& t : toks) {
      CHECK_FALSE(is_stopword(t));
    }
  }

  SECTION("max_ngram=1 yields only unigrams") {
    EnrichConfig uni = cfg;
    uni.max_ngram = 1;
    for (const auto& c : score_stat_candidates(body, uni)) {
      CHECK(c.length == 1);
    }
  }
}
