#include <catch2/catch_amalgamated.hpp>

#include <map>

#include "metagen/corpus.hpp"
#include "metagen/embed_keyphrase.hpp"
#include "metagen/providers.hpp"
#include "test_util.hpp"

using namespace metagen;
using testutil::fixture_path;

namespace {

Document doc_with_body(std::string body) {
  Document d;
  d.doc_id = "t";
  d.body = normalize_text(body);
  return d;
}

/// Provider with a fixed text->vector table; anything absent gets the default.
FnEmbeddingProvider table_provider(std::map<std::string, std::vector<float>> table,
                                   std::vector<float> fallback, int dim) {
  return FnEmbeddingProvider(
      [table = std::move(table), fallback = std::move(fallback)](const std::vector<std::string>& texts) {
        std::vector<std::vector<float>> out;
        for (const auto& t : texts) {
          auto it = table.find(t);
          out.push_back(it != table.end() ? it->second : fallback);
        }
        return out;
      },
      dim, "table-embedder", true);
}

}  // namespace

TEST_CASE("candidate_phrases enumerates stopword-free within-sentence n-grams") {
  auto c = candidate_phrases("Aspirin reduces the risk of infarction. Aspirin helps.", 3);
  CHECK(c == std::vector<std::string>{"aspirin", "aspirin reduces", "reduces", "risk",
                                      "infarction", "aspirin helps", "helps"});
  CHECK(candidate_phrases("the of and", 3).empty());
  // repeated term never appears inside one candidate
  for (const auto& cand : candidate_phrases("malaria malaria net", 3)) {
    CHECK(cand != "malaria malaria");
  }
}

TEST_CASE("a candidate embedded identically to the document wins") {
  Document d = doc_with_body("alpha beta. gamma delta.");
  std::vector<float> vdoc = {1.0f, 0.0f, 0.0f, 0.0f};
  auto provider = table_provider(
      {
          {d.body, vdoc},
          {"alpha", vdoc},  // self-similarity 1.0
          {"gamma delta", {0.8f, 0.6f, 0.0f, 0.0f}},
      },
      {0.0f, 1.0f, 0.0f, 0.0f}, 4);
  MetaRecord r = extract_embed_keyphrase(d, provider, EnrichConfig{});
  REQUIRE(r.values.size() == 2);
  CHECK(r.values[0] == "alpha");
  CHECK(r.values[1] == "gamma delta");  // best-cosine sentence becomes the title
  CHECK(r.stream == MetaStream::keyphrase_embed);
}

TEST_CASE("deterministic embedder result matches a brute-force cosine scan") {
  Corpus corpus = load_corpus(fixture_path("corpus_canonical.jsonl"), "canonical");
  DeterministicHashEmbedder embedder(32);
  EnrichConfig cfg;
  for (const auto& doc : corpus.docs) {
    MetaRecord r = extract_embed_keyphrase(doc, embedder, cfg);
    REQUIRE(r.values.size() == 2);

    // Oracle: embed each text in its own call and scan for the argmax.
    auto doc_vec = embed_texts(embedder, {doc.body})[0];
    auto best_of = [&](const std::vector<std::string>& texts) {
      std::string best;
      double best_cos = -2.0;
      for (const auto& t : texts) {
        double c = cosine(embed_texts(embedder, {t})[0], doc_vec);
        if (c > best_cos || (c == best_cos && t < best)) {
          best = t;
          best_cos = c;
        }
      }
      return best;
    };
    INFO("doc " << doc.doc_id);
    CHECK(r.values[0] == best_of(candidate_phrases(doc.body, cfg.max_ngram)));
    CHECK(r.values[1] == best_of(split_sentences(doc.body)));
  }
}

TEST_CASE("identical vectors everywhere fall back to lexicographic choice") {
  Document d = doc_with_body("delta gamma. beta alpha.");
  auto provider = table_provider({}, {0.5f, 0.5f, 0.5f, 0.5f}, 4);
  MetaRecord r = extract_embed_keyphrase(d, provider, EnrichConfig{});
  REQUIRE(r.values.size() == 2);
  CHECK(r.values[0] == "alpha");        // smallest candidate string
  CHECK(r.values[1] == "beta alpha");   // smallest sentence string
}

TEST_CASE("provider contract violations surface as provider errors") {
  Document d = doc_with_body("alpha beta gamma");

  SECTION("wrong dimension") {
    FnEmbeddingProvider bad([](const std::vector<std::string>& texts) {
      return std::vector<std::vector<float>>(texts.size(), {1.0f, 0.0f});
    }, 4, "bad-dim", true);
    CHECK_THROWS_AS(extract_embed_keyphrase(d, bad, EnrichConfig{}), ProviderError);
  }

  SECTION("wrong arity") {
    FnEmbeddingProvider bad([](const std::vector<std::string>& texts) {
      return std::vector<std::vector<float>>(texts.size() - 1, {1.0f, 0.0f, 0.0f, 0.0f});
    }, 4, "bad-arity", true);
    CHECK_THROWS_AS(extract_embed_keyphrase(d, bad, EnrichConfig{}), ProviderError);
  }

  SECTION("zero vector") {
    FnEmbeddingProvider bad([](const std::vector<std::string>& texts) {
      return std::vector<std::vector<float>>(texts.size(), {0.0f, 0.0f, 0.0f, 0.0f});
    }, 4, "zero-vec", true);
    CHECK_THROWS_AS(extract_embed_keyphrase(d, bad, EnrichConfig{}), ProviderError);
  }
}

TEST_CASE("zero candidates produce a first-sentence fallback without embedding") {
  Document d = doc_with_body("the of and. is it was.");
  bool called = false;
  FnEmbeddingProvider tripwire([&](const std::vector<std::string>& texts) {
    called = true;
    return std::vector<std::vector<float>>(texts.size(), {1.0f, 0.0f});
  }, 2, "tripwire", true);
  MetaRecord r = extract_embed_keyphrase(d, tripwire, EnrichConfig{});
  CHECK_FALSE(called);
  CHECK(r.values == std::vector<std::string>{"the of and"});
  CHECK(r.provenance.find("fallback") != std::string::npos);
}

TEST_CASE("embed_texts retries retryable failures with backoff") {
  int attempts = 0;
  FnEmbeddingProvider flaky([&](const std::vector<std::string>& texts) {
    if (++attempts < 3) {
      throw ProviderError("temporarily unavailable", true);
    }
    return std::vector<std::vector<float>>(texts.size(), {3.0f, 4.0f});
  }, 2, "flaky", true);

  RetryPolicy fast{3, 1};
  auto vecs = embed_texts(flaky, {"a", "b"}, fast);
  CHECK(attempts == 3);
  REQUIRE(vecs.size() == 2);
  CHECK(vecs[0][0] == Catch::Approx(0.6));  // unit-normalized on receipt
  CHECK(vecs[0][1] == Catch::Approx(0.8));

  SECTION("non-retryable errors are immediate") {
    attempts = 0;
    FnEmbeddingProvider fatal([&](const std::vector<std::string>&)
                                  -> std::vector<std::vector<float>> {
      ++attempts;
      throw ProviderError("bad request", false);
    }, 2, "fatal", true);
    CHECK_THROWS_AS(embed_texts(fatal, {"a"}, fast), ProviderError);
    CHECK(attempts == 1);
  }

  SECTION("empty input is rejected before any call") {
    CHECK_THROWS_AS(embed_texts(flaky, {}, fast), ConfigError);
  }
}
