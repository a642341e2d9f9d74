#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "metagen/hash.hpp"
#include "metagen/vecindex.hpp"
#include "test_util.hpp"

using namespace metagen;
using testutil::fixture_path;
using testutil::write_temp;

namespace {

EmbeddingVector random_unit(std::mt19937& rng, std::size_t dim) {
  std::normal_distribution<float> gauss(0.0f, 1.0f);
  std::vector<float> v(dim);
  double norm = 0.0;
  for (auto& x : v) {
    x = gauss(rng);
    norm += static_cast<double>(x) * static_cast<double>(x);
  }
  norm = std::sqrt(norm);
  for (auto& x : v) {
    x = static_cast<float>(x / norm);
  }
  return EmbeddingVector{std::move(v)};
}

}  // namespace

TEST_CASE("hash embedder output matches a hand recomputation of its recipe") {
  DeterministicHashEmbedder embedder(16);
  auto vec = embed_texts(embedder, {"abc"})[0];
  REQUIRE(vec.size() == 16);
  auto bucket = static_cast<std::size_t>(fnv1a64("abc") % 16);
  for (std::size_t i = 0; i < vec.size(); ++i) {
    CHECK(vec[i] == Catch::Approx(i == bucket ? 1.0 : 0.0).margin(1e-7));
  }

  SECTION("token counts then L2 normalization") {
    auto v2 = embed_texts(embedder, {"abc abc def"})[0];
    auto b_abc = static_cast<std::size_t>(fnv1a64("abc") % 16);
    auto b_def = static_cast<std::size_t>(fnv1a64("def") % 16);
    REQUIRE(b_abc != b_def);
    double s5 = std::sqrt(5.0);
    CHECK(v2[b_abc] == Catch::Approx(2.0 / s5).margin(1e-6));
    CHECK(v2[b_def] == Catch::Approx(1.0 / s5).margin(1e-6));
  }
}

TEST_CASE("build produces one unit vector per document") {
  Corpus c = load_corpus(fixture_path("corpus_canonical.jsonl"), "canonical");
  DeterministicHashEmbedder embedder(32);
  VecIndex index = build_vector_index(c, embedder);

  CHECK(index.size() == c.size());
  CHECK(index.dim == 32);
  CHECK(index.provider_id == "deterministic-hash/32");
  CHECK(index.embed_text_recipe == "title+body+enriched.*");
  for (const auto& doc : c.docs) {
    REQUIRE(index.vectors.count(doc.doc_id) == 1);
    const auto& v = index.vectors.at(doc.doc_id);
    REQUIRE(v.dim() == 32);
    double norm = 0.0;
    for (float x : v.values) {
      norm += static_cast<double>(x) * static_cast<double>(x);
    }
    CHECK(std::sqrt(norm) == Catch::Approx(1.0).margin(1e-5));
  }
}

TEST_CASE("embedding text concatenates recipe fields in order") {
  Document d;
  d.doc_id = "x";
  d.title = "aspirin study";
  d.body = "aspirin reduces risk";
  d.enriched_meta["llm_topics"] = {"cardiology", "prevention"};
  d.enriched_meta["keyphrase_stat"] = {"aspirin"};
  Corpus c;
  c.docs = {d};

  auto expanded = detail::expand_recipe(c, default_embed_recipe());
  CHECK(expanded == std::vector<std::string>{"title", "body", "enriched.keyphrase_stat",
                                             "enriched.llm_topics"});
  CHECK(embed_text_for_doc(d, expanded) ==
        "aspirin study aspirin reduces risk aspirin cardiology prevention");

  SECTION("absent fields are skipped, not rendered empty") {
    Document bare;
    bare.doc_id = "y";
    bare.body = "plain text";
    CHECK(embed_text_for_doc(bare, expanded) == "plain text");
  }
}

TEST_CASE("recipe controls which documents change representation") {
  Corpus c = load_corpus(fixture_path("corpus_canonical.jsonl"), "canonical");
  bool any_enriched = false;
  bool any_plain = false;
  for (const auto& doc : c.docs) {
    (doc.enriched_meta.empty() ? any_plain : any_enriched) = true;
  }
  REQUIRE(any_enriched);
  REQUIRE(any_plain);

  DeterministicHashEmbedder embedder(64);
  VecIndex with = build_vector_index(c, embedder, {"title", "body", "enriched.*"});
  VecIndex without = build_vector_index(c, embedder, {"title", "body"});
  for (const auto& doc : c.docs) {
    bool differs = !(with.vectors.at(doc.doc_id) == without.vectors.at(doc.doc_id));
    CHECK(differs == !doc.enriched_meta.empty());
  }

  SECTION("unknown recipe field is rejected") {
    CHECK_THROWS_AS(build_vector_index(c, embedder, {"body", "enriched.absent"}), ConfigError);
    CHECK_THROWS_AS(build_vector_index(c, embedder, {"abstract"}), ConfigError);
    CHECK_THROWS_AS(build_vector_index(c, embedder, {}), ConfigError);
  }
}

TEST_CASE("a document's own vector is its nearest neighbor") {
  Corpus c = load_corpus(fixture_path("corpus_canonical.jsonl"), "canonical");
  DeterministicHashEmbedder embedder(32);
  VecIndex index = build_vector_index(c, embedder);

  const auto& qvec = index.vectors.at("d2");
  auto hits = knn_search(index, qvec, 3);
  REQUIRE_FALSE(hits.empty());
  CHECK(hits[0].doc_id == "d2");
  CHECK(*hits[0].sem_score == Catch::Approx(1.0).margin(1e-5));
  CHECK_FALSE(hits[0].lex_score.has_value());
  for (const auto& h : hits) {
    CHECK(*h.sem_score >= -1.0 - 1e-9);
    CHECK(*h.sem_score <= 1.0 + 1e-9);
  }
}

TEST_CASE("knn equals a brute-force full scan on random vectors") {
  std::mt19937 rng(987654321);
  const std::size_t dim = 24;
  VecIndex index;
  index.dim = dim;
  index.provider_id = "random-fixture";
  index.embed_text_recipe = "body";
  for (int i = 0; i < 1000; ++i) {
    char id[8];
    std::snprintf(id, sizeof(id), "v%04d", i);
    index.vectors.emplace(id, random_unit(rng, dim));
  }

  for (int q = 0; q < 50; ++q) {
    EmbeddingVector qvec = random_unit(rng, dim);
    auto got = knn_search(index, qvec, 10);
    REQUIRE(got.size() == 10);

    std::vector<std::pair<double, std::string>> all;
    for (const auto& [id, vec] : index.vectors) {
      double dot = 0.0;
      for (std::size_t i = 0; i < dim; ++i) {
        dot += static_cast<double>(qvec.values[i]) * static_cast<double>(vec.values[i]);
      }
      all.emplace_back(dot, id);
    }
    std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) {
        return a.first > b.first;
      }
      return a.second < b.second;
    });
    for (std::size_t i = 0; i < 10; ++i) {
      CHECK(got[i].doc_id == all[i].second);
    }
  }
}

TEST_CASE("knn clamps k and validates the query") {
  std::mt19937 rng(44);
  VecIndex index;
  index.dim = 8;
  for (int i = 0; i < 4; ++i) {
    index.vectors.emplace("k" + std::to_string(i), random_unit(rng, 8));
  }
  EmbeddingVector qvec = random_unit(rng, 8);

  auto hits = knn_search(index, qvec, 100);
  CHECK(hits.size() == 4);
  for (std::size_t i = 1; i < hits.size(); ++i) {
    CHECK(*hits[i - 1].sem_score >= *hits[i].sem_score);
  }

  CHECK_THROWS_AS(knn_search(index, qvec, 0), ConfigError);
  CHECK_THROWS_AS(knn_search(index, random_unit(rng, 7), 2), ConfigError);
  EmbeddingVector zero;
  zero.values.assign(8, 0.0f);
  CHECK_THROWS_AS(knn_search(index, zero, 2), ConfigError);
}

TEST_CASE("cosine ranking is invariant to positive query scaling") {
  std::mt19937 rng(7);
  VecIndex index;
  index.dim = 16;
  for (int i = 0; i < 20; ++i) {
    char id[8];
    std::snprintf(id, sizeof(id), "s%02d", i);
    index.vectors.emplace(id, random_unit(rng, 16));
  }
  EmbeddingVector qvec = random_unit(rng, 16);
  EmbeddingVector scaled = qvec;
  for (auto& x : scaled.values) {
    x *= 37.5f;
  }

  auto a = knn_search(index, qvec, 20);
  auto b = knn_search(index, scaled, 20);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].doc_id == b[i].doc_id);
    CHECK(*a[i].sem_score == Catch::Approx(*b[i].sem_score).margin(1e-6));
  }
}

TEST_CASE("similarity between stored vectors is symmetric") {
  std::mt19937 rng(11);
  VecIndex index;
  index.dim = 12;
  for (int i = 0; i < 6; ++i) {
    index.vectors.emplace("y" + std::to_string(i), random_unit(rng, 12));
  }
  auto score_of = [&](const EmbeddingVector& q, const std::string& id) {
    for (const auto& h : knn_search(index, q, index.size())) {
      if (h.doc_id == id) {
        return *h.sem_score;
      }
    }
    FAIL("doc not returned");
    return 0.0;
  };
  CHECK(score_of(index.vectors.at("y1"), "y4") ==
        Catch::Approx(score_of(index.vectors.at("y4"), "y1")).margin(1e-6));
  CHECK(score_of(index.vectors.at("y0"), "y5") ==
        Catch::Approx(score_of(index.vectors.at("y5"), "y0")).margin(1e-6));
}

TEST_CASE("vecindex persists and reloads losslessly") {
  Corpus c = load_corpus(fixture_path("corpus_canonical.jsonl"), "canonical");
  DeterministicHashEmbedder embedder(32);
  VecIndex index = build_vector_index(c, embedder);

  std::string path = write_temp("vecindex.jsonl", "");
  save_vec_index(index, path);
  VecIndex loaded = load_vec_index(path);

  CHECK(loaded.dim == index.dim);
  CHECK(loaded.provider_id == index.provider_id);
  CHECK(loaded.embed_text_recipe == index.embed_text_recipe);
  CHECK(loaded.corpus_checksum == index.corpus_checksum);
  CHECK(loaded.vectors == index.vectors);

  auto qvec = embed_query(embedder, "aspirin heart attack");
  CHECK(knn_search(index, qvec, 3) == knn_search(loaded, qvec, 3));

  verify_vec_index_corpus(loaded, c);
  Corpus other = c;
  other.docs[0].body += " tampered";
  CHECK_THROWS_AS(verify_vec_index_corpus(loaded, other), DataError);

  SECTION("corrupt files are rejected") {
    std::string bad = write_temp("vecindex_bad.jsonl", "{\"type\":\"other\"}\n");
    CHECK_THROWS_AS(load_vec_index(bad), DataError);
    std::string empty = write_temp("vecindex_empty.jsonl", "");
    CHECK_THROWS_AS(load_vec_index(empty), DataError);
  }
}
