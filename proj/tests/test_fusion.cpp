#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "metagen/fusion.hpp"
#include "test_util.hpp"

using namespace metagen;
using testutil::fixture_path;

namespace {

ScoredHit lex_hit(std::string id, double v) {
  ScoredHit h;
  h.doc_id = std::move(id);
  h.lex_score = v;
  return h;
}

ScoredHit sem_hit(std::string id, double v) {
  ScoredHit h;
  h.doc_id = std::move(id);
  h.sem_score = v;
  return h;
}

std::vector<std::string> ids(const std::vector<ScoredHit>& hits) {
  std::vector<std::string> out;
  for (const auto& h : hits) {
    out.push_back(h.doc_id);
  }
  return out;
}

struct Rig {
  Corpus corpus;
  DeterministicHashEmbedder embedder{32};
  LexIndex lexidx;
  VecIndex vecidx;

  Rig() {
    corpus = load_corpus(fixture_path("corpus_canonical.jsonl"), "canonical");
    lexidx = build_lexical_index(corpus, {"body", "title", "enriched.*"});
    vecidx = build_vector_index(corpus, embedder);
  }
};

}  // namespace

TEST_CASE("minmax maps the leg onto [0, 1]") {
  auto hits = normalize_scores({lex_hit("a", 2.0), lex_hit("b", 4.0), lex_hit("c", 6.0)},
                               Leg::lexical, NormMethod::minmax);
  CHECK(*hits[0].lex_score == 0.0);
  CHECK(*hits[1].lex_score == 0.5);
  CHECK(*hits[2].lex_score == 1.0);

  SECTION("all-equal scores normalize to 1, not 0") {
    auto eq = normalize_scores({sem_hit("a", 5.0), sem_hit("b", 5.0)}, Leg::semantic,
                               NormMethod::minmax);
    CHECK(*eq[0].sem_score == 1.0);
    CHECK(*eq[1].sem_score == 1.0);
  }
  SECTION("a single hit normalizes to 1") {
    auto one = normalize_scores({lex_hit("a", 3.7)}, Leg::lexical, NormMethod::minmax);
    CHECK(*one[0].lex_score == 1.0);
  }
  SECTION("method none is the identity") {
    auto same = normalize_scores({lex_hit("a", 2.0), lex_hit("b", 6.0)}, Leg::lexical,
                                 NormMethod::none);
    CHECK(*same[0].lex_score == 2.0);
    CHECK(*same[1].lex_score == 6.0);
  }
  SECTION("empty list stays empty") {
    CHECK(normalize_scores({}, Leg::lexical, NormMethod::minmax).empty());
  }
  SECTION("normalizing one leg leaves the other untouched") {
    auto h = lex_hit("a", 4.0);
    h.sem_score = 0.25;
    auto out = normalize_scores({h, lex_hit("b", 8.0)}, Leg::lexical, NormMethod::minmax);
    CHECK(*out[0].sem_score == 0.25);
  }
}

TEST_CASE("fuse matches the worked arithmetic") {
  HybridQueryConfig cfg;
  cfg.w_lex = 0.5;
  cfg.w_sem = 0.5;
  cfg.leg_depth = 10;
  cfg.k_final = 10;
  auto out = fuse({lex_hit("d1", 1.0), lex_hit("d3", 0.0)},
                  {sem_hit("d3", 1.0), sem_hit("d2", 0.5)}, cfg);

  REQUIRE(ids(out) == std::vector<std::string>{"d1", "d3", "d2"});
  CHECK(*out[0].fused_score == 0.5);
  CHECK(*out[1].fused_score == 0.5);
  CHECK(*out[2].fused_score == 0.25);
  CHECK_FALSE(out[0].sem_score.has_value());
  CHECK_FALSE(out[2].lex_score.has_value());

  SECTION("k_final truncates the fused list") {
    cfg.k_final = 2;
    cfg.leg_depth = 2;
    auto top2 = fuse({lex_hit("d1", 1.0), lex_hit("d3", 0.0)},
                     {sem_hit("d3", 1.0), sem_hit("d2", 0.5)}, cfg);
    CHECK(ids(top2) == std::vector<std::string>{"d1", "d3"});
  }
  SECTION("an empty semantic leg scales the lexical ranking by w_lex") {
    cfg.k_final = 10;
    cfg.leg_depth = 10;
    cfg.w_lex = 0.7;
    auto out2 = fuse({lex_hit("d1", 1.0), lex_hit("d3", 0.25)}, {}, cfg);
    REQUIRE(ids(out2) == std::vector<std::string>{"d1", "d3"});
    CHECK(*out2[0].fused_score == Catch::Approx(0.7));
    CHECK(*out2[1].fused_score == Catch::Approx(0.7 * 0.25));
  }
}

TEST_CASE("a document leading both legs leads the fused output") {
  HybridQueryConfig cfg;
  auto out = fuse({lex_hit("top", 1.0), lex_hit("x", 0.4), lex_hit("y", 0.0)},
                  {sem_hit("top", 1.0), sem_hit("y", 0.9)}, cfg);
  REQUIRE_FALSE(out.empty());
  CHECK(out[0].doc_id == "top");
  for (const auto& h : out) {
    CHECK(*h.fused_score >= 0.0);
    CHECK(*h.fused_score <= cfg.w_lex + cfg.w_sem + 1e-12);
  }
}

TEST_CASE("hybrid config invariants are enforced") {
  Rig rig;
  HybridQueryConfig cfg;
  cfg.leg_depth = 3;
  cfg.k_final = 5;
  CHECK_THROWS_AS(hybrid_search(rig.lexidx, rig.vecidx, "aspirin", rig.embedder, cfg),
                  ConfigError);
  cfg = HybridQueryConfig{};
  cfg.w_lex = 0.0;
  cfg.w_sem = 0.0;
  CHECK_THROWS_AS(hybrid_search(rig.lexidx, rig.vecidx, "aspirin", rig.embedder, cfg),
                  ConfigError);
  cfg = HybridQueryConfig{};
  cfg.w_lex = -0.1;
  CHECK_THROWS_AS(hybrid_search(rig.lexidx, rig.vecidx, "aspirin", rig.embedder, cfg),
                  ConfigError);
  cfg = HybridQueryConfig{};
  cfg.k_final = 0;
  CHECK_THROWS_AS(hybrid_search(rig.lexidx, rig.vecidx, "aspirin", rig.embedder, cfg),
                  ConfigError);
}

TEST_CASE("edge weights reproduce the single-leg rankings") {
  Rig rig;
  for (const std::string query :
       {"aspirin myocardial infarction", "beta blockers", "statin therapy", "aspirin"}) {
    INFO("query: " << query);
    HybridQueryConfig cfg;
    cfg.leg_depth = 10;
    cfg.k_final = 3;

    cfg.w_lex = 1.0;
    cfg.w_sem = 0.0;
    auto lex_only = hybrid_search(rig.lexidx, rig.vecidx, query, rig.embedder, cfg);
    auto pure_lex = bm25_search(rig.lexidx, query, cfg.boosts, cfg.k_final);
    CHECK(ids(lex_only.hits) == ids(pure_lex));

    cfg.w_lex = 0.0;
    cfg.w_sem = 1.0;
    auto sem_only = hybrid_search(rig.lexidx, rig.vecidx, query, rig.embedder, cfg);
    auto pure_sem = knn_search(rig.vecidx, embed_query(rig.embedder, query), cfg.k_final);
    CHECK(ids(sem_only.hits) == ids(pure_sem));
  }
}

TEST_CASE("hybrid output matches the composed leg oracles") {
  Rig rig;
  const std::string query = "does aspirin prevent mi";
  HybridQueryConfig cfg;
  cfg.leg_depth = 10;
  cfg.k_final = 3;

  auto lex = bm25_search(rig.lexidx, query, cfg.boosts, cfg.leg_depth);
  auto sem = knn_search(rig.vecidx, embed_query(rig.embedder, query), cfg.leg_depth);

  // Hand minmax + weighted sum, written out rather than reusing the library.
  std::map<std::string, double> expected;
  if (!lex.empty()) {
    double lo = *lex.back().lex_score;
    double hi = *lex.front().lex_score;
    for (const auto& h : lex) {
      expected[h.doc_id] += 0.5 * (hi == lo ? 1.0 : (*h.lex_score - lo) / (hi - lo));
    }
  }
  if (!sem.empty()) {
    double lo = *sem.back().sem_score;
    double hi = *sem.front().sem_score;
    for (const auto& h : sem) {
      expected[h.doc_id] += 0.5 * (hi == lo ? 1.0 : (*h.sem_score - lo) / (hi - lo));
    }
  }
  std::vector<std::pair<std::string, double>> want(expected.begin(), expected.end());
  std::sort(want.begin(), want.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) {
      return a.second > b.second;
    }
    return a.first < b.first;
  });

  auto got = hybrid_search(rig.lexidx, rig.vecidx, query, rig.embedder, cfg);
  CHECK_FALSE(got.degraded);
  REQUIRE(got.hits.size() == std::min<std::size_t>(3, want.size()));
  for (std::size_t i = 0; i < got.hits.size(); ++i) {
    CHECK(got.hits[i].doc_id == want[i].first);
    CHECK(*got.hits[i].fused_score == Catch::Approx(want[i].second).margin(1e-12));
  }

  SECTION("repeated calls return identical lists") {
    auto again = hybrid_search(rig.lexidx, rig.vecidx, query, rig.embedder, cfg);
    CHECK(got.hits == again.hits);
    CHECK(got.degraded == again.degraded);
  }
}

TEST_CASE("scaling both weights preserves the ordering") {
  Rig rig;
  HybridQueryConfig half;
  half.leg_depth = 10;
  half.k_final = 3;
  HybridQueryConfig scaled = half;
  scaled.w_lex = 1.5;
  scaled.w_sem = 1.5;

  for (const std::string query : {"aspirin", "beta blockers therapy", "myocardial infarction"}) {
    auto a = hybrid_search(rig.lexidx, rig.vecidx, query, rig.embedder, half);
    auto b = hybrid_search(rig.lexidx, rig.vecidx, query, rig.embedder, scaled);
    REQUIRE(ids(a.hits) == ids(b.hits));
    for (std::size_t i = 0; i < a.hits.size(); ++i) {
      CHECK(*b.hits[i].fused_score == Catch::Approx(*a.hits[i].fused_score * 3.0).margin(1e-12));
    }
  }
}

TEST_CASE("embedder failure falls back to the lexical leg when allowed") {
  Rig rig;
  FnEmbeddingProvider broken(
      [](const std::vector<std::string>&) -> std::vector<std::vector<float>> {
        throw ProviderError("embedding service unreachable", true);
      },
      32, "broken/32");
  HybridQueryConfig cfg;
  cfg.leg_depth = 10;
  cfg.k_final = 3;
  const std::string query = "aspirin myocardial infarction";

  auto degraded = hybrid_search(rig.lexidx, rig.vecidx, query, broken, cfg);
  CHECK(degraded.degraded);

  cfg.w_sem = 0.0;
  cfg.w_lex = 1.0;
  auto lex_only = hybrid_search(rig.lexidx, rig.vecidx, query, rig.embedder, cfg);
  CHECK(ids(degraded.hits) == ids(lex_only.hits));

  SECTION("fallback can be disabled") {
    HybridQueryConfig strict;
    strict.fallback_lexical = false;
    CHECK_THROWS_AS(hybrid_search(rig.lexidx, rig.vecidx, query, broken, strict), ProviderError);
  }
  SECTION("semantic-only search has nothing to fall back to") {
    HybridQueryConfig sem_only;
    sem_only.w_lex = 0.0;
    sem_only.w_sem = 1.0;
    CHECK_THROWS_AS(hybrid_search(rig.lexidx, rig.vecidx, query, broken, sem_only),
                    ProviderError);
  }
  SECTION("a healthy embedder never sets the degraded flag") {
    auto ok = hybrid_search(rig.lexidx, rig.vecidx, query, rig.embedder, HybridQueryConfig{});
    CHECK_FALSE(ok.degraded);
  }
}

TEST_CASE("mismatched index pairs are rejected") {
  Rig rig;
  Corpus other = rig.corpus;
  other.docs[0].body += " extra";
  VecIndex other_vec = build_vector_index(other, rig.embedder);
  CHECK_THROWS_AS(
      hybrid_search(rig.lexidx, other_vec, "aspirin", rig.embedder, HybridQueryConfig{}),
      ConfigError);
}

TEST_CASE("verbose mode decomposes every returned hit") {
  Rig rig;
  HybridQueryConfig cfg;
  cfg.leg_depth = 10;
  cfg.k_final = 3;
  std::vector<QueryDebugRecord> debug;
  auto res = hybrid_search(rig.lexidx, rig.vecidx, "aspirin therapy", rig.embedder, cfg, &debug);

  REQUIRE(debug.size() == res.hits.size());
  auto lex = bm25_search(rig.lexidx, "aspirin therapy", cfg.boosts, cfg.leg_depth);
  for (std::size_t i = 0; i < debug.size(); ++i) {
    const auto& r = debug[i];
    CHECK(r.doc_id == res.hits[i].doc_id);
    CHECK(r.fused == *res.hits[i].fused_score);
    bool in_lex = std::any_of(lex.begin(), lex.end(),
                              [&](const ScoredHit& h) { return h.doc_id == r.doc_id; });
    CHECK(r.lex_raw.has_value() == in_lex);
    CHECK(r.sem_raw.has_value());
    if (r.lex_norm.has_value()) {
      CHECK(*r.lex_norm >= 0.0);
      CHECK(*r.lex_norm <= 1.0);
    }
    json j = debug_record_to_json(r);
    for (const char* key : {"doc_id", "lex_raw", "lex_norm", "sem_raw", "sem_norm", "fused"}) {
      CHECK(j.contains(key));
    }
    if (!r.lex_raw.has_value()) {
      CHECK(j["lex_raw"].is_null());
    }
  }
}
