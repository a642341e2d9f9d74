#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "metagen/lexindex.hpp"
#include "test_util.hpp"

using namespace metagen;
using testutil::fixture_path;
using testutil::write_temp;

namespace {

Document make_doc(std::string id, std::string body, std::string title = {}) {
  Document d;
  d.doc_id = std::move(id);
  d.body = normalize_text(body);
  d.title = normalize_text(title);
  return d;
}

Corpus make_corpus(std::vector<Document> docs) {
  std::sort(docs.begin(), docs.end(),
            [](const Document& a, const Document& b) { return a.doc_id < b.doc_id; });
  Corpus c;
  c.docs = std::move(docs);
  c.source_tag = "inline";
  return c;
}

Corpus spec_example_corpus() {
  return make_corpus({
      make_doc("d1", "aspirin reduces myocardial infarction risk"),
      make_doc("d2", "routers forward packets"),
      make_doc("d3", "mi patients treated with aspirin"),
  });
}

/// Independent scorer: walks the corpus directly, no postings structure.
struct Bm25Oracle {
  const Corpus& corpus;
  std::vector<std::string> fields;
  Bm25Params params;

  double avg_len(const std::string& field) const {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& doc : corpus.docs) {
      auto text = field_text(doc, field);
      if (text.has_value()) {
        sum += static_cast<double>(tokenize(*text).size());
        ++n;
      }
    }
    return n > 0 ? sum / static_cast<double>(n) : 0.0;
  }

  std::size_t docs_containing(const std::string& term, const std::string& field) const {
    std::size_t n = 0;
    for (const auto& doc : corpus.docs) {
      auto text = field_text(doc, field);
      if (!text.has_value()) {
        continue;
      }
      auto toks = tokenize(*text);
      if (std::find(toks.begin(), toks.end(), term) != toks.end()) {
        ++n;
      }
    }
    return n;
  }

  double score(const Document& doc, const std::string& query, const FieldBoosts& boosts) const {
    auto terms = tokenize(query);
    std::sort(terms.begin(), terms.end());
    terms.erase(std::unique(terms.begin(), terms.end()), terms.end());
    double total = 0.0;
    for (const auto& field : fields) {
      double boost = boosts.get(field);
      if (boost == 0.0) {
        continue;
      }
      auto text = field_text(doc, field);
      if (!text.has_value()) {
        continue;
      }
      auto toks = tokenize(*text);
      double len = static_cast<double>(toks.size());
      double avg = avg_len(field);
      for (const auto& term : terms) {
        auto tf = static_cast<double>(std::count(toks.begin(), toks.end(), term));
        if (tf == 0.0) {
          continue;
        }
        std::size_t nt = docs_containing(term, field);
        double idf = std::log(1.0 + (static_cast<double>(corpus.size()) -
                                     static_cast<double>(nt) + 0.5) /
                                        (static_cast<double>(nt) + 0.5));
        double ratio = avg > 0.0 ? len / avg : 1.0;
        total += boost * idf * tf * (params.k1 + 1.0) /
                 (tf + params.k1 * (1.0 - params.b + params.b * ratio));
      }
    }
    return total;
  }

  std::vector<ScoredHit> topk(const std::string& query, const FieldBoosts& boosts,
                              std::size_t k) const {
    std::vector<ScoredHit> hits;
    for (const auto& doc : corpus.docs) {
      double s = score(doc, query, boosts);
      if (s > 0.0) {
        ScoredHit h;
        h.doc_id = doc.doc_id;
        h.lex_score = s;
        hits.push_back(std::move(h));
      }
    }
    std::stable_sort(hits.begin(), hits.end(), [](const ScoredHit& a, const ScoredHit& b) {
      if (*a.lex_score != *b.lex_score) {
        return *a.lex_score > *b.lex_score;
      }
      return a.doc_id < b.doc_id;
    });
    if (hits.size() > k) {
      hits.resize(k);
    }
    return hits;
  }
};

}  // namespace

TEST_CASE("single-document postings and lengths are exact") {
  Corpus c = make_corpus({make_doc("d1", "a b a")});
  LexIndex index = build_lexical_index(c, {"body"});
  REQUIRE(index.fields == std::vector<std::string>{"body"});
  REQUIRE(index.postings.count("a") == 1);
  CHECK(index.postings.at("a").at(0) == std::vector<Posting>{{0, 2}});
  CHECK(index.postings.at("b").at(0) == std::vector<Posting>{{0, 1}});
  CHECK(index.field_lengths[0][0] == 3);
  CHECK(index.avg_field_length[0] == 3.0);
}

TEST_CASE("index statistics equal a brute-force recount") {
  Corpus c = load_corpus(fixture_path("corpus_canonical.jsonl"), "canonical");
  LexIndex index = build_lexical_index(c, {"body", "title", "meta.*", "enriched.*"});

  for (std::size_t f = 0; f < index.fields.size(); ++f) {
    double sum = 0.0;
    std::uint64_t present = 0;
    for (std::size_t d = 0; d < c.size(); ++d) {
      auto text = field_text(c.docs[d], index.fields[f]);
      if (!text.has_value()) {
        CHECK_FALSE(index.field_present[f][d]);
        continue;
      }
      auto toks = tokenize(*text);
      CHECK(index.field_present[f][d]);
      CHECK(index.field_lengths[f][d] == toks.size());
      sum += static_cast<double>(toks.size());
      ++present;

      std::map<std::string, std::uint32_t> counts;
      for (const auto& t : toks) {
        ++counts[t];
      }
      for (const auto& [term, tf] : counts) {
        const auto& plist = index.postings.at(term).at(static_cast<std::uint32_t>(f));
        auto it = std::find_if(plist.begin(), plist.end(),
                               [&](const Posting& p) { return p.doc == d; });
        REQUIRE(it != plist.end());
        CHECK(it->tf == tf);
      }
    }
    CHECK(index.docs_with_field[f] == present);
    REQUIRE(present > 0);
    CHECK(std::abs(index.avg_field_length[f] - sum / static_cast<double>(present)) < 1e-9);
  }

  SECTION("postings are sorted with tf >= 1") {
    for (const auto& [term, by_field] : index.postings) {
      for (const auto& [f, plist] : by_field) {
        for (std::size_t i = 0; i < plist.size(); ++i) {
          CHECK(plist[i].tf >= 1);
          if (i > 0) {
            CHECK(plist[i - 1].doc < plist[i].doc);
          }
        }
      }
    }
  }
}

TEST_CASE("bm25 scores match the stated formula on the worked example") {
  Corpus c = spec_example_corpus();
  LexIndex index = build_lexical_index(c, {"body"});
  auto hits = bm25_search(index, "aspirin infarction", FieldBoosts{}, 10);

  // Hand computation with k1=1.2, b=0.75, N=3, body lengths 5/3/5, avg 13/3:
  // idf(aspirin, n=2) = ln(1.6); idf(infarction, n=1) = ln(8/3);
  // tf-norm at len 5 = 2.2/(1 + 1.2*(0.25 + 0.75*15/13)).
  REQUIRE(hits.size() == 2);
  CHECK(hits[0].doc_id == "d1");
  CHECK(*hits[0].lex_score == Catch::Approx(1.3649283037027442).epsilon(1e-9));
  CHECK(hits[1].doc_id == "d3");
  CHECK(*hits[1].lex_score == Catch::Approx(0.4421744669877645).epsilon(1e-9));
  CHECK_FALSE(hits[0].sem_score.has_value());

  SECTION("query absent from the corpus returns nothing") {
    CHECK(bm25_search(index, "zzz qqq", FieldBoosts{}, 5).empty());
  }
}

TEST_CASE("boosted synonym field raises only the enriched document") {
  Corpus base = spec_example_corpus();
  Corpus enriched = base;
  for (auto& doc : enriched.docs) {
    if (doc.doc_id == "d3") {
      doc.enriched_meta["llm_synonyms"] = {"myocardial infarction"};
    }
  }
  LexIndex plain = build_lexical_index(base, {"body"});
  LexIndex boosted = build_lexical_index(enriched, {"body", "enriched.llm_synonyms"});
  FieldBoosts boosts;
  boosts.boost["enriched.llm_synonyms"] = 2.0;

  auto before = bm25_search(plain, "aspirin infarction", FieldBoosts{}, 10);
  auto after = bm25_search(boosted, "aspirin infarction", boosts, 10);

  auto score_of = [](const std::vector<ScoredHit>& hits, const std::string& id) {
    for (const auto& h : hits) {
      if (h.doc_id == id) {
        return *h.lex_score;
      }
    }
    return 0.0;
  };
  CHECK(score_of(after, "d3") > score_of(before, "d3"));
  CHECK(score_of(after, "d2") == 0.0);
  CHECK(score_of(before, "d2") == 0.0);
}

TEST_CASE("boost linearity holds through the decomposition") {
  Corpus c = load_corpus(fixture_path("corpus_canonical.jsonl"), "canonical");
  LexIndex index = build_lexical_index(c, {"body", "title", "meta.*"});
  std::string query = "aspirin myocardial infarction";

  auto decomp = bm25_decompose(index, query);
  FieldBoosts ones;
  FieldBoosts doubled;
  doubled.boost["title"] = 2.0;

  auto hits1 = bm25_search(index, query, ones, 10);
  auto hits2 = bm25_search(index, query, doubled, 10);
  for (const auto& h : hits1) {
    double manual = 0.0;
    for (const auto& [field, raw] : decomp.at(h.doc_id)) {
      manual += raw;
    }
    CHECK(*h.lex_score == Catch::Approx(manual).epsilon(1e-12));
  }
  for (const auto& h : hits2) {
    const auto& parts = decomp.at(h.doc_id);
    double manual = 0.0;
    for (const auto& [field, raw] : parts) {
      manual += (field == "title" ? 2.0 : 1.0) * raw;
    }
    CHECK(*h.lex_score == Catch::Approx(manual).epsilon(1e-12));
  }
}

TEST_CASE("zero boost is equivalent to omitting the field") {
  Corpus c = make_corpus({
      make_doc("d1", "alpha beta", "gamma delta"),
      make_doc("d2", "gamma gamma", "alpha"),
      make_doc("d3", "delta epsilon", "zeta"),
  });
  LexIndex both = build_lexical_index(c, {"body", "title"});
  LexIndex body_only = build_lexical_index(c, {"body"});
  FieldBoosts zero_title;
  zero_title.boost["title"] = 0.0;

  for (const std::string query : {"alpha", "gamma delta", "zeta", "alpha zeta epsilon"}) {
    auto a = bm25_search(both, query, zero_title, 10);
    auto b = bm25_search(body_only, query, FieldBoosts{}, 10);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].doc_id == b[i].doc_id);
      CHECK(*a[i].lex_score == Catch::Approx(*b[i].lex_score).epsilon(1e-12));
    }
  }
}

TEST_CASE("adding a query-term occurrence never lowers that document's score") {
  Corpus before = make_corpus({
      make_doc("d1", "alpha beta gamma"),
      make_doc("d2", "beta beta delta"),
  });
  Corpus after = before;
  for (auto& doc : after.docs) {
    if (doc.doc_id == "d1") {
      doc.body += " alpha";
    }
  }
  LexIndex ib = build_lexical_index(before, {"body"});
  LexIndex ia = build_lexical_index(after, {"body"});
  auto score_d1 = [](const LexIndex& idx) {
    for (const auto& h : bm25_search(idx, "alpha", FieldBoosts{}, 10)) {
      if (h.doc_id == "d1") {
        return *h.lex_score;
      }
    }
    return 0.0;
  };
  CHECK(score_d1(ia) >= score_d1(ib));
}

TEST_CASE("top-k equals brute-force scoring on a randomized fixture suite") {
  std::mt19937 rng(20240817);
  std::vector<std::string> vocab;
  for (char a = 'a'; a <= 'z'; ++a) {
    vocab.push_back(std::string("w") + a);
  }
  std::uniform_int_distribution<std::size_t> pick(0, vocab.size() - 1);
  std::uniform_int_distribution<int> body_len(5, 30);
  std::uniform_int_distribution<int> coin(0, 1);

  std::vector<Document> docs;
  for (int i = 0; i < 12; ++i) {
    std::string body;
    int len = body_len(rng);
    for (int j = 0; j < len; ++j) {
      body += vocab[pick(rng)] + " ";
    }
    char idbuf[8];
    std::snprintf(idbuf, sizeof(idbuf), "r%02d", i);
    Document d = make_doc(idbuf, body);
    if (coin(rng)) {
      d.title = vocab[pick(rng)] + " " + vocab[pick(rng)];
    }
    if (coin(rng)) {
      d.existing_meta["tag"] = {vocab[pick(rng)]};
    }
    if (coin(rng)) {
      d.enriched_meta["llm_synonyms"] = {vocab[pick(rng)], vocab[pick(rng)]};
    }
    docs.push_back(std::move(d));
  }
  Corpus c = make_corpus(std::move(docs));
  std::vector<std::string> fields = {"body", "title", "meta.*", "enriched.*"};
  LexIndex index = build_lexical_index(c, fields);
  Bm25Oracle oracle{c, expand_fields(c, fields), Bm25Params{}};

  FieldBoosts boosts;
  boosts.boost["title"] = 2.0;
  boosts.boost["enriched.llm_synonyms"] = 1.5;

  for (int q = 0; q < 10; ++q) {
    std::string query = vocab[pick(rng)];
    int extra = coin(rng) + coin(rng);
    for (int e = 0; e < extra; ++e) {
      query += " " + vocab[pick(rng)];
    }
    INFO("query: " << query);
    auto got = bm25_search(index, query, boosts, c.size());
    auto want = oracle.topk(query, boosts, c.size());
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
      CHECK(got[i].doc_id == want[i].doc_id);
      CHECK(*got[i].lex_score == Catch::Approx(*want[i].lex_score).epsilon(1e-9));
    }
  }
}

TEST_CASE("lexindex persists and reloads losslessly") {
  Corpus c = load_corpus(fixture_path("corpus_canonical.jsonl"), "canonical");
  LexIndex index = build_lexical_index(c, {"body", "title", "meta.*", "enriched.*"});
  std::string path = write_temp("lexindex.jsonl", "");
  save_lex_index(index, path);
  LexIndex loaded = load_lex_index(path);

  CHECK(loaded.fields == index.fields);
  CHECK(loaded.doc_ids == index.doc_ids);
  CHECK(loaded.postings == index.postings);
  CHECK(loaded.field_lengths == index.field_lengths);
  CHECK(loaded.params == index.params);
  CHECK(loaded.corpus_checksum == index.corpus_checksum);
  for (std::size_t f = 0; f < index.fields.size(); ++f) {
    CHECK(loaded.avg_field_length[f] == Catch::Approx(index.avg_field_length[f]).epsilon(1e-12));
  }

  auto a = bm25_search(index, "aspirin blood pressure", FieldBoosts{}, 5);
  auto b = bm25_search(loaded, "aspirin blood pressure", FieldBoosts{}, 5);
  CHECK(a == b);

  verify_index_corpus(loaded, c);
  Corpus other = c;
  other.docs[0].body += " tampered";
  CHECK_THROWS_AS(verify_index_corpus(loaded, other), DataError);
}

TEST_CASE("lexindex configuration errors") {
  Corpus c = spec_example_corpus();
  CHECK_THROWS_AS(build_lexical_index(c, {}), ConfigError);
  CHECK_THROWS_AS(build_lexical_index(c, {"meta.absent"}), ConfigError);
  CHECK_THROWS_AS(build_lexical_index(c, {"body"}, Bm25Params{-1.0, 0.75}), ConfigError);
  CHECK_THROWS_AS(build_lexical_index(c, {"body"}, Bm25Params{1.2, 1.5}), ConfigError);

  LexIndex index = build_lexical_index(c, {"body"});
  CHECK_THROWS_AS(bm25_search(index, "aspirin", FieldBoosts{}, 0), ConfigError);
  FieldBoosts all_zero;
  all_zero.boost["body"] = 0.0;
  CHECK_THROWS_AS(bm25_search(index, "aspirin", all_zero, 5), ConfigError);
  FieldBoosts negative;
  negative.boost["body"] = -1.0;
  CHECK_THROWS_AS(bm25_search(index, "aspirin", negative, 5), ConfigError);
}
