#include <catch2/catch_amalgamated.hpp>

#include <cstdio>

#include "metagen/evalharness.hpp"
#include "test_util.hpp"

using namespace metagen;
using testutil::fixture_path;
using testutil::write_temp;

namespace {

// Thirty docs over a shared vocabulary. Ten questions: the first five are
// answerable from gold doc bodies, the last five only via a planted
// llm_synonyms stream. Gold docs sit at the high end of the id order, so a
// leg that carries no signal cannot reach them inside top-5.
struct LadderRig {
  Corpus corpus;
  MetaGenPool pool;
  Benchmark benchmark;
  EvalConfig cfg;
  DeterministicHashEmbedder embedder{32};

  LadderRig() {
    const std::size_t n_docs = 30;
    const std::size_t n_body_q = 5;
    const std::size_t n_pool_q = 5;
    for (std::size_t i = 0; i < n_docs; ++i) {
      Document d;
      char buf[8];
      std::snprintf(buf, sizeof(buf), "s%03zu", i);
      d.doc_id = buf;
      d.body = "common filler text";
      if (i < 10) {
        d.existing_meta["tag"] = {"grouptag"};
      }
      corpus.docs.push_back(std::move(d));
    }
    corpus.source_tag = "planted-ladder";
    pool.corpus_size = n_docs;

    for (std::size_t q = 0; q < n_body_q; ++q) {
      auto& gold = corpus.docs[n_docs - n_body_q - n_pool_q + q];
      std::string code = "bodycode" + std::to_string(q);
      gold.body += " " + code;
      BenchmarkItem item;
      item.question = code;
      item.gold_doc_ids = {gold.doc_id};
      item.gold_answer = "yes";
      benchmark.items.push_back(std::move(item));
    }
    for (std::size_t q = 0; q < n_pool_q; ++q) {
      const auto& gold = corpus.docs[n_docs - n_pool_q + q];
      std::string code = "poolcode" + std::to_string(q);
      pool.insert(make_record(gold.doc_id, MetaStream::llm_synonyms, {code}, "planted"));
      BenchmarkItem item;
      item.question = code;
      item.gold_doc_ids = {gold.doc_id};
      item.gold_answer = q < 3 ? "yes" : "";
      benchmark.items.push_back(std::move(item));
    }

    cfg.query.leg_depth = n_docs;
  }
};

double acc(const EvalRow& row) {
  REQUIRE(row.error.empty());
  REQUIRE(row.retrieval_accuracy.has_value());
  return *row.retrieval_accuracy;
}

}  // namespace

TEST_CASE("recall matches the frozen recount fixture exactly") {
  json fixture = json::parse(read_file(fixture_path("recall_cases.json")));
  Benchmark bench;
  std::vector<std::vector<std::string>> results;
  for (const auto& q : fixture["questions"]) {
    BenchmarkItem item;
    item.question = q["question"].get<std::string>();
    item.gold_doc_ids = q["gold_doc_ids"].get<std::vector<std::string>>();
    bench.items.push_back(std::move(item));
    results.push_back(q["ranked_ids"].get<std::vector<std::string>>());
  }
  for (const auto& [k_str, want] : fixture["expected"].items()) {
    auto k = static_cast<std::size_t>(std::stoul(k_str));
    INFO("k = " << k);
    CHECK(recall_at_k(results, bench, k) == want.get<double>());
  }

  SECTION("missing result lists are an error") {
    results.pop_back();
    CHECK_THROWS_AS(recall_at_k(results, bench, 1), DataError);
  }
}

TEST_CASE("recall arithmetic on hand cases") {
  Benchmark bench;
  std::vector<std::vector<std::string>> results;
  for (int i = 0; i < 4; ++i) {
    BenchmarkItem item;
    item.question = "q" + std::to_string(i);
    item.gold_doc_ids = {"gold" + std::to_string(i)};
    bench.items.push_back(std::move(item));
  }
  results = {{"gold0", "x"}, {"x", "gold1"}, {"x", "y"}, {"gold3"}};
  CHECK(recall_at_k(results, bench, 1) == 0.5);
  CHECK(recall_at_k(results, bench, 2) == 0.75);

  SECTION("all gold at rank 1 gives 1.0 at k=1") {
    results = {{"gold0"}, {"gold1"}, {"gold2"}, {"gold3"}};
    CHECK(recall_at_k(results, bench, 1) == 1.0);
  }
  SECTION("result lists shorter than k are permitted") {
    results = {{}, {}, {}, {}};
    CHECK(recall_at_k(results, bench, 5) == 0.0);
  }
}

TEST_CASE("the ladder declares eight progressively augmented variants") {
  auto ladder = pubmedqa_ladder();
  REQUIRE(ladder.size() == 8);
  CHECK(ladder == make_ladder(1));
  CHECK(ladder[0].legs == VariantLegs::knn_only);
  for (std::size_t i = 1; i < ladder.size(); ++i) {
    CHECK(ladder[i].legs == VariantLegs::hybrid);
  }
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK_FALSE(ladder[i].boosted);
  }
  for (std::size_t i = 5; i < 8; ++i) {
    CHECK(ladder[i].boosted);
  }
  std::set<std::string> names;
  for (const auto& v : ladder) {
    CHECK(v.k == 1);
    names.insert(v.name);
  }
  CHECK(names.size() == 8);
}

TEST_CASE("the ladder runs end to end and metadata shows its value") {
  LadderRig rig;
  auto report = run_ladder(rig.corpus, rig.pool, rig.benchmark, make_ladder(5), rig.cfg,
                           rig.embedder);

  REQUIRE(report.rows.size() == 8);
  for (const auto& row : report.rows) {
    CHECK(row.error.empty());
    REQUIRE(row.retrieval_accuracy.has_value());
    CHECK(*row.retrieval_accuracy >= 0.0);
    CHECK(*row.retrieval_accuracy <= 1.0);
  }
  double knn = acc(report.rows[0]);
  double hybrid_plain = acc(report.rows[1]);
  double hybrid_enriched = acc(report.rows[3]);
  double hybrid_both = acc(report.rows[4]);

  // Body questions resolve lexically, pool questions only with enrichment.
  CHECK(hybrid_plain >= knn);
  CHECK(hybrid_plain == 0.5);
  CHECK(hybrid_enriched > hybrid_plain);
  CHECK(hybrid_enriched == 1.0);
  CHECK(hybrid_both == 1.0);

  SECTION("reruns reproduce identical rows and fingerprint") {
    auto again = run_ladder(rig.corpus, rig.pool, rig.benchmark, make_ladder(5), rig.cfg,
                            rig.embedder);
    CHECK(serialize_report_rows(again) == serialize_report_rows(report));
    CHECK(again.fingerprint == report.fingerprint);
  }
  SECTION("fingerprint names the knobs that shape the rows") {
    const auto& fp = report.fingerprint;
    CHECK(fp["dataset"] == "planted-ladder");
    CHECK(fp["doc_count"] == 30);
    CHECK(fp["question_count"] == 10);
    CHECK(fp["embedder"] == "deterministic-hash/32");
    CHECK(fp["k1"] == 1.2);
    CHECK(fp["variants"].size() == 8);
  }
}

TEST_CASE("knn_only equals hybrid when the lexical weight is zero") {
  LadderRig rig;
  EvalConfig cfg = rig.cfg;
  cfg.query.w_lex = 0.0;
  cfg.query.w_sem = 1.0;
  std::vector<VariantSpec> variants = {
      {"knn", VariantLegs::knn_only, VariantMetadata::none, false, 5},
      {"hybrid", VariantLegs::hybrid, VariantMetadata::none, false, 5},
  };
  auto report = run_ladder(rig.corpus, rig.pool, rig.benchmark, variants, cfg, rig.embedder);
  REQUIRE(report.rows.size() == 2);
  CHECK(acc(report.rows[0]) == acc(report.rows[1]));
}

TEST_CASE("enriched variants over an empty pool fail row-locally") {
  LadderRig rig;
  MetaGenPool empty;
  empty.corpus_size = rig.corpus.size();
  auto report = run_ladder(rig.corpus, empty, rig.benchmark, make_ladder(5), rig.cfg,
                           rig.embedder);

  REQUIRE(report.rows.size() == 8);
  for (const auto& row : report.rows) {
    bool needs_pool = row.spec.metadata == VariantMetadata::enriched ||
                      row.spec.metadata == VariantMetadata::existing_plus_enriched;
    if (needs_pool) {
      CHECK_FALSE(row.retrieval_accuracy.has_value());
      CHECK(row.error.find("enrich") != std::string::npos);
    } else {
      CHECK(row.error.empty());
      CHECK(row.retrieval_accuracy.has_value());
    }
  }

  SECTION("empty variant list produces an empty report with a fingerprint") {
    auto none = run_ladder(rig.corpus, empty, rig.benchmark, {}, rig.cfg, rig.embedder);
    CHECK(none.rows.empty());
    CHECK(none.fingerprint.contains("dataset"));
    CHECK_FALSE(none.timestamp.empty());
  }
}

TEST_CASE("rag accuracy scores decision matches over answerable questions") {
  LadderRig rig;
  EvalConfig cfg = rig.cfg;
  cfg.rag_enabled = true;
  FnGenerationProvider always_yes(
      [](const std::string&, const std::string&, double) { return std::string("Yes."); },
      "canned-yes");

  std::vector<VariantSpec> variants = {
      {"hybrid+enriched", VariantLegs::hybrid, VariantMetadata::enriched, false, 5}};
  auto report =
      run_ladder(rig.corpus, rig.pool, rig.benchmark, variants, cfg, rig.embedder, &always_yes);

  REQUIRE(report.rows.size() == 1);
  const auto& row = report.rows[0];
  CHECK(row.error.empty());
  REQUIRE(row.rag_accuracy.has_value());
  // Eight questions carry a parseable "yes" gold; two have no reference.
  CHECK(*row.rag_accuracy == 1.0);

  SECTION("rag stays unset when disabled or without a provider") {
    cfg.rag_enabled = false;
    auto off = run_ladder(rig.corpus, rig.pool, rig.benchmark, variants, cfg, rig.embedder,
                          &always_yes);
    CHECK_FALSE(off.rows[0].rag_accuracy.has_value());
  }
}

TEST_CASE("reports persist, render, and diff") {
  LadderRig rig;
  auto report = run_ladder(rig.corpus, rig.pool, rig.benchmark, make_ladder(5), rig.cfg,
                           rig.embedder);
  std::string path = write_temp("report.jsonl", "");
  save_report(report, path);
  EvalReport loaded = load_report(path);

  CHECK(loaded.dataset == report.dataset);
  CHECK(loaded.timestamp == report.timestamp);
  CHECK(loaded.fingerprint == report.fingerprint);
  CHECK(loaded.rows == report.rows);

  SECTION("the table mirrors the variant order") {
    std::string table = report_table(report);
    std::size_t pos = 0;
    for (const auto& row : report.rows) {
      auto at = table.find(row.spec.name + " ", pos);
      REQUIRE(at != std::string::npos);
      pos = at;
    }
  }
  SECTION("self-comparison reports zero deltas") {
    std::string diff = compare_reports(report, loaded);
    CHECK(diff.find("+0.0000") != std::string::npos);
    CHECK(diff.find("not in reference") == std::string::npos);
    CHECK(diff.find("only in reference") == std::string::npos);
  }
}

TEST_CASE("ingested enrichment lifts into a pool") {
  IngestResult ing = load_dataset(fixture_path("pubmedqa_enriched_mini.json"), "pubmedqa_enriched");
  REQUIRE(ing.errors.empty());
  MetaGenPool pool = pool_from_corpus(ing.corpus);

  CHECK(pool.corpus_size == ing.corpus.size());
  CHECK(pool.llm_stage_ran);
  auto streams = pool.streams_present();
  CHECK(std::find(streams.begin(), streams.end(), MetaStream::llm_topics) != streams.end());
  CHECK(std::find(streams.begin(), streams.end(), MetaStream::keyphrase_stat) != streams.end());

  // Attaching the lifted pool onto the stripped corpus restores the fields.
  Corpus restored = attach_metadata(strip_enrichment(ing.corpus), pool);
  for (const auto& doc : ing.corpus.docs) {
    const Document* back = restored.find(doc.doc_id);
    REQUIRE(back != nullptr);
    CHECK(back->enriched_meta.size() == doc.enriched_meta.size());
  }
}
