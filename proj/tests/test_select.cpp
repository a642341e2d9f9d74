#include <catch2/catch_amalgamated.hpp>

#include <cstdio>

#include "metagen/select.hpp"
#include "test_util.hpp"

using namespace metagen;

namespace {

// All bodies are identical, so the semantic leg is uniform after minmax and
// retrieval is decided by the lexical leg alone. Each question's code token
// appears only in planted stream values of its gold doc; gold docs sit at the
// high end of the id order so a uniform fused list misses them at small k.
struct PlantedRig {
  Corpus corpus;
  MetaGenPool pool;
  Benchmark benchmark;
  SelectionConfig cfg;
  DeterministicHashEmbedder embedder{32};

  PlantedRig(std::size_t n_docs, std::size_t n_questions,
             std::vector<MetaStream> informative = {MetaStream::llm_synonyms}) {
    for (std::size_t i = 0; i < n_docs; ++i) {
      Document d;
      char buf[8];
      std::snprintf(buf, sizeof(buf), "s%03zu", i);
      d.doc_id = buf;
      d.body = "common filler text";
      corpus.docs.push_back(std::move(d));
    }
    corpus.source_tag = "planted";

    pool.corpus_size = n_docs;
    for (std::size_t q = 0; q < n_questions; ++q) {
      const std::string& gold = corpus.docs[n_docs - n_questions + q].doc_id;
      std::string code = "code" + std::to_string(q);
      BenchmarkItem item;
      item.question = code;
      item.gold_doc_ids = {gold};
      benchmark.items.push_back(std::move(item));
      for (MetaStream s : informative) {
        pool.insert(make_record(gold, s, {code}, "planted"));
      }
    }
    for (const auto& d : corpus.docs) {
      pool.insert(make_record(d.doc_id, MetaStream::keyphrase_stat, {"zzz"}, "noise"));
      pool.insert(make_record(d.doc_id, MetaStream::ner, {"qqq"}, "noise"));
    }

    cfg.query.leg_depth = n_docs;
    cfg.query.k_final = 5;
  }
};

}  // namespace

TEST_CASE("stream evaluation separates informative from noise streams") {
  PlantedRig rig(40, 10);
  IndexCache cache;

  double baseline =
      evaluate_streams(rig.corpus, rig.pool, {}, rig.benchmark, rig.cfg, rig.embedder, &cache);
  double planted = evaluate_streams(rig.corpus, rig.pool, {MetaStream::llm_synonyms},
                                    rig.benchmark, rig.cfg, rig.embedder, &cache);
  double noise = evaluate_streams(rig.corpus, rig.pool, {MetaStream::keyphrase_stat},
                                  rig.benchmark, rig.cfg, rig.embedder, &cache);

  CHECK(baseline == 0.0);
  CHECK(planted == 1.0);
  CHECK(noise == baseline);
  CHECK(cache.entries.size() == 3);

  SECTION("repeated evaluation reuses the cached indexes") {
    double again =
        evaluate_streams(rig.corpus, rig.pool, {}, rig.benchmark, rig.cfg, rig.embedder, &cache);
    CHECK(again == baseline);
    CHECK(cache.entries.size() == 3);
  }
  SECTION("exhaustive k retrieves every existing gold doc") {
    SelectionConfig wide = rig.cfg;
    wide.query.k_final = rig.corpus.size();
    wide.query.leg_depth = rig.corpus.size();
    CHECK(evaluate_streams(rig.corpus, rig.pool, {}, rig.benchmark, wide, rig.embedder) == 1.0);
  }
  SECTION("preconditions") {
    Benchmark empty;
    CHECK_THROWS_AS(
        evaluate_streams(rig.corpus, rig.pool, {}, empty, rig.cfg, rig.embedder),
        DataError);
    CHECK_THROWS_AS(evaluate_streams(rig.corpus, rig.pool, {MetaStream::llm_topics},
                                     rig.benchmark, rig.cfg, rig.embedder),
                    ConfigError);
  }
}

TEST_CASE("forward selection accepts exactly the planted stream") {
  PlantedRig rig(40, 10);
  SelectionTrace trace =
      forward_select(rig.corpus, rig.pool, rig.benchmark, rig.cfg, 0.01, rig.embedder);

  CHECK(trace.final_streams == std::vector<MetaStream>{MetaStream::llm_synonyms});
  CHECK(trace.recall_before == 0.0);
  CHECK(trace.recall_after == 1.0);
  CHECK(trace.k == 5);
  CHECK(trace.epsilon == 0.01);

  // Round 1 evaluates all three candidates; round 2 the two survivors.
  REQUIRE(trace.steps.size() == 5);
  std::size_t rounds = 0;
  for (const auto& s : trace.steps) {
    rounds = std::max(rounds, s.round);
  }
  CHECK(rounds == 2);

  SECTION("every acceptance clears epsilon and raises the baseline") {
    // All steps of a round share one baseline; the winner's recall becomes
    // the next round's baseline.
    double expected = trace.recall_before;
    double next_baseline = trace.recall_before;
    std::size_t round = 0;
    for (const auto& s : trace.steps) {
      if (s.round != round) {
        round = s.round;
        expected = next_baseline;
      }
      CHECK(s.baseline_recall == expected);
      if (s.accepted) {
        CHECK(s.candidate_recall - s.baseline_recall >= trace.epsilon);
        CHECK(s.candidate_recall > expected);
        next_baseline = s.candidate_recall;
      }
    }
    CHECK(next_baseline == trace.recall_after);
  }
  SECTION("the trace is reproducible") {
    SelectionTrace again =
        forward_select(rig.corpus, rig.pool, rig.benchmark, rig.cfg, 0.01, rig.embedder);
    CHECK(again == trace);
  }
  SECTION("audit log carries every evaluation plus the summary") {
    auto lines = selection_audit(trace);
    REQUIRE(lines.size() == trace.steps.size() + 1);
    int accepted = 0;
    for (std::size_t i = 0; i < trace.steps.size(); ++i) {
      CHECK(lines[i]["candidate"] == stream_name(trace.steps[i].candidate));
      accepted += lines[i]["accepted"].get<bool>() ? 1 : 0;
    }
    CHECK(accepted == 1);
    const auto& summary = lines.back();
    CHECK(summary["final_streams"] == std::vector<std::string>{"llm_synonyms"});
    CHECK(summary["recall_before"] == 0.0);
    CHECK(summary["recall_after"] == 1.0);
    CHECK(summary["k"] == 5);
    CHECK(summary["epsilon"] == 0.01);
  }
}

TEST_CASE("an unattainable epsilon accepts nothing and stops after one round") {
  PlantedRig rig(20, 5);
  SelectionTrace trace =
      forward_select(rig.corpus, rig.pool, rig.benchmark, rig.cfg, 1.1, rig.embedder);

  CHECK(trace.final_streams.empty());
  CHECK(trace.steps.size() == 3);
  for (const auto& s : trace.steps) {
    CHECK(s.round == 1);
    CHECK_FALSE(s.accepted);
  }
  CHECK(trace.recall_after == trace.recall_before);
}

TEST_CASE("two individually sufficient streams yield one acceptance") {
  PlantedRig rig(20, 5, {MetaStream::llm_topics, MetaStream::llm_synonyms});
  SelectionTrace trace =
      forward_select(rig.corpus, rig.pool, rig.benchmark, rig.cfg, 0.01, rig.embedder);

  // Tie in round 1 goes to the earlier stream in priority order; the second
  // stream then adds no gain.
  CHECK(trace.final_streams == std::vector<MetaStream>{MetaStream::llm_topics});
  CHECK(trace.recall_after == 1.0);
  for (const auto& s : trace.steps) {
    if (s.candidate == MetaStream::llm_synonyms) {
      CHECK_FALSE(s.accepted);
    }
  }
}

TEST_CASE("forward selection preconditions") {
  PlantedRig rig(10, 2);
  CHECK_THROWS_AS(
      forward_select(rig.corpus, rig.pool, rig.benchmark, rig.cfg, -0.1, rig.embedder),
      ConfigError);
  MetaGenPool empty;
  empty.corpus_size = rig.corpus.size();
  CHECK_THROWS_AS(forward_select(rig.corpus, empty, rig.benchmark, rig.cfg, 0.01, rig.embedder),
                  ConfigError);
}
