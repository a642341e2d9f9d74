#include <catch2/catch_amalgamated.hpp>

#include "metagen/corpus.hpp"
#include "test_util.hpp"

using namespace metagen;
using testutil::fixture_path;
using testutil::write_temp;

TEST_CASE("canonical corpus loads in ascending doc_id order") {
  Corpus c = load_corpus(fixture_path("corpus_canonical.jsonl"), "canonical");
  REQUIRE(c.docs.size() == 3);
  CHECK(c.docs[0].doc_id == "d1");
  CHECK(c.docs[1].doc_id == "d2");
  CHECK(c.docs[2].doc_id == "d3");
  CHECK(c.source_tag == "canonical");
  CHECK(c.docs[0].title == "Aspirin and myocardial infarction");
  CHECK(c.docs[0].existing_meta.at("mesh").size() == 2);
  CHECK(c.docs[1].enriched_meta.at("keyphrase_stat") ==
        std::vector<std::string>{"beta blockers"});
  CHECK(c.docs[2].existing_meta.empty());

  SECTION("out-of-order input is sorted") {
    std::string path = write_temp("unordered.jsonl",
                                  "{\"id\":\"z9\",\"text\":\"last alphabetically\"}\n"
                                  "{\"id\":\"a1\",\"text\":\"first alphabetically\"}\n");
    Corpus u = load_corpus(path, "canonical");
    REQUIRE(u.docs.size() == 2);
    CHECK(u.docs[0].doc_id == "a1");
    CHECK(u.docs[1].doc_id == "z9");
  }
}

TEST_CASE("malformed canonical records are reported with their location") {
  std::string path = write_temp("missing_body.jsonl",
                                "{\"id\":\"ok\",\"text\":\"fine\"}\n"
                                "{\"id\":\"bad\"}\n"
                                "{\"id\":\"empty\",\"text\":\"  \\t \"}\n");
  SECTION("strict load throws naming the record") {
    try {
      load_corpus(path, "canonical");
      FAIL("expected DataError");
    } catch (const DataError& e) {
      std::string msg = e.what();
      CHECK(msg.find(":2") != std::string::npos);
    }
  }
  SECTION("tolerant load keeps counts total") {
    IngestResult r = load_dataset(path, "canonical");
    CHECK(r.records_in == 3);
    CHECK(r.corpus.docs.size() == 1);
    CHECK(r.errors.size() == 2);
    CHECK(r.records_in == r.corpus.docs.size() + r.errors.size());
  }
}

TEST_CASE("duplicate doc_id is an error") {
  std::string path = write_temp("dup.jsonl",
                                "{\"id\":\"d1\",\"text\":\"one\"}\n"
                                "{\"id\":\"d1\",\"text\":\"two\"}\n");
  CHECK_THROWS_AS(load_corpus(path, "canonical"), DataError);
  IngestResult r = load_dataset(path, "canonical");
  CHECK(r.corpus.docs.size() == 1);
  REQUIRE(r.errors.size() == 1);
  CHECK(r.errors[0].message.find("duplicate") != std::string::npos);
}

TEST_CASE("canonical serialization round-trips") {
  Corpus c = load_corpus(fixture_path("corpus_canonical.jsonl"), "canonical");
  std::string serialized = serialize_corpus(c);
  std::string path = write_temp("roundtrip.jsonl", serialized);
  Corpus again = load_corpus(path, "canonical");
  CHECK(again == c);
  CHECK(serialize_corpus(again) == serialized);
}

TEST_CASE("pubmedqa adapter builds documents and benchmark") {
  IngestResult r = load_dataset(fixture_path("pubmedqa_mini.json"), "pubmedqa");
  REQUIRE(r.corpus.docs.size() == 3);
  CHECK(r.records_in == 3);
  CHECK(r.errors.empty());
  CHECK(r.corpus.source_tag == "pubmedqa");

  const Document* d = r.corpus.find("21645374");
  REQUIRE(d != nullptr);
  CHECK(d->body ==
        "Programmed cell death (PCD) is the regulated death of cells within an organism. "
        "The lace plant produces perforations in its leaves through PCD. "
        "Results depicted mitochondrial dynamics in vivo as PCD progresses within the lace plant.");
  CHECK(d->existing_meta.at("mesh") ==
        std::vector<std::string>{"Alismataceae", "Apoptosis", "Mitochondria"});
  CHECK(d->enriched_meta.empty());

  REQUIRE(r.benchmark.items.size() == 3);
  bool found = false;
  for (const auto& item : r.benchmark.items) {
    if (item.gold_doc_ids == std::vector<std::string>{"21619876"}) {
      found = true;
      CHECK(item.gold_answer == "no");
      CHECK(item.question.find("vitamin D") != std::string::npos);
    }
    CHECK(item.gold_doc_ids.size() == 1);
  }
  CHECK(found);
  validate_benchmark(r.benchmark, r.corpus);
}

TEST_CASE("pubmedqa_enriched adapter maps metadata fields to streams") {
  IngestResult r = load_dataset(fixture_path("pubmedqa_enriched_mini.json"), "pubmedqa_enriched");
  REQUIRE(r.corpus.docs.size() == 2);
  const Document* d = r.corpus.find("21645374");
  REQUIRE(d != nullptr);
  CHECK(d->enriched_meta.at("keyphrase_stat") ==
        std::vector<std::string>{"programmed cell death", "lace plant"});
  CHECK(d->enriched_meta.at("llm_topics") ==
        std::vector<std::string>{"plant biology", "cell death"});
  CHECK(d->enriched_meta.at("llm_phrases") ==
        std::vector<std::string>{"mitochondrial dynamics", "leaf perforation"});
  CHECK(d->enriched_meta.at("llm_synonyms") == std::vector<std::string>{"PCD"});
  CHECK(d->enriched_meta.at("llm_acronyms") == std::vector<std::string>{"PCD"});

  const Document* d2 = r.corpus.find("21624425");
  REQUIRE(d2 != nullptr);
  CHECK(d2->enriched_meta.count("llm_acronyms") == 0);  // empty list omitted
}

TEST_CASE("nq adapter reads id, title, text, metadata") {
  IngestResult r = load_dataset(fixture_path("nq_mini.jsonl"), "nq");
  REQUIRE(r.corpus.docs.size() == 3);
  const Document* d = r.corpus.find("doc1");
  REQUIRE(d != nullptr);
  CHECK(d->title == "Photosynthesis");
  CHECK(d->existing_meta.at("category") == std::vector<std::string>{"science"});
  const Document* d2 = r.corpus.find("doc2");
  REQUIRE(d2 != nullptr);
  CHECK(d2->title.empty());
  CHECK(r.benchmark.items.empty());
}

TEST_CASE("squad adapter yields one document per paragraph") {
  IngestResult r = load_dataset(fixture_path("squad_mini.json"), "squad");
  REQUIRE(r.corpus.docs.size() == 3);
  CHECK(r.records_in == 3);

  const Document* p0 = r.corpus.find("Oxygen#p0000");
  REQUIRE(p0 != nullptr);
  CHECK(p0->title == "Oxygen");
  CHECK(p0->body.find("atomic number 8") != std::string::npos);

  REQUIRE(r.benchmark.items.size() == 4);
  std::size_t oxygen_questions = 0;
  for (const auto& item : r.benchmark.items) {
    REQUIRE(item.gold_doc_ids.size() == 1);
    if (item.gold_doc_ids[0] == "Oxygen#p0000") {
      ++oxygen_questions;
    }
    if (item.question.find("boil") != std::string::npos) {
      CHECK(item.gold_doc_ids[0] == "Oxygen#p0001");
      CHECK(item.gold_answer == "90 kelvin");
    }
  }
  CHECK(oxygen_questions == 2);
  validate_benchmark(r.benchmark, r.corpus);
}

TEST_CASE("attach_metadata inserts, replaces, and stays idempotent") {
  Corpus c = load_corpus(fixture_path("corpus_canonical.jsonl"), "canonical");

  SECTION("empty pool leaves the corpus unchanged") {
    MetaGenPool empty;
    Corpus out = attach_metadata(c, empty);
    CHECK(serialize_corpus(out) == serialize_corpus(c));
  }

  SECTION("single record lands in enriched_meta under the stream name") {
    MetaGenPool pool;
    pool.insert(make_record("d1", MetaStream::keyphrase_stat, {"myocardial infarction"}, "test"));
    Corpus out = attach_metadata(c, pool);
    const Document* d = out.find("d1");
    REQUIRE(d != nullptr);
    CHECK(d->enriched_meta.at("keyphrase_stat") ==
          std::vector<std::string>{"myocardial infarction"});
    CHECK(d->existing_meta == c.find("d1")->existing_meta);
  }

  SECTION("double attach is byte-identical to single attach") {
    MetaGenPool pool;
    pool.insert(make_record("d1", MetaStream::llm_topics, {"cardiology", "prevention"}, "test"));
    pool.insert(make_record("d2", MetaStream::keyphrase_stat, {"beta blockade"}, "test"));
    Corpus once = attach_metadata(c, pool);
    Corpus twice = attach_metadata(once, pool);
    CHECK(serialize_corpus(twice) == serialize_corpus(once));
    // d2 already carried a keyphrase_stat value; re-attachment replaces it.
    CHECK(once.find("d2")->enriched_meta.at("keyphrase_stat") ==
          std::vector<std::string>{"beta blockade"});
  }

  SECTION("pool with unknown doc_id is rejected") {
    MetaGenPool pool;
    pool.insert(make_record("nope", MetaStream::ner, {"entity"}, "test"));
    CHECK_THROWS_AS(attach_metadata(c, pool), DataError);
  }
}

TEST_CASE("field naming resolves text and expands wildcards") {
  Corpus c = load_corpus(fixture_path("corpus_canonical.jsonl"), "canonical");

  const Document* d1 = c.find("d1");
  REQUIRE(d1 != nullptr);
  CHECK(field_text(*d1, "body").value() == d1->body);
  CHECK(field_text(*d1, "title").value() == "Aspirin and myocardial infarction");
  CHECK(field_text(*d1, "meta.mesh").value() == "Aspirin Myocardial Infarction");
  CHECK_FALSE(field_text(*d1, "enriched.keyphrase_stat").has_value());
  const Document* d2 = c.find("d2");
  CHECK_FALSE(field_text(*d2, "title").has_value());
  CHECK(field_text(*d2, "enriched.keyphrase_stat").value() == "beta blockers");

  auto fields = expand_fields(c, {"body", "title", "meta.*", "enriched.*"});
  CHECK(fields == std::vector<std::string>{"body", "enriched.keyphrase_stat", "meta.mesh",
                                           "title"});
  CHECK(expand_fields(c, {"meta.mesh"}) == std::vector<std::string>{"meta.mesh"});
  CHECK_THROWS_AS(expand_fields(c, {"meta.absent"}), ConfigError);
  CHECK_THROWS_AS(expand_fields(c, {"bogus"}), ConfigError);
}

TEST_CASE("benchmark files round-trip and validate against a corpus") {
  Benchmark b;
  b.items.push_back({"what reduces infarction risk?", {"d1"}, "aspirin"});
  b.items.push_back({"what lowers blood pressure?", {"d2", "d3"}, ""});
  std::string path = write_temp("bench.jsonl", serialize_benchmark(b));
  Benchmark loaded = load_benchmark(path);
  CHECK(loaded == b);

  Corpus c = load_corpus(fixture_path("corpus_canonical.jsonl"), "canonical");
  validate_benchmark(loaded, c);

  Benchmark bad = loaded;
  bad.items[0].gold_doc_ids.push_back("missing");
  CHECK_THROWS_AS(validate_benchmark(bad, c), DataError);

  std::string no_gold = write_temp("bench_bad.jsonl",
                                   "{\"question\":\"q\",\"gold_ids\":[]}\n");
  CHECK_THROWS_AS(load_benchmark(no_gold), DataError);
}

TEST_CASE("metadata pool records are cleaned and round-trip through JSONL") {
  MetaRecord r = make_record("d1", MetaStream::ner,
                             {"  Aspirin ", "aspirin", "", "Heparin", "Warfarin", "statin"},
                             "gazetteer");
  // trim, case-insensitive dedup, then the ner arity cap of 3
  CHECK(r.values == std::vector<std::string>{"Aspirin", "Heparin", "Warfarin"});

  MetaRecord kp = make_record("d1", MetaStream::keyphrase_stat, {"alpha", "beta"}, "x");
  CHECK(kp.values == std::vector<std::string>{"alpha"});

  MetaGenPool pool;
  pool.corpus_size = 2;
  pool.insert(std::move(r));
  pool.insert(make_record("d2", MetaStream::llm_topics, {"cardiology"}, "llm"));
  pool.insert(make_record("d1", MetaStream::keyphrase_embed, {"phrase", "a title"}, "embed"));

  std::string path = write_temp("pool.jsonl", serialize_pool(pool));
  MetaGenPool loaded = load_pool(path);
  CHECK(loaded.records == pool.records);
  CHECK(loaded.llm_stage_ran);  // llm_topics present
  CHECK(loaded.total_value_count() == 6);

  auto streams = loaded.streams_present();
  REQUIRE(streams.size() == 3);
  CHECK(streams[0] == MetaStream::llm_topics);
  CHECK(streams[1] == MetaStream::keyphrase_embed);
  CHECK(streams[2] == MetaStream::ner);

  MetaGenPool no_llm;
  no_llm.insert(make_record("d1", MetaStream::ner, {"x"}, "g"));
  std::string p2 = write_temp("pool2.jsonl", serialize_pool(no_llm));
  CHECK_FALSE(load_pool(p2).llm_stage_ran);
}

TEST_CASE("records with empty value lists never enter the pool") {
  MetaGenPool pool;
  pool.insert(make_record("d1", MetaStream::llm_synonyms, {"", "   "}, "llm"));
  CHECK(pool.records.empty());
}
