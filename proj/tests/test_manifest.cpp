#include <catch2/catch_amalgamated.hpp>

#include <filesystem>

#include "metagen/manifest.hpp"
#include "test_util.hpp"

using namespace metagen;
using testutil::write_temp;

namespace {

ManifestEntry entry(const std::string& command, std::vector<std::string> inputs,
                    std::vector<std::string> outputs) {
  ManifestEntry e;
  e.command = command;
  e.timestamp = "2026-08-17T00:00:00Z";
  e.config_fingerprint = "cafef00dcafef00d";
  for (const auto& p : inputs) {
    e.inputs[p] = "in-" + p;
  }
  for (const auto& p : outputs) {
    e.outputs[p] = "out-" + p;
  }
  return e;
}

}  // namespace

TEST_CASE("manifest entries round-trip through json") {
  ManifestEntry e = entry("enrich", {"corpus.jsonl"}, {"pool.jsonl"});
  e.extra = json{{"llm_stage_ran", false}, {"records", 42}};
  ManifestEntry back = manifest_entry_from_json(manifest_entry_to_json(e), "test");
  CHECK(back == e);
}

TEST_CASE("append then load preserves order and content") {
  std::string path =
      (std::filesystem::temp_directory_path() / "metagen_manifest" / "chain.jsonl").string();
  std::filesystem::remove(path);
  ManifestEntry a = entry("ingest", {"raw.json"}, {"corpus.jsonl"});
  ManifestEntry b = entry("enrich", {"corpus.jsonl"}, {"pool.jsonl"});
  append_manifest(path, a);  // creates parent directories
  append_manifest(path, b);
  std::vector<ManifestEntry> loaded = load_manifest(path);
  REQUIRE(loaded.size() == 2);
  CHECK(loaded[0] == a);
  CHECK(loaded[1] == b);
}

TEST_CASE("malformed manifest lines carry their location") {
  std::string path = write_temp("manifest.jsonl", "{\"command\":\"x\"}\n");
  CHECK_THROWS_MATCHES(load_manifest(path), DataError,
                       Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring(":1")));
}

TEST_CASE("provenance walk climbs from an artifact to its sources") {
  std::vector<ManifestEntry> chain = {
      entry("ingest", {"raw.json"}, {"corpus.jsonl", "benchmark.jsonl"}),
      entry("enrich", {"corpus.jsonl"}, {"pool.jsonl"}),
      entry("index", {"corpus.jsonl", "pool.jsonl"}, {"lex.idx", "vec.idx"}),
      entry("eval", {"corpus.jsonl", "benchmark.jsonl", "pool.jsonl"}, {"report.jsonl"}),
  };

  SECTION("full ancestry of the report, nearest producer first, deduplicated") {
    std::vector<ManifestEntry> walk = provenance_walk(chain, "report.jsonl");
    REQUIRE(walk.size() == 3);
    CHECK(walk[0].command == "eval");
    CHECK(walk[1].command == "ingest");  // corpus + benchmark producer, visited once
    CHECK(walk[2].command == "enrich");
  }
  SECTION("intermediate artifact") {
    std::vector<ManifestEntry> walk = provenance_walk(chain, "vec.idx");
    REQUIRE(walk.size() == 3);
    CHECK(walk[0].command == "index");
    CHECK(walk[1].command == "ingest");
    CHECK(walk[2].command == "enrich");
  }
  SECTION("unknown artifact") {
    CHECK_THROWS_MATCHES(
        provenance_walk(chain, "ghost.idx"), DataError,
        Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring("ghost.idx")));
  }
}

TEST_CASE("provenance walk resolves re-derived artifacts to the feeding run") {
  ManifestEntry ingest1 = entry("ingest", {"raw.json"}, {"corpus.jsonl"});
  ingest1.extra = json{{"run", 1}};
  ManifestEntry enrich = entry("enrich", {"corpus.jsonl"}, {"pool.jsonl"});
  ManifestEntry ingest2 = entry("ingest", {"raw.json"}, {"corpus.jsonl"});
  ingest2.extra = json{{"run", 2}};
  std::vector<ManifestEntry> chain = {ingest1, enrich, ingest2};

  // The pool was built from the first ingest's corpus; the walk must not
  // attribute it to the later re-ingest.
  std::vector<ManifestEntry> pool_walk = provenance_walk(chain, "pool.jsonl");
  REQUIRE(pool_walk.size() == 2);
  CHECK(pool_walk[1].extra.at("run").get<int>() == 1);

  // Asked about the corpus itself, the latest producer wins.
  std::vector<ManifestEntry> corpus_walk = provenance_walk(chain, "corpus.jsonl");
  REQUIRE(corpus_walk.size() == 1);
  CHECK(corpus_walk[0].extra.at("run").get<int>() == 2);
}
