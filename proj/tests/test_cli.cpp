#include <catch2/catch_amalgamated.hpp>

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "metagen/cli.hpp"
#include "metagen/metagen.hpp"
#include "test_util.hpp"

using namespace metagen;
using testutil::fixture_path;
using Catch::Matchers::ContainsSubstring;

namespace {

struct CliResult {
  int code = -1;
  std::string out;
  std::string err;
};

/// One isolated pipeline workspace per rig: artifacts live under a fresh
/// temp directory and the config file points at them.
struct CliRig {
  std::filesystem::path dir;
  RunConfig cfg;
  std::string config_path;

  CliRig() {
    static std::atomic<unsigned> counter{0};
    dir = std::filesystem::temp_directory_path() /
          ("metagen_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(dir);
    cfg.adapter = "canonical";
    cfg.paths.dataset = fixture_path("corpus_canonical.jsonl");
    cfg.paths.corpus = (dir / "corpus.jsonl").string();
    cfg.paths.benchmark = (dir / "benchmark.jsonl").string();
    cfg.paths.pool = (dir / "pool.jsonl").string();
    cfg.paths.index_dir = (dir / "index").string();
    cfg.paths.report = (dir / "report.jsonl").string();
    cfg.paths.selection = (dir / "selection.jsonl").string();
    cfg.paths.manifest = (dir / "manifest.jsonl").string();
    cfg.providers.embedder_id = "deterministic-hash/32";
    cfg.providers.generator_id = "canned/yes";
    cfg.providers.gazetteer = fixture_path("gazetteer.tsv");
    cfg.enrich.llm_threshold = 100;
    // The canned generator cannot produce tag JSON; offline enrichment runs
    // the non-generative streams only.
    cfg.enrich.enable_llm_topics = false;
    cfg.enrich.enable_llm_phrases = false;
    cfg.enrich.enable_llm_synonyms = false;
    cfg.enrich.enable_llm_acronyms = false;
  }

  std::string save() {
    config_path = (dir / "config.json").string();
    save_run_config(cfg, config_path);
    return config_path;
  }

  CliResult run(std::vector<std::string> args) {
    std::ostringstream out;
    std::ostringstream err;
    int code = run_command(std::move(args), out, err);
    return {code, out.str(), err.str()};
  }

  void write_benchmark() {
    Benchmark b;
    b.items.push_back({"does aspirin prevent myocardial infarction", {"d1"}, "yes"});
    b.items.push_back({"do beta blockers reduce mortality in heart failure", {"d2"}, "no"});
    save_benchmark(b, cfg.paths.benchmark);
  }

  EnrichProviders in_process_providers(DeterministicHashEmbedder& embedder,
                                       GazetteerNer& ner) const {
    return {&embedder, &ner, nullptr};
  }
};

}  // namespace

TEST_CASE("cli pipeline composition equals the in-process ladder") {
  CliRig rig;
  rig.save();
  REQUIRE(rig.run({"ingest", "--config", rig.config_path}).code == 0);
  rig.write_benchmark();
  REQUIRE(rig.run({"enrich", "--config", rig.config_path}).code == 0);
  REQUIRE(rig.run({"index", "--config", rig.config_path}).code == 0);
  CliResult eval = rig.run({"eval", "--config", rig.config_path});
  REQUIRE(eval.code == 0);
  CHECK_THAT(eval.out, ContainsSubstring("hybrid-boosted+existing+enriched"));

  // The same ladder computed without any artifact files in between.
  IngestResult ing = load_dataset(fixture_path("corpus_canonical.jsonl"), "canonical");
  REQUIRE(ing.errors.empty());
  DeterministicHashEmbedder embedder(32);
  GazetteerNer ner = GazetteerNer::from_tsv(fixture_path("gazetteer.tsv"));
  MetaGenPool pool = enrich_corpus(ing.corpus, rig.cfg.enrich, {&embedder, &ner, nullptr});
  Benchmark bench = load_benchmark(rig.cfg.paths.benchmark);
  EvalConfig ecfg;
  ecfg.query = rig.cfg.query;
  ecfg.bm25 = rig.cfg.bm25;
  ecfg.boost_factor = rig.cfg.eval.boost_factor;
  EvalReport want =
      run_ladder(ing.corpus, pool, bench, make_ladder(rig.cfg.eval.k), ecfg, embedder, nullptr);

  EvalReport got = load_report(rig.cfg.paths.report);
  CHECK(serialize_report_rows(got) == serialize_report_rows(want));

  // The pool artifact matches the in-process pool byte for byte.
  CHECK(read_file(rig.cfg.paths.pool) == serialize_pool(pool));
}

TEST_CASE("missing prerequisites name the command to run first") {
  CliRig rig;
  rig.save();

  CliResult enrich = rig.run({"enrich", "--config", rig.config_path});
  CHECK(enrich.code == 1);
  CHECK_THAT(enrich.err, ContainsSubstring("run `metagen ingest` first"));

  CliResult search = rig.run({"search", "--config", rig.config_path, "--query", "aspirin"});
  CHECK(search.code == 1);
  CHECK_THAT(search.err, ContainsSubstring("run `metagen index` first"));

  CliResult eval = rig.run({"eval", "--config", rig.config_path});
  CHECK(eval.code == 1);
  CHECK_THAT(eval.err, ContainsSubstring("run `metagen ingest` first"));

  REQUIRE(rig.run({"ingest", "--config", rig.config_path}).code == 0);
  rig.write_benchmark();
  CliResult select = rig.run({"select", "--config", rig.config_path});
  CHECK(select.code == 1);
  CHECK_THAT(select.err, ContainsSubstring("run `metagen enrich` first"));
}

TEST_CASE("flags override the config file") {
  CliRig rig;
  rig.cfg.paths.dataset = (rig.dir / "does-not-exist.jsonl").string();
  rig.save();

  CliResult bad = rig.run({"ingest", "--config", rig.config_path});
  CHECK(bad.code == 1);
  CliResult good = rig.run({"ingest", "--config", rig.config_path, "--dataset",
                            fixture_path("corpus_canonical.jsonl")});
  CHECK(good.code == 0);
  CHECK_THAT(good.out, ContainsSubstring("ingested 3 documents"));

  rig.write_benchmark();
  REQUIRE(rig.run({"enrich", "--config", rig.config_path}).code == 0);
  REQUIRE(rig.run({"index", "--config", rig.config_path}).code == 0);

  CliResult eval = rig.run({"eval", "--config", rig.config_path, "--variant", "hybrid",
                            "--variant", "knn"});
  REQUIRE(eval.code == 0);
  EvalReport report = load_report(rig.cfg.paths.report);
  REQUIRE(report.rows.size() == 2);
  CHECK(report.rows[0].spec.name == "hybrid");  // config-order, as given on the command line
  CHECK(report.rows[1].spec.name == "knn");

  CliResult searched = rig.run(
      {"search", "--config", rig.config_path, "--query", "aspirin stroke", "--json", "-k", "1"});
  REQUIRE(searched.code == 0);
  std::istringstream lines(searched.out);
  std::string line;
  std::size_t hits = 0;
  while (std::getline(lines, line)) {
    if (!line.empty()) {
      ++hits;
    }
  }
  CHECK(hits == 1);
}

TEST_CASE("search output matches the in-process hybrid ranking") {
  CliRig rig;
  rig.save();
  REQUIRE(rig.run({"ingest", "--config", rig.config_path}).code == 0);
  REQUIRE(rig.run({"enrich", "--config", rig.config_path}).code == 0);
  REQUIRE(rig.run({"index", "--config", rig.config_path}).code == 0);

  const std::string query = "does aspirin prevent myocardial infarction";
  CliResult searched =
      rig.run({"search", "--config", rig.config_path, "--query", query, "--json"});
  REQUIRE(searched.code == 0);

  std::vector<std::string> cli_ids;
  std::vector<json> cli_records;
  std::istringstream lines(searched.out);
  std::string line;
  while (std::getline(lines, line)) {
    if (line.empty()) {
      continue;
    }
    json rec = json::parse(line);
    cli_ids.push_back(rec.at("doc_id").get<std::string>());
    cli_records.push_back(rec);
  }

  LexIndex lex = load_lex_index(rig.cfg.paths.index_dir + "/lex.idx");
  VecIndex vec = load_vec_index(rig.cfg.paths.index_dir + "/vec.idx");
  DeterministicHashEmbedder embedder(32);
  std::vector<QueryDebugRecord> debug;
  HybridResult want = hybrid_search(lex, vec, query, embedder, rig.cfg.query, &debug);
  REQUIRE(want.hits.size() == cli_ids.size());
  for (std::size_t i = 0; i < cli_ids.size(); ++i) {
    CHECK(cli_ids[i] == want.hits[i].doc_id);
    CHECK(cli_records[i].at("fused").get<double>() ==
          want.hits[i].fused_score.value());
  }

  // The human-readable table agrees on the ranking.
  CliResult table = rig.run({"search", "--config", rig.config_path, "--query", query});
  REQUIRE(table.code == 0);
  CHECK_THAT(table.out, ContainsSubstring("lex_norm"));
  std::size_t prev = 0;
  for (const std::string& id : cli_ids) {
    std::size_t at = table.out.find(id, prev);
    REQUIRE(at != std::string::npos);
    prev = at;
  }
}

TEST_CASE("reruns over identical inputs are byte-identical") {
  CliRig a;
  a.save();
  REQUIRE(a.run({"ingest", "--config", a.config_path}).code == 0);
  a.write_benchmark();
  REQUIRE(a.run({"enrich", "--config", a.config_path}).code == 0);
  REQUIRE(a.run({"index", "--config", a.config_path}).code == 0);
  REQUIRE(a.run({"eval", "--config", a.config_path}).code == 0);

  CliRig b;
  b.save();
  REQUIRE(b.run({"ingest", "--config", b.config_path}).code == 0);
  b.write_benchmark();
  REQUIRE(b.run({"enrich", "--config", b.config_path}).code == 0);
  REQUIRE(b.run({"index", "--config", b.config_path}).code == 0);
  REQUIRE(b.run({"eval", "--config", b.config_path}).code == 0);

  CHECK(read_file(a.cfg.paths.corpus) == read_file(b.cfg.paths.corpus));
  CHECK(read_file(a.cfg.paths.pool) == read_file(b.cfg.paths.pool));
  CHECK(read_file(a.cfg.paths.index_dir + "/stats.json") ==
        read_file(b.cfg.paths.index_dir + "/stats.json"));
  CHECK(serialize_report_rows(load_report(a.cfg.paths.report)) ==
        serialize_report_rows(load_report(b.cfg.paths.report)));
}

TEST_CASE("enrich manifest records the llm gate decision") {
  CliRig rig;
  rig.cfg.enrich.enable_llm_topics = true;  // generative stream present but gated out
  rig.cfg.enrich.llm_threshold = 2;         // corpus has 3 docs
  rig.save();
  REQUIRE(rig.run({"ingest", "--config", rig.config_path}).code == 0);
  REQUIRE(rig.run({"enrich", "--config", rig.config_path}).code == 0);

  std::vector<ManifestEntry> entries = load_manifest(rig.cfg.paths.manifest);
  REQUIRE(entries.size() == 2);
  CHECK(entries[1].command == "enrich");
  CHECK(entries[1].extra.at("llm_stage_ran").get<bool>() == false);
  CHECK(entries[1].inputs.count(rig.cfg.paths.corpus) == 1);
  CHECK(entries[1].outputs.count(rig.cfg.paths.pool) == 1);
}

TEST_CASE("cli manifest supports a provenance walk from the report") {
  CliRig rig;
  rig.save();
  REQUIRE(rig.run({"ingest", "--config", rig.config_path}).code == 0);
  rig.write_benchmark();
  REQUIRE(rig.run({"enrich", "--config", rig.config_path}).code == 0);
  REQUIRE(rig.run({"index", "--config", rig.config_path}).code == 0);
  REQUIRE(rig.run({"eval", "--config", rig.config_path}).code == 0);

  std::vector<ManifestEntry> entries = load_manifest(rig.cfg.paths.manifest);
  std::vector<ManifestEntry> walk = provenance_walk(entries, rig.cfg.paths.report);
  std::vector<std::string> commands;
  for (const ManifestEntry& e : walk) {
    commands.push_back(e.command);
  }
  CHECK(commands == std::vector<std::string>{"eval", "ingest", "enrich"});
  // Input checksums recorded at eval time match the artifacts the producers
  // actually wrote.
  const ManifestEntry& eval_entry = walk[0];
  CHECK(eval_entry.inputs.at(rig.cfg.paths.corpus) == checksum_file(rig.cfg.paths.corpus));
  CHECK(eval_entry.inputs.at(rig.cfg.paths.pool) == checksum_file(rig.cfg.paths.pool));
}

TEST_CASE("eval exit code flags errored rows") {
  CliRig rig;
  rig.save();
  REQUIRE(rig.run({"ingest", "--config", rig.config_path}).code == 0);
  rig.write_benchmark();
  REQUIRE(rig.run({"index", "--config", rig.config_path}).code == 0);

  // No pool artifact: enriched variants must fail row-by-row, others run.
  CliResult eval = rig.run({"eval", "--config", rig.config_path});
  CHECK(eval.code == 2);
  CHECK_THAT(eval.err, ContainsSubstring("hybrid+enriched"));
  CHECK_THAT(eval.err, ContainsSubstring("enrich"));
  EvalReport report = load_report(rig.cfg.paths.report);
  REQUIRE(report.rows.size() == 8);
  CHECK(report.rows[0].error.empty());                   // knn needs no metadata
  CHECK(report.rows[0].retrieval_accuracy.has_value());
  CHECK(!report.rows[3].error.empty());                  // hybrid+enriched
}

TEST_CASE("search rejects an embedder that does not match the index") {
  CliRig rig;
  rig.save();
  REQUIRE(rig.run({"ingest", "--config", rig.config_path}).code == 0);
  REQUIRE(rig.run({"enrich", "--config", rig.config_path}).code == 0);
  REQUIRE(rig.run({"index", "--config", rig.config_path}).code == 0);

  rig.cfg.providers.embedder_id = "deterministic-hash/16";
  rig.save();
  CliResult searched = rig.run({"search", "--config", rig.config_path, "--query", "aspirin"});
  CHECK(searched.code == 1);
  CHECK_THAT(searched.err, ContainsSubstring("deterministic-hash/32"));
  CHECK_THAT(searched.err, ContainsSubstring("deterministic-hash/16"));
}

TEST_CASE("usage errors and help do not reach the pipeline") {
  CliRig rig;
  std::ostringstream out;
  std::ostringstream err;
  CHECK(run_command({"transmogrify", "--config", "x"}, out, err) != 0);

  std::ostringstream help_out;
  std::ostringstream help_err;
  CHECK(run_command({"--help"}, help_out, help_err) == 0);
  CHECK_THAT(help_out.str(), ContainsSubstring("ingest"));
  CHECK_THAT(help_out.str(), ContainsSubstring("eval"));

  CliResult missing_cfg = rig.run({"eval", "--config", (rig.dir / "nope.json").string()});
  CHECK(missing_cfg.code == 1);
  CHECK_THAT(missing_cfg.err, ContainsSubstring("not found"));
}
