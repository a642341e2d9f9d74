#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <ostream>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "metagen/config.hpp"
#include "metagen/corpus.hpp"
#include "metagen/enrich.hpp"
#include "metagen/evalharness.hpp"
#include "metagen/fusion.hpp"
#include "metagen/http_providers.hpp"
#include "metagen/lexindex.hpp"
#include "metagen/manifest.hpp"
#include "metagen/pool.hpp"
#include "metagen/select.hpp"
#include "metagen/vecindex.hpp"

namespace metagen {

namespace detail {

inline void ensure_parent(const std::string& path) {
  std::filesystem::path p(path);
  if (p.has_parent_path()) {
    std::filesystem::create_directories(p.parent_path());
  }
}

inline RunConfig load_cli_config(const std::string& path) {
  if (!std::filesystem::exists(path)) {
    throw ConfigError("config file '" + path + "' not found");
  }
  return load_run_config(path);
}

/// Artifact gate: a path must be configured and exist before a command can
/// consume it; the error names the command that produces it.
inline void require_artifact(const std::string& path, const std::string& what,
                             const std::string& producer) {
  if (path.empty()) {
    throw ConfigError("config has no path for the " + what);
  }
  if (!std::filesystem::exists(path)) {
    throw DataError(what + " missing at '" + path + "'; run `metagen " + producer + "` first");
  }
}

inline void record_manifest(const RunConfig& cfg, const std::string& command,
                            const std::vector<std::string>& inputs,
                            const std::vector<std::string>& outputs, json extra) {
  if (cfg.paths.manifest.empty()) {
    return;  // provenance log disabled explicitly
  }
  ManifestEntry entry;
  entry.command = command;
  entry.timestamp = iso8601_utc_now();
  entry.config_fingerprint = config_fingerprint(cfg);
  for (const std::string& p : inputs) {
    entry.inputs[p] = checksum_file(p);
  }
  for (const std::string& p : outputs) {
    entry.outputs[p] = checksum_file(p);
  }
  entry.extra = std::move(extra);
  append_manifest(cfg.paths.manifest, entry);
}

inline std::unique_ptr<EmbeddingProvider> embedder_from(const ProviderConfig& p) {
  return make_embedding_provider(p.embedder_id, p.embedder_endpoint, p.embedder_dim);
}

inline std::string lex_index_path(const RunConfig& cfg) { return cfg.paths.index_dir + "/lex.idx"; }
inline std::string vec_index_path(const RunConfig& cfg) { return cfg.paths.index_dir + "/vec.idx"; }
inline std::string index_stats_path(const RunConfig& cfg) {
  return cfg.paths.index_dir + "/stats.json";
}

}  // namespace detail

/// Deterministic shape summary of an index pair; reruns over identical
/// inputs must reproduce it byte for byte.
inline json index_stats_json(const LexIndex& lex, const VecIndex& vec) {
  std::size_t postings = 0;
  for (const auto& [term, by_field] : lex.postings) {
    (void)term;
    for (const auto& [field, list] : by_field) {
      (void)field;
      postings += list.size();
    }
  }
  json j;
  j["lex"] = {{"docs", lex.doc_count()},
              {"fields", lex.fields},
              {"terms", lex.postings.size()},
              {"postings", postings},
              {"avg_field_length", lex.avg_field_length},
              {"k1", lex.params.k1},
              {"b", lex.params.b},
              {"corpus_checksum", lex.corpus_checksum}};
  j["vec"] = {{"docs", vec.size()},
              {"dim", vec.dim},
              {"provider", vec.provider_id},
              {"recipe", vec.embed_text_recipe},
              {"corpus_checksum", vec.corpus_checksum}};
  return j;
}

inline int cmd_ingest(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  if (cfg.paths.dataset.empty()) {
    throw ConfigError("config has no path for the raw dataset");
  }
  if (!std::filesystem::exists(cfg.paths.dataset)) {
    throw DataError("raw dataset missing at '" + cfg.paths.dataset +
                    "'; set paths.dataset or --dataset to an existing file");
  }
  if (cfg.paths.corpus.empty()) {
    throw ConfigError("config has no path for the corpus artifact");
  }
  IngestResult result = load_dataset(cfg.paths.dataset, cfg.adapter);
  for (const RecordError& e : result.errors) {
    err << "skipped " << e.record_ref << ": " << e.message << "\n";
  }
  if (result.corpus.docs.empty()) {
    throw DataError("no documents ingested from '" + cfg.paths.dataset + "'");
  }
  detail::ensure_parent(cfg.paths.corpus);
  save_corpus(result.corpus, cfg.paths.corpus);
  std::vector<std::string> outputs = {cfg.paths.corpus};
  if (!cfg.paths.benchmark.empty() && !result.benchmark.items.empty()) {
    detail::ensure_parent(cfg.paths.benchmark);
    save_benchmark(result.benchmark, cfg.paths.benchmark);
    outputs.push_back(cfg.paths.benchmark);
  }
  detail::record_manifest(cfg, "ingest", {cfg.paths.dataset}, outputs,
                          json{{"adapter", cfg.adapter},
                               {"documents", result.corpus.docs.size()},
                               {"questions", result.benchmark.items.size()},
                               {"records_skipped", result.errors.size()}});
  out << "ingested " << result.corpus.docs.size() << " documents and "
      << result.benchmark.items.size() << " questions (" << result.errors.size()
      << " records skipped)\n";
  return 0;
}

inline int cmd_enrich(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  detail::require_artifact(cfg.paths.corpus, "corpus artifact", "ingest");
  if (cfg.paths.pool.empty()) {
    throw ConfigError("config has no path for the pool artifact");
  }
  Corpus corpus = load_corpus(cfg.paths.corpus, "canonical");

  std::unique_ptr<EmbeddingProvider> embedder;
  if (cfg.enrich.enable_keyphrase_embed) {
    embedder = detail::embedder_from(cfg.providers);
  }
  GazetteerNer ner;
  bool has_ner = false;
  if (cfg.enrich.enable_ner) {
    if (cfg.providers.gazetteer.empty()) {
      throw ConfigError("enrich.ner is enabled but providers.gazetteer is not set");
    }
    ner = GazetteerNer::from_tsv(cfg.providers.gazetteer);
    has_ner = true;
  }
  std::unique_ptr<GenerationProvider> llm;
  bool gated_in = static_cast<std::int64_t>(corpus.size()) <= cfg.enrich.llm_threshold;
  if (cfg.enrich.any_llm_enabled() && gated_in) {
    llm = make_generation_provider(cfg.providers.generator_id, cfg.providers.generator_endpoint,
                                   cfg.providers.retry);
  }

  MetaGenPool pool =
      enrich_corpus(corpus, cfg.enrich, {embedder.get(), has_ner ? &ner : nullptr, llm.get()});
  for (const auto& [doc_id, reason] : pool.rejects) {
    err << "dropped values for " << doc_id << ": " << reason << "\n";
  }
  detail::ensure_parent(cfg.paths.pool);
  save_pool(pool, cfg.paths.pool);

  std::vector<std::string> inputs = {cfg.paths.corpus};
  if (has_ner) {
    inputs.push_back(cfg.providers.gazetteer);
  }
  detail::record_manifest(cfg, "enrich", inputs, {cfg.paths.pool},
                          json{{"records", pool.records.size()},
                               {"llm_stage_ran", pool.llm_stage_ran},
                               {"failure_counts", pool.failure_counts}});
  out << "enriched " << corpus.size() << " documents into " << pool.records.size()
      << " metadata records (llm stage " << (pool.llm_stage_ran ? "ran" : "skipped") << ")\n";
  return 0;
}

inline int cmd_index(const RunConfig& cfg, std::ostream& out, std::ostream&) {
  detail::require_artifact(cfg.paths.corpus, "corpus artifact", "ingest");
  if (cfg.paths.index_dir.empty()) {
    throw ConfigError("config has no path for the index directory");
  }
  Corpus corpus = load_corpus(cfg.paths.corpus, "canonical");
  std::vector<std::string> inputs = {cfg.paths.corpus};
  bool with_pool = !cfg.paths.pool.empty() && std::filesystem::exists(cfg.paths.pool);
  if (with_pool) {
    corpus = attach_metadata(corpus, load_pool(cfg.paths.pool));
    inputs.push_back(cfg.paths.pool);
  }

  LexIndex lex = build_lexical_index(corpus, cfg.index.lex_fields, cfg.bm25);
  std::unique_ptr<EmbeddingProvider> embedder = detail::embedder_from(cfg.providers);
  VecIndex vec = build_vector_index(corpus, *embedder, cfg.index.embed_recipe);

  std::filesystem::create_directories(cfg.paths.index_dir);
  save_lex_index(lex, detail::lex_index_path(cfg));
  save_vec_index(vec, detail::vec_index_path(cfg));
  json stats = index_stats_json(lex, vec);
  write_file(detail::index_stats_path(cfg), stats.dump(2) + "\n");

  detail::record_manifest(
      cfg, "index", inputs,
      {detail::lex_index_path(cfg), detail::vec_index_path(cfg), detail::index_stats_path(cfg)},
      json{{"with_pool", with_pool}, {"stats", stats}});
  out << "indexed " << lex.doc_count() << " documents: " << lex.postings.size()
      << " lexical terms over " << lex.fields.size() << " fields, " << vec.size()
      << " vectors at dim " << vec.dim << (with_pool ? " (pool attached)" : "") << "\n";
  return 0;
}

inline int cmd_search(const RunConfig& cfg, const std::string& query, bool as_json,
                      std::ostream& out, std::ostream&) {
  detail::require_artifact(detail::lex_index_path(cfg), "lexical index", "index");
  detail::require_artifact(detail::vec_index_path(cfg), "vector index", "index");
  LexIndex lex = load_lex_index(detail::lex_index_path(cfg));
  VecIndex vec = load_vec_index(detail::vec_index_path(cfg));
  std::unique_ptr<EmbeddingProvider> embedder = detail::embedder_from(cfg.providers);
  if (cfg.query.w_sem > 0.0 && vec.provider_id != embedder->id()) {
    throw ConfigError("vector index was embedded by '" + vec.provider_id +
                      "' but the config names '" + embedder->id() + "'");
  }

  std::vector<QueryDebugRecord> debug;
  HybridResult result = hybrid_search(lex, vec, query, *embedder, cfg.query, &debug);
  if (result.degraded) {
    out << "note: embedding leg failed, results are lexical-only\n";
  }
  if (as_json) {
    for (const QueryDebugRecord& r : debug) {
      out << debug_record_to_json(r).dump() << "\n";
    }
  } else {
    auto fmt = [](const std::optional<double>& v) {
      char buf[32];
      if (!v.has_value()) {
        return std::string("       -");
      }
      std::snprintf(buf, sizeof(buf), "%8.4f", *v);
      return std::string(buf);
    };
    out << "rank  doc_id                fused   lex_raw  lex_norm   sem_raw  sem_norm\n";
    for (std::size_t i = 0; i < debug.size(); ++i) {
      const QueryDebugRecord& r = debug[i];
      char head[64];
      std::snprintf(head, sizeof(head), "%-4zu  %-18s", i + 1, r.doc_id.c_str());
      char fused[32];
      std::snprintf(fused, sizeof(fused), "%8.4f", r.fused);
      out << head << fused << "  " << fmt(r.lex_raw) << "  " << fmt(r.lex_norm) << "  "
          << fmt(r.sem_raw) << "  " << fmt(r.sem_norm) << "\n";
    }
  }
  detail::record_manifest(cfg, "search",
                          {detail::lex_index_path(cfg), detail::vec_index_path(cfg)}, {},
                          json{{"query", query},
                               {"k", cfg.query.k_final},
                               {"degraded", result.degraded},
                               {"hits", [&] {
                                  std::vector<std::string> ids;
                                  for (const ScoredHit& h : result.hits) {
                                    ids.push_back(h.doc_id);
                                  }
                                  return ids;
                                }()}});
  return 0;
}

inline int cmd_select(const RunConfig& cfg, std::ostream& out, std::ostream&) {
  detail::require_artifact(cfg.paths.corpus, "corpus artifact", "ingest");
  detail::require_artifact(cfg.paths.pool, "pool artifact", "enrich");
  detail::require_artifact(cfg.paths.benchmark, "benchmark artifact", "ingest");
  Corpus corpus = load_corpus(cfg.paths.corpus, "canonical");
  MetaGenPool pool = load_pool(cfg.paths.pool);
  Benchmark benchmark = load_benchmark(cfg.paths.benchmark);

  if (!cfg.selection.streams.empty()) {
    std::set<MetaStream> subset;
    for (const std::string& name : cfg.selection.streams) {
      subset.insert(*parse_stream(name));
    }
    pool = pool_subset(pool, subset);
  }

  SelectionConfig scfg;
  scfg.query = cfg.query;
  scfg.lex_fields = cfg.index.lex_fields;
  scfg.embed_recipe = cfg.index.embed_recipe;
  scfg.bm25 = cfg.bm25;
  if (cfg.selection.k > 0) {
    scfg.query.k_final = static_cast<std::size_t>(cfg.selection.k);
    scfg.query.leg_depth = std::max(scfg.query.leg_depth, scfg.query.k_final);
  }

  std::unique_ptr<EmbeddingProvider> embedder = detail::embedder_from(cfg.providers);
  SelectionTrace trace =
      forward_select(corpus, pool, benchmark, scfg, cfg.selection.epsilon, *embedder);
  for (const json& line : selection_audit(trace)) {
    out << line.dump() << "\n";
  }
  std::vector<std::string> outputs;
  if (!cfg.paths.selection.empty()) {
    detail::ensure_parent(cfg.paths.selection);
    save_selection_audit(trace, cfg.paths.selection);
    outputs.push_back(cfg.paths.selection);
  }

  std::vector<std::string> finals;
  for (MetaStream s : trace.final_streams) {
    finals.emplace_back(stream_name(s));
  }
  detail::record_manifest(cfg, "select",
                          {cfg.paths.corpus, cfg.paths.pool, cfg.paths.benchmark}, outputs,
                          json{{"final_streams", finals},
                               {"recall_before", trace.recall_before},
                               {"recall_after", trace.recall_after},
                               {"epsilon", trace.epsilon},
                               {"k", trace.k}});
  return 0;
}

inline int cmd_eval(const RunConfig& cfg, const std::string& compare_path, std::ostream& out,
                    std::ostream& err) {
  detail::require_artifact(cfg.paths.corpus, "corpus artifact", "ingest");
  detail::require_artifact(cfg.paths.benchmark, "benchmark artifact", "ingest");
  if (cfg.paths.report.empty()) {
    throw ConfigError("config has no path for the report artifact");
  }
  Corpus corpus = load_corpus(cfg.paths.corpus, "canonical");
  Benchmark benchmark = load_benchmark(cfg.paths.benchmark);
  MetaGenPool pool;
  std::vector<std::string> inputs = {cfg.paths.corpus, cfg.paths.benchmark};
  if (!cfg.paths.pool.empty() && std::filesystem::exists(cfg.paths.pool)) {
    pool = load_pool(cfg.paths.pool);
    inputs.push_back(cfg.paths.pool);
  }

  std::vector<VariantSpec> ladder = make_ladder(cfg.eval.k);
  std::vector<VariantSpec> variants;
  if (cfg.eval.variants.empty()) {
    variants = ladder;
  } else {
    for (const std::string& name : cfg.eval.variants) {
      auto it = std::find_if(ladder.begin(), ladder.end(),
                             [&](const VariantSpec& v) { return v.name == name; });
      if (it == ladder.end()) {
        throw ConfigError("unknown ladder variant '" + name + "'");
      }
      variants.push_back(*it);
    }
  }

  EvalConfig ecfg;
  ecfg.query = cfg.query;
  ecfg.bm25 = cfg.bm25;
  ecfg.boost_factor = cfg.eval.boost_factor;
  ecfg.rag_enabled = cfg.eval.rag_enabled;
  ecfg.rag = cfg.rag;

  std::unique_ptr<EmbeddingProvider> embedder = detail::embedder_from(cfg.providers);
  std::unique_ptr<GenerationProvider> llm;
  if (ecfg.rag_enabled) {
    llm = make_generation_provider(cfg.providers.generator_id, cfg.providers.generator_endpoint,
                                   cfg.providers.retry);
  }

  EvalReport report = run_ladder(corpus, pool, benchmark, variants, ecfg, *embedder, llm.get());
  detail::ensure_parent(cfg.paths.report);
  save_report(report, cfg.paths.report);
  out << report_table(report);
  if (!compare_path.empty()) {
    EvalReport reference = load_report(compare_path);
    out << compare_reports(reference, report);
  }

  int errored = 0;
  for (const EvalRow& row : report.rows) {
    if (!row.error.empty()) {
      ++errored;
      err << "variant " << row.spec.name << " failed: " << row.error << "\n";
    }
  }
  detail::record_manifest(cfg, "eval", inputs, {cfg.paths.report},
                          json{{"variants", variants.size()},
                               {"errored", errored},
                               {"rag_enabled", ecfg.rag_enabled},
                               {"fingerprint_checksum", checksum_bytes(report.fingerprint.dump())}});
  return errored == 0 ? 0 : 2;
}

/// Entry point shared by the binary and the tests: `args` excludes argv[0].
inline int run_command(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"metadata-enriched hybrid retrieval pipeline"};
  app.name("metagen");
  app.require_subcommand(1);

  std::string config_path;
  std::string dataset_override;
  std::string adapter_override;
  int workers_override = 0;
  std::string query_text;
  int k_override = 0;
  double w_lex_override = 0.0;
  double w_sem_override = 0.0;
  bool json_output = false;
  double epsilon_override = 0.0;
  bool rag_flag = false;
  std::string compare_path;
  std::vector<std::string> variant_override;

  auto add_config = [&config_path](CLI::App* sub) {
    sub->add_option("--config", config_path, "run configuration file")->required();
  };

  CLI::App* ingest = app.add_subcommand("ingest", "parse a dataset into corpus and benchmark");
  add_config(ingest);
  CLI::Option* opt_dataset =
      ingest->add_option("--dataset", dataset_override, "raw dataset path (overrides config)");
  CLI::Option* opt_adapter =
      ingest->add_option("--adapter", adapter_override, "dataset adapter (overrides config)");

  CLI::App* enrich = app.add_subcommand("enrich", "generate the metadata pool for a corpus");
  add_config(enrich);
  CLI::Option* opt_workers =
      enrich->add_option("--workers", workers_override, "worker threads (overrides config)");

  CLI::App* index = app.add_subcommand("index", "build lexical and vector indexes");
  add_config(index);

  CLI::App* search = app.add_subcommand("search", "run one hybrid query against the indexes");
  add_config(search);
  search->add_option("--query", query_text, "question text")->required();
  CLI::Option* opt_search_k = search->add_option("-k,--k", k_override, "results to return");
  CLI::Option* opt_w_lex = search->add_option("--w-lex", w_lex_override, "lexical weight");
  CLI::Option* opt_w_sem = search->add_option("--w-sem", w_sem_override, "semantic weight");
  search->add_flag("--json", json_output, "print one JSON record per hit");

  CLI::App* select = app.add_subcommand("select", "forward-select useful metadata streams");
  add_config(select);
  CLI::Option* opt_epsilon =
      select->add_option("--epsilon", epsilon_override, "minimum recall gain to accept a stream");
  CLI::Option* opt_select_k = select->add_option("-k,--k", k_override, "recall cutoff");

  CLI::App* eval = app.add_subcommand("eval", "run the variant ladder and write a report");
  add_config(eval);
  CLI::Option* opt_eval_k = eval->add_option("-k,--k", k_override, "recall cutoff");
  eval->add_flag("--rag", rag_flag, "also run answer generation per question");
  eval->add_option("--compare", compare_path, "reference report to diff against");
  CLI::Option* opt_variants = eval->add_option(
      "--variant", variant_override, "ladder row to run (repeatable; overrides config)");

  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    RunConfig cfg = detail::load_cli_config(config_path);
    if (app.got_subcommand(ingest)) {
      if (*opt_dataset) {
        cfg.paths.dataset = dataset_override;
      }
      if (*opt_adapter) {
        cfg.adapter = adapter_override;
      }
      validate_run_config(cfg);
      return cmd_ingest(cfg, out, err);
    }
    if (app.got_subcommand(enrich)) {
      if (*opt_workers) {
        cfg.enrich.workers = workers_override;
      }
      validate_run_config(cfg);
      return cmd_enrich(cfg, out, err);
    }
    if (app.got_subcommand(index)) {
      validate_run_config(cfg);
      return cmd_index(cfg, out, err);
    }
    if (app.got_subcommand(search)) {
      if (*opt_search_k) {
        if (k_override < 1) {
          throw ConfigError("-k must be at least 1");
        }
        cfg.query.k_final = static_cast<std::size_t>(k_override);
        cfg.query.leg_depth = std::max(cfg.query.leg_depth, cfg.query.k_final);
      }
      if (*opt_w_lex) {
        cfg.query.w_lex = w_lex_override;
      }
      if (*opt_w_sem) {
        cfg.query.w_sem = w_sem_override;
      }
      validate_run_config(cfg);
      return cmd_search(cfg, query_text, json_output, out, err);
    }
    if (app.got_subcommand(select)) {
      if (*opt_epsilon) {
        cfg.selection.epsilon = epsilon_override;
      }
      if (*opt_select_k) {
        cfg.selection.k = k_override;
      }
      validate_run_config(cfg);
      return cmd_select(cfg, out, err);
    }
    if (app.got_subcommand(eval)) {
      if (*opt_eval_k) {
        cfg.eval.k = k_override;
      }
      if (rag_flag) {
        cfg.eval.rag_enabled = true;
      }
      if (*opt_variants) {
        cfg.eval.variants = variant_override;
      }
      validate_run_config(cfg);
      return cmd_eval(cfg, compare_path, out, err);
    }
    err << "error: no command selected\n";
    return 1;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace metagen
