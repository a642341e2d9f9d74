#pragma once

#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "metagen/enrich_config.hpp"
#include "metagen/errors.hpp"
#include "metagen/evalharness.hpp"
#include "metagen/fusion.hpp"
#include "metagen/hash.hpp"
#include "metagen/http_providers.hpp"
#include "metagen/jsonl.hpp"
#include "metagen/lexindex.hpp"
#include "metagen/pool.hpp"
#include "metagen/raggen.hpp"
#include "metagen/vecindex.hpp"

namespace metagen {

struct RunPaths {
  std::string dataset;    // raw input consumed by ingest
  std::string corpus;     // canonical corpus artifact
  std::string benchmark;  // questions + gold ids artifact
  std::string pool;       // enrichment pool artifact
  std::string index_dir;  // lexical/vector indexes + stats summary
  std::string report;     // evaluation report
  std::string selection;  // forward-selection audit log (optional)
  std::string manifest = "manifest.jsonl";

  bool operator==(const RunPaths&) const = default;
};

struct ProviderConfig {
  std::string embedder_id = "deterministic-hash/64";
  HttpEndpoint embedder_endpoint;
  int embedder_dim = 0;  // required for remote embedders; implied by the offline id
  std::string generator_id = "canned/maybe";
  HttpEndpoint generator_endpoint;
  std::string gazetteer;  // TSV dictionary backing the offline NER stream
  RetryPolicy retry;

  bool operator==(const ProviderConfig&) const = default;
};

struct IndexConfig {
  std::vector<std::string> lex_fields = {"body", "title", "meta.*", "enriched.*"};
  std::vector<std::string> embed_recipe = {"title", "body", "enriched.*"};

  bool operator==(const IndexConfig&) const = default;
};

struct SelectionSettings {
  double epsilon = 0.0;
  int k = 0;                         // recall cutoff; 0 = the query's k_final
  std::vector<std::string> streams;  // candidate subset; empty = every pool stream

  bool operator==(const SelectionSettings&) const = default;
};

struct EvalSettings {
  int k = 1;  // recall@k cutoff for the ladder
  double boost_factor = 2.0;
  bool rag_enabled = false;
  std::vector<std::string> variants;  // ladder row names; empty = all eight

  bool operator==(const EvalSettings&) const = default;
};

struct RunConfig {
  std::string adapter = "canonical";
  RunPaths paths;
  ProviderConfig providers;
  EnrichConfig enrich;
  Bm25Params bm25;
  HybridQueryConfig query;
  IndexConfig index;
  SelectionSettings selection;
  EvalSettings eval;
  RagConfig rag;

  bool operator==(const RunConfig&) const = default;
};

namespace detail {

/// Object reader that keeps struct defaults for absent keys and rejects keys
/// it was never asked about, so config typos fail loudly.
class JsonReader {
 public:
  JsonReader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) {
      throw ConfigError(where_ + " must be a JSON object");
    }
  }

  template <typename T>
  void read(const char* key, T& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) {
      return;
    }
    try {
      out = it->get<T>();
    } catch (const json::exception&) {
      throw ConfigError(where_ + "." + key + " has the wrong type");
    }
  }

  const json* section(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      (void)value;
      if (seen_.count(key) == 0) {
        throw ConfigError("unknown config key " + where_ + "." + key);
      }
    }
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

inline json endpoint_to_json(const HttpEndpoint& ep) {
  return json{{"base_url", ep.base_url}, {"path", ep.path}, {"timeout_sec", ep.timeout_sec}};
}

inline HttpEndpoint endpoint_from_json(const json& j, const std::string& where) {
  HttpEndpoint ep;
  JsonReader r(j, where);
  r.read("base_url", ep.base_url);
  r.read("path", ep.path);
  r.read("timeout_sec", ep.timeout_sec);
  r.finish();
  return ep;
}

}  // namespace detail

inline json run_config_to_json(const RunConfig& cfg) {
  json j;
  j["adapter"] = cfg.adapter;
  j["paths"] = {{"dataset", cfg.paths.dataset},     {"corpus", cfg.paths.corpus},
                {"benchmark", cfg.paths.benchmark}, {"pool", cfg.paths.pool},
                {"index_dir", cfg.paths.index_dir}, {"report", cfg.paths.report},
                {"selection", cfg.paths.selection}, {"manifest", cfg.paths.manifest}};
  j["providers"] = {{"embedder_id", cfg.providers.embedder_id},
                    {"embedder_endpoint", detail::endpoint_to_json(cfg.providers.embedder_endpoint)},
                    {"embedder_dim", cfg.providers.embedder_dim},
                    {"generator_id", cfg.providers.generator_id},
                    {"generator_endpoint",
                     detail::endpoint_to_json(cfg.providers.generator_endpoint)},
                    {"gazetteer", cfg.providers.gazetteer},
                    {"retry",
                     {{"max_attempts", cfg.providers.retry.max_attempts},
                      {"backoff_ms", cfg.providers.retry.backoff_ms}}}};
  j["enrich"] = {{"llm_threshold", cfg.enrich.llm_threshold},
                 {"max_ngram", cfg.enrich.max_ngram},
                 {"stat_window", cfg.enrich.stat_window},
                 {"llm_prompt_system", cfg.enrich.llm_prompt_system},
                 {"llm_prompt_user_template", cfg.enrich.llm_prompt_user_template},
                 {"keyphrase_stat", cfg.enrich.enable_keyphrase_stat},
                 {"keyphrase_embed", cfg.enrich.enable_keyphrase_embed},
                 {"ner", cfg.enrich.enable_ner},
                 {"llm_topics", cfg.enrich.enable_llm_topics},
                 {"llm_phrases", cfg.enrich.enable_llm_phrases},
                 {"llm_synonyms", cfg.enrich.enable_llm_synonyms},
                 {"llm_acronyms", cfg.enrich.enable_llm_acronyms},
                 {"ner_allowlist", cfg.enrich.ner_allowlist},
                 {"workers", cfg.enrich.workers}};
  j["bm25"] = {{"k1", cfg.bm25.k1}, {"b", cfg.bm25.b}};
  j["query"] = {{"w_lex", cfg.query.w_lex},
                {"w_sem", cfg.query.w_sem},
                {"leg_depth", cfg.query.leg_depth},
                {"k_final", cfg.query.k_final},
                {"norm_method", norm_method_name(cfg.query.norm_method)},
                {"boosts", cfg.query.boosts.boost},
                {"fallback_lexical", cfg.query.fallback_lexical}};
  j["index"] = {{"lex_fields", cfg.index.lex_fields}, {"embed_recipe", cfg.index.embed_recipe}};
  j["selection"] = {{"epsilon", cfg.selection.epsilon},
                    {"k", cfg.selection.k},
                    {"streams", cfg.selection.streams}};
  j["eval"] = {{"k", cfg.eval.k},
               {"boost_factor", cfg.eval.boost_factor},
               {"rag_enabled", cfg.eval.rag_enabled},
               {"variants", cfg.eval.variants}};
  j["rag"] = {{"system_prompt", cfg.rag.system_prompt},
              {"user_template", cfg.rag.user_template},
              {"context_budget", cfg.rag.context_budget},
              {"temperature", cfg.rag.temperature},
              {"strict_first_token", cfg.rag.strict_first_token}};
  return j;
}

inline RunConfig run_config_from_json(const json& j, const std::string& where = "config") {
  RunConfig cfg;
  detail::JsonReader top(j, where);
  top.read("adapter", cfg.adapter);
  if (const json* s = top.section("paths")) {
    detail::JsonReader r(*s, where + ".paths");
    r.read("dataset", cfg.paths.dataset);
    r.read("corpus", cfg.paths.corpus);
    r.read("benchmark", cfg.paths.benchmark);
    r.read("pool", cfg.paths.pool);
    r.read("index_dir", cfg.paths.index_dir);
    r.read("report", cfg.paths.report);
    r.read("selection", cfg.paths.selection);
    r.read("manifest", cfg.paths.manifest);
    r.finish();
  }
  if (const json* s = top.section("providers")) {
    detail::JsonReader r(*s, where + ".providers");
    r.read("embedder_id", cfg.providers.embedder_id);
    if (const json* ep = r.section("embedder_endpoint")) {
      cfg.providers.embedder_endpoint =
          detail::endpoint_from_json(*ep, where + ".providers.embedder_endpoint");
    }
    r.read("embedder_dim", cfg.providers.embedder_dim);
    r.read("generator_id", cfg.providers.generator_id);
    if (const json* ep = r.section("generator_endpoint")) {
      cfg.providers.generator_endpoint =
          detail::endpoint_from_json(*ep, where + ".providers.generator_endpoint");
    }
    r.read("gazetteer", cfg.providers.gazetteer);
    if (const json* rp = r.section("retry")) {
      detail::JsonReader rr(*rp, where + ".providers.retry");
      rr.read("max_attempts", cfg.providers.retry.max_attempts);
      rr.read("backoff_ms", cfg.providers.retry.backoff_ms);
      rr.finish();
    }
    r.finish();
  }
  if (const json* s = top.section("enrich")) {
    detail::JsonReader r(*s, where + ".enrich");
    r.read("llm_threshold", cfg.enrich.llm_threshold);
    r.read("max_ngram", cfg.enrich.max_ngram);
    r.read("stat_window", cfg.enrich.stat_window);
    r.read("llm_prompt_system", cfg.enrich.llm_prompt_system);
    r.read("llm_prompt_user_template", cfg.enrich.llm_prompt_user_template);
    r.read("keyphrase_stat", cfg.enrich.enable_keyphrase_stat);
    r.read("keyphrase_embed", cfg.enrich.enable_keyphrase_embed);
    r.read("ner", cfg.enrich.enable_ner);
    r.read("llm_topics", cfg.enrich.enable_llm_topics);
    r.read("llm_phrases", cfg.enrich.enable_llm_phrases);
    r.read("llm_synonyms", cfg.enrich.enable_llm_synonyms);
    r.read("llm_acronyms", cfg.enrich.enable_llm_acronyms);
    r.read("ner_allowlist", cfg.enrich.ner_allowlist);
    r.read("workers", cfg.enrich.workers);
    r.finish();
  }
  if (const json* s = top.section("bm25")) {
    detail::JsonReader r(*s, where + ".bm25");
    r.read("k1", cfg.bm25.k1);
    r.read("b", cfg.bm25.b);
    r.finish();
  }
  if (const json* s = top.section("query")) {
    detail::JsonReader r(*s, where + ".query");
    r.read("w_lex", cfg.query.w_lex);
    r.read("w_sem", cfg.query.w_sem);
    r.read("leg_depth", cfg.query.leg_depth);
    r.read("k_final", cfg.query.k_final);
    std::string norm = norm_method_name(cfg.query.norm_method);
    r.read("norm_method", norm);
    cfg.query.norm_method = parse_norm_method(norm);
    r.read("boosts", cfg.query.boosts.boost);
    r.read("fallback_lexical", cfg.query.fallback_lexical);
    r.finish();
  }
  if (const json* s = top.section("index")) {
    detail::JsonReader r(*s, where + ".index");
    r.read("lex_fields", cfg.index.lex_fields);
    r.read("embed_recipe", cfg.index.embed_recipe);
    r.finish();
  }
  if (const json* s = top.section("selection")) {
    detail::JsonReader r(*s, where + ".selection");
    r.read("epsilon", cfg.selection.epsilon);
    r.read("k", cfg.selection.k);
    r.read("streams", cfg.selection.streams);
    r.finish();
  }
  if (const json* s = top.section("eval")) {
    detail::JsonReader r(*s, where + ".eval");
    r.read("k", cfg.eval.k);
    r.read("boost_factor", cfg.eval.boost_factor);
    r.read("rag_enabled", cfg.eval.rag_enabled);
    r.read("variants", cfg.eval.variants);
    r.finish();
  }
  if (const json* s = top.section("rag")) {
    detail::JsonReader r(*s, where + ".rag");
    r.read("system_prompt", cfg.rag.system_prompt);
    r.read("user_template", cfg.rag.user_template);
    r.read("context_budget", cfg.rag.context_budget);
    r.read("temperature", cfg.rag.temperature);
    r.read("strict_first_token", cfg.rag.strict_first_token);
    r.finish();
  }
  top.finish();
  return cfg;
}

inline void validate_run_config(const RunConfig& cfg) {
  validate_enrich_config(cfg.enrich);
  validate_bm25_params(cfg.bm25);
  validate_hybrid_config(cfg.query);
  if (cfg.selection.epsilon < 0.0) {
    throw ConfigError("selection.epsilon must be non-negative");
  }
  if (cfg.selection.k < 0) {
    throw ConfigError("selection.k must be non-negative");
  }
  for (const std::string& name : cfg.selection.streams) {
    if (!parse_stream(name).has_value()) {
      throw ConfigError("selection.streams names unknown stream '" + name + "'");
    }
  }
  if (cfg.eval.k < 1) {
    throw ConfigError("eval.k must be at least 1");
  }
  if (!(cfg.eval.boost_factor > 0.0)) {
    throw ConfigError("eval.boost_factor must be positive");
  }
  std::set<std::string> known;
  for (const VariantSpec& v : make_ladder(cfg.eval.k)) {
    known.insert(v.name);
  }
  for (const std::string& name : cfg.eval.variants) {
    if (known.count(name) == 0) {
      throw ConfigError("eval.variants names unknown ladder row '" + name + "'");
    }
  }
  if (cfg.providers.embedder_dim < 0) {
    throw ConfigError("providers.embedder_dim must be non-negative");
  }
}

inline void save_run_config(const RunConfig& cfg, const std::string& path) {
  std::filesystem::path p(path);
  if (p.has_parent_path()) {
    std::filesystem::create_directories(p.parent_path());
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw DataError("cannot write config: " + path);
  }
  out << run_config_to_json(cfg).dump(2) << "\n";
}

inline RunConfig load_run_config(const std::string& path) {
  json j = json::parse(read_file(path), nullptr, false);
  if (j.is_discarded()) {
    throw ConfigError("config file '" + path + "' is not valid JSON");
  }
  return run_config_from_json(j, path);
}

/// Stable digest of the full configuration; manifest lines carry it so any
/// artifact can be traced to the exact settings that produced it.
inline std::string config_fingerprint(const RunConfig& cfg) {
  return checksum_bytes(run_config_to_json(cfg).dump());
}

}  // namespace metagen
