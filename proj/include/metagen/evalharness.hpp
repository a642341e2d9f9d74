#pragma once

#include <chrono>
#include <cstdio>
#include <ctime>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "metagen/corpus.hpp"
#include "metagen/fusion.hpp"
#include "metagen/manifest.hpp"
#include "metagen/pool.hpp"
#include "metagen/raggen.hpp"
#include "metagen/select.hpp"

namespace metagen {

enum class VariantLegs { knn_only, hybrid };
enum class VariantMetadata { none, existing, enriched, existing_plus_enriched };

inline const char* legs_name(VariantLegs v) {
  return v == VariantLegs::knn_only ? "knn_only" : "hybrid";
}

inline const char* metadata_name(VariantMetadata m) {
  switch (m) {
    case VariantMetadata::none:
      return "none";
    case VariantMetadata::existing:
      return "existing";
    case VariantMetadata::enriched:
      return "enriched";
    case VariantMetadata::existing_plus_enriched:
      return "existing_plus_enriched";
  }
  return "none";
}

inline VariantLegs parse_legs(const std::string& name) {
  if (name == "knn_only") {
    return VariantLegs::knn_only;
  }
  if (name == "hybrid") {
    return VariantLegs::hybrid;
  }
  throw ConfigError("unknown legs variant '" + name + "'");
}

inline VariantMetadata parse_metadata(const std::string& name) {
  if (name == "none") {
    return VariantMetadata::none;
  }
  if (name == "existing") {
    return VariantMetadata::existing;
  }
  if (name == "enriched") {
    return VariantMetadata::enriched;
  }
  if (name == "existing_plus_enriched") {
    return VariantMetadata::existing_plus_enriched;
  }
  throw ConfigError("unknown metadata variant '" + name + "'");
}

struct VariantSpec {
  std::string name;
  VariantLegs legs = VariantLegs::hybrid;
  VariantMetadata metadata = VariantMetadata::none;
  bool boosted = false;
  std::size_t k = 1;

  friend bool operator==(const VariantSpec&, const VariantSpec&) = default;
};

/// The eight-row variant ladder, most austere first: a pure semantic
/// baseline, then hybrid search progressively augmented with existing and
/// enriched metadata, then the boosted configurations.
inline std::vector<VariantSpec> make_ladder(std::size_t k) {
  using L = VariantLegs;
  using M = VariantMetadata;
  return {
      {"knn", L::knn_only, M::none, false, k},
      {"hybrid", L::hybrid, M::none, false, k},
      {"hybrid+existing", L::hybrid, M::existing, false, k},
      {"hybrid+enriched", L::hybrid, M::enriched, false, k},
      {"hybrid+existing+enriched", L::hybrid, M::existing_plus_enriched, false, k},
      {"hybrid-boosted+enriched", L::hybrid, M::enriched, true, k},
      {"hybrid-boosted+existing", L::hybrid, M::existing, true, k},
      {"hybrid-boosted+existing+enriched", L::hybrid, M::existing_plus_enriched, true, k},
  };
}

inline std::vector<VariantSpec> pubmedqa_ladder() { return make_ladder(1); }

struct EvalRow {
  VariantSpec spec;
  std::optional<double> retrieval_accuracy;
  std::optional<double> rag_accuracy;
  std::string error;

  friend bool operator==(const EvalRow&, const EvalRow&) = default;
};

struct EvalReport {
  std::string dataset;
  std::vector<EvalRow> rows;
  json fingerprint;
  std::string timestamp;
};

struct EvalConfig {
  // Weights and depths for the hybrid variants; knn_only rows override the
  // weights to (0, 1). Each variant's k becomes k_final.
  HybridQueryConfig query;
  Bm25Params bm25;
  // Boost applied to every non-body field of a boosted variant.
  double boost_factor = 2.0;
  bool rag_enabled = false;
  RagConfig rag;
};

/// Mean over questions of whether the gold set intersects the top-k.
inline double recall_at_k(const std::vector<std::vector<std::string>>& results,
                          const Benchmark& benchmark, std::size_t k) {
  if (results.size() != benchmark.items.size()) {
    throw DataError("have " + std::to_string(results.size()) + " result lists for " +
                    std::to_string(benchmark.items.size()) + " benchmark questions");
  }
  if (benchmark.items.empty()) {
    throw DataError("cannot compute recall over an empty benchmark");
  }
  std::size_t hits = 0;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& gold = benchmark.items[i].gold_doc_ids;
    std::size_t depth = std::min(k, results[i].size());
    bool found = false;
    for (std::size_t r = 0; r < depth && !found; ++r) {
      found = std::find(gold.begin(), gold.end(), results[i][r]) != gold.end();
    }
    hits += found ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(results.size());
}

namespace detail {

inline std::vector<std::string> variant_lex_fields(VariantMetadata m) {
  switch (m) {
    case VariantMetadata::none:
      return {"body"};
    case VariantMetadata::existing:
      return {"body", "title", "meta.*"};
    case VariantMetadata::enriched:
      return {"body", "enriched.*"};
    case VariantMetadata::existing_plus_enriched:
      return {"body", "title", "meta.*", "enriched.*"};
  }
  return {"body"};
}

inline std::vector<std::string> variant_embed_recipe(VariantMetadata m) {
  switch (m) {
    case VariantMetadata::none:
      return {"body"};
    case VariantMetadata::existing:
      return {"title", "body", "meta.*"};
    case VariantMetadata::enriched:
      return {"body", "enriched.*"};
    case VariantMetadata::existing_plus_enriched:
      return {"title", "body", "meta.*", "enriched.*"};
  }
  return {"body"};
}

inline FieldBoosts variant_boosts(const Corpus& attached, const VariantSpec& v, double factor) {
  FieldBoosts boosts;
  if (!v.boosted) {
    return boosts;
  }
  for (const auto& field : expand_fields(attached, variant_lex_fields(v.metadata))) {
    if (field != "body") {
      boosts.boost[field] = factor;
    }
  }
  return boosts;
}

}  // namespace detail

inline json eval_fingerprint(const Corpus& corpus, const Benchmark& benchmark,
                             const std::vector<VariantSpec>& variants, const EvalConfig& cfg,
                             EmbeddingProvider& embedder, GenerationProvider* llm) {
  json variant_list = json::array();
  for (const auto& v : variants) {
    variant_list.push_back(json{{"name", v.name},
                                {"legs", legs_name(v.legs)},
                                {"metadata", metadata_name(v.metadata)},
                                {"boosted", v.boosted},
                                {"k", v.k}});
  }
  return json{{"dataset", corpus.source_tag},
              {"doc_count", corpus.size()},
              {"question_count", benchmark.items.size()},
              {"w_lex", cfg.query.w_lex},
              {"w_sem", cfg.query.w_sem},
              {"leg_depth", cfg.query.leg_depth},
              {"norm_method", norm_method_name(cfg.query.norm_method)},
              {"k1", cfg.bm25.k1},
              {"b", cfg.bm25.b},
              {"boost_factor", cfg.boost_factor},
              {"embedder", embedder.id()},
              {"generator", llm != nullptr ? llm->id() : ""},
              {"rag_enabled", cfg.rag_enabled},
              {"variants", variant_list}};
}

/// Runs every variant: attach the variant's metadata, build or fetch cached
/// indexes, answer every question, score recall@k (and RAG decision accuracy
/// when enabled). A failing variant errors its own row; later rows proceed.
inline EvalReport run_ladder(const Corpus& corpus, const MetaGenPool& pool,
                             const Benchmark& benchmark, const std::vector<VariantSpec>& variants,
                             const EvalConfig& cfg, EmbeddingProvider& embedder,
                             GenerationProvider* llm = nullptr) {
  EvalReport report;
  report.dataset = corpus.source_tag;
  report.fingerprint = eval_fingerprint(corpus, benchmark, variants, cfg, embedder, llm);
  report.timestamp = detail::iso8601_utc_now();

  Corpus stripped = strip_enrichment(corpus);
  std::optional<Corpus> attached_full;
  auto with_pool = [&]() -> const Corpus& {
    if (!attached_full.has_value()) {
      attached_full = attach_metadata(stripped, pool);
    }
    return *attached_full;
  };
  IndexCache cache;

  for (const auto& v : variants) {
    EvalRow row;
    row.spec = v;
    try {
      if (benchmark.items.empty()) {
        throw DataError("benchmark has no questions");
      }
      bool needs_pool = v.metadata == VariantMetadata::enriched ||
                        v.metadata == VariantMetadata::existing_plus_enriched;
      if (needs_pool && pool.records.empty()) {
        throw DataError("variant '" + v.name +
                        "' needs enriched metadata but the pool is empty; run enrich first");
      }
      const Corpus& view = needs_pool ? with_pool() : stripped;

      SelectionConfig scfg;
      scfg.lex_fields = detail::variant_lex_fields(v.metadata);
      scfg.embed_recipe = detail::variant_embed_recipe(v.metadata);
      scfg.bm25 = cfg.bm25;
      std::string key = detail::stream_set_key({}, scfg) +
                        "|attached=" + (needs_pool ? "pool" : "none");
      auto it = cache.entries.find(key);
      if (it == cache.entries.end()) {
        LexIndex lex = build_lexical_index(view, scfg.lex_fields, cfg.bm25);
        VecIndex vec = build_vector_index(view, embedder, scfg.embed_recipe);
        it = cache.entries.emplace(key, std::make_pair(std::move(lex), std::move(vec))).first;
      }
      const auto& [lexidx, vecidx] = it->second;

      HybridQueryConfig q = cfg.query;
      if (v.legs == VariantLegs::knn_only) {
        q.w_lex = 0.0;
        q.w_sem = 1.0;
      }
      q.k_final = v.k;
      q.leg_depth = std::max(cfg.query.leg_depth, v.k);
      q.boosts = detail::variant_boosts(view, v, cfg.boost_factor);

      std::vector<std::vector<std::string>> results;
      results.reserve(benchmark.items.size());
      std::size_t rag_hits = 0;
      std::size_t rag_total = 0;
      for (const auto& item : benchmark.items) {
        auto res = hybrid_search(lexidx, vecidx, item.question, embedder, q);
        std::vector<std::string> ids;
        for (const auto& h : res.hits) {
          ids.push_back(h.doc_id);
        }
        if (cfg.rag_enabled && llm != nullptr) {
          std::string gold = parse_decision(item.gold_answer);
          if (gold != "unparseable" && !ids.empty()) {
            std::vector<const Document*> docs;
            for (const auto& id : ids) {
              const Document* doc = view.find(id);
              if (doc != nullptr) {
                docs.push_back(doc);
              }
            }
            if (!docs.empty()) {
              RagAnswer ans =
                  generate_answer(assemble_prompt(item.question, docs, cfg.rag), *llm, cfg.rag);
              rag_hits += ans.parsed_answer == gold ? 1 : 0;
              ++rag_total;
            }
          }
        }
        results.push_back(std::move(ids));
      }
      row.retrieval_accuracy = recall_at_k(results, benchmark, v.k);
      if (rag_total > 0) {
        row.rag_accuracy = static_cast<double>(rag_hits) / static_cast<double>(rag_total);
      }
    } catch (const Error& e) {
      row.error = e.what();
    }
    report.rows.push_back(std::move(row));
  }
  return report;
}

inline json eval_row_to_json(const EvalRow& row) {
  auto opt = [](const std::optional<double>& v) { return v.has_value() ? json(*v) : json(); };
  return json{{"variant", row.spec.name},
              {"legs", legs_name(row.spec.legs)},
              {"metadata", metadata_name(row.spec.metadata)},
              {"boosted", row.spec.boosted},
              {"k", row.spec.k},
              {"retrieval_accuracy", opt(row.retrieval_accuracy)},
              {"rag_accuracy", opt(row.rag_accuracy)},
              {"error", row.error}};
}

/// Rows only, stable across runs with deterministic providers; the header
/// (timestamp) is deliberately excluded so reruns can be byte-compared.
inline std::string serialize_report_rows(const EvalReport& report) {
  std::string out;
  for (const auto& row : report.rows) {
    out += eval_row_to_json(row).dump();
    out += "\n";
  }
  return out;
}

inline void save_report(const EvalReport& report, const std::string& path) {
  std::string out;
  out += json{{"type", "evalreport"},
              {"version", 1},
              {"dataset", report.dataset},
              {"timestamp", report.timestamp},
              {"fingerprint", report.fingerprint}}
             .dump();
  out += "\n";
  out += serialize_report_rows(report);
  write_file(path, out);
}

inline EvalReport load_report(const std::string& path) {
  EvalReport report;
  bool have_header = false;
  for_each_jsonl(path, [&](std::size_t lineno, const json& line) {
    if (!have_header) {
      if (line.value("type", "") != "evalreport" || line.value("version", 0) != 1) {
        throw DataError(path + ": not a version-1 eval report");
      }
      report.dataset = line.at("dataset").get<std::string>();
      report.timestamp = line.at("timestamp").get<std::string>();
      report.fingerprint = line.at("fingerprint");
      have_header = true;
      return;
    }
    EvalRow row;
    row.spec.name = line.at("variant").get<std::string>();
    row.spec.legs = parse_legs(line.at("legs").get<std::string>());
    row.spec.metadata = parse_metadata(line.at("metadata").get<std::string>());
    row.spec.boosted = line.at("boosted").get<bool>();
    row.spec.k = line.at("k").get<std::size_t>();
    if (!line.at("retrieval_accuracy").is_null()) {
      row.retrieval_accuracy = line.at("retrieval_accuracy").get<double>();
    }
    if (!line.at("rag_accuracy").is_null()) {
      row.rag_accuracy = line.at("rag_accuracy").get<double>();
    }
    row.error = line.at("error").get<std::string>();
    (void)lineno;
    report.rows.push_back(std::move(row));
  });
  if (!have_header) {
    throw DataError(path + ": empty eval report");
  }
  return report;
}

/// Aligned table, one row per variant, for eyeball comparison.
inline std::string report_table(const EvalReport& report) {
  std::size_t width = 24;
  for (const auto& row : report.rows) {
    width = std::max(width, row.spec.name.size());
  }
  auto pct = [](const std::optional<double>& v) {
    if (!v.has_value()) {
      return std::string("     -");
    }
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%6.2f", *v * 100.0);
    return std::string(buf);
  };
  std::string out = "dataset: " + report.dataset + "\n";
  out += std::string("variant") + std::string(width - 7, ' ') + "  retrieval%     rag%\n";
  for (const auto& row : report.rows) {
    out += row.spec.name + std::string(width - row.spec.name.size(), ' ');
    out += "  " + pct(row.retrieval_accuracy) + "      " + pct(row.rag_accuracy);
    if (!row.error.empty()) {
      out += "  ERROR: " + row.error;
    }
    out += "\n";
  }
  return out;
}

/// Per-row deltas of this report against a reference, matched by variant
/// name; unmatched rows are called out.
inline std::string compare_reports(const EvalReport& reference, const EvalReport& current) {
  std::map<std::string, const EvalRow*> ref_rows;
  for (const auto& row : reference.rows) {
    ref_rows[row.spec.name] = &row;
  }
  std::string out;
  for (const auto& row : current.rows) {
    auto it = ref_rows.find(row.spec.name);
    out += row.spec.name + ": ";
    if (it == ref_rows.end()) {
      out += "not in reference\n";
      continue;
    }
    if (row.retrieval_accuracy.has_value() && it->second->retrieval_accuracy.has_value()) {
      double delta = *row.retrieval_accuracy - *it->second->retrieval_accuracy;
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%+.4f", delta);
      out += "retrieval delta " + std::string(buf);
    } else {
      out += "retrieval incomparable";
    }
    out += "\n";
    ref_rows.erase(it);
  }
  for (const auto& [name, row] : ref_rows) {
    out += name + ": only in reference\n";
  }
  return out;
}

}  // namespace metagen
