#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "metagen/errors.hpp"
#include "metagen/jsonl.hpp"
#include "metagen/lexindex.hpp"
#include "metagen/scored_hit.hpp"
#include "metagen/vecindex.hpp"

namespace metagen {

enum class NormMethod { minmax, none };
enum class Leg { lexical, semantic };

inline const char* norm_method_name(NormMethod m) {
  return m == NormMethod::minmax ? "minmax" : "none";
}

inline NormMethod parse_norm_method(const std::string& name) {
  if (name == "minmax") {
    return NormMethod::minmax;
  }
  if (name == "none") {
    return NormMethod::none;
  }
  throw ConfigError("unknown normalization method '" + name + "'");
}

struct HybridQueryConfig {
  double w_lex = 0.5;
  double w_sem = 0.5;
  std::size_t leg_depth = 100;
  std::size_t k_final = 10;
  NormMethod norm_method = NormMethod::minmax;
  FieldBoosts boosts;
  // On embedder failure fall back to the lexical leg alone and flag the
  // result degraded instead of failing the query.
  bool fallback_lexical = true;

  bool operator==(const HybridQueryConfig&) const = default;
};

inline void validate_hybrid_config(const HybridQueryConfig& cfg) {
  if (cfg.w_lex < 0.0 || cfg.w_sem < 0.0) {
    throw ConfigError("fusion weights must be non-negative");
  }
  if (!(cfg.w_lex + cfg.w_sem > 0.0)) {
    throw ConfigError("at least one fusion weight must be positive");
  }
  if (cfg.k_final < 1) {
    throw ConfigError("k_final must be at least 1");
  }
  if (cfg.leg_depth < cfg.k_final) {
    throw ConfigError("leg_depth " + std::to_string(cfg.leg_depth) +
                      " must be at least k_final " + std::to_string(cfg.k_final));
  }
}

/// Min-max over the leg's candidate list: max -> 1, min -> 0. A leg whose
/// scores are all equal maps to all 1 so a uniform leg still contributes its
/// full weight rather than being muted.
inline std::vector<ScoredHit> normalize_scores(std::vector<ScoredHit> hits, Leg leg,
                                               NormMethod method) {
  if (method == NormMethod::none) {
    return hits;
  }
  auto get = [leg](const ScoredHit& h) {
    return leg == Leg::lexical ? h.lex_score : h.sem_score;
  };
  auto set = [leg](ScoredHit& h, double v) {
    (leg == Leg::lexical ? h.lex_score : h.sem_score) = v;
  };
  std::optional<double> lo;
  std::optional<double> hi;
  for (const auto& h : hits) {
    auto v = get(h);
    if (!v.has_value()) {
      continue;
    }
    lo = lo.has_value() ? std::min(*lo, *v) : *v;
    hi = hi.has_value() ? std::max(*hi, *v) : *v;
  }
  if (!lo.has_value()) {
    return hits;
  }
  for (auto& h : hits) {
    auto v = get(h);
    if (!v.has_value()) {
      continue;
    }
    set(h, *hi == *lo ? 1.0 : (*v - *lo) / (*hi - *lo));
  }
  return hits;
}

/// Union by doc_id; a doc missing from one leg contributes 0 there. Inputs
/// are expected to be normalized already.
inline std::vector<ScoredHit> fuse(const std::vector<ScoredHit>& lex,
                                   const std::vector<ScoredHit>& sem,
                                   const HybridQueryConfig& cfg) {
  validate_hybrid_config(cfg);
  std::map<std::string, ScoredHit> merged;
  for (const auto& h : lex) {
    auto& m = merged[h.doc_id];
    m.doc_id = h.doc_id;
    m.lex_score = h.lex_score;
  }
  for (const auto& h : sem) {
    auto& m = merged[h.doc_id];
    m.doc_id = h.doc_id;
    m.sem_score = h.sem_score;
  }
  std::vector<ScoredHit> out;
  out.reserve(merged.size());
  for (auto& [id, h] : merged) {
    h.fused_score = cfg.w_lex * h.lex_score.value_or(0.0) + cfg.w_sem * h.sem_score.value_or(0.0);
    out.push_back(std::move(h));
  }
  std::sort(out.begin(), out.end(), [](const ScoredHit& a, const ScoredHit& b) {
    if (*a.fused_score != *b.fused_score) {
      return *a.fused_score > *b.fused_score;
    }
    return a.doc_id < b.doc_id;
  });
  if (out.size() > cfg.k_final) {
    out.resize(cfg.k_final);
  }
  return out;
}

struct QueryDebugRecord {
  std::string doc_id;
  std::optional<double> lex_raw;
  std::optional<double> lex_norm;
  std::optional<double> sem_raw;
  std::optional<double> sem_norm;
  double fused = 0.0;
};

inline json debug_record_to_json(const QueryDebugRecord& r) {
  auto opt = [](const std::optional<double>& v) { return v.has_value() ? json(*v) : json(); };
  return json{{"doc_id", r.doc_id},   {"lex_raw", opt(r.lex_raw)},
              {"lex_norm", opt(r.lex_norm)}, {"sem_raw", opt(r.sem_raw)},
              {"sem_norm", opt(r.sem_norm)}, {"fused", r.fused}};
}

struct HybridResult {
  std::vector<ScoredHit> hits;
  bool degraded = false;
};

/// Runs both legs at leg_depth, normalizes each, fuses, truncates to k_final.
/// A zero-weight leg is skipped entirely so edge weights reproduce the pure
/// single-leg rankings. Boosts apply to the lexical leg only.
inline HybridResult hybrid_search(const LexIndex& lexidx, const VecIndex& vecidx,
                                  const std::string& question, EmbeddingProvider& embedder,
                                  const HybridQueryConfig& cfg,
                                  std::vector<QueryDebugRecord>* debug = nullptr) {
  validate_hybrid_config(cfg);
  if (!lexidx.corpus_checksum.empty() && !vecidx.corpus_checksum.empty() &&
      lexidx.corpus_checksum != vecidx.corpus_checksum) {
    throw ConfigError("lexical and vector indexes were built over different corpora");
  }

  HybridResult result;
  std::vector<ScoredHit> lex_raw;
  std::vector<ScoredHit> sem_raw;
  if (cfg.w_lex > 0.0) {
    lex_raw = bm25_search(lexidx, question, cfg.boosts, cfg.leg_depth);
  }
  if (cfg.w_sem > 0.0) {
    try {
      sem_raw = knn_search(vecidx, embed_query(embedder, question), cfg.leg_depth);
    } catch (const ProviderError&) {
      if (!cfg.fallback_lexical || cfg.w_lex == 0.0) {
        throw;
      }
      result.degraded = true;
      sem_raw.clear();
    }
  }

  auto lex_norm = normalize_scores(lex_raw, Leg::lexical, cfg.norm_method);
  auto sem_norm = normalize_scores(sem_raw, Leg::semantic, cfg.norm_method);
  result.hits = fuse(lex_norm, sem_norm, cfg);

  if (debug != nullptr) {
    std::map<std::string, double> lex_raw_by;
    std::map<std::string, double> sem_raw_by;
    for (const auto& h : lex_raw) {
      lex_raw_by[h.doc_id] = *h.lex_score;
    }
    for (const auto& h : sem_raw) {
      sem_raw_by[h.doc_id] = *h.sem_score;
    }
    for (const auto& h : result.hits) {
      QueryDebugRecord r;
      r.doc_id = h.doc_id;
      if (auto it = lex_raw_by.find(h.doc_id); it != lex_raw_by.end()) {
        r.lex_raw = it->second;
      }
      if (auto it = sem_raw_by.find(h.doc_id); it != sem_raw_by.end()) {
        r.sem_raw = it->second;
      }
      r.lex_norm = h.lex_score;
      r.sem_norm = h.sem_score;
      r.fused = *h.fused_score;
      debug->push_back(std::move(r));
    }
  }
  return result;
}

}  // namespace metagen
