#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "metagen/corpus.hpp"
#include "metagen/fusion.hpp"
#include "metagen/pool.hpp"

namespace metagen {

struct SelectionConfig {
  // k_final doubles as the recall cutoff: recall@k is measured over the
  // fused top-k_final list.
  HybridQueryConfig query;
  std::vector<std::string> lex_fields = {"body", "title", "meta.*", "enriched.*"};
  std::vector<std::string> embed_recipe = {"title", "body", "enriched.*"};
  Bm25Params bm25;
};

/// Built index pairs keyed by everything that shapes them, so repeated
/// evaluations of the same stream set reuse one build.
struct IndexCache {
  std::map<std::string, std::pair<LexIndex, VecIndex>> entries;
};

namespace detail {

inline std::string stream_set_key(const std::set<MetaStream>& streams,
                                  const SelectionConfig& cfg) {
  std::string key = "streams:";
  for (MetaStream s : streams) {
    key += std::string(stream_name(s)) + "+";
  }
  key += "|lex:";
  for (const auto& f : cfg.lex_fields) {
    key += f + "+";
  }
  key += "|recipe:" + recipe_string(cfg.embed_recipe);
  key += "|k1=" + std::to_string(cfg.bm25.k1) + ",b=" + std::to_string(cfg.bm25.b);
  return key;
}

}  // namespace detail

/// Recall@k of hybrid retrieval with exactly the given streams attached.
/// The corpus is stripped of any pre-existing enrichment first so the stream
/// set under test is the whole story.
inline double evaluate_streams(const Corpus& corpus, const MetaGenPool& pool,
                               const std::set<MetaStream>& streams, const Benchmark& benchmark,
                               const SelectionConfig& cfg, EmbeddingProvider& embedder,
                               IndexCache* cache = nullptr) {
  if (benchmark.items.empty()) {
    throw DataError("cannot evaluate streams against an empty benchmark");
  }
  auto present = pool.streams_present();
  for (MetaStream s : streams) {
    if (std::find(present.begin(), present.end(), s) == present.end()) {
      throw ConfigError(std::string("stream '") + std::string(stream_name(s)) +
                        "' is not present in the pool");
    }
  }
  validate_hybrid_config(cfg.query);

  IndexCache local;
  IndexCache& store = cache != nullptr ? *cache : local;
  std::string key = detail::stream_set_key(streams, cfg);
  auto it = store.entries.find(key);
  if (it == store.entries.end()) {
    Corpus attached = attach_metadata(strip_enrichment(corpus), pool_subset(pool, streams));
    LexIndex lex = build_lexical_index(attached, cfg.lex_fields, cfg.bm25);
    VecIndex vec = build_vector_index(attached, embedder, cfg.embed_recipe);
    it = store.entries.emplace(key, std::make_pair(std::move(lex), std::move(vec))).first;
  }
  const auto& [lexidx, vecidx] = it->second;

  std::size_t hit = 0;
  for (const auto& item : benchmark.items) {
    auto result = hybrid_search(lexidx, vecidx, item.question, embedder, cfg.query);
    bool found = false;
    for (const auto& h : result.hits) {
      if (std::find(item.gold_doc_ids.begin(), item.gold_doc_ids.end(), h.doc_id) !=
          item.gold_doc_ids.end()) {
        found = true;
        break;
      }
    }
    hit += found ? 1 : 0;
  }
  return static_cast<double>(hit) / static_cast<double>(benchmark.items.size());
}

struct SelectionStep {
  std::size_t round = 0;
  MetaStream candidate = MetaStream::llm_topics;
  double baseline_recall = 0.0;
  double candidate_recall = 0.0;
  bool accepted = false;

  friend bool operator==(const SelectionStep&, const SelectionStep&) = default;
};

struct SelectionTrace {
  std::vector<SelectionStep> steps;
  std::vector<MetaStream> final_streams;
  std::size_t k = 0;
  double epsilon = 0.0;
  double recall_before = 0.0;
  double recall_after = 0.0;

  friend bool operator==(const SelectionTrace&, const SelectionTrace&) = default;
};

/// Greedy forward selection: each round evaluates every remaining candidate
/// on top of the accepted set and admits the best one if its absolute recall
/// gain reaches epsilon. Within a round only the winner is flagged accepted;
/// a runner-up whose gain also clears epsilon stays a candidate and is
/// re-measured against the new baseline next round. Ties go to the earlier
/// stream in declaration (priority) order.
inline SelectionTrace forward_select(const Corpus& corpus, const MetaGenPool& pool,
                                     const Benchmark& benchmark, const SelectionConfig& cfg,
                                     double epsilon, EmbeddingProvider& embedder) {
  if (epsilon < 0.0) {
    throw ConfigError("epsilon must be non-negative");
  }
  std::vector<MetaStream> candidates = pool.streams_present();
  if (candidates.empty()) {
    throw ConfigError("pool has no candidate streams to select from");
  }

  IndexCache cache;
  SelectionTrace trace;
  trace.k = cfg.query.k_final;
  trace.epsilon = epsilon;

  std::set<MetaStream> accepted;
  double baseline = evaluate_streams(corpus, pool, accepted, benchmark, cfg, embedder, &cache);
  trace.recall_before = baseline;

  for (std::size_t round = 1; !candidates.empty(); ++round) {
    std::size_t best_step = 0;
    bool have_best = false;
    for (MetaStream c : candidates) {
      std::set<MetaStream> trial = accepted;
      trial.insert(c);
      double recall = evaluate_streams(corpus, pool, trial, benchmark, cfg, embedder, &cache);
      trace.steps.push_back({round, c, baseline, recall, false});
      if (!have_best || recall > trace.steps[best_step].candidate_recall) {
        best_step = trace.steps.size() - 1;
        have_best = true;
      }
    }
    auto& winner = trace.steps[best_step];
    if (winner.candidate_recall - baseline < epsilon) {
      break;
    }
    winner.accepted = true;
    accepted.insert(winner.candidate);
    trace.final_streams.push_back(winner.candidate);
    baseline = winner.candidate_recall;
    candidates.erase(std::find(candidates.begin(), candidates.end(), winner.candidate));
  }
  trace.recall_after = baseline;
  return trace;
}

/// One line per evaluation plus a closing summary record.
inline std::vector<json> selection_audit(const SelectionTrace& trace) {
  std::vector<json> lines;
  for (const auto& s : trace.steps) {
    lines.push_back(json{{"round", s.round},
                         {"candidate", std::string(stream_name(s.candidate))},
                         {"baseline_recall", s.baseline_recall},
                         {"candidate_recall", s.candidate_recall},
                         {"accepted", s.accepted}});
  }
  std::vector<std::string> names;
  for (MetaStream s : trace.final_streams) {
    names.emplace_back(stream_name(s));
  }
  lines.push_back(json{{"final_streams", names},
                       {"recall_before", trace.recall_before},
                       {"recall_after", trace.recall_after},
                       {"k", trace.k},
                       {"epsilon", trace.epsilon}});
  return lines;
}

inline void save_selection_audit(const SelectionTrace& trace, const std::string& path) {
  write_jsonl(path, selection_audit(trace));
}

}  // namespace metagen
