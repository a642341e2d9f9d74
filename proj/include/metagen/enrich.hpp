#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <map>
#include <mutex>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "metagen/corpus.hpp"
#include "metagen/embed_keyphrase.hpp"
#include "metagen/enrich_config.hpp"
#include "metagen/errors.hpp"
#include "metagen/jsonl.hpp"
#include "metagen/pool.hpp"
#include "metagen/providers.hpp"
#include "metagen/stat_keyphrase.hpp"
#include "metagen/stopwords.hpp"
#include "metagen/text.hpp"

namespace metagen {

/// Entities ranked by mention frequency, then first position, then surface;
/// classes outside the allowlist are ignored. At most three survive.
inline MetaRecord extract_ner(const Document& doc, NerProvider& ner,
                              const std::vector<std::string>& allowlist) {
  std::vector<NerMention> mentions = ner.find_entities(doc.body);
  struct Entity {
    std::size_t count = 0;
    std::size_t first_pos = 0;
  };
  std::map<std::string, Entity> grouped;
  for (const auto& m : mentions) {
    if (std::find(allowlist.begin(), allowlist.end(), m.entity_class) == allowlist.end()) {
      continue;
    }
    auto [it, fresh] = grouped.try_emplace(m.surface);
    if (fresh) {
      it->second.first_pos = m.position;
    }
    ++it->second.count;
    it->second.first_pos = std::min(it->second.first_pos, m.position);
  }
  std::vector<std::pair<std::string, Entity>> ranked(grouped.begin(), grouped.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second.count != b.second.count) {
      return a.second.count > b.second.count;
    }
    if (a.second.first_pos != b.second.first_pos) {
      return a.second.first_pos < b.second.first_pos;
    }
    return a.first < b.first;
  });
  std::vector<std::string> values;
  for (const auto& [surface, e] : ranked) {
    values.push_back(surface);
    if (values.size() == 3) {
      break;
    }
  }
  return make_record(doc.doc_id, MetaStream::ner, values, "ner/" + ner.id());
}

namespace detail {

inline std::string render_template(const std::string& tmpl, const std::string& context) {
  std::string out;
  out.reserve(tmpl.size() + context.size());
  std::size_t start = 0;
  for (;;) {
    std::size_t pos = tmpl.find("{context}", start);
    if (pos == std::string::npos) {
      out += tmpl.substr(start);
      return out;
    }
    out += tmpl.substr(start, pos - start);
    out += context;
    start = pos + 9;
  }
}

/// Second-chance extraction: peel markdown fences or grab the outermost
/// brace span from a response that wrapped its JSON in prose.
inline std::string strip_to_json(const std::string& raw) {
  std::size_t fence = raw.find("```");
  if (fence != std::string::npos) {
    std::size_t body_start = raw.find('\n', fence);
    if (body_start != std::string::npos) {
      std::size_t fence_end = raw.find("```", body_start);
      if (fence_end != std::string::npos) {
        std::string inner = raw.substr(body_start + 1, fence_end - body_start - 1);
        std::size_t lo = inner.find('{');
        std::size_t hi = inner.rfind('}');
        if (lo != std::string::npos && hi != std::string::npos && hi > lo) {
          return inner.substr(lo, hi - lo + 1);
        }
        return inner;
      }
    }
  }
  std::size_t lo = raw.find('{');
  std::size_t hi = raw.rfind('}');
  if (lo != std::string::npos && hi != std::string::npos && hi > lo) {
    return raw.substr(lo, hi - lo + 1);
  }
  return raw;
}

inline bool parse_tag_object(const std::string& text, json& out) {
  json parsed = json::parse(text, nullptr, false);
  if (parsed.is_discarded() || !parsed.is_object()) {
    return false;
  }
  static const std::vector<std::string> kKeys = {"topics", "phrases", "synonyms", "acronyms"};
  if (parsed.size() != kKeys.size()) {
    return false;
  }
  for (const auto& key : kKeys) {
    auto it = parsed.find(key);
    if (it == parsed.end() || !it->is_array()) {
      return false;
    }
    for (const auto& v : *it) {
      if (!v.is_string()) {
        return false;
      }
    }
  }
  out = std::move(parsed);
  return true;
}

}  // namespace detail

/// One generation call per document; the response must be a JSON object
/// with exactly the keys topics/phrases/synonyms/acronyms, each a string
/// list. A single reparse after stripping fences/prose is allowed; anything
/// still invalid throws so the caller can log the reject.
inline std::vector<MetaRecord> extract_llm_tags(const Document& doc, GenerationProvider& llm,
                                                const EnrichConfig& cfg) {
  std::string user = detail::render_template(cfg.llm_prompt_user_template, doc.body);
  std::string raw = llm.generate(cfg.llm_prompt_system, user, 0.0);
  json tags;
  if (!detail::parse_tag_object(raw, tags) &&
      !detail::parse_tag_object(detail::strip_to_json(raw), tags)) {
    throw DataError("unparseable tag response for doc '" + doc.doc_id + "'");
  }
  std::string provenance = "llm-tags/" + llm.id();
  std::vector<MetaRecord> records;
  auto add = [&](const char* key, MetaStream stream, bool enabled) {
    if (!enabled) {
      return;
    }
    MetaRecord rec =
        make_record(doc.doc_id, stream, tags[key].get<std::vector<std::string>>(), provenance);
    if (!rec.values.empty()) {
      records.push_back(std::move(rec));
    }
  };
  add("topics", MetaStream::llm_topics, cfg.enable_llm_topics);
  add("phrases", MetaStream::llm_phrases, cfg.enable_llm_phrases);
  add("synonyms", MetaStream::llm_synonyms, cfg.enable_llm_synonyms);
  add("acronyms", MetaStream::llm_acronyms, cfg.enable_llm_acronyms);
  return records;
}

struct EnrichProviders {
  EmbeddingProvider* embedder = nullptr;
  NerProvider* ner = nullptr;
  GenerationProvider* llm = nullptr;
};

/// Runs the always-on streams over every document, gates the LLM streams on
/// corpus size, and merges per-document results in ascending doc order so
/// the pool is identical for any worker count.
inline MetaGenPool enrich_corpus(const Corpus& corpus, const EnrichConfig& cfg,
                                 const EnrichProviders& providers) {
  validate_enrich_config(cfg);
  if (cfg.enable_keyphrase_embed && providers.embedder == nullptr) {
    throw ConfigError("keyphrase_embed enabled but no embedding provider configured");
  }
  if (cfg.enable_ner && providers.ner == nullptr) {
    throw ConfigError("ner enabled but no NER provider configured");
  }
  bool llm_gate = static_cast<std::int64_t>(corpus.size()) <= cfg.llm_threshold;
  bool run_llm = llm_gate && cfg.any_llm_enabled() && providers.llm != nullptr;
  if (llm_gate && cfg.any_llm_enabled() && providers.llm == nullptr) {
    throw ConfigError("llm streams enabled but no generation provider configured");
  }

  struct DocOutcome {
    std::vector<MetaRecord> records;
    std::vector<std::pair<std::string, std::string>> rejects;
    std::map<std::string, std::uint64_t> failures;
  };
  std::vector<DocOutcome> outcomes(corpus.size());

  std::mutex embed_mutex;
  std::mutex ner_mutex;
  std::mutex llm_mutex;
  auto process = [&](std::size_t i) {
    const Document& doc = corpus.docs[i];
    DocOutcome& out = outcomes[i];
    if (cfg.enable_keyphrase_stat) {
      try {
        out.records.push_back(extract_stat_keyphrase(doc, cfg));
      } catch (const Error& e) {
        out.failures["keyphrase_stat"] += 1;
      }
    }
    if (cfg.enable_keyphrase_embed) {
      try {
        if (providers.embedder->thread_safe()) {
          out.records.push_back(extract_embed_keyphrase(doc, *providers.embedder, cfg));
        } else {
          std::lock_guard<std::mutex> lock(embed_mutex);
          out.records.push_back(extract_embed_keyphrase(doc, *providers.embedder, cfg));
        }
      } catch (const Error& e) {
        out.failures["keyphrase_embed"] += 1;
      }
    }
    if (cfg.enable_ner) {
      try {
        MetaRecord rec = [&] {
          if (providers.ner->thread_safe()) {
            return extract_ner(doc, *providers.ner, cfg.ner_allowlist);
          }
          std::lock_guard<std::mutex> lock(ner_mutex);
          return extract_ner(doc, *providers.ner, cfg.ner_allowlist);
        }();
        out.records.push_back(std::move(rec));
      } catch (const Error& e) {
        out.failures["ner"] += 1;
      }
    }
    if (run_llm) {
      try {
        std::vector<MetaRecord> recs = [&] {
          if (providers.llm->thread_safe()) {
            return extract_llm_tags(doc, *providers.llm, cfg);
          }
          std::lock_guard<std::mutex> lock(llm_mutex);
          return extract_llm_tags(doc, *providers.llm, cfg);
        }();
        for (auto& r : recs) {
          out.records.push_back(std::move(r));
        }
      } catch (const Error& e) {
        out.rejects.emplace_back(doc.doc_id, e.what());
        out.failures["llm"] += 1;
      }
    }
  };

  unsigned workers = cfg.workers > 0 ? static_cast<unsigned>(cfg.workers)
                                     : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, static_cast<unsigned>(corpus.size()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      process(i);
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (;;) {
          std::size_t i = next.fetch_add(1);
          if (i >= corpus.size()) {
            return;
          }
          process(i);
        }
      });
    }
    for (auto& t : pool) {
      t.join();
    }
  }

  MetaGenPool result;
  result.corpus_size = corpus.size();
  result.llm_stage_ran = run_llm;
  for (auto& out : outcomes) {
    for (auto& rec : out.records) {
      result.insert(std::move(rec));
    }
    for (auto& rej : out.rejects) {
      result.rejects.push_back(std::move(rej));
    }
    for (const auto& [stream, n] : out.failures) {
      result.failure_counts[stream] += n;
    }
  }

  for (const char* mandatory : {"keyphrase_stat", "keyphrase_embed", "ner"}) {
    auto it = result.failure_counts.find(mandatory);
    if (it != result.failure_counts.end() && it->second * 2 > corpus.size()) {
      throw ProviderError("stream " + std::string(mandatory) + " failed for " +
                          std::to_string(it->second) + " of " + std::to_string(corpus.size()) +
                          " documents");
    }
  }
  return result;
}

/// Denoise rules, applied per value: (a) drop pure stopword/punctuation
/// values, (b) drop values longer than 12 tokens, (c) drop case-insensitive
/// duplicates of the document title, (d) drop values already kept in a
/// higher-priority stream of the same document. Idempotent; never adds.
inline MetaGenPool denoise_pool(const MetaGenPool& pool, const Corpus& corpus) {
  MetaGenPool out;
  out.corpus_size = pool.corpus_size;
  out.llm_stage_ran = pool.llm_stage_ran;
  out.failure_counts = pool.failure_counts;
  out.rejects = pool.rejects;

  std::string current_doc;
  std::set<std::string> kept_lower;
  for (const auto& [key, rec] : pool.records) {
    if (key.first != current_doc) {
      current_doc = key.first;
      kept_lower.clear();
    }
    const Document* doc = corpus.find(key.first);
    std::string title_lower =
        doc != nullptr && !doc->title.empty() ? lowercase_utf8(doc->title) : std::string{};
    MetaRecord cleaned = rec;
    cleaned.values.clear();
    for (const auto& value : rec.values) {
      std::vector<std::string> toks = tokenize(value);
      if (toks.empty()) {
        continue;
      }
      bool all_stop = true;
      for (const auto& t : toks) {
        if (!is_stopword(t)) {
          all_stop = false;
          break;
        }
      }
      if (all_stop || toks.size() > 12) {
        continue;
      }
      std::string lower = lowercase_utf8(value);
      if (!title_lower.empty() && lower == title_lower) {
        continue;
      }
      if (kept_lower.count(lower)) {
        continue;
      }
      kept_lower.insert(lower);
      cleaned.values.push_back(value);
    }
    out.insert(std::move(cleaned));
  }
  return out;
}

inline void write_rejects(const MetaGenPool& pool, const std::string& path) {
  std::string out;
  for (const auto& [doc_id, reason] : pool.rejects) {
    json line{{"doc_id", doc_id}, {"reason", reason}};
    out += line.dump();
    out += "\n";
  }
  write_file(path, out);
}

}  // namespace metagen
