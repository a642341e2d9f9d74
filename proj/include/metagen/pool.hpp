#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "metagen/errors.hpp"
#include "metagen/jsonl.hpp"
#include "metagen/text.hpp"
#include "metagen/unicode.hpp"

namespace metagen {

/// One enrichment output channel. Declaration order doubles as the fixed
/// priority used for tie-breaks in selection and cross-stream dedup.
enum class MetaStream {
  llm_topics,
  llm_phrases,
  llm_synonyms,
  llm_acronyms,
  keyphrase_embed,
  keyphrase_stat,
  ner,
};

inline constexpr std::array<MetaStream, 7> kAllStreams = {
    MetaStream::llm_topics,   MetaStream::llm_phrases,   MetaStream::llm_synonyms,
    MetaStream::llm_acronyms, MetaStream::keyphrase_embed, MetaStream::keyphrase_stat,
    MetaStream::ner,
};

inline std::string_view stream_name(MetaStream s) {
  switch (s) {
    case MetaStream::llm_topics: return "llm_topics";
    case MetaStream::llm_phrases: return "llm_phrases";
    case MetaStream::llm_synonyms: return "llm_synonyms";
    case MetaStream::llm_acronyms: return "llm_acronyms";
    case MetaStream::keyphrase_embed: return "keyphrase_embed";
    case MetaStream::keyphrase_stat: return "keyphrase_stat";
    case MetaStream::ner: return "ner";
  }
  return "unknown";
}

inline std::optional<MetaStream> parse_stream(std::string_view name) {
  for (MetaStream s : kAllStreams) {
    if (stream_name(s) == name) {
      return s;
    }
  }
  return std::nullopt;
}

inline bool is_llm_stream(MetaStream s) {
  return s == MetaStream::llm_topics || s == MetaStream::llm_phrases ||
         s == MetaStream::llm_synonyms || s == MetaStream::llm_acronyms;
}

struct MetaRecord {
  std::string doc_id;
  MetaStream stream = MetaStream::keyphrase_stat;
  std::vector<std::string> values;
  std::string provenance;

  bool operator==(const MetaRecord&) const = default;
};

/// Trims values, drops empties, and deduplicates case-insensitively while
/// preserving first-occurrence order.
inline std::vector<std::string> clean_values(const std::vector<std::string>& raw) {
  std::vector<std::string> out;
  std::vector<std::string> seen;
  for (const auto& v : raw) {
    std::string t = normalize_text(v);
    if (t.empty()) {
      continue;
    }
    std::string key = lowercase_utf8(t);
    bool dup = false;
    for (const auto& s : seen) {
      if (s == key) {
        dup = true;
        break;
      }
    }
    if (!dup) {
      seen.push_back(key);
      out.push_back(t);
    }
  }
  return out;
}

inline std::size_t stream_arity_cap(MetaStream s) {
  switch (s) {
    case MetaStream::keyphrase_embed: return 2;  // one phrase + one title candidate
    case MetaStream::keyphrase_stat: return 1;
    case MetaStream::ner: return 3;
    default: return static_cast<std::size_t>(-1);
  }
}

inline MetaRecord make_record(std::string doc_id, MetaStream stream,
                              const std::vector<std::string>& raw_values,
                              std::string provenance) {
  MetaRecord rec;
  rec.doc_id = std::move(doc_id);
  rec.stream = stream;
  rec.values = clean_values(raw_values);
  rec.provenance = std::move(provenance);
  std::size_t cap = stream_arity_cap(stream);
  if (rec.values.size() > cap) {
    rec.values.resize(cap);
  }
  return rec;
}

/// The consolidated, deduplicated repository of machine-generated metadata
/// for one corpus, keyed by (doc_id, stream).
struct MetaGenPool {
  std::map<std::pair<std::string, MetaStream>, MetaRecord> records;
  std::uint64_t corpus_size = 0;
  bool llm_stage_ran = false;
  std::map<std::string, std::uint64_t> failure_counts;  // stream name -> failed docs
  std::vector<std::pair<std::string, std::string>> rejects;  // doc_id, reason (not serialized)

  bool operator==(const MetaGenPool& other) const {
    return records == other.records && corpus_size == other.corpus_size &&
           llm_stage_ran == other.llm_stage_ran;
  }

  void insert(MetaRecord rec) {
    if (rec.values.empty()) {
      return;
    }
    auto key = std::make_pair(rec.doc_id, rec.stream);
    records[key] = std::move(rec);
  }

  const MetaRecord* find(const std::string& doc_id, MetaStream stream) const {
    auto it = records.find({doc_id, stream});
    return it == records.end() ? nullptr : &it->second;
  }

  std::vector<MetaStream> streams_present() const {
    std::vector<MetaStream> out;
    for (MetaStream s : kAllStreams) {
      for (const auto& [key, rec] : records) {
        if (key.second == s) {
          out.push_back(s);
          break;
        }
      }
    }
    return out;
  }

  std::size_t total_value_count() const {
    std::size_t n = 0;
    for (const auto& [key, rec] : records) {
      n += rec.values.size();
    }
    return n;
  }
};

/// Restriction of the pool to the given streams; corpus_size and stage flags
/// carry over so gate provenance survives filtering.
inline MetaGenPool pool_subset(const MetaGenPool& pool, const std::set<MetaStream>& streams) {
  MetaGenPool out;
  out.corpus_size = pool.corpus_size;
  out.llm_stage_ran = pool.llm_stage_ran;
  for (const auto& [key, rec] : pool.records) {
    if (streams.count(key.second)) {
      out.records[key] = rec;
    }
  }
  return out;
}

inline std::string serialize_pool(const MetaGenPool& pool) {
  std::string out;
  for (const auto& [key, rec] : pool.records) {
    json line{{"doc_id", rec.doc_id},
              {"stream", std::string(stream_name(rec.stream))},
              {"values", rec.values},
              {"provenance", rec.provenance}};
    out += line.dump();
    out += "\n";
  }
  return out;
}

inline void save_pool(const MetaGenPool& pool, const std::string& path) {
  write_file(path, serialize_pool(pool));
}

inline MetaGenPool load_pool(const std::string& path) {
  MetaGenPool pool;
  for_each_jsonl(path, [&](std::size_t lineno, const json& rec) {
    if (!rec.contains("doc_id") || !rec.contains("stream") || !rec.contains("values")) {
      throw DataError(path + ":" + std::to_string(lineno) + ": pool record missing fields");
    }
    auto stream = parse_stream(rec["stream"].get<std::string>());
    if (!stream) {
      throw DataError(path + ":" + std::to_string(lineno) + ": unknown stream '" +
                      rec["stream"].get<std::string>() + "'");
    }
    MetaRecord r = make_record(rec["doc_id"].get<std::string>(), *stream,
                               rec["values"].get<std::vector<std::string>>(),
                               rec.value("provenance", std::string{}));
    pool.insert(std::move(r));
  });
  for (const auto& [key, rec] : pool.records) {
    if (is_llm_stream(key.second)) {
      pool.llm_stage_ran = true;
      break;
    }
  }
  return pool;
}

}  // namespace metagen
