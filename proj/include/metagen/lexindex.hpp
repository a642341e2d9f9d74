#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "metagen/corpus.hpp"
#include "metagen/errors.hpp"
#include "metagen/hash.hpp"
#include "metagen/jsonl.hpp"
#include "metagen/scored_hit.hpp"
#include "metagen/text.hpp"

namespace metagen {

struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;

  bool operator==(const Bm25Params&) const = default;
};

inline void validate_bm25_params(const Bm25Params& p) {
  if (!(p.k1 > 0.0)) {
    throw ConfigError("bm25 k1 must be positive");
  }
  if (!(p.b >= 0.0 && p.b <= 1.0)) {
    throw ConfigError("bm25 b must be in [0, 1]");
  }
}

/// field-name -> multiplier; fields not listed default to 1.0.
struct FieldBoosts {
  std::map<std::string, double> boost;

  double get(const std::string& field) const {
    auto it = boost.find(field);
    return it == boost.end() ? 1.0 : it->second;
  }

  bool operator==(const FieldBoosts&) const = default;
};

struct Posting {
  std::uint32_t doc = 0;  // index into doc_ids
  std::uint32_t tf = 0;

  bool operator==(const Posting&) const = default;
};

struct LexIndex {
  std::vector<std::string> doc_ids;  // ascending; position is the doc number
  std::vector<std::string> fields;   // sorted concrete field names
  Bm25Params params;
  std::string corpus_checksum;
  // postings[term][field_idx]: sorted by doc, tf >= 1
  std::map<std::string, std::map<std::uint32_t, std::vector<Posting>>> postings;
  std::vector<std::vector<std::uint32_t>> field_lengths;  // [field_idx][doc]
  std::vector<std::vector<std::uint8_t>> field_present;   // [field_idx][doc]
  std::vector<double> avg_field_length;                   // [field_idx]
  std::vector<std::uint64_t> docs_with_field;             // [field_idx]

  std::size_t doc_count() const { return doc_ids.size(); }

  std::int32_t field_index(const std::string& field) const {
    auto it = std::lower_bound(fields.begin(), fields.end(), field);
    if (it == fields.end() || *it != field) {
      return -1;
    }
    return static_cast<std::int32_t>(it - fields.begin());
  }
};

/// Builds the complete multi-field index. Patterns ("meta.*", "enriched.*")
/// are expanded against the corpus; list-valued fields were joined with
/// single spaces by field_text before tokenization.
inline LexIndex build_lexical_index(const Corpus& corpus,
                                    const std::vector<std::string>& field_patterns,
                                    const Bm25Params& params = {}) {
  validate_bm25_params(params);
  if (field_patterns.empty()) {
    throw ConfigError("at least one field is required to build a lexical index");
  }
  LexIndex index;
  index.params = params;
  index.fields = expand_fields(corpus, field_patterns);
  if (index.fields.empty()) {
    throw ConfigError("field patterns expanded to no concrete fields");
  }
  index.corpus_checksum = corpus_checksum(corpus);
  index.doc_ids.reserve(corpus.size());
  for (const auto& doc : corpus.docs) {
    index.doc_ids.push_back(doc.doc_id);
  }
  std::size_t nf = index.fields.size();
  index.field_lengths.assign(nf, std::vector<std::uint32_t>(corpus.size(), 0));
  index.field_present.assign(nf, std::vector<std::uint8_t>(corpus.size(), 0));
  index.avg_field_length.assign(nf, 0.0);
  index.docs_with_field.assign(nf, 0);

  for (std::size_t f = 0; f < nf; ++f) {
    for (std::size_t d = 0; d < corpus.size(); ++d) {
      auto text = field_text(corpus.docs[d], index.fields[f]);
      if (!text.has_value()) {
        continue;
      }
      index.field_present[f][d] = 1;
      ++index.docs_with_field[f];
      std::map<std::string, std::uint32_t> counts;
      std::uint32_t len = 0;
      for (const auto& tok : tokenize(*text)) {
        ++counts[tok];
        ++len;
      }
      index.field_lengths[f][d] = len;
      index.avg_field_length[f] += static_cast<double>(len);
      for (const auto& [term, tf] : counts) {
        index.postings[term][static_cast<std::uint32_t>(f)].push_back(
            {static_cast<std::uint32_t>(d), tf});
      }
    }
    if (index.docs_with_field[f] > 0) {
      index.avg_field_length[f] /= static_cast<double>(index.docs_with_field[f]);
    }
  }
  return index;
}

namespace detail {

inline double bm25_idf(std::size_t doc_count, std::size_t n_t) {
  double n = static_cast<double>(doc_count);
  double nt = static_cast<double>(n_t);
  return std::log(1.0 + (n - nt + 0.5) / (nt + 0.5));
}

inline double bm25_tf_norm(double tf, double len, double avglen, const Bm25Params& p) {
  double length_ratio = avglen > 0.0 ? len / avglen : 1.0;
  return tf * (p.k1 + 1.0) / (tf + p.k1 * (1.0 - p.b + p.b * length_ratio));
}

}  // namespace detail

/// Per-field unboosted BM25 contributions for every matching document.
/// bm25_search computes sum_f boost(f) * contribution(doc, f) from this.
inline std::map<std::string, std::map<std::string, double>> bm25_decompose(
    const LexIndex& index, const std::string& query) {
  std::vector<std::string> terms = tokenize(query);
  std::sort(terms.begin(), terms.end());
  terms.erase(std::unique(terms.begin(), terms.end()), terms.end());

  std::map<std::string, std::map<std::string, double>> out;
  for (const auto& term : terms) {
    auto it = index.postings.find(term);
    if (it == index.postings.end()) {
      continue;
    }
    for (const auto& [f, plist] : it->second) {
      double idf = detail::bm25_idf(index.doc_count(), plist.size());
      double avglen = index.avg_field_length[f];
      for (const Posting& p : plist) {
        double norm = detail::bm25_tf_norm(static_cast<double>(p.tf),
                                           static_cast<double>(index.field_lengths[f][p.doc]),
                                           avglen, index.params);
        out[index.doc_ids[p.doc]][index.fields[f]] += idf * norm;
      }
    }
  }
  return out;
}

/// Top-k BM25. Distinct query terms are scored per field with
/// idf = ln(1 + (N - n_t + 0.5)/(n_t + 0.5)) and tf saturation
/// tf(k1+1)/(tf + k1(1 - b + b len/avglen)), then combined as
/// sum_f boost(f) * bm25_f. Fields with boost 0 are skipped entirely so
/// their matches cannot surface documents.
inline std::vector<ScoredHit> bm25_search(const LexIndex& index, const std::string& query,
                                          const FieldBoosts& boosts, std::size_t k) {
  if (k < 1) {
    throw ConfigError("bm25_search requires k >= 1");
  }
  bool any_positive = false;
  for (const auto& f : index.fields) {
    if (boosts.get(f) > 0.0) {
      any_positive = true;
    }
    if (boosts.get(f) < 0.0) {
      throw ConfigError("negative boost for field '" + f + "'");
    }
  }
  if (!any_positive) {
    throw ConfigError("all field boosts are zero");
  }

  std::vector<std::string> terms = tokenize(query);
  std::sort(terms.begin(), terms.end());
  terms.erase(std::unique(terms.begin(), terms.end()), terms.end());

  std::vector<double> scores(index.doc_count(), 0.0);
  std::vector<std::uint8_t> touched(index.doc_count(), 0);
  for (const auto& term : terms) {
    auto it = index.postings.find(term);
    if (it == index.postings.end()) {
      continue;
    }
    for (const auto& [f, plist] : it->second) {
      double boost = boosts.get(index.fields[f]);
      if (boost == 0.0) {
        continue;
      }
      double idf = detail::bm25_idf(index.doc_count(), plist.size());
      double avglen = index.avg_field_length[f];
      for (const Posting& p : plist) {
        double norm = detail::bm25_tf_norm(static_cast<double>(p.tf),
                                           static_cast<double>(index.field_lengths[f][p.doc]),
                                           avglen, index.params);
        scores[p.doc] += boost * idf * norm;
        touched[p.doc] = 1;
      }
    }
  }

  std::vector<std::uint32_t> docs;
  for (std::uint32_t d = 0; d < scores.size(); ++d) {
    if (touched[d]) {
      docs.push_back(d);
    }
  }
  std::sort(docs.begin(), docs.end(), [&](std::uint32_t a, std::uint32_t b) {
    if (scores[a] != scores[b]) {
      return scores[a] > scores[b];
    }
    return a < b;  // doc numbers follow ascending doc_id
  });
  if (docs.size() > k) {
    docs.resize(k);
  }
  std::vector<ScoredHit> hits;
  hits.reserve(docs.size());
  for (std::uint32_t d : docs) {
    ScoredHit h;
    h.doc_id = index.doc_ids[d];
    h.lex_score = scores[d];
    hits.push_back(std::move(h));
  }
  return hits;
}

inline void save_lex_index(const LexIndex& index, const std::string& path) {
  std::string out;
  json header{{"type", "lexindex"},
              {"version", 1},
              {"k1", index.params.k1},
              {"b", index.params.b},
              {"fields", index.fields},
              {"corpus_checksum", index.corpus_checksum},
              {"doc_count", index.doc_ids.size()}};
  out += header.dump();
  out += "\n";
  json docs{{"doc_ids", index.doc_ids}};
  out += docs.dump();
  out += "\n";
  for (std::size_t f = 0; f < index.fields.size(); ++f) {
    json lengths{{"field", index.fields[f]},
                 {"lengths", index.field_lengths[f]},
                 {"present", index.field_present[f]}};
    out += lengths.dump();
    out += "\n";
  }
  for (const auto& [term, by_field] : index.postings) {
    for (const auto& [f, plist] : by_field) {
      json rec{{"term", term}, {"field", index.fields[f]}};
      json arr = json::array();
      for (const Posting& p : plist) {
        arr.push_back({p.doc, p.tf});
      }
      rec["postings"] = arr;
      out += rec.dump();
      out += "\n";
    }
  }
  write_file(path, out);
}

inline LexIndex load_lex_index(const std::string& path) {
  LexIndex index;
  bool have_header = false;
  bool have_docs = false;
  std::size_t length_rows = 0;
  for_each_jsonl(path, [&](std::size_t lineno, const json& rec) {
    std::string ref = path + ":" + std::to_string(lineno);
    if (!have_header) {
      if (rec.value("type", std::string{}) != "lexindex" || rec.value("version", 0) != 1) {
        throw DataError(ref + ": not a version-1 lexindex file");
      }
      index.params.k1 = rec["k1"].get<double>();
      index.params.b = rec["b"].get<double>();
      index.fields = rec["fields"].get<std::vector<std::string>>();
      index.corpus_checksum = rec["corpus_checksum"].get<std::string>();
      have_header = true;
      return;
    }
    if (!have_docs) {
      index.doc_ids = rec["doc_ids"].get<std::vector<std::string>>();
      index.field_lengths.assign(index.fields.size(),
                                 std::vector<std::uint32_t>(index.doc_ids.size(), 0));
      index.field_present.assign(index.fields.size(),
                                 std::vector<std::uint8_t>(index.doc_ids.size(), 0));
      have_docs = true;
      return;
    }
    if (length_rows < index.fields.size()) {
      std::string field = rec["field"].get<std::string>();
      std::int32_t f = index.field_index(field);
      if (f < 0) {
        throw DataError(ref + ": lengths for unknown field '" + field + "'");
      }
      index.field_lengths[f] = rec["lengths"].get<std::vector<std::uint32_t>>();
      index.field_present[f] = rec["present"].get<std::vector<std::uint8_t>>();
      if (index.field_lengths[f].size() != index.doc_ids.size() ||
          index.field_present[f].size() != index.doc_ids.size()) {
        throw DataError(ref + ": length arrays do not match doc count");
      }
      ++length_rows;
      return;
    }
    std::string field = rec["field"].get<std::string>();
    std::int32_t f = index.field_index(field);
    if (f < 0) {
      throw DataError(ref + ": postings for unknown field '" + field + "'");
    }
    std::vector<Posting>& plist = index.postings[rec["term"].get<std::string>()]
                                                [static_cast<std::uint32_t>(f)];
    for (const auto& pair : rec["postings"]) {
      Posting p;
      p.doc = pair[0].get<std::uint32_t>();
      p.tf = pair[1].get<std::uint32_t>();
      if (p.doc >= index.doc_ids.size() || p.tf < 1) {
        throw DataError(ref + ": posting out of range");
      }
      plist.push_back(p);
    }
  });
  if (!have_header || !have_docs || length_rows != index.fields.size()) {
    throw DataError(path + ": truncated lexindex file");
  }
  index.avg_field_length.assign(index.fields.size(), 0.0);
  index.docs_with_field.assign(index.fields.size(), 0);
  for (std::size_t f = 0; f < index.fields.size(); ++f) {
    for (std::size_t d = 0; d < index.doc_ids.size(); ++d) {
      if (index.field_present[f][d]) {
        ++index.docs_with_field[f];
        index.avg_field_length[f] += static_cast<double>(index.field_lengths[f][d]);
      }
    }
    if (index.docs_with_field[f] > 0) {
      index.avg_field_length[f] /= static_cast<double>(index.docs_with_field[f]);
    }
  }
  return index;
}

/// Checksum guard: an index persisted from one corpus must not be queried
/// against another.
inline void verify_index_corpus(const LexIndex& index, const Corpus& corpus) {
  std::string expect = corpus_checksum(corpus);
  if (index.corpus_checksum != expect) {
    throw DataError("lexindex corpus checksum " + index.corpus_checksum +
                    " does not match corpus " + expect);
  }
}

}  // namespace metagen
