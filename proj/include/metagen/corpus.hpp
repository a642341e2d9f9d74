#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "metagen/errors.hpp"
#include "metagen/hash.hpp"
#include "metagen/jsonl.hpp"
#include "metagen/pool.hpp"
#include "metagen/text.hpp"

namespace metagen {

struct Document {
  std::string doc_id;
  std::string title;  // empty = absent
  std::string body;
  std::map<std::string, std::vector<std::string>> existing_meta;
  std::map<std::string, std::vector<std::string>> enriched_meta;

  bool operator==(const Document&) const = default;
};

struct Corpus {
  std::vector<Document> docs;  // ascending doc_id
  std::string source_tag;

  bool operator==(const Corpus&) const = default;

  const Document* find(std::string_view doc_id) const {
    auto it = std::lower_bound(docs.begin(), docs.end(), doc_id,
                               [](const Document& d, std::string_view id) { return d.doc_id < id; });
    if (it == docs.end() || it->doc_id != doc_id) {
      return nullptr;
    }
    return &*it;
  }

  std::size_t size() const { return docs.size(); }
};

struct BenchmarkItem {
  std::string question;
  std::vector<std::string> gold_doc_ids;
  std::string gold_answer;  // empty = absent

  bool operator==(const BenchmarkItem&) const = default;
};

struct Benchmark {
  std::vector<BenchmarkItem> items;

  bool operator==(const Benchmark&) const = default;
};

struct RecordError {
  std::string record_ref;
  std::string message;
};

struct IngestResult {
  Corpus corpus;
  Benchmark benchmark;  // empty unless the dataset carries questions
  std::vector<RecordError> errors;
  std::size_t records_in = 0;
};

/// Source-file key spellings are a lookup table, not hardcoded, because the
/// published datasets vary in casing and naming across distributions.
struct AdapterConfig {
  std::map<std::string, std::vector<std::string>> keys;
  std::map<std::string, std::string> enriched_fields;  // normalized source key -> stream name
};

inline AdapterConfig default_adapter_config() {
  AdapterConfig cfg;
  cfg.keys["id"] = {"id", "_id", "pubid", "PUBID"};
  cfg.keys["question"] = {"QUESTION", "question"};
  cfg.keys["contexts"] = {"CONTEXTS", "contexts", "context"};
  cfg.keys["long_answer"] = {"LONG_ANSWER", "long_answer"};
  cfg.keys["meshes"] = {"MESHES", "meshes", "mesh"};
  cfg.keys["decision"] = {"final_decision", "FINAL_DECISION", "decision"};
  cfg.keys["title"] = {"title", "TITLE"};
  cfg.keys["text"] = {"text", "body"};
  cfg.keys["metadata"] = {"metadata", "meta"};
  cfg.enriched_fields["keywords"] = "keyphrase_stat";
  cfg.enriched_fields["keybert"] = "keyphrase_embed";
  cfg.enriched_fields["yake"] = "keyphrase_stat";
  cfg.enriched_fields["entities"] = "ner";
  cfg.enriched_fields["topics"] = "llm_topics";
  cfg.enriched_fields["phrases"] = "llm_phrases";
  cfg.enriched_fields["key_phrases"] = "llm_phrases";
  cfg.enriched_fields["synonyms"] = "llm_synonyms";
  cfg.enriched_fields["acronyms"] = "llm_acronyms";
  return cfg;
}

namespace detail {

inline const json* find_key(const json& obj, const std::vector<std::string>& candidates) {
  for (const auto& k : candidates) {
    auto it = obj.find(k);
    if (it != obj.end() && !it->is_null()) {
      return &*it;
    }
  }
  return nullptr;
}

/// Lowercases an ASCII key and maps space/hyphen to underscore so that
/// "Key Phrases", "key-phrases", and "KEY_PHRASES" all hit one table row.
inline std::string normalize_key(std::string_view key) {
  std::string out;
  out.reserve(key.size());
  for (char c : key) {
    if (c == ' ' || c == '-') {
      out += '_';
    } else if (c >= 'A' && c <= 'Z') {
      out += static_cast<char>(c - 'A' + 'a');
    } else {
      out += c;
    }
  }
  return out;
}

inline std::vector<std::string> as_string_list(const json& v) {
  std::vector<std::string> out;
  if (v.is_string()) {
    out.push_back(v.get<std::string>());
  } else if (v.is_array()) {
    for (const auto& e : v) {
      if (e.is_string()) {
        out.push_back(e.get<std::string>());
      } else if (e.is_number() || e.is_boolean()) {
        out.push_back(e.dump());
      }
    }
  } else if (v.is_number() || v.is_boolean()) {
    out.push_back(v.dump());
  }
  return out;
}

inline std::string id_from_json(const json& v) {
  if (v.is_string()) {
    return v.get<std::string>();
  }
  if (v.is_number_integer()) {
    return std::to_string(v.get<std::int64_t>());
  }
  return v.dump();
}

struct CorpusBuilder {
  std::vector<Document> docs;
  std::set<std::string> ids;
  std::vector<RecordError>* errors;

  explicit CorpusBuilder(std::vector<RecordError>* errs) : errors(errs) {}

  bool add(Document doc, const std::string& record_ref) {
    if (doc.doc_id.empty()) {
      errors->push_back({record_ref, "empty doc_id"});
      return false;
    }
    if (doc.body.empty()) {
      errors->push_back({record_ref, "document body empty after normalization"});
      return false;
    }
    if (!ids.insert(doc.doc_id).second) {
      errors->push_back({record_ref, "duplicate doc_id '" + doc.doc_id + "'"});
      return false;
    }
    docs.push_back(std::move(doc));
    return true;
  }

  Corpus finish(std::string source_tag) {
    std::sort(docs.begin(), docs.end(),
              [](const Document& a, const Document& b) { return a.doc_id < b.doc_id; });
    Corpus c;
    c.docs = std::move(docs);
    c.source_tag = std::move(source_tag);
    return c;
  }
};

inline std::vector<std::string> clean_meta_values(const std::vector<std::string>& raw) {
  return clean_values(raw);
}

inline void set_meta_field(std::map<std::string, std::vector<std::string>>& target,
                           const std::string& field, const std::vector<std::string>& raw) {
  auto vals = clean_meta_values(raw);
  if (!vals.empty()) {
    target[field] = std::move(vals);
  }
}

inline void ingest_canonical(const std::string& path, IngestResult& result) {
  CorpusBuilder builder(&result.errors);
  for_each_jsonl(path, [&](std::size_t lineno, const json& rec) {
    ++result.records_in;
    std::string ref = path + ":" + std::to_string(lineno);
    if (!rec.is_object() || !rec.contains("id") || !rec.contains("text")) {
      result.errors.push_back({ref, "record must be an object with 'id' and 'text'"});
      return;
    }
    Document doc;
    doc.doc_id = id_from_json(rec["id"]);
    doc.title = normalize_text(rec.value("title", std::string{}));
    doc.body = normalize_text(rec["text"].is_string() ? rec["text"].get<std::string>() : std::string{});
    if (rec.contains("meta") && rec["meta"].is_object()) {
      for (const auto& [field, vals] : rec["meta"].items()) {
        set_meta_field(doc.existing_meta, field, as_string_list(vals));
      }
    }
    if (rec.contains("enriched") && rec["enriched"].is_object()) {
      for (const auto& [field, vals] : rec["enriched"].items()) {
        if (!parse_stream(field)) {
          result.errors.push_back({ref, "unknown enriched stream '" + field + "'"});
          return;
        }
        set_meta_field(doc.enriched_meta, field, as_string_list(vals));
      }
    }
    builder.add(std::move(doc), ref);
  });
  result.corpus = builder.finish("canonical");
}

inline void pubmedqa_record(const std::string& id, const json& rec, const std::string& ref,
                            const AdapterConfig& cfg, bool enriched, CorpusBuilder& builder,
                            IngestResult& result) {
  const json* question = find_key(rec, cfg.keys.at("question"));
  const json* contexts = find_key(rec, cfg.keys.at("contexts"));
  const json* long_answer = find_key(rec, cfg.keys.at("long_answer"));
  if (!contexts && !long_answer) {
    result.errors.push_back({ref, "record has neither contexts nor long answer"});
    return;
  }
  Document doc;
  doc.doc_id = id;
  std::string body;
  if (contexts) {
    const json* inner = contexts;
    // Some distributions nest the passage list one level down.
    if (contexts->is_object()) {
      inner = find_key(*contexts, cfg.keys.at("contexts"));
      if (!inner) {
        inner = contexts;
      }
    }
    for (const auto& part : as_string_list(*inner)) {
      if (!body.empty()) {
        body += " ";
      }
      body += part;
    }
  }
  if (long_answer && long_answer->is_string()) {
    if (!body.empty()) {
      body += " ";
    }
    body += long_answer->get<std::string>();
  }
  doc.body = normalize_text(body);
  if (const json* meshes = find_key(rec, cfg.keys.at("meshes"))) {
    set_meta_field(doc.existing_meta, "mesh", as_string_list(*meshes));
  }
  if (enriched) {
    for (const auto& [key, value] : rec.items()) {
      auto it = cfg.enriched_fields.find(normalize_key(key));
      if (it == cfg.enriched_fields.end()) {
        continue;
      }
      set_meta_field(doc.enriched_meta, it->second, as_string_list(value));
    }
  }
  if (!builder.add(std::move(doc), ref)) {
    return;
  }
  if (question && question->is_string()) {
    BenchmarkItem item;
    item.question = normalize_text(question->get<std::string>());
    item.gold_doc_ids = {id};
    if (const json* decision = find_key(rec, cfg.keys.at("decision"))) {
      if (decision->is_string()) {
        item.gold_answer = normalize_text(decision->get<std::string>());
      }
    }
    if (!item.question.empty()) {
      result.benchmark.items.push_back(std::move(item));
    }
  }
}

inline void ingest_pubmedqa(const std::string& path, const AdapterConfig& cfg, bool enriched,
                            IngestResult& result) {
  CorpusBuilder builder(&result.errors);
  std::string text = read_file(path);
  std::string first_token;
  for (char c : text) {
    if (!std::isspace(static_cast<unsigned char>(c))) {
      first_token = c;
      break;
    }
  }
  if (first_token == "{") {
    // Single JSON object keyed by pubid, the layout of the published corpus file.
    json root;
    try {
      root = json::parse(text);
    } catch (const json::exception& e) {
      throw DataError(path + ": " + e.what());
    }
    for (const auto& [id, rec] : root.items()) {
      ++result.records_in;
      if (!rec.is_object()) {
        result.errors.push_back({path + " record " + id, "record is not an object"});
        continue;
      }
      pubmedqa_record(id, rec, path + " record " + id, cfg, enriched, builder, result);
    }
  } else {
    for_each_jsonl(path, [&](std::size_t lineno, const json& rec) {
      ++result.records_in;
      std::string ref = path + ":" + std::to_string(lineno);
      const json* id = find_key(rec, cfg.keys.at("id"));
      if (!id) {
        result.errors.push_back({ref, "record missing id"});
        return;
      }
      pubmedqa_record(id_from_json(*id), rec, ref, cfg, enriched, builder, result);
    });
  }
  result.corpus = builder.finish(enriched ? "pubmedqa_enriched" : "pubmedqa");
}

inline void ingest_nq(const std::string& path, const AdapterConfig& cfg, IngestResult& result) {
  CorpusBuilder builder(&result.errors);
  for_each_jsonl(path, [&](std::size_t lineno, const json& rec) {
    ++result.records_in;
    std::string ref = path + ":" + std::to_string(lineno);
    const json* id = find_key(rec, cfg.keys.at("id"));
    const json* text = find_key(rec, cfg.keys.at("text"));
    if (!id || !text || !text->is_string()) {
      result.errors.push_back({ref, "record missing id or text"});
      return;
    }
    Document doc;
    doc.doc_id = id_from_json(*id);
    doc.body = normalize_text(text->get<std::string>());
    if (const json* title = find_key(rec, cfg.keys.at("title"))) {
      if (title->is_string()) {
        doc.title = normalize_text(title->get<std::string>());
      }
    }
    if (const json* meta = find_key(rec, cfg.keys.at("metadata"))) {
      if (meta->is_object()) {
        for (const auto& [field, vals] : meta->items()) {
          set_meta_field(doc.existing_meta, normalize_key(field), as_string_list(vals));
        }
      }
    }
    builder.add(std::move(doc), ref);
  });
  result.corpus = builder.finish("nq");
}

inline void ingest_squad(const std::string& path, IngestResult& result) {
  json root;
  try {
    root = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw DataError(path + ": " + e.what());
  }
  if (!root.contains("data") || !root["data"].is_array()) {
    throw DataError(path + ": missing top-level 'data' array");
  }
  CorpusBuilder builder(&result.errors);
  for (const auto& article : root["data"]) {
    std::string title = normalize_text(article.value("title", std::string{}));
    if (!article.contains("paragraphs") || !article["paragraphs"].is_array()) {
      ++result.records_in;
      result.errors.push_back({path + " article '" + title + "'", "missing paragraphs"});
      continue;
    }
    std::size_t para_idx = 0;
    for (const auto& para : article["paragraphs"]) {
      ++result.records_in;
      char suffix[16];
      std::snprintf(suffix, sizeof(suffix), "#p%04zu", para_idx);
      std::string doc_id = title + suffix;
      ++para_idx;
      std::string ref = path + " paragraph " + doc_id;
      if (!para.contains("context") || !para["context"].is_string()) {
        result.errors.push_back({ref, "paragraph missing context"});
        continue;
      }
      Document doc;
      doc.doc_id = doc_id;
      doc.title = title;
      doc.body = normalize_text(para["context"].get<std::string>());
      if (!builder.add(std::move(doc), ref)) {
        continue;
      }
      if (para.contains("qas") && para["qas"].is_array()) {
        for (const auto& qa : para["qas"]) {
          BenchmarkItem item;
          item.question = normalize_text(qa.value("question", std::string{}));
          if (item.question.empty()) {
            continue;
          }
          item.gold_doc_ids = {doc_id};
          if (qa.contains("answers") && qa["answers"].is_array() && !qa["answers"].empty()) {
            item.gold_answer = normalize_text(qa["answers"][0].value("text", std::string{}));
          }
          result.benchmark.items.push_back(std::move(item));
        }
      }
    }
  }
  result.corpus = builder.finish("squad");
}

}  // namespace detail

inline IngestResult load_dataset(const std::string& path, const std::string& adapter,
                                 const AdapterConfig& cfg = default_adapter_config()) {
  IngestResult result;
  if (adapter == "canonical") {
    detail::ingest_canonical(path, result);
  } else if (adapter == "pubmedqa") {
    detail::ingest_pubmedqa(path, cfg, false, result);
  } else if (adapter == "pubmedqa_enriched") {
    detail::ingest_pubmedqa(path, cfg, true, result);
  } else if (adapter == "nq") {
    detail::ingest_nq(path, cfg, result);
  } else if (adapter == "squad") {
    detail::ingest_squad(path, result);
  } else {
    throw ConfigError("unknown adapter '" + adapter + "'");
  }
  if (result.corpus.docs.empty()) {
    throw DataError(path + ": no documents survived ingestion");
  }
  return result;
}

/// Strict loader: any malformed record aborts the load.
inline Corpus load_corpus(const std::string& path, const std::string& adapter,
                          const AdapterConfig& cfg = default_adapter_config()) {
  IngestResult result = load_dataset(path, adapter, cfg);
  if (!result.errors.empty()) {
    const auto& e = result.errors.front();
    throw DataError(e.record_ref + ": " + e.message);
  }
  return std::move(result.corpus);
}

inline json document_to_json(const Document& doc) {
  json rec{{"id", doc.doc_id}, {"text", doc.body}};
  if (!doc.title.empty()) {
    rec["title"] = doc.title;
  }
  if (!doc.existing_meta.empty()) {
    rec["meta"] = doc.existing_meta;
  }
  if (!doc.enriched_meta.empty()) {
    rec["enriched"] = doc.enriched_meta;
  }
  return rec;
}

inline std::string serialize_corpus(const Corpus& corpus) {
  std::string out;
  for (const auto& doc : corpus.docs) {
    out += document_to_json(doc).dump();
    out += "\n";
  }
  return out;
}

inline void save_corpus(const Corpus& corpus, const std::string& path) {
  write_file(path, serialize_corpus(corpus));
}

/// Content fingerprint used by index files to guard against stale pairings.
inline std::string corpus_checksum(const Corpus& corpus) {
  return to_hex(fnv1a64(serialize_corpus(corpus)));
}

inline Benchmark load_benchmark(const std::string& path) {
  Benchmark bench;
  for_each_jsonl(path, [&](std::size_t lineno, const json& rec) {
    std::string ref = path + ":" + std::to_string(lineno);
    if (!rec.contains("question") || !rec.contains("gold_ids")) {
      throw DataError(ref + ": benchmark record needs 'question' and 'gold_ids'");
    }
    BenchmarkItem item;
    item.question = normalize_text(rec["question"].get<std::string>());
    for (const auto& id : rec["gold_ids"]) {
      item.gold_doc_ids.push_back(detail::id_from_json(id));
    }
    if (item.question.empty()) {
      throw DataError(ref + ": empty question");
    }
    if (item.gold_doc_ids.empty()) {
      throw DataError(ref + ": empty gold_ids");
    }
    item.gold_answer = normalize_text(rec.value("answer", std::string{}));
    bench.items.push_back(std::move(item));
  });
  return bench;
}

inline std::string serialize_benchmark(const Benchmark& bench) {
  std::string out;
  for (const auto& item : bench.items) {
    json rec{{"question", item.question}, {"gold_ids", item.gold_doc_ids}};
    if (!item.gold_answer.empty()) {
      rec["answer"] = item.gold_answer;
    }
    out += rec.dump();
    out += "\n";
  }
  return out;
}

inline void save_benchmark(const Benchmark& bench, const std::string& path) {
  write_file(path, serialize_benchmark(bench));
}

/// Throws unless every gold id in the benchmark resolves against the corpus.
inline void validate_benchmark(const Benchmark& bench, const Corpus& corpus) {
  for (std::size_t i = 0; i < bench.items.size(); ++i) {
    for (const auto& id : bench.items[i].gold_doc_ids) {
      if (corpus.find(id) == nullptr) {
        throw DataError("benchmark item " + std::to_string(i) + ": gold doc '" + id +
                        "' not in corpus");
      }
    }
  }
}

inline Corpus attach_metadata(const Corpus& corpus, const MetaGenPool& pool) {
  for (const auto& [key, rec] : pool.records) {
    if (corpus.find(key.first) == nullptr) {
      throw DataError("pool references unknown doc_id '" + key.first + "'");
    }
    (void)rec;
  }
  Corpus out = corpus;
  for (auto& doc : out.docs) {
    for (MetaStream s : kAllStreams) {
      const MetaRecord* rec = pool.find(doc.doc_id, s);
      if (rec != nullptr) {
        doc.enriched_meta[std::string(stream_name(s))] = rec->values;
      }
    }
  }
  return out;
}

/// Lifts enrichment that arrived with the dataset (adapter-mapped enriched
/// fields) into pool records, so pre-enriched corpora feed selection and
/// evaluation the same way a locally built pool does.
inline MetaGenPool pool_from_corpus(const Corpus& corpus) {
  MetaGenPool pool;
  pool.corpus_size = corpus.size();
  for (const auto& doc : corpus.docs) {
    for (const auto& [name, values] : doc.enriched_meta) {
      auto stream = parse_stream(name);
      if (!stream.has_value()) {
        throw DataError("doc '" + doc.doc_id + "' carries unknown enriched stream '" + name +
                        "'");
      }
      MetaRecord rec;
      rec.doc_id = doc.doc_id;
      rec.stream = *stream;
      rec.values = clean_values(values);
      rec.provenance = "ingested";
      pool.insert(std::move(rec));
      if (is_llm_stream(*stream)) {
        pool.llm_stage_ran = true;
      }
    }
  }
  return pool;
}

/// Drops every enriched field so an evaluation can attach exactly the stream
/// set under test, whatever the ingest adapter delivered.
inline Corpus strip_enrichment(const Corpus& corpus) {
  Corpus out = corpus;
  for (auto& doc : out.docs) {
    doc.enriched_meta.clear();
  }
  return out;
}

// ---- Index field naming ----
//
// Concrete fields are "body", "title", "meta.<field>", "enriched.<stream>".
// Patterns additionally allow the wildcards "meta.*" and "enriched.*".

inline std::optional<std::string> field_text(const Document& doc, std::string_view field) {
  auto join = [](const std::vector<std::string>& vals) {
    std::string s;
    for (const auto& v : vals) {
      if (!s.empty()) {
        s += " ";
      }
      s += v;
    }
    return s;
  };
  if (field == "body") {
    return doc.body;
  }
  if (field == "title") {
    if (doc.title.empty()) {
      return std::nullopt;
    }
    return doc.title;
  }
  if (field.rfind("meta.", 0) == 0) {
    auto it = doc.existing_meta.find(std::string(field.substr(5)));
    if (it == doc.existing_meta.end()) {
      return std::nullopt;
    }
    return join(it->second);
  }
  if (field.rfind("enriched.", 0) == 0) {
    auto it = doc.enriched_meta.find(std::string(field.substr(9)));
    if (it == doc.enriched_meta.end()) {
      return std::nullopt;
    }
    return join(it->second);
  }
  return std::nullopt;
}

/// Expands field patterns against a corpus into a sorted list of concrete
/// field names. A concrete name present in no document is a config error;
/// a wildcard matching nothing expands to the empty set.
inline std::vector<std::string> expand_fields(const Corpus& corpus,
                                              const std::vector<std::string>& patterns) {
  std::set<std::string> out;
  std::set<std::string> meta_fields;
  std::set<std::string> enriched_fields;
  bool any_title = false;
  for (const auto& doc : corpus.docs) {
    if (!doc.title.empty()) {
      any_title = true;
    }
    for (const auto& [f, v] : doc.existing_meta) {
      meta_fields.insert("meta." + f);
    }
    for (const auto& [f, v] : doc.enriched_meta) {
      enriched_fields.insert("enriched." + f);
    }
  }
  for (const auto& p : patterns) {
    if (p == "body") {
      out.insert("body");
    } else if (p == "title") {
      if (any_title) {
        out.insert("title");
      }
    } else if (p == "meta.*") {
      out.insert(meta_fields.begin(), meta_fields.end());
    } else if (p == "enriched.*") {
      out.insert(enriched_fields.begin(), enriched_fields.end());
    } else if (p.rfind("meta.", 0) == 0) {
      if (!meta_fields.count(p)) {
        throw ConfigError("field '" + p + "' not present in corpus");
      }
      out.insert(p);
    } else if (p.rfind("enriched.", 0) == 0) {
      if (!enriched_fields.count(p)) {
        throw ConfigError("field '" + p + "' not present in corpus");
      }
      out.insert(p);
    } else {
      throw ConfigError("unknown field pattern '" + p + "'");
    }
  }
  return {out.begin(), out.end()};
}

}  // namespace metagen
