#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "metagen/corpus.hpp"
#include "metagen/errors.hpp"
#include "metagen/jsonl.hpp"
#include "metagen/providers.hpp"
#include "metagen/scored_hit.hpp"

namespace metagen {

struct EmbeddingVector {
  std::vector<float> values;

  std::size_t dim() const { return values.size(); }

  friend bool operator==(const EmbeddingVector&, const EmbeddingVector&) = default;
};

/// Exact-scan dense index. Vectors are unit-normalized at build time, so
/// cosine against a unit query reduces to a dot product.
struct VecIndex {
  std::map<std::string, EmbeddingVector> vectors;
  std::size_t dim = 0;
  std::string provider_id;
  std::string embed_text_recipe;
  std::string corpus_checksum;

  std::size_t size() const { return vectors.size(); }
};

inline const std::vector<std::string>& default_embed_recipe() {
  static const std::vector<std::string> recipe = {"title", "body", "enriched.*"};
  return recipe;
}

inline std::string recipe_string(const std::vector<std::string>& fields) {
  std::string out;
  for (const auto& f : fields) {
    if (!out.empty()) {
      out += "+";
    }
    out += f;
  }
  return out;
}

namespace detail {

/// Like expand_fields but preserves recipe order; concatenation order is part
/// of the embedding recipe.
inline std::vector<std::string> expand_recipe(const Corpus& corpus,
                                              const std::vector<std::string>& recipe) {
  if (recipe.empty()) {
    throw ConfigError("embedding recipe must name at least one field");
  }
  std::set<std::string> meta_fields;
  std::set<std::string> enriched_fields;
  for (const auto& doc : corpus.docs) {
    for (const auto& [f, v] : doc.existing_meta) {
      meta_fields.insert("meta." + f);
    }
    for (const auto& [f, v] : doc.enriched_meta) {
      enriched_fields.insert("enriched." + f);
    }
  }
  std::vector<std::string> out;
  std::set<std::string> seen;
  auto push = [&](const std::string& f) {
    if (seen.insert(f).second) {
      out.push_back(f);
    }
  };
  for (const auto& p : recipe) {
    if (p == "body" || p == "title") {
      push(p);
    } else if (p == "meta.*") {
      for (const auto& f : meta_fields) {
        push(f);
      }
    } else if (p == "enriched.*") {
      for (const auto& f : enriched_fields) {
        push(f);
      }
    } else if (p.rfind("meta.", 0) == 0) {
      if (!meta_fields.count(p)) {
        throw ConfigError("recipe field '" + p + "' not present in corpus");
      }
      push(p);
    } else if (p.rfind("enriched.", 0) == 0) {
      if (!enriched_fields.count(p)) {
        throw ConfigError("recipe field '" + p + "' not present in corpus");
      }
      push(p);
    } else {
      throw ConfigError("unknown recipe field '" + p + "'");
    }
  }
  return out;
}

}  // namespace detail

inline std::string embed_text_for_doc(const Document& doc,
                                      const std::vector<std::string>& expanded_fields) {
  std::string out;
  for (const auto& field : expanded_fields) {
    auto text = field_text(doc, field);
    if (!text.has_value() || text->empty()) {
      continue;
    }
    if (!out.empty()) {
      out += " ";
    }
    out += *text;
  }
  return out;
}

inline VecIndex build_vector_index(const Corpus& corpus, EmbeddingProvider& provider,
                                   const std::vector<std::string>& recipe = default_embed_recipe(),
                                   std::size_t batch_size = 128) {
  if (batch_size == 0) {
    throw ConfigError("batch_size must be at least 1");
  }
  if (corpus.docs.empty()) {
    throw DataError("cannot build a vector index over an empty corpus");
  }
  auto expanded = detail::expand_recipe(corpus, recipe);

  VecIndex index;
  index.dim = provider.dim();
  index.provider_id = provider.id();
  index.embed_text_recipe = recipe_string(recipe);
  index.corpus_checksum = corpus_checksum(corpus);

  for (std::size_t start = 0; start < corpus.docs.size(); start += batch_size) {
    std::size_t end = std::min(start + batch_size, corpus.docs.size());
    std::vector<std::string> texts;
    texts.reserve(end - start);
    for (std::size_t i = start; i < end; ++i) {
      texts.push_back(embed_text_for_doc(corpus.docs[i], expanded));
    }
    std::vector<std::vector<float>> vecs;
    try {
      vecs = embed_texts(provider, texts);
    } catch (const ProviderError& e) {
      throw ProviderError("embedding failed for docs starting at '" +
                              corpus.docs[start].doc_id + "': " + e.what(),
                          e.retryable());
    }
    for (std::size_t i = start; i < end; ++i) {
      if (vecs[i - start].size() != index.dim) {
        throw ProviderError("dimension drift at doc '" + corpus.docs[i].doc_id + "': got " +
                            std::to_string(vecs[i - start].size()) + ", index dim " +
                            std::to_string(index.dim));
      }
      index.vectors.emplace(corpus.docs[i].doc_id, EmbeddingVector{std::move(vecs[i - start])});
    }
  }
  return index;
}

/// Queries embed the raw question text only; metadata is document-side.
inline EmbeddingVector embed_query(EmbeddingProvider& provider, const std::string& question) {
  auto vecs = embed_texts(provider, {question});
  return EmbeddingVector{std::move(vecs[0])};
}

inline std::vector<ScoredHit> knn_search(const VecIndex& index, const EmbeddingVector& qvec,
                                         std::size_t k) {
  if (k < 1) {
    throw ConfigError("knn_search requires k >= 1");
  }
  if (qvec.dim() != index.dim) {
    throw ConfigError("query dimension " + std::to_string(qvec.dim()) +
                      " does not match index dimension " + std::to_string(index.dim));
  }
  double qnorm = 0.0;
  for (float v : qvec.values) {
    qnorm += static_cast<double>(v) * static_cast<double>(v);
  }
  qnorm = std::sqrt(qnorm);
  if (!(qnorm > 0.0) || !std::isfinite(qnorm)) {
    throw ConfigError("query vector has zero or non-finite norm");
  }

  std::vector<ScoredHit> hits;
  hits.reserve(index.vectors.size());
  for (const auto& [doc_id, vec] : index.vectors) {
    double dot = 0.0;
    for (std::size_t i = 0; i < index.dim; ++i) {
      dot += static_cast<double>(qvec.values[i]) * static_cast<double>(vec.values[i]);
    }
    ScoredHit h;
    h.doc_id = doc_id;
    h.sem_score = dot / qnorm;
    hits.push_back(std::move(h));
  }
  std::sort(hits.begin(), hits.end(), [](const ScoredHit& a, const ScoredHit& b) {
    if (*a.sem_score != *b.sem_score) {
      return *a.sem_score > *b.sem_score;
    }
    return a.doc_id < b.doc_id;
  });
  if (hits.size() > k) {
    hits.resize(k);
  }
  return hits;
}

inline void save_vec_index(const VecIndex& index, const std::string& path) {
  std::vector<json> lines;
  lines.push_back(json{{"type", "vecindex"},
                       {"version", 1},
                       {"dim", index.dim},
                       {"provider_id", index.provider_id},
                       {"recipe", index.embed_text_recipe},
                       {"corpus_checksum", index.corpus_checksum},
                       {"doc_count", index.vectors.size()}});
  for (const auto& [doc_id, vec] : index.vectors) {
    lines.push_back(json{{"doc_id", doc_id}, {"vec", vec.values}});
  }
  write_jsonl(path, lines);
}

inline VecIndex load_vec_index(const std::string& path) {
  VecIndex index;
  bool have_header = false;
  std::size_t expected = 0;
  for_each_jsonl(path, [&](std::size_t lineno, const json& line) {
    if (!have_header) {
      if (line.value("type", "") != "vecindex" || line.value("version", 0) != 1) {
        throw DataError(path + ": not a version-1 vector index file");
      }
      index.dim = line.at("dim").get<std::size_t>();
      index.provider_id = line.at("provider_id").get<std::string>();
      index.embed_text_recipe = line.at("recipe").get<std::string>();
      index.corpus_checksum = line.at("corpus_checksum").get<std::string>();
      expected = line.at("doc_count").get<std::size_t>();
      have_header = true;
      return;
    }
    EmbeddingVector vec{line.at("vec").get<std::vector<float>>()};
    if (vec.dim() != index.dim) {
      throw DataError(path + ":" + std::to_string(lineno) + ": vector dimension " +
                      std::to_string(vec.dim()) + " does not match header dim " +
                      std::to_string(index.dim));
    }
    double norm = 0.0;
    for (float v : vec.values) {
      norm += static_cast<double>(v) * static_cast<double>(v);
    }
    norm = std::sqrt(norm);
    if (std::abs(norm - 1.0) > 1e-5) {
      throw DataError(path + ":" + std::to_string(lineno) + ": stored vector is not unit-norm");
    }
    auto [it, inserted] = index.vectors.emplace(line.at("doc_id").get<std::string>(), std::move(vec));
    if (!inserted) {
      throw DataError(path + ":" + std::to_string(lineno) + ": duplicate doc_id '" + it->first +
                      "'");
    }
  });
  if (!have_header) {
    throw DataError(path + ": empty vector index file");
  }
  if (index.vectors.size() != expected) {
    throw DataError(path + ": header promised " + std::to_string(expected) + " vectors, found " +
                    std::to_string(index.vectors.size()));
  }
  return index;
}

inline void verify_vec_index_corpus(const VecIndex& index, const Corpus& corpus) {
  if (index.corpus_checksum != corpus_checksum(corpus)) {
    throw DataError("vector index was built over a different corpus (checksum mismatch)");
  }
  if (index.vectors.size() != corpus.size()) {
    throw DataError("vector index covers " + std::to_string(index.vectors.size()) +
                    " docs, corpus has " + std::to_string(corpus.size()));
  }
}

}  // namespace metagen
