#pragma once

#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include "metagen/corpus.hpp"
#include "metagen/enrich_config.hpp"
#include "metagen/errors.hpp"
#include "metagen/pool.hpp"
#include "metagen/providers.hpp"
#include "metagen/stopwords.hpp"
#include "metagen/text.hpp"

namespace metagen {

/// Distinct candidate phrases for embedding comparison: within-sentence
/// n-grams of 1..max_ngram non-stopword terms, no term repeated, returned
/// in first-occurrence order.
inline std::vector<std::string> candidate_phrases(const std::string& body, int max_ngram) {
  std::vector<std::string> out;
  std::set<std::string> seen_keys;
  for (const std::string& sentence : split_sentences(body)) {
    std::vector<std::string> terms = tokenize(sentence);
    for (std::size_t i = 0; i < terms.size(); ++i) {
      std::set<std::string> seen_terms;
      std::string key;
      for (std::size_t n = 1; n <= static_cast<std::size_t>(max_ngram); ++n) {
        std::size_t j = i + n - 1;
        if (j >= terms.size() || is_stopword(terms[j]) || !seen_terms.insert(terms[j]).second) {
          break;
        }
        if (!key.empty()) {
          key += " ";
        }
        key += terms[j];
        if (seen_keys.insert(key).second) {
          out.push_back(key);
        }
      }
    }
  }
  return out;
}

/// Embeds the document, its candidate phrases, and its sentences in one
/// batch; the argmax-cosine candidate becomes the keyphrase and the
/// argmax-cosine sentence the title. Ties go to the lexicographically
/// smaller string.
inline MetaRecord extract_embed_keyphrase(const Document& doc, EmbeddingProvider& embedder,
                                          const EnrichConfig& cfg) {
  if (doc.body.empty()) {
    throw DataError("document '" + doc.doc_id + "' has an empty body");
  }
  std::string provenance = "embed-keyphrase/" + embedder.id();
  std::vector<std::string> candidates = candidate_phrases(doc.body, cfg.max_ngram);
  std::vector<std::string> sentences = split_sentences(doc.body);
  if (candidates.empty()) {
    std::string title = sentences.empty() ? doc.body : sentences.front();
    return make_record(doc.doc_id, MetaStream::keyphrase_embed, {title},
                       provenance + ",fallback=first-sentence");
  }

  std::vector<std::string> batch;
  batch.reserve(1 + candidates.size() + sentences.size());
  batch.push_back(doc.body);
  batch.insert(batch.end(), candidates.begin(), candidates.end());
  batch.insert(batch.end(), sentences.begin(), sentences.end());
  std::vector<std::vector<float>> vecs = embed_texts(embedder, batch);

  const std::vector<float>& doc_vec = vecs[0];
  auto argmax = [&](std::size_t offset, const std::vector<std::string>& texts) {
    std::size_t best = 0;
    double best_cos = cosine(vecs[offset], doc_vec);
    for (std::size_t i = 1; i < texts.size(); ++i) {
      double c = cosine(vecs[offset + i], doc_vec);
      if (c > best_cos || (c == best_cos && texts[i] < texts[best])) {
        best = i;
        best_cos = c;
      }
    }
    return best;
  };

  std::string keyphrase = candidates[argmax(1, candidates)];
  std::vector<std::string> values = {keyphrase};
  if (!sentences.empty()) {
    values.push_back(sentences[argmax(1 + candidates.size(), sentences)]);
  }
  return make_record(doc.doc_id, MetaStream::keyphrase_embed, values, provenance);
}

}  // namespace metagen
