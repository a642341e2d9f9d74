#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "metagen/corpus.hpp"
#include "metagen/enrich_config.hpp"
#include "metagen/errors.hpp"
#include "metagen/pool.hpp"
#include "metagen/stopwords.hpp"
#include "metagen/text.hpp"
#include "metagen/unicode.hpp"
#include "metagen/utf8.hpp"

namespace metagen {

namespace statkp {

struct Token {
  std::string term;   // lowercase identity
  std::string cased;  // original casing
  std::size_t sentence = 0;
  std::size_t pos_in_sentence = 0;
  std::size_t global_pos = 0;
};

inline bool starts_uppercase(const std::string& cased) {
  std::u32string cps = utf8_decode(cased);
  return !cps.empty() && has_lower_mapping(cps[0]);
}

inline bool is_acronym(const std::string& cased) {
  std::u32string cps = utf8_decode(cased);
  if (cps.size() < 2) {
    return false;
  }
  for (char32_t cp : cps) {
    if (!has_lower_mapping(cp)) {
      return false;
    }
  }
  return true;
}

struct TermStats {
  std::size_t tf = 0;
  std::size_t tf_upper = 0;    // uppercase-initial occurrences, sentence starts excluded
  std::size_t tf_acronym = 0;  // all-caps occurrences of length >= 2
  std::size_t first_sentence = 0;
  std::set<std::size_t> sentences;
  std::set<std::string> left_distinct;
  std::set<std::string> right_distinct;
  std::size_t left_total = 0;
  std::size_t right_total = 0;
  bool stopword = false;
};

struct DocStats {
  std::vector<std::vector<Token>> sentences;  // tokens grouped by sentence
  std::map<std::string, TermStats> terms;
  std::map<std::string, double> scores;  // per-term S(t), lower is better
  std::size_t sentence_count = 0;
};

/// Computes the per-term feature set over one document body: casing,
/// first-occurrence position, frequency against mean+sigma of non-stopword
/// frequencies, neighbor dispersion within the window, and sentence spread.
inline DocStats compute_doc_stats(const std::string& body, const EnrichConfig& cfg) {
  DocStats ds;
  std::vector<std::string> sentence_texts = split_sentences(body);
  ds.sentence_count = sentence_texts.size();
  std::size_t global_pos = 0;
  for (std::size_t si = 0; si < sentence_texts.size(); ++si) {
    std::vector<std::string> cased = tokenize_cased(sentence_texts[si]);
    std::vector<Token> toks;
    toks.reserve(cased.size());
    for (std::size_t pi = 0; pi < cased.size(); ++pi) {
      Token t;
      t.cased = cased[pi];
      t.term = lowercase_utf8(cased[pi]);
      t.sentence = si;
      t.pos_in_sentence = pi;
      t.global_pos = global_pos++;
      toks.push_back(std::move(t));
    }
    ds.sentences.push_back(std::move(toks));
  }

  for (const auto& sent : ds.sentences) {
    for (std::size_t pi = 0; pi < sent.size(); ++pi) {
      const Token& tok = sent[pi];
      auto [it, fresh] = ds.terms.try_emplace(tok.term);
      TermStats& st = it->second;
      if (fresh) {
        st.first_sentence = tok.sentence;
        st.stopword = is_stopword(tok.term);
      }
      ++st.tf;
      st.sentences.insert(tok.sentence);
      if (is_acronym(tok.cased)) {
        ++st.tf_acronym;
      } else if (starts_uppercase(tok.cased) && tok.pos_in_sentence > 0) {
        ++st.tf_upper;
      }
      std::size_t window = static_cast<std::size_t>(cfg.stat_window);
      std::size_t lo = pi >= window ? pi - window : 0;
      for (std::size_t j = lo; j < pi; ++j) {
        st.left_distinct.insert(sent[j].term);
        ++st.left_total;
      }
      for (std::size_t j = pi + 1; j < sent.size() && j <= pi + window; ++j) {
        st.right_distinct.insert(sent[j].term);
        ++st.right_total;
      }
    }
  }

  std::size_t max_tf = 0;
  double sum = 0.0;
  std::size_t n_valid = 0;
  for (const auto& [term, st] : ds.terms) {
    max_tf = std::max(max_tf, st.tf);
    if (!st.stopword) {
      sum += static_cast<double>(st.tf);
      ++n_valid;
    }
  }
  double mean = n_valid > 0 ? sum / static_cast<double>(n_valid) : 0.0;
  double var = 0.0;
  for (const auto& [term, st] : ds.terms) {
    if (!st.stopword) {
      double d = static_cast<double>(st.tf) - mean;
      var += d * d;
    }
  }
  double sigma = n_valid > 0 ? std::sqrt(var / static_cast<double>(n_valid)) : 0.0;

  for (const auto& [term, st] : ds.terms) {
    double tf = static_cast<double>(st.tf);
    double w_case =
        static_cast<double>(std::max(st.tf_acronym, st.tf_upper)) / (1.0 + std::log(tf));
    double w_pos = std::log(std::log(3.0 + static_cast<double>(st.first_sentence)));
    double w_freq = (mean + sigma) > 0.0 ? tf / (mean + sigma) : 0.0;
    double wl = st.left_total > 0
                    ? static_cast<double>(st.left_distinct.size()) /
                          static_cast<double>(st.left_total)
                    : 0.0;
    double wr = st.right_total > 0
                    ? static_cast<double>(st.right_distinct.size()) /
                          static_cast<double>(st.right_total)
                    : 0.0;
    double w_rel = 1.0 + (wl + wr) * tf / static_cast<double>(max_tf);
    double w_spread = ds.sentence_count > 0
                          ? static_cast<double>(st.sentences.size()) /
                                static_cast<double>(ds.sentence_count)
                          : 0.0;
    double score = (w_rel * w_pos) / (w_case + w_freq / w_rel + w_spread / w_rel);
    ds.scores[term] = score;
  }
  return ds;
}

}  // namespace statkp

struct StatCandidate {
  std::string text;  // lowercase terms joined by single spaces
  double score = 0.0;
  std::size_t first_pos = 0;  // global token index of first occurrence
  int length = 0;

  bool operator==(const StatCandidate&) const = default;
};

/// Enumerates and scores every candidate phrase: within-sentence n-grams of
/// 1..max_ngram non-stopword terms with no term repeated inside the
/// candidate. Lower score is better. Result is sorted best-first with
/// ties broken by earlier first occurrence, then lexicographic text.
inline std::vector<StatCandidate> score_stat_candidates(const std::string& body,
                                                        const EnrichConfig& cfg) {
  statkp::DocStats ds = statkp::compute_doc_stats(body, cfg);

  struct Agg {
    std::size_t count = 0;
    std::size_t first_pos = 0;
    std::vector<std::string> terms;
  };
  std::map<std::string, Agg> agg;
  for (const auto& sent : ds.sentences) {
    for (std::size_t i = 0; i < sent.size(); ++i) {
      std::set<std::string> seen;
      std::vector<std::string> terms;
      std::string key;
      for (std::size_t n = 1; n <= static_cast<std::size_t>(cfg.max_ngram); ++n) {
        std::size_t j = i + n - 1;
        if (j >= sent.size()) {
          break;
        }
        const std::string& term = sent[j].term;
        if (ds.terms.at(term).stopword) {
          break;  // stopword ends every candidate through this position
        }
        if (!seen.insert(term).second) {
          break;  // repeated term inside one candidate
        }
        terms.push_back(term);
        if (!key.empty()) {
          key += " ";
        }
        key += term;
        auto [it, fresh] = agg.try_emplace(key);
        Agg& a = it->second;
        if (fresh) {
          a.first_pos = sent[i].global_pos;
          a.terms = terms;
        }
        ++a.count;
      }
    }
  }

  std::vector<StatCandidate> out;
  out.reserve(agg.size());
  for (const auto& [key, a] : agg) {
    double prod = 1.0;
    double sum = 0.0;
    for (const auto& t : a.terms) {
      double s = ds.scores.at(t);
      prod *= s;
      sum += s;
    }
    StatCandidate c;
    c.text = key;
    c.score = prod / (static_cast<double>(a.count) * (1.0 + sum));
    c.first_pos = a.first_pos;
    c.length = static_cast<int>(a.terms.size());
    out.push_back(std::move(c));
  }
  std::sort(out.begin(), out.end(), [](const StatCandidate& a, const StatCandidate& b) {
    if (a.score != b.score) {
      return a.score < b.score;
    }
    if (a.first_pos != b.first_pos) {
      return a.first_pos < b.first_pos;
    }
    return a.text < b.text;
  });
  return out;
}

inline MetaRecord extract_stat_keyphrase(const Document& doc, const EnrichConfig& cfg) {
  if (doc.body.empty()) {
    throw DataError("document '" + doc.doc_id + "' has an empty body");
  }
  std::vector<StatCandidate> cands = score_stat_candidates(doc.body, cfg);
  std::string value;
  if (!cands.empty()) {
    value = cands.front().text;
  } else {
    // Every token is a stopword (or punctuation-only body): fall back to
    // the first token so the stream still produces baseline coverage.
    std::vector<std::string> toks = tokenize(doc.body);
    if (toks.empty()) {
      throw DataError("document '" + doc.doc_id + "' has no word tokens");
    }
    value = toks.front();
  }
  return make_record(doc.doc_id, MetaStream::keyphrase_stat, {value},
                     "stat-keyphrase/window=" + std::to_string(cfg.stat_window) +
                         ",max_ngram=" + std::to_string(cfg.max_ngram));
}

}  // namespace metagen
