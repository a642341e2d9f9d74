#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "metagen/errors.hpp"
#include "metagen/hash.hpp"
#include "metagen/jsonl.hpp"
#include "metagen/text.hpp"

namespace metagen {

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::vector<std::vector<float>> embed(const std::vector<std::string>& texts) = 0;
  virtual std::string id() const = 0;
  virtual int dim() const = 0;
  virtual bool thread_safe() const { return false; }
};

struct NerMention {
  std::string surface;
  std::string entity_class;
  std::size_t position = 0;  // token offset of the mention start
};

class NerProvider {
 public:
  virtual ~NerProvider() = default;
  virtual std::vector<NerMention> find_entities(const std::string& text) = 0;
  virtual std::string id() const = 0;
  virtual bool thread_safe() const { return false; }
};

class GenerationProvider {
 public:
  virtual ~GenerationProvider() = default;
  virtual std::string generate(const std::string& system, const std::string& user,
                               double temperature) = 0;
  virtual std::string id() const = 0;
  virtual bool thread_safe() const { return false; }
};

/// Offline embedder: token -> FNV-1a 64 hash -> bucket count, L2-normalized.
/// Exists so every semantic-path test runs without a model; the id encodes
/// the dimension so indexes built with different dims never mix.
class DeterministicHashEmbedder : public EmbeddingProvider {
 public:
  explicit DeterministicHashEmbedder(int dim = 64) : dim_(dim) {
    if (dim_ < 1) {
      throw ConfigError("embedder dim must be >= 1");
    }
  }

  std::vector<std::vector<float>> embed(const std::vector<std::string>& texts) override {
    std::vector<std::vector<float>> out;
    out.reserve(texts.size());
    for (const auto& t : texts) {
      out.push_back(embed_one(t));
    }
    return out;
  }

  std::string id() const override { return "deterministic-hash/" + std::to_string(dim_); }
  int dim() const override { return dim_; }
  bool thread_safe() const override { return true; }

 private:
  std::vector<float> embed_one(const std::string& text) const {
    std::vector<double> counts(static_cast<std::size_t>(dim_), 0.0);
    std::vector<std::string> tokens = tokenize(text);
    if (tokens.empty()) {
      std::vector<float> basis(static_cast<std::size_t>(dim_), 0.0f);
      basis[0] = 1.0f;
      return basis;
    }
    for (const auto& tok : tokens) {
      counts[fnv1a64(tok) % static_cast<std::uint64_t>(dim_)] += 1.0;
    }
    double norm = 0.0;
    for (double c : counts) {
      norm += c * c;
    }
    norm = std::sqrt(norm);
    std::vector<float> v(counts.size());
    for (std::size_t i = 0; i < counts.size(); ++i) {
      v[i] = static_cast<float>(counts[i] / norm);
    }
    return v;
  }

  int dim_;
};

/// Test/offline NER: longest-match dictionary lookup over token sequences.
/// Entries match case-insensitively; the canonical surface from the
/// gazetteer is what gets reported.
class GazetteerNer : public NerProvider {
 public:
  GazetteerNer() = default;

  void add_entry(const std::string& surface, const std::string& entity_class) {
    std::vector<std::string> toks = tokenize(surface);
    if (toks.empty()) {
      throw ConfigError("gazetteer entry with no word tokens: '" + surface + "'");
    }
    entries_.push_back({toks, surface, entity_class});
    max_len_ = std::max(max_len_, toks.size());
  }

  static GazetteerNer from_tsv(const std::string& path) {
    GazetteerNer ner;
    std::string text = read_file(path);
    std::size_t start = 0;
    std::size_t lineno = 0;
    while (start <= text.size()) {
      std::size_t end = text.find('\n', start);
      if (end == std::string::npos) {
        end = text.size();
      }
      std::string line = text.substr(start, end - start);
      start = end + 1;
      ++lineno;
      if (!line.empty() && line.back() == '\r') {
        line.pop_back();
      }
      if (line.empty() || line[0] == '#') {
        if (start > text.size()) break;
        continue;
      }
      std::size_t tab = line.find('\t');
      if (tab == std::string::npos) {
        throw DataError(path + ":" + std::to_string(lineno) + ": expected <surface>\\t<class>");
      }
      ner.add_entry(line.substr(0, tab), line.substr(tab + 1));
      if (start > text.size()) break;
    }
    ner.source_ = path;
    return ner;
  }

  std::vector<NerMention> find_entities(const std::string& text) override {
    std::vector<std::string> tokens = tokenize(text);
    std::vector<NerMention> out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      // Longest entry wins at each position; shorter overlapping entries
      // starting at the same token are suppressed.
      const Entry* best = nullptr;
      for (const auto& e : entries_) {
        if (e.tokens.size() > tokens.size() - i) {
          continue;
        }
        bool match = true;
        for (std::size_t j = 0; j < e.tokens.size(); ++j) {
          if (tokens[i + j] != e.tokens[j]) {
            match = false;
            break;
          }
        }
        if (match && (best == nullptr || e.tokens.size() > best->tokens.size())) {
          best = &e;
        }
      }
      if (best != nullptr) {
        out.push_back({best->surface, best->entity_class, i});
        i += best->tokens.size() - 1;
      }
    }
    return out;
  }

  std::string id() const override {
    return source_.empty() ? "gazetteer/inline" : "gazetteer/" + source_;
  }
  bool thread_safe() const override { return true; }

 private:
  struct Entry {
    std::vector<std::string> tokens;  // lowercase match key
    std::string surface;
    std::string entity_class;
  };
  std::vector<Entry> entries_;
  std::size_t max_len_ = 0;
  std::string source_;
};

/// Adapters over std::function for tests that need scripted provider behavior.
class FnEmbeddingProvider : public EmbeddingProvider {
 public:
  using Fn = std::function<std::vector<std::vector<float>>(const std::vector<std::string>&)>;
  FnEmbeddingProvider(Fn fn, int dim, std::string id, bool thread_safe = true)
      : fn_(std::move(fn)), dim_(dim), id_(std::move(id)), thread_safe_(thread_safe) {}

  std::vector<std::vector<float>> embed(const std::vector<std::string>& texts) override {
    return fn_(texts);
  }
  std::string id() const override { return id_; }
  int dim() const override { return dim_; }
  bool thread_safe() const override { return thread_safe_; }

 private:
  Fn fn_;
  int dim_;
  std::string id_;
  bool thread_safe_;
};

class FnGenerationProvider : public GenerationProvider {
 public:
  using Fn = std::function<std::string(const std::string&, const std::string&, double)>;
  FnGenerationProvider(Fn fn, std::string id, bool thread_safe = true)
      : fn_(std::move(fn)), id_(std::move(id)), thread_safe_(thread_safe) {}

  std::string generate(const std::string& system, const std::string& user,
                       double temperature) override {
    return fn_(system, user, temperature);
  }
  std::string id() const override { return id_; }
  bool thread_safe() const override { return thread_safe_; }

 private:
  Fn fn_;
  std::string id_;
  bool thread_safe_;
};

struct RetryPolicy {
  int max_attempts = 3;
  int backoff_ms = 50;  // doubles per retry

  bool operator==(const RetryPolicy&) const = default;
};

/// Calls the provider with retry on retryable failures, then enforces the
/// wire contract: one vector per text, uniform dimension, unit norm.
inline std::vector<std::vector<float>> embed_texts(EmbeddingProvider& provider,
                                                   const std::vector<std::string>& texts,
                                                   const RetryPolicy& retry = {}) {
  if (texts.empty()) {
    throw ConfigError("embed_texts requires at least one text");
  }
  std::vector<std::vector<float>> vecs;
  int attempt = 0;
  for (;;) {
    ++attempt;
    try {
      vecs = provider.embed(texts);
      break;
    } catch (const ProviderError& e) {
      if (!e.retryable() || attempt >= retry.max_attempts) {
        throw;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(retry.backoff_ms * (1 << (attempt - 1))));
    }
  }
  if (vecs.size() != texts.size()) {
    throw ProviderError("embedding provider returned " + std::to_string(vecs.size()) +
                        " vectors for " + std::to_string(texts.size()) + " texts");
  }
  std::size_t dim = static_cast<std::size_t>(provider.dim());
  for (auto& v : vecs) {
    if (v.size() != dim) {
      throw ProviderError("embedding dimension " + std::to_string(v.size()) +
                          " does not match provider dim " + std::to_string(dim));
    }
    double norm = 0.0;
    for (float x : v) {
      norm += static_cast<double>(x) * static_cast<double>(x);
    }
    norm = std::sqrt(norm);
    if (!(norm > 0.0) || !std::isfinite(norm)) {
      throw ProviderError("embedding provider returned a zero or non-finite vector");
    }
    for (float& x : v) {
      x = static_cast<float>(static_cast<double>(x) / norm);
    }
  }
  return vecs;
}

inline double cosine(const std::vector<float>& a, const std::vector<float>& b) {
  if (a.size() != b.size()) {
    throw ProviderError("cosine over mismatched dimensions " + std::to_string(a.size()) + " vs " +
                        std::to_string(b.size()));
  }
  double dot = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  }
  return dot;
}

}  // namespace metagen
