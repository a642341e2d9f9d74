#pragma once

#include <chrono>
#include <cstdlib>
#include <memory>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <httplib.h>

#include "metagen/errors.hpp"
#include "metagen/jsonl.hpp"
#include "metagen/providers.hpp"

namespace metagen {

/// Where a remote provider lives. The bearer token comes from the
/// METAGEN_API_KEY environment variable at request time; credentials never
/// pass through config files and are never echoed into error messages.
struct HttpEndpoint {
  std::string base_url;  // scheme://host[:port]
  std::string path = "/";
  int timeout_sec = 30;

  bool operator==(const HttpEndpoint&) const = default;
};

namespace detail {

inline std::string bearer_token() {
  const char* key = std::getenv("METAGEN_API_KEY");
  return key == nullptr ? std::string() : std::string(key);
}

/// One POST of a JSON body, no retries. Transport failures and 429/5xx
/// statuses are retryable; other non-2xx statuses and unparseable bodies
/// are permanent.
inline json post_json(const HttpEndpoint& ep, const std::string& who, const json& body) {
  httplib::Client cli(ep.base_url);
  cli.set_connection_timeout(ep.timeout_sec, 0);
  cli.set_read_timeout(ep.timeout_sec, 0);
  cli.set_write_timeout(ep.timeout_sec, 0);
  httplib::Headers headers;
  std::string token = bearer_token();
  if (!token.empty()) {
    headers.emplace("Authorization", "Bearer " + token);
  }
  httplib::Result res = cli.Post(ep.path, headers, body.dump(), "application/json");
  if (!res) {
    throw ProviderError(who + ": " + ep.base_url + ep.path + " unreachable (" +
                            httplib::to_string(res.error()) + ")",
                        /*retryable=*/true);
  }
  if (res->status == 429 || res->status >= 500) {
    throw ProviderError(who + ": HTTP " + std::to_string(res->status) + " from " + ep.path,
                        /*retryable=*/true);
  }
  if (res->status < 200 || res->status >= 300) {
    throw ProviderError(who + ": HTTP " + std::to_string(res->status) + " from " + ep.path);
  }
  json parsed = json::parse(res->body, nullptr, false);
  if (parsed.is_discarded() || !parsed.is_object()) {
    throw ProviderError(who + ": response from " + ep.path + " is not a JSON object");
  }
  return parsed;
}

inline const json& require_field(const json& resp, const std::string& who, const std::string& key,
                                 const char* type_name, bool (json::*is_type)() const) {
  auto it = resp.find(key);
  if (it == resp.end() || !((*it).*is_type)()) {
    throw ProviderError(who + ": response missing " + type_name + " field '" + key + "'");
  }
  return *it;
}

}  // namespace detail

/// Embedding client for the wire contract
///   request  {texts: [string]}
///   response {vectors: [[real]], dim: int, model: string}
/// The constructor pins the expected dimension; a response that disagrees is
/// rejected so one index never mixes dimensions. Each call is a single
/// attempt: embed_texts() owns the retry policy above this layer.
class HttpEmbeddingProvider : public EmbeddingProvider {
 public:
  HttpEmbeddingProvider(HttpEndpoint endpoint, int dim, std::string id)
      : endpoint_(std::move(endpoint)), dim_(dim), id_(std::move(id)) {
    if (dim_ < 1) {
      throw ConfigError("embedder dim must be >= 1");
    }
    if (endpoint_.base_url.empty()) {
      throw ConfigError("embedding provider '" + id_ + "' has no endpoint url");
    }
  }

  std::vector<std::vector<float>> embed(const std::vector<std::string>& texts) override {
    const std::string who = "embedding provider '" + id_ + "'";
    json resp = detail::post_json(endpoint_, who, json{{"texts", texts}});
    const json& vectors =
        detail::require_field(resp, who, "vectors", "array", &json::is_array);
    const json& dim =
        detail::require_field(resp, who, "dim", "integer", &json::is_number_integer);
    detail::require_field(resp, who, "model", "string", &json::is_string);
    if (dim.get<int>() != dim_) {
      throw ProviderError(who + ": reports dim " + dim.dump() + ", expected " +
                          std::to_string(dim_));
    }
    std::vector<std::vector<float>> out;
    out.reserve(vectors.size());
    for (const auto& row : vectors) {
      if (!row.is_array()) {
        throw ProviderError(who + ": vectors must be arrays of numbers");
      }
      std::vector<float> v;
      v.reserve(row.size());
      for (const auto& x : row) {
        if (!x.is_number()) {
          throw ProviderError(who + ": vectors must be arrays of numbers");
        }
        v.push_back(x.get<float>());
      }
      out.push_back(std::move(v));
    }
    return out;
  }

  std::string id() const override { return id_; }
  int dim() const override { return dim_; }
  bool thread_safe() const override { return true; }  // fresh client per call

 private:
  HttpEndpoint endpoint_;
  int dim_;
  std::string id_;
};

/// Generation client for the wire contract
///   request  {system: string, user: string, temperature: real}
///   response {text: string}
/// Retries transient failures here with exponential backoff because callers
/// treat generate() as one attempt.
class HttpGenerationProvider : public GenerationProvider {
 public:
  HttpGenerationProvider(HttpEndpoint endpoint, std::string id, RetryPolicy retry = {})
      : endpoint_(std::move(endpoint)), id_(std::move(id)), retry_(retry) {
    if (endpoint_.base_url.empty()) {
      throw ConfigError("generation provider '" + id_ + "' has no endpoint url");
    }
  }

  std::string generate(const std::string& system, const std::string& user,
                       double temperature) override {
    const std::string who = "generation provider '" + id_ + "'";
    json req{{"system", system}, {"user", user}, {"temperature", temperature}};
    int attempt = 0;
    for (;;) {
      ++attempt;
      try {
        json resp = detail::post_json(endpoint_, who, req);
        return detail::require_field(resp, who, "text", "string", &json::is_string)
            .get<std::string>();
      } catch (const ProviderError& e) {
        if (!e.retryable() || attempt >= retry_.max_attempts) {
          throw;
        }
        std::this_thread::sleep_for(
            std::chrono::milliseconds(retry_.backoff_ms * (1 << (attempt - 1))));
      }
    }
  }

  std::string id() const override { return id_; }
  bool thread_safe() const override { return true; }

 private:
  HttpEndpoint endpoint_;
  std::string id_;
  RetryPolicy retry_;
};

/// Always replies with the same text. Keeps answer-generation paths runnable
/// offline; the id "canned/<text>" makes the substitution visible in reports.
class CannedGenerationProvider : public GenerationProvider {
 public:
  explicit CannedGenerationProvider(std::string text) : text_(std::move(text)) {}

  std::string generate(const std::string&, const std::string&, double) override { return text_; }
  std::string id() const override { return "canned/" + text_; }
  bool thread_safe() const override { return true; }

 private:
  std::string text_;
};

/// Resolves an embedder id: "deterministic-hash/<dim>" is the offline test
/// embedder; any other id is a remote model and needs an endpoint plus the
/// dimension it serves.
inline std::unique_ptr<EmbeddingProvider> make_embedding_provider(const std::string& provider_id,
                                                                  const HttpEndpoint& endpoint = {},
                                                                  int dim = 0) {
  const std::string prefix = "deterministic-hash/";
  if (provider_id.rfind(prefix, 0) == 0) {
    int id_dim = 0;
    try {
      id_dim = std::stoi(provider_id.substr(prefix.size()));
    } catch (const std::exception&) {
      throw ConfigError("bad embedder id '" + provider_id + "': expected deterministic-hash/<dim>");
    }
    if (dim > 0 && dim != id_dim) {
      throw ConfigError("embedder id '" + provider_id + "' conflicts with configured dim " +
                        std::to_string(dim));
    }
    return std::make_unique<DeterministicHashEmbedder>(id_dim);
  }
  if (dim < 1) {
    throw ConfigError("embedding provider '" + provider_id + "' needs a positive dim");
  }
  return std::make_unique<HttpEmbeddingProvider>(endpoint, dim, provider_id);
}

/// Resolves a generator id: "canned/<text>" replies with <text> forever; any
/// other id is a remote model and needs an endpoint.
inline std::unique_ptr<GenerationProvider> make_generation_provider(
    const std::string& provider_id, const HttpEndpoint& endpoint = {},
    const RetryPolicy& retry = {}) {
  const std::string prefix = "canned/";
  if (provider_id.rfind(prefix, 0) == 0) {
    return std::make_unique<CannedGenerationProvider>(provider_id.substr(prefix.size()));
  }
  return std::make_unique<HttpGenerationProvider>(endpoint, provider_id, retry);
}

}  // namespace metagen
