#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "metagen/errors.hpp"

namespace metagen {

inline constexpr std::string_view kDefaultLlmSystemPrompt =
    "You are a helpful, respectful, and truthful assistant. Avoid generating or inferring "
    "unsupported information, maintaining ethical and factual accuracy.";

inline constexpr std::string_view kDefaultLlmUserTemplate =
    "You are a medical domain expert. Extract key topics, important phrases, synonyms, and "
    "acronyms from the provided medical text: {context}. Return outputs strictly in valid JSON "
    "format with the keys: topics, phrases, synonyms, and acronyms, excluding any extraneous "
    "information.";

struct EnrichConfig {
  std::int64_t llm_threshold = 1'000'000;
  int max_ngram = 3;
  int stat_window = 1;
  std::string llm_prompt_system = std::string(kDefaultLlmSystemPrompt);
  std::string llm_prompt_user_template = std::string(kDefaultLlmUserTemplate);
  bool enable_keyphrase_stat = true;
  bool enable_keyphrase_embed = true;
  bool enable_ner = true;
  bool enable_llm_topics = true;
  bool enable_llm_phrases = true;
  bool enable_llm_synonyms = true;
  bool enable_llm_acronyms = true;
  std::vector<std::string> ner_allowlist = {"PERSON", "ORG", "LOCATION"};
  int workers = 0;  // 0 = hardware concurrency

  bool operator==(const EnrichConfig&) const = default;

  bool any_llm_enabled() const {
    return enable_llm_topics || enable_llm_phrases || enable_llm_synonyms || enable_llm_acronyms;
  }
};

inline void validate_enrich_config(const EnrichConfig& cfg) {
  if (cfg.llm_threshold < 1) {
    throw ConfigError("llm_threshold must be >= 1");
  }
  if (cfg.max_ngram < 1) {
    throw ConfigError("max_ngram must be >= 1");
  }
  if (cfg.stat_window < 1) {
    throw ConfigError("stat_window must be >= 1");
  }
  if (cfg.any_llm_enabled() &&
      cfg.llm_prompt_user_template.find("{context}") == std::string::npos) {
    throw ConfigError("llm_prompt_user_template must contain the {context} placeholder");
  }
  if (cfg.workers < 0) {
    throw ConfigError("workers must be >= 0");
  }
}

}  // namespace metagen
