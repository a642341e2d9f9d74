#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "metagen/corpus.hpp"
#include "metagen/errors.hpp"
#include "metagen/fusion.hpp"
#include "metagen/providers.hpp"
#include "metagen/text.hpp"

namespace metagen {

inline constexpr std::string_view kDefaultRagSystemPrompt =
    "You are a biomedical question answering assistant. Answer strictly from "
    "the provided contexts; do not use outside knowledge.";

inline constexpr std::string_view kDefaultRagUserTemplate =
    "Answer the question using only the numbered contexts below. Reply with "
    "yes, no, or maybe first, then one sentence of justification.\n\n"
    "Contexts:\n{contexts}\n\nQuestion: {question}\nAnswer:";

struct RagConfig {
  std::string system_prompt{kDefaultRagSystemPrompt};
  std::string user_template{kDefaultRagUserTemplate};
  std::size_t context_budget = 12'000;
  double temperature = 0.0;
  // Strict mode requires the decision to be the response's first token;
  // default scans for the first standalone decision word anywhere.
  bool strict_first_token = false;

  bool operator==(const RagConfig&) const = default;
};

struct RagAnswer {
  std::string question;
  std::vector<std::string> retrieved;
  std::string raw_response;
  std::string parsed_answer;
  bool degraded = false;

  friend bool operator==(const RagAnswer&, const RagAnswer&) = default;
};

namespace detail {

/// Cuts to at most budget bytes without splitting a UTF-8 sequence.
inline void truncate_utf8(std::string& s, std::size_t budget) {
  if (s.size() <= budget) {
    return;
  }
  std::size_t end = budget;
  while (end > 0 && (static_cast<unsigned char>(s[end]) & 0xC0) == 0x80) {
    --end;
  }
  s.resize(end);
}

}  // namespace detail

/// Rank-ordered contexts, each prefixed "[rank] (doc_id)", capped at the
/// character budget. The cap eats the lowest-ranked context first because
/// contexts are laid out in rank order and trimmed from the tail.
inline std::string assemble_prompt(const std::string& question,
                                   const std::vector<const Document*>& docs,
                                   const RagConfig& cfg = RagConfig{}) {
  if (docs.empty()) {
    throw DataError("cannot assemble a prompt with no retrieved documents");
  }
  if (cfg.user_template.find("{question}") == std::string::npos ||
      cfg.user_template.find("{contexts}") == std::string::npos) {
    throw ConfigError("prompt template must contain {question} and {contexts} placeholders");
  }

  std::string contexts;
  for (std::size_t rank = 0; rank < docs.size(); ++rank) {
    const Document& doc = *docs[rank];
    if (!contexts.empty()) {
      contexts += "\n\n";
    }
    contexts += "[" + std::to_string(rank + 1) + "] (" + doc.doc_id + ") ";
    if (!doc.title.empty()) {
      contexts += doc.title + ". ";
    }
    contexts += doc.body;
    if (contexts.size() >= cfg.context_budget) {
      detail::truncate_utf8(contexts, cfg.context_budget);
      break;
    }
  }

  std::string prompt = cfg.user_template;
  auto replace_all = [&prompt](std::string_view key, const std::string& value) {
    std::size_t pos = 0;
    while ((pos = prompt.find(key, pos)) != std::string::npos) {
      prompt.replace(pos, key.size(), value);
      pos += value.size();
    }
  };
  replace_all("{contexts}", contexts);
  replace_all("{question}", question);
  return prompt;
}

/// First standalone yes/no/maybe, case-insensitive; "standalone" means a
/// whole word token, so "notably" never yields "no". Total: every string
/// parses to a decision or "unparseable".
inline std::string parse_decision(const std::string& response, bool strict_first_token = false) {
  auto tokens = tokenize(response);
  auto is_decision = [](const std::string& t) { return t == "yes" || t == "no" || t == "maybe"; };
  if (strict_first_token) {
    return !tokens.empty() && is_decision(tokens.front()) ? tokens.front() : "unparseable";
  }
  for (const auto& t : tokens) {
    if (is_decision(t)) {
      return t;
    }
  }
  return "unparseable";
}

/// Provider failure degrades the answer rather than failing the run.
inline RagAnswer generate_answer(const std::string& prompt, GenerationProvider& llm,
                                 const RagConfig& cfg = RagConfig{}) {
  RagAnswer answer;
  try {
    answer.raw_response = llm.generate(cfg.system_prompt, prompt, cfg.temperature);
    answer.parsed_answer = parse_decision(answer.raw_response, cfg.strict_first_token);
  } catch (const ProviderError&) {
    answer.degraded = true;
    answer.parsed_answer = "unparseable";
  }
  return answer;
}

/// Retrieval plus generation for one question. The retrieved list is the
/// hybrid_search output verbatim; generation never reorders it.
inline RagAnswer answer_question(const LexIndex& lexidx, const VecIndex& vecidx,
                                 const Corpus& corpus, const std::string& question,
                                 EmbeddingProvider& embedder, GenerationProvider& llm,
                                 const HybridQueryConfig& qcfg, const RagConfig& rcfg) {
  auto result = hybrid_search(lexidx, vecidx, question, embedder, qcfg);
  RagAnswer answer;
  answer.question = question;
  if (result.hits.empty()) {
    answer.degraded = result.degraded;
    answer.parsed_answer = "unparseable";
    return answer;
  }
  std::vector<const Document*> docs;
  for (const auto& h : result.hits) {
    answer.retrieved.push_back(h.doc_id);
    const Document* doc = corpus.find(h.doc_id);
    if (doc == nullptr) {
      throw DataError("retrieved doc '" + h.doc_id + "' is missing from the corpus");
    }
    docs.push_back(doc);
  }
  std::string prompt = assemble_prompt(question, docs, rcfg);
  RagAnswer gen = generate_answer(prompt, llm, rcfg);
  answer.raw_response = gen.raw_response;
  answer.parsed_answer = gen.parsed_answer;
  answer.degraded = gen.degraded || result.degraded;
  return answer;
}

}  // namespace metagen
