#pragma once

#include <optional>
#include <string>

namespace metagen {

struct ScoredHit {
  std::string doc_id;
  std::optional<double> lex_score;
  std::optional<double> sem_score;
  std::optional<double> fused_score;

  bool operator==(const ScoredHit&) const = default;
};

}  // namespace metagen
