#pragma once

#include <array>
#include <string_view>
#include <unordered_set>

namespace metagen {

/// Fixed English stopword list shipped with the engine. Fixtures and frozen
/// oracle values depend on it, so changes must bump the version tag.
inline constexpr char kStopwordsVersion[] = "en-1";

namespace detail {
inline constexpr std::array<std::string_view, 176> kStopwords = {
    "a",       "about",   "above",   "after",   "again",    "against", "ain",     "all",
    "am",      "an",      "and",     "any",     "are",      "aren",    "as",      "at",
    "be",      "because", "been",    "before",  "being",    "below",   "between", "both",
    "but",     "by",      "can",     "couldn",  "d",        "did",     "didn",    "do",
    "does",    "doesn",   "doing",   "don",     "down",     "during",  "each",    "few",
    "for",     "from",    "further", "had",     "hadn",     "has",     "hasn",    "have",
    "haven",   "having",  "he",      "her",     "here",     "hers",    "herself", "him",
    "himself", "his",     "how",     "i",       "if",       "in",      "into",    "is",
    "isn",     "it",      "its",     "itself",  "just",     "ll",      "m",       "ma",
    "me",      "mightn",  "more",    "most",    "mustn",    "my",      "myself",  "needn",
    "no",      "nor",     "not",     "now",     "o",        "of",      "off",     "on",
    "once",    "only",    "or",      "other",   "our",      "ours",    "ourselves", "out",
    "over",    "own",     "re",      "s",       "same",     "shan",    "she",     "should",
    "shouldn", "so",      "some",    "such",    "t",        "than",    "that",    "the",
    "their",   "theirs",  "them",    "themselves", "then",  "there",   "these",   "they",
    "this",    "those",   "through", "to",      "too",      "under",   "until",   "up",
    "ve",      "very",    "was",     "wasn",    "we",       "were",    "weren",   "what",
    "when",    "where",   "which",   "while",   "who",      "whom",    "why",     "will",
    "with",    "won",     "wouldn",  "y",       "you",      "your",    "yours",   "yourself",
    "yourselves", "could", "would",  "may",     "might",    "must",    "shall",   "also",
    "however", "thus",    "therefore", "hence", "upon",     "within",  "without", "via",
    "per",     "et",      "al",      "e",       "g",        "ie",      "eg",      "etc",
};
}  // namespace detail

inline bool is_stopword(std::string_view lowered_token) {
  static const std::unordered_set<std::string_view> set(detail::kStopwords.begin(),
                                                        detail::kStopwords.end());
  return set.count(lowered_token) > 0;
}

}  // namespace metagen
