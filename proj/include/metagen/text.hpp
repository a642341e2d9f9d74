#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "metagen/stopwords.hpp"
#include "metagen/unicode.hpp"
#include "metagen/utf8.hpp"

namespace metagen {

/// Canonical plaintext normalization: NFC, control characters stripped,
/// whitespace runs collapsed to single spaces, edges trimmed. Total and
/// idempotent over arbitrary byte strings.
inline std::string normalize_text(std::string_view raw) {
  std::u32string cps = utf8_decode(raw);
  // Strip controls before composing so a mark separated from its base by a
  // control character recomposes; otherwise a second pass would not be a
  // fixed point.
  std::u32string kept;
  kept.reserve(cps.size());
  for (char32_t cp : cps) {
    if (!is_control_char(cp)) {
      kept.push_back(cp);
    }
  }
  std::u32string composed = nfc(kept);
  std::u32string out;
  out.reserve(composed.size());
  bool pending_space = false;
  for (char32_t cp : composed) {
    if (is_space_char(cp)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.push_back(U' ');
      pending_space = false;
    }
    out.push_back(cp);
  }
  return utf8_encode(out);
}

namespace detail {

template <typename Emit>
inline void segment_words(std::string_view text, Emit&& emit) {
  std::u32string cps = nfc(utf8_decode(text));
  std::size_t i = 0;
  while (i < cps.size()) {
    if (!is_word_char(cps[i])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < cps.size() && is_word_char(cps[j])) {
      ++j;
    }
    emit(std::u32string_view(cps.data() + i, j - i));
    i = j;
  }
}

}  // namespace detail

/// Word tokens: maximal runs of Unicode letters/digits on the NFC form,
/// lowercased. Stopwords are kept; BM25 idf handles them.
inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  detail::segment_words(text, [&](std::u32string_view word) {
    std::u32string lowered;
    lowered.reserve(word.size());
    for (char32_t cp : word) {
      lowercase_into(lowered, cp);
    }
    tokens.push_back(utf8_encode(lowered));
  });
  return tokens;
}

/// Same segmentation as tokenize() but preserves the original case; the
/// statistical keyphrase features need casing information.
inline std::vector<std::string> tokenize_cased(std::string_view text) {
  std::vector<std::string> tokens;
  detail::segment_words(
      text, [&](std::u32string_view word) { tokens.push_back(utf8_encode(word)); });
  return tokens;
}

/// Splits on sentence terminators (. ! ?) and newlines; segments are trimmed
/// and empty segments dropped. Abbreviation handling is out of scope.
inline std::vector<std::string> split_sentences(std::string_view text) {
  std::vector<std::string> sentences;
  std::u32string cps = utf8_decode(text);
  std::u32string current;
  auto flush = [&]() {
    std::size_t b = 0;
    std::size_t e = current.size();
    while (b < e && is_space_char(current[b])) {
      ++b;
    }
    while (e > b && is_space_char(current[e - 1])) {
      --e;
    }
    if (e > b) {
      sentences.push_back(utf8_encode(std::u32string_view(current.data() + b, e - b)));
    }
    current.clear();
  };
  for (char32_t cp : cps) {
    if (cp == U'.' || cp == U'!' || cp == U'?' || cp == U'\n') {
      flush();
    } else {
      current.push_back(cp);
    }
  }
  flush();
  return sentences;
}

}  // namespace metagen
