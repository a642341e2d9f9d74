#pragma once

#include <algorithm>
#include <cstdint>
#include <iterator>
#include <string>
#include <string_view>

#include "metagen/unicode_data.hpp"
#include "metagen/utf8.hpp"

namespace metagen {

namespace detail {

// Hangul syllable composition constants (UAX #15).
inline constexpr char32_t kHangulSBase = 0xAC00;
inline constexpr char32_t kHangulLBase = 0x1100;
inline constexpr char32_t kHangulVBase = 0x1161;
inline constexpr char32_t kHangulTBase = 0x11A7;
inline constexpr int kHangulLCount = 19;
inline constexpr int kHangulVCount = 21;
inline constexpr int kHangulTCount = 28;
inline constexpr int kHangulNCount = kHangulVCount * kHangulTCount;
inline constexpr int kHangulSCount = kHangulLCount * kHangulNCount;

inline int combining_class(char32_t cp) {
  const auto* begin = std::begin(unicode_data::kCombiningClass);
  const auto* end = std::end(unicode_data::kCombiningClass);
  auto it = std::lower_bound(begin, end, cp,
                             [](const unicode_data::CccEntry& e, char32_t v) { return e.cp < v; });
  return (it != end && it->cp == cp) ? it->ccc : 0;
}

inline const unicode_data::SeqEntry* find_seq(const unicode_data::SeqEntry* begin,
                                              const unicode_data::SeqEntry* end, char32_t cp) {
  auto it = std::lower_bound(begin, end, cp,
                             [](const unicode_data::SeqEntry& e, char32_t v) { return e.cp < v; });
  return (it != end && it->cp == cp) ? it : nullptr;
}

inline bool in_ranges(const unicode_data::Range* begin, const unicode_data::Range* end,
                      char32_t cp) {
  auto it = std::upper_bound(begin, end, cp,
                             [](char32_t v, const unicode_data::Range& r) { return v < r.lo; });
  return it != begin && cp <= std::prev(it)->hi;
}

inline char32_t compose_pair(char32_t a, char32_t b) {
  // Hangul LV and LVT composition is algorithmic.
  if (a >= kHangulLBase && a < kHangulLBase + kHangulLCount && b >= kHangulVBase &&
      b < kHangulVBase + kHangulVCount) {
    return kHangulSBase + ((a - kHangulLBase) * kHangulVCount + (b - kHangulVBase)) * kHangulTCount;
  }
  if (a >= kHangulSBase && a < kHangulSBase + kHangulSCount &&
      (a - kHangulSBase) % kHangulTCount == 0 && b > kHangulTBase &&
      b < kHangulTBase + kHangulTCount) {
    return a + (b - kHangulTBase);
  }
  const auto* begin = std::begin(unicode_data::kComposition);
  const auto* end = std::end(unicode_data::kComposition);
  auto it = std::lower_bound(begin, end, std::pair<char32_t, char32_t>{a, b},
                             [](const unicode_data::CompEntry& e, std::pair<char32_t, char32_t> v) {
                               return e.first != v.first ? e.first < v.first : e.second < v.second;
                             });
  if (it != end && it->first == a && it->second == b) {
    return it->composed;
  }
  return 0;
}

inline void decompose_into(std::u32string& out, char32_t cp) {
  if (cp >= kHangulSBase && cp < kHangulSBase + kHangulSCount) {
    char32_t idx = cp - kHangulSBase;
    out.push_back(kHangulLBase + idx / kHangulNCount);
    out.push_back(kHangulVBase + (idx % kHangulNCount) / kHangulTCount);
    char32_t t = idx % kHangulTCount;
    if (t != 0) {
      out.push_back(kHangulTBase + t);
    }
    return;
  }
  if (const auto* e =
          find_seq(std::begin(unicode_data::kDecomp), std::end(unicode_data::kDecomp), cp)) {
    for (std::uint8_t i = 0; i < e->len; ++i) {
      out.push_back(unicode_data::kDecompPool[e->offset + i]);
    }
    return;
  }
  out.push_back(cp);
}

}  // namespace detail

/// Canonical composition (NFC) over a codepoint sequence.
inline std::u32string nfc(std::u32string_view in) {
  // 1. Canonical decomposition (table entries are pre-expanded).
  std::u32string buf;
  buf.reserve(in.size() + in.size() / 4);
  for (char32_t cp : in) {
    detail::decompose_into(buf, cp);
  }
  // 2. Canonical ordering: stable-sort maximal runs of nonzero-ccc marks.
  for (std::size_t i = 1; i < buf.size(); ++i) {
    int cc = detail::combining_class(buf[i]);
    if (cc == 0) {
      continue;
    }
    std::size_t j = i;
    while (j > 0) {
      int prev = detail::combining_class(buf[j - 1]);
      if (prev == 0 || prev <= cc) {
        break;
      }
      std::swap(buf[j - 1], buf[j]);
      --j;
    }
  }
  // 3. Canonical composition.
  std::u32string out;
  out.reserve(buf.size());
  std::ptrdiff_t starter = -1;
  int prev_cc = 0;
  for (char32_t cp : buf) {
    int cc = detail::combining_class(cp);
    if (starter >= 0 &&
        (out.size() == static_cast<std::size_t>(starter) + 1 || prev_cc < cc)) {
      if (char32_t composed = detail::compose_pair(out[static_cast<std::size_t>(starter)], cp)) {
        out[static_cast<std::size_t>(starter)] = composed;
        continue;
      }
    }
    if (cc == 0) {
      starter = static_cast<std::ptrdiff_t>(out.size());
      prev_cc = 0;
    } else {
      prev_cc = cc;
    }
    out.push_back(cp);
  }
  return out;
}

inline std::string nfc_utf8(std::string_view bytes) { return utf8_encode(nfc(utf8_decode(bytes))); }

/// True for general categories L* and N* (the tokenizer's word characters).
inline bool is_word_char(char32_t cp) {
  return detail::in_ranges(std::begin(unicode_data::kWordRanges),
                           std::end(unicode_data::kWordRanges), cp);
}

/// Whitespace for text normalization: Z* separators plus the ASCII controls
/// and NEL that conventionally act as whitespace.
inline bool is_space_char(char32_t cp) {
  if (cp == U'\t' || cp == U'\n' || cp == U'\r' || cp == 0x0B || cp == 0x0C || cp == 0x85) {
    return true;
  }
  return detail::in_ranges(std::begin(unicode_data::kSpaceRanges),
                           std::end(unicode_data::kSpaceRanges), cp);
}

/// Cc controls that are not whitespace; these are stripped outright.
inline bool is_control_char(char32_t cp) {
  bool cc = cp < 0x20 || cp == 0x7F || (cp >= 0x80 && cp <= 0x9F);
  return cc && !is_space_char(cp);
}

/// Full lowercase mapping; a few codepoints expand to multiple codepoints.
inline void lowercase_into(std::u32string& out, char32_t cp) {
  if (const auto* e =
          detail::find_seq(std::begin(unicode_data::kLower), std::end(unicode_data::kLower), cp)) {
    for (std::uint8_t i = 0; i < e->len; ++i) {
      out.push_back(unicode_data::kLowerPool[e->offset + i]);
    }
    return;
  }
  out.push_back(cp);
}

inline std::u32string lowercase(std::u32string_view in) {
  std::u32string out;
  out.reserve(in.size());
  for (char32_t cp : in) {
    lowercase_into(out, cp);
  }
  return out;
}

inline std::string lowercase_utf8(std::string_view bytes) {
  return utf8_encode(lowercase(utf8_decode(bytes)));
}

/// True when the codepoint has a distinct lowercase form, i.e. behaves as
/// an uppercase or titlecase letter.
inline bool has_lower_mapping(char32_t cp) {
  return detail::find_seq(std::begin(unicode_data::kLower), std::end(unicode_data::kLower), cp) !=
         nullptr;
}

}  // namespace metagen
