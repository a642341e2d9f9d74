#!/usr/bin/env python3
"""Regenerates include/metagen/unicode_data.hpp from Python's unicodedata.

The emitted tables pin one Unicode version so that normalization and
tokenization results never drift with the host environment:

  * canonical combining classes (nonzero only)
  * full canonical decompositions (recursively expanded, Hangul excluded;
    Hangul is handled algorithmically at runtime)
  * primary composition pairs (exclusions filtered via NFC round-trip)
  * lowercase mappings (full mappings, may expand to several codepoints)
  * word-character ranges (general categories L* and N*)
  * space-separator ranges (Zs, Zl, Zp)

Usage: python3 scripts/gen_unicode_tables.py > include/metagen/unicode_data.hpp
"""

import sys
import unicodedata

HANGUL_S_BASE = 0xAC00
HANGUL_S_LAST = 0xD7A3


def is_hangul_syllable(cp: int) -> bool:
    return HANGUL_S_BASE <= cp <= HANGUL_S_LAST


def collect():
    ccc = []          # (cp, class)
    decomp = []       # (cp, [cps...]) fully expanded canonical decomposition
    comp = []         # (a, b, composed)
    lower = []        # (cp, [cps...])
    word_ranges = []  # (lo, hi) for categories L*, N*
    space_ranges = []  # (lo, hi) for Zs, Zl, Zp

    def ranges(predicate):
        out = []
        start = None
        for cp in range(0x110000):
            if predicate(cp):
                if start is None:
                    start = cp
            elif start is not None:
                out.append((start, cp - 1))
                start = None
        if start is not None:
            out.append((start, 0x10FFFF))
        return out

    for cp in range(0x110000):
        ch = chr(cp)
        k = unicodedata.combining(ch)
        if k:
            ccc.append((cp, k))
        if not is_hangul_syllable(cp):
            nfd = unicodedata.normalize("NFD", ch)
            if nfd != ch:
                decomp.append((cp, [ord(c) for c in nfd]))
            raw = unicodedata.decomposition(ch)
            if raw and not raw.startswith("<"):
                parts = [int(p, 16) for p in raw.split()]
                if len(parts) == 2:
                    a, b = parts
                    # Primary composite test: the pair must survive an
                    # NFD -> NFC round trip, and the first element must
                    # be a starter. This drops every composition
                    # exclusion without needing the exclusion list.
                    if (unicodedata.combining(chr(a)) == 0
                            and not is_hangul_syllable(a)
                            and unicodedata.normalize(
                                "NFC", unicodedata.normalize("NFD", ch)) == ch):
                        comp.append((a, b, cp))
        lo = ch.lower()
        if lo != ch:
            lower.append((cp, [ord(c) for c in lo]))

    word_ranges = ranges(lambda cp: unicodedata.category(chr(cp))[0] in ("L", "N"))
    space_ranges = ranges(lambda cp: unicodedata.category(chr(cp)) in ("Zs", "Zl", "Zp"))
    comp.sort(key=lambda t: (t[0], t[1]))
    return ccc, decomp, comp, lower, word_ranges, space_ranges


def fmt_rows(items, per_line):
    lines = []
    for i in range(0, len(items), per_line):
        lines.append("    " + " ".join(items[i:i + per_line]))
    return "\n".join(lines)


def main():
    ccc, decomp, comp, lower, word_ranges, space_ranges = collect()

    decomp_pool = []
    decomp_entries = []
    for cp, seq in decomp:
        decomp_entries.append((cp, len(decomp_pool), len(seq)))
        decomp_pool.extend(seq)

    lower_pool = []
    lower_entries = []
    for cp, seq in lower:
        lower_entries.append((cp, len(lower_pool), len(seq)))
        lower_pool.extend(seq)

    if len(decomp_pool) >= 1 << 16 or len(lower_pool) >= 1 << 16:
        raise SystemExit("pool offset exceeds uint16_t")

    w = sys.stdout.write
    w("// Generated by scripts/gen_unicode_tables.py -- do not edit by hand.\n")
    w(f"// Source: Python unicodedata, Unicode {unicodedata.unidata_version}.\n")
    w("#pragma once\n\n")
    w("#include <cstdint>\n\n")
    w("namespace metagen::unicode_data {\n\n")
    w(f'inline constexpr char kUnicodeVersion[] = "{unicodedata.unidata_version}";\n\n')

    w("struct CccEntry { char32_t cp; std::uint8_t ccc; };\n")
    w(f"inline constexpr CccEntry kCombiningClass[{len(ccc)}] = {{\n")
    w(fmt_rows([f"{{{cp:#x},{k}}}," for cp, k in ccc], 8))
    w("\n};\n\n")

    w("struct SeqEntry { char32_t cp; std::uint16_t offset; std::uint8_t len; };\n\n")
    w(f"inline constexpr char32_t kDecompPool[{len(decomp_pool)}] = {{\n")
    w(fmt_rows([f"{cp:#x}," for cp in decomp_pool], 12))
    w("\n};\n\n")
    w(f"inline constexpr SeqEntry kDecomp[{len(decomp_entries)}] = {{\n")
    w(fmt_rows([f"{{{cp:#x},{off},{n}}}," for cp, off, n in decomp_entries], 8))
    w("\n};\n\n")

    w("struct CompEntry { char32_t first; char32_t second; char32_t composed; };\n")
    w(f"inline constexpr CompEntry kComposition[{len(comp)}] = {{\n")
    w(fmt_rows([f"{{{a:#x},{b:#x},{c:#x}}}," for a, b, c in comp], 6))
    w("\n};\n\n")

    w(f"inline constexpr char32_t kLowerPool[{len(lower_pool)}] = {{\n")
    w(fmt_rows([f"{cp:#x}," for cp in lower_pool], 12))
    w("\n};\n\n")
    w(f"inline constexpr SeqEntry kLower[{len(lower_entries)}] = {{\n")
    w(fmt_rows([f"{{{cp:#x},{off},{n}}}," for cp, off, n in lower_entries], 8))
    w("\n};\n\n")

    w("struct Range { char32_t lo; char32_t hi; };\n")
    w(f"inline constexpr Range kWordRanges[{len(word_ranges)}] = {{\n")
    w(fmt_rows([f"{{{lo:#x},{hi:#x}}}," for lo, hi in word_ranges], 8))
    w("\n};\n\n")
    w(f"inline constexpr Range kSpaceRanges[{len(space_ranges)}] = {{\n")
    w(fmt_rows([f"{{{lo:#x},{hi:#x}}}," for lo, hi in space_ranges], 8))
    w("\n};\n\n")
    w("}  // namespace metagen::unicode_data\n")


if __name__ == "__main__":
    main()
