#!/usr/bin/env python3
"""Independent oracle for the statistical keyphrase scorer.

Implements the documented scoring directly from its definition: per-term
features (casing, first-occurrence sentence, frequency vs mean+sigma,
neighbor dispersion in a +/-window, sentence spread) combined into
S(t) = w_rel * w_pos / (w_case + w_freq/w_rel + w_spread/w_rel), and
candidate score S(c) = prod(S) / (tf_cand * (1 + sum(S))), lower better.
Candidates are within-sentence 1..N-grams of non-stopword terms with no
repeated term. Ties: earlier first occurrence, then lexicographic.

Emits tests/fixtures/yake_cases.json.
"""

import json
import math
import re
import unicodedata
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent


def load_stopwords():
    src = (ROOT / "include/metagen/stopwords.hpp").read_text()
    block = src.split("kStopwords = {", 1)[1].split("};", 1)[0]
    return set(re.findall(r'"([^"]+)"', block))


STOPWORDS = load_stopwords()


def split_sentences(text):
    out = []
    current = []
    for ch in text:
        if ch in ".!?\n":
            s = "".join(current).strip()
            if s:
                out.append(s)
            current = []
        else:
            current.append(ch)
    s = "".join(current).strip()
    if s:
        out.append(s)
    return out


def tokenize_cased(text):
    text = unicodedata.normalize("NFC", text)
    tokens = []
    current = []
    for ch in text:
        if unicodedata.category(ch)[0] in ("L", "N"):
            current.append(ch)
        else:
            if current:
                tokens.append("".join(current))
                current = []
    if current:
        tokens.append("".join(current))
    return tokens


def is_acronym(word):
    return len(word) >= 2 and all(c.lower() != c for c in word)


def starts_upper(word):
    return word[0].lower() != word[0]


def score_terms(sentences_tokens, window):
    stats = {}
    order = []
    for si, sent in enumerate(sentences_tokens):
        for pi, cased in enumerate(sent):
            term = cased.lower()
            if term not in stats:
                stats[term] = {
                    "tf": 0,
                    "tf_upper": 0,
                    "tf_acronym": 0,
                    "first_sentence": si,
                    "sentences": set(),
                    "left_distinct": set(),
                    "right_distinct": set(),
                    "left_total": 0,
                    "right_total": 0,
                    "stop": term in STOPWORDS,
                }
                order.append(term)
            st = stats[term]
            st["tf"] += 1
            st["sentences"].add(si)
            if is_acronym(cased):
                st["tf_acronym"] += 1
            elif starts_upper(cased) and pi > 0:
                st["tf_upper"] += 1
            for j in range(max(0, pi - window), pi):
                st["left_distinct"].add(sent[j].lower())
                st["left_total"] += 1
            for j in range(pi + 1, min(len(sent), pi + window + 1)):
                st["right_distinct"].add(sent[j].lower())
                st["right_total"] += 1

    max_tf = max(st["tf"] for st in stats.values())
    valid = [st["tf"] for t, st in stats.items() if not st["stop"]]
    mean = sum(valid) / len(valid) if valid else 0.0
    var = sum((v - mean) ** 2 for v in valid) / len(valid) if valid else 0.0
    sigma = math.sqrt(var)
    n_sent = len(sentences_tokens)

    scores = {}
    for term, st in stats.items():
        tf = st["tf"]
        w_case = max(st["tf_acronym"], st["tf_upper"]) / (1.0 + math.log(tf))
        w_pos = math.log(math.log(3.0 + st["first_sentence"]))
        w_freq = tf / (mean + sigma) if (mean + sigma) > 0 else 0.0
        wl = st["left_distinct"] and len(st["left_distinct"]) / st["left_total"] or 0.0
        wr = st["right_distinct"] and len(st["right_distinct"]) / st["right_total"] or 0.0
        w_rel = 1.0 + (wl + wr) * tf / max_tf
        w_spread = len(st["sentences"]) / n_sent if n_sent else 0.0
        scores[term] = (w_rel * w_pos) / (w_case + w_freq / w_rel + w_spread / w_rel)
    return scores, stats


def score_candidates(body, window, max_ngram):
    sentence_texts = split_sentences(body)
    sentences_tokens = [tokenize_cased(s) for s in sentence_texts]
    sentences_tokens = [s for s in sentences_tokens]  # keep empty lists too
    if not any(sentences_tokens):
        return []
    scores, stats = score_terms(sentences_tokens, window)

    agg = {}
    global_pos = 0
    for sent in sentences_tokens:
        terms = [t.lower() for t in sent]
        for i in range(len(terms)):
            seen = set()
            members = []
            for n in range(1, max_ngram + 1):
                j = i + n - 1
                if j >= len(terms):
                    break
                t = terms[j]
                if stats[t]["stop"]:
                    break
                if t in seen:
                    break
                seen.add(t)
                members.append(t)
                key = " ".join(members)
                if key not in agg:
                    agg[key] = {"count": 0, "first_pos": global_pos + i, "terms": list(members)}
                agg[key]["count"] += 1
        global_pos += len(terms)

    out = []
    for key, a in agg.items():
        prod = 1.0
        total = 0.0
        for t in a["terms"]:
            prod *= scores[t]
            total += scores[t]
        out.append({
            "text": key,
            "score": prod / (a["count"] * (1.0 + total)),
            "first_pos": a["first_pos"],
        })
    out.sort(key=lambda c: (c["score"], c["first_pos"], c["text"]))
    return out


DOCS = [
    {
        "name": "repeated unigram",
        "body": "aspirin aspirin aspirin",
    },
    {
        "name": "toy abstract, early repeated bigram",
        "body": (
            "Myocardial infarction is a leading cause of death. "
            "Early treatment of myocardial infarction is critical for survival. "
            "We studied outcomes after myocardial infarction in older adults."
        ),
    },
    {
        "name": "acronyms and proper nouns",
        "body": (
            "The WHO coordinates global health policy from Geneva. "
            "Reports from the WHO cite declining polio incidence. "
            "Partner agencies support the WHO in vaccination campaigns."
        ),
    },
    {
        "name": "accented terms",
        "body": (
            "The Café Modèle study enrolled naïve participants. "
            "Results from the Café Modèle cohort were published twice."
        ),
    },
    {
        "name": "stopword heavy",
        "body": "It is what it is, and that is all that it is. Grit matters.",
    },
    {
        "name": "single token",
        "body": "hello",
    },
    {
        "name": "single sentence mixed",
        "body": "Beta blockers reduce cardiac workload after beta receptor binding",
    },
    {
        "name": "numbers in terms",
        "body": (
            "Type 2 diabetes prevalence rose sharply. "
            "Managing type 2 diabetes requires lifestyle change. "
            "Insulin resistance precedes type 2 diabetes."
        ),
    },
    {
        "name": "longer clinical paragraph",
        "body": (
            "Chronic kidney disease progresses silently over years. "
            "Patients with chronic kidney disease often develop anemia. "
            "Erythropoietin production falls as chronic kidney disease advances. "
            "Dialysis becomes necessary in end stage renal disease. "
            "Transplantation offers the best outcomes for suitable candidates."
        ),
    },
    {
        "name": "sentence-initial capitals ignored for casing",
        "body": (
            "Statins lower cholesterol levels. "
            "Statins also reduce inflammation. "
            "Many patients tolerate statins well."
        ),
    },
]


def main():
    cases = []
    for doc in DOCS:
        for window, max_ngram in ((1, 3), (2, 2)):
            cands = score_candidates(doc["body"], window, max_ngram)
            cases.append({
                "name": doc["name"],
                "body": doc["body"],
                "window": window,
                "max_ngram": max_ngram,
                "candidate_count": len(cands),
                "candidates": cands[:40],
                "winner": cands[0]["text"] if cands else None,
            })
    out = ROOT / "tests/fixtures/yake_cases.json"
    out.write_text(json.dumps({"cases": cases}, indent=1, ensure_ascii=True))
    print(f"wrote {out} with {len(cases)} cases")
    for c in cases:
        if c["window"] == 1:
            print(f"  [{c['name']}] -> {c['winner']}")


if __name__ == "__main__":
    main()
