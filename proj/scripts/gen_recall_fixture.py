#!/usr/bin/env python3
"""Generate a frozen recall@k fixture with independently computed expectations.

Builds a 20-question synthetic benchmark: each question has 1-2 gold doc ids
and a ranked result list in which a gold doc appears at a planted rank (or not
at all). Expected recall@k values are computed here, by a recount that shares
no code with the library, and frozen into tests/fixtures/recall_cases.json.
"""

import json
import pathlib
import random

OUT = pathlib.Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "recall_cases.json"

rng = random.Random(20260817)

N_QUESTIONS = 20
LIST_LEN = 10
KS = [1, 3, 5, 10]


def main() -> None:
    questions = []
    for qi in range(N_QUESTIONS):
        n_gold = rng.choice([1, 1, 1, 2])
        gold = [f"g{qi}_{j}" for j in range(n_gold)]
        # Planted rank: 0-based position of the first gold hit, or None.
        planted = rng.choice([0, 0, 1, 2, 4, 7, 9, None])
        ranked = [f"f{qi}_{r}" for r in range(LIST_LEN)]
        if planted is not None:
            ranked[planted] = gold[0]
            if n_gold == 2 and rng.random() < 0.5:
                other = rng.randrange(LIST_LEN)
                if other != planted:
                    ranked[other] = gold[1]
        questions.append(
            {
                "question": f"synthetic question {qi}",
                "gold_doc_ids": gold,
                "ranked_ids": ranked,
            }
        )

    expected = {}
    for k in KS:
        hits = 0
        for q in questions:
            found = False
            for doc_id in q["ranked_ids"][:k]:
                if doc_id in q["gold_doc_ids"]:
                    found = True
                    break
            if found:
                hits += 1
        expected[str(k)] = hits / N_QUESTIONS

    OUT.write_text(json.dumps({"questions": questions, "expected": expected}, indent=1) + "\n")
    print(f"wrote {OUT} expected={expected}")


if __name__ == "__main__":
    main()
