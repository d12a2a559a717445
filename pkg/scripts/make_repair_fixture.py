#!/usr/bin/env python
"""Regenerate the bundled repair-fixture model.

The fixture is a bigram-only model (weights 0/1/0) whose transition
frequencies are chosen so the three bridge insertions between INIT and
REJECT score exactly 81326, 37576, and 20572:

    p(SUGGEST | INIT)         = 259/500  = 0.518
    p(REJECT | SUGGEST)       = 157/1000 = 0.157   -> 518 * 157 = 81326
    p(REQUEST_COMMENT | INIT) =  77/500  = 0.154
    p(REJECT | REQUEST_COMMENT) = 61/250 = 0.244   -> 154 * 244 = 37576
    p(DELIBERATE | INIT)      =  37/500  = 0.074
    p(REJECT | DELIBERATE)    = 139/500  = 0.278   ->  74 * 278 = 20572

The bigram matrix is flow conserving (each act's incoming and outgoing
totals match its unigram count) over 500 synthetic dialogues, so the
table passes the count-consistency checks.
"""

from pathlib import Path

from dialact.corpus import load_inventory
from dialact.ngram import CountTable, InterpolationWeights, NGramModel, save_model
from dialact.resources import bundled_path

BIGRAMS = {
    ("<BEGIN>", "GREET"): 100,
    ("<BEGIN>", "MOTIVATE"): 100,
    ("<BEGIN>", "INIT"): 200,
    ("<BEGIN>", "SUGGEST"): 100,
    ("GREET", "INIT"): 100,
    ("MOTIVATE", "INIT"): 100,
    ("MOTIVATE", "SUGGEST"): 50,
    ("INIT", "SUGGEST"): 259,
    ("INIT", "REQUEST_COMMENT"): 77,
    ("INIT", "DELIBERATE"): 37,
    ("INIT", "ACCEPT"): 127,
    ("SUGGEST", "REJECT"): 157,
    ("SUGGEST", "ACCEPT"): 643,
    ("SUGGEST", "REQUEST_COMMENT"): 100,
    ("SUGGEST", "DELIBERATE"): 100,
    ("REQUEST_COMMENT", "REJECT"): 61,
    ("REQUEST_COMMENT", "ACCEPT"): 189,
    ("DELIBERATE", "REJECT"): 139,
    ("DELIBERATE", "SUGGEST"): 200,
    ("DELIBERATE", "ACCEPT"): 161,
    ("REJECT", "SUGGEST"): 200,
    ("REJECT", "INIT"): 100,
    ("REJECT", "MOTIVATE"): 50,
    ("REJECT", "<END>"): 7,
    ("ACCEPT", "SUGGEST"): 191,
    ("ACCEPT", "REQUEST_COMMENT"): 73,
    ("ACCEPT", "DELIBERATE"): 363,
    ("ACCEPT", "BYE"): 400,
    ("ACCEPT", "<END>"): 93,
    ("BYE", "<END>"): 400,
}


def unigrams_from_flow(bigrams: dict) -> dict:
    counts: dict = {}
    for (_, event), n in bigrams.items():
        counts[event] = counts.get(event, 0) + n
    return counts


def main() -> None:
    inventory = load_inventory(bundled_path("inventory_default.txt"))
    counts = CountTable.from_name_counts(
        inventory, uni=unigrams_from_flow(BIGRAMS), bi=BIGRAMS, tri={}
    )
    model = NGramModel(inventory, counts, InterpolationWeights(0.0, 1.0, 0.0))
    out = Path(__file__).resolve().parent.parent / "src" / "dialact" / "data" / "repair_fixture.model"
    save_model(model, out)
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
