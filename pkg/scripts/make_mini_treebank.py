#!/usr/bin/env python3
"""Regenerate the bundled synthetic mini-treebank (50 sentences, >= 25%
of them containing a discontinuous constituent)."""

import pathlib

import numpy as np

from discoparse.trees import (emit_discbracket, generate_random_tree,
                              is_discontinuous)

OUT = pathlib.Path(__file__).resolve().parent.parent / "src" / "discoparse" / \
    "data" / "mini_treebank.discbracket"

SENTENCES = 50
SEED_BASE = 1000


def main():
    rng = np.random.default_rng(0)
    discontinuous, continuous = [], []
    seed = SEED_BASE
    # fill a 40% discontinuity quota from consecutive seeds, deterministically
    while len(discontinuous) < 20 or len(continuous) < 30:
        t = generate_random_tree(int(rng.integers(3, 9)), 0.5, seed)
        seed += 1
        bucket = (discontinuous
                  if any(is_discontinuous(nd) for nd in t.internal_nodes())
                  else continuous)
        bucket.append(t)
    trees = discontinuous[:20] + continuous[:30]
    disc = len(discontinuous[:20])
    assert len(trees) == SENTENCES
    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text("".join(emit_discbracket(t) + "\n" for t in trees),
                   encoding="utf-8")
    print(f"wrote {len(trees)} trees ({disc} discontinuous) to {OUT}")


if __name__ == "__main__":
    main()
