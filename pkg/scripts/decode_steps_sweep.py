#!/usr/bin/env python3
"""How does the number of decoding rounds trade off against output quality?

For a bank of random table predictors, the per-position argmax of the rows
is the best achievable output. Decoding with more rounds re-commits fewer
low-confidence guesses per round, so agreement with that target should rise
with S and the cosine schedule should dominate linear at small S (it keeps
more tokens masked early).
"""

import numpy as np

from genkit.mgm import DecodeConfig, decode
from genkit.predictors import TablePredictor
from genkit.schedules import MaskSchedule


def main() -> int:
    rng = np.random.default_rng(3)
    n, vocab, trials = 48, 8, 40
    tables = [rng.dirichlet(np.full(vocab, 0.6), size=n) for _ in range(trials)]
    targets = [rows.argmax(axis=1) for rows in tables]

    print(f"{'S':>4s}  {'cosine':>8s}  {'linear':>8s}")
    for steps in (1, 2, 4, 8, 16):
        agree = {}
        for kind in ("cosine", "linear"):
            cfg = DecodeConfig(steps=steps, schedule=MaskSchedule(kind, 1.0),
                               selection="sample", seed=steps)
            hits = 0
            for rows, target in zip(tables, targets):
                seq, _ = decode(TablePredictor(rows), n, cfg=cfg)
                hits += int(np.sum(np.asarray(seq.ids) == target))
            agree[kind] = hits / (trials * n)
        print(f"{steps:4d}  {agree['cosine']:8.3f}  {agree['linear']:8.3f}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
