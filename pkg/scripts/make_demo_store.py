#!/usr/bin/env python3
"""Populate a trajectory store with one run of each kind, ready to serve.

Usage: python scripts/make_demo_store.py [store_dir]
Then:  genkit serve --store <store_dir>
"""

import sys
from pathlib import Path

import numpy as np

from genkit.diffusion import BetaFn, reverse_sample
from genkit.flow import ConstantField, OtCfmParams, integrate, ot_target_field
from genkit.mgm import DecodeConfig, decode
from genkit.predictors import TablePredictor
from genkit.schedules import MaskSchedule
from genkit.trajectory import save


def main() -> int:
    store = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_store")
    store.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(7)

    rows = rng.dirichlet(np.full(6, 2.0), size=24)
    pred = TablePredictor(rows)
    cfg = DecodeConfig(steps=8, schedule=MaskSchedule("cosine", 1.0))
    _, traj = decode(pred, 24, cfg=cfg, trajectory_id="demo-mgm")
    save(traj, store / "demo-mgm.traj.jsonl")

    score = lambda z, t, c=None: -z
    z_init = rng.standard_normal(32)
    _, traj = reverse_sample(score, z_init, BetaFn("constant", 1.0), steps=60,
                             seed=11, trajectory_id="demo-diffusion")
    save(traj, store / "demo-diffusion.traj.jsonl")

    x0, x1 = rng.standard_normal(32), rng.standard_normal(32) * 2.0 + 1.0
    field = ConstantField(ot_target_field(x0, x1, OtCfmParams(0.0)))
    _, traj = integrate(field, x0, steps=40, trajectory_id="demo-flow")
    save(traj, store / "demo-flow.traj.jsonl")

    print(f"wrote 3 trajectories to {store}/")
    print(f"serve them with: genkit serve --store {store}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
