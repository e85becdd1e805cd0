"""Command-line surface for the engine.

Exit codes: 0 success, 1 usage error, 2 data error (bad files, bad values,
parse failures), 3 numeric divergence. Every generative subcommand writes
a trajectory file into the store directory (flag --store, else the
GENKIT_STORE environment variable, else the working directory) and prints
the trajectory id. All randomness flows from the explicit --seed through
numpy's default platform-stable generator; run ids are derived from the
argument vector, so identical invocations produce identical files.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import arlm, diffusion, flow, mgm, rvq, temporal
from . import trajectory as tj
from .errors import DivergenceError, ParseError
from .predictors import TablePredictor
from .schedules import MaskSchedule
from .tokens import TokenSequence


def _store_dir(args) -> Path:
    root = args.store or os.environ.get("GENKIT_STORE") or "."
    path = Path(root)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _run_id(prefix: str, argv) -> str:
    digest = hashlib.sha256(" ".join(map(str, argv)).encode()).hexdigest()[:12]
    return f"{prefix}-{digest}"


def _write_trajectory(traj, args, argv) -> Path:
    if args.out:
        path = Path(args.out)
    else:
        path = _store_dir(args) / f"{traj.id}.traj.jsonl"
    tj.save(traj, path)
    return path


def _load_vector(path) -> np.ndarray:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if isinstance(doc, dict):
        doc = doc["data"]
    return np.asarray(doc, dtype=np.float64)


def _parse_ids(text: str):
    return [int(tok) for tok in text.split(",") if tok.strip() != ""]


def cmd_mgm_decode(args, argv) -> int:
    pred = TablePredictor.from_json(args.predictor)
    sched = MaskSchedule(args.schedule, args.horizon)
    cfg = mgm.DecodeConfig(steps=args.steps, schedule=sched, selection=args.mode,
                           seed=args.seed, temperature=args.temperature)
    condition = _parse_ids(args.condition) if args.condition else None
    traj_id = args.id or _run_id("mgm", argv)
    seq, traj = mgm.decode(pred, args.n, condition, cfg, trajectory_id=traj_id)
    counts = [int(s.mask.sum()) for s in traj.steps[1:]]
    print(f"remask counts: {counts}")
    print(f"tokens: {','.join(map(str, seq.ids))}")
    path = _write_trajectory(traj, args, argv)
    print(f"trajectory: {traj.id} ({path})")
    return 0


def cmd_ar_sample(args, argv) -> int:
    pred = TablePredictor.from_json(args.predictor)
    prefix_ids = _parse_ids(args.prefix) if args.prefix else []
    vocab = args.vocab or pred.num_classes
    prefix = TokenSequence(tuple(prefix_ids), vocab)
    seq = arlm.ar_sample(pred, prefix, args.max_len, args.eos, mode=args.mode,
                         seed=args.seed, temperature=args.temperature)
    print(f"tokens: {','.join(map(str, seq.ids))}")

    # Record the generation as a token trajectory: step k shows the prefix
    # plus k generated tokens, the not-yet-generated tail masked out.
    total = len(seq)
    snaps = []
    for k in range(len(prefix), total + 1):
        ids = list(seq.ids[:k]) + [prefix.mask_id] * (total - k)
        mask = np.zeros(total, dtype=bool)
        mask[k:] = True
        snaps.append(tj.Snapshot(step=k - len(prefix), state=np.asarray(ids), mask=mask))
    traj = tj.Trajectory(id=args.id or _run_id("ar", argv), kind="mgm", steps=snaps,
                         condition={"vocab_size": str(vocab), "mode": args.mode},
                         seed=args.seed)
    path = _write_trajectory(traj, args, argv)
    print(f"trajectory: {traj.id} ({path})")
    return 0


def cmd_diffuse(args, argv) -> int:
    beta_fn = diffusion.BetaFn(args.beta_kind, args.beta0, args.beta1)
    rng = np.random.default_rng(args.seed)
    z_init = rng.standard_normal(args.dim)
    if args.score == "gaussian":
        den = lambda z, t, c=None: -z
    else:
        den = lambda z, t, c=None: np.zeros_like(z)
    traj_id = args.id or _run_id("diffusion", argv)
    z, traj = diffusion.reverse_sample(den, z_init, beta_fn, args.steps,
                                       seed=args.seed, noise_scale=args.noise_scale,
                                       trajectory_id=traj_id)
    print(f"final: {json.dumps([float(v) for v in z])}")
    path = _write_trajectory(traj, args, argv)
    print(f"trajectory: {traj.id} ({path})")
    return 0


def cmd_flow_integrate(args, argv) -> int:
    x0 = _load_vector(args.x0)
    x1 = _load_vector(args.x1)
    params = flow.OtCfmParams(args.sigma)
    field = flow.ConstantField(flow.ot_target_field(x0, x1, params))
    traj_id = args.id or _run_id("flow", argv)
    final, traj = flow.integrate(field, x0, args.steps, method=args.method,
                                 trajectory_id=traj_id)
    print(f"final: {json.dumps([float(v) for v in final])}")
    path = _write_trajectory(traj, args, argv)
    print(f"trajectory: {traj.id} ({path})")
    return 0


def cmd_rvq(args, argv) -> int:
    if args.rvq_cmd == "fit":
        data = np.atleast_2d(_load_vector(args.data))
        sizes = [int(s) for s in args.sizes.split(",")]
        stack = rvq.fit_stack(data, sizes, args.iters, seed=args.seed)
        rvq.save_stack(stack, args.out)
        print(f"stack: {args.out} ({stack.num_layers} layers, dim {stack.dim})")
        return 0
    stack = rvq.load_stack(args.stack)
    if args.rvq_cmd == "encode":
        x = _load_vector(args.x)
        codes, residual = rvq.rvq_encode(stack, x)
        print(json.dumps({"codes": codes,
                          "residual": [float(v) for v in residual]}))
        return 0
    codes = _parse_ids(args.codes)
    out = rvq.rvq_decode(stack, codes)
    print(json.dumps([float(v) for v in out]))
    return 0


def _read_caption_lines(path):
    with open(path, "r", encoding="utf-8") as fh:
        return [line.rstrip("\n") for line in fh if line.strip()]


def cmd_caption(args, argv) -> int:
    if args.caption_cmd == "parse":
        if args.kind == "timestamp":
            cap = temporal.parse_timestamp_caption(args.text)
            doc = {label: list(map(list, ivs)) for label, ivs in cap.events}
        else:
            cap = temporal.parse_frequency_caption(args.text)
            doc = cap.as_dict()
        print(json.dumps(doc))
        return 0
    if args.caption_cmd == "matrix":
        cap = temporal.parse_timestamp_caption(args.text)
        matrix = temporal.build_matrix(cap, args.clip)
        print(temporal.matrix_to_json(matrix))
        return 0
    if args.caption_cmd == "eval-f1":
        refs = [temporal.parse_timestamp_caption(s) for s in _read_caption_lines(args.ref)]
        preds = [temporal.parse_timestamp_caption(s) for s in _read_caption_lines(args.pred)]
        if len(refs) != len(preds):
            raise ValueError("reference and prediction files differ in line count")
        merged_ref = temporal.TimestampCaption(tuple(
            (f"{i}:{label}", ivs) for i, cap in enumerate(refs) for label, ivs in cap.events))
        merged_pred = temporal.TimestampCaption(tuple(
            (f"{i}:{label}", ivs) for i, cap in enumerate(preds) for label, ivs in cap.events))
        precision, recall, f1 = temporal.segment_f1(merged_ref, merged_pred,
                                                    segment_len=args.segment,
                                                    clip_len=args.clip)
        print(f"precision={float(precision)} recall={float(recall)}")
        print(f"f1={float(f1)}")
        return 0
    # eval-freq
    refs = [temporal.parse_frequency_caption(s) for s in _read_caption_lines(args.ref)]
    preds = [temporal.parse_frequency_caption(s) for s in _read_caption_lines(args.pred)]
    print(f"l1_freq={float(temporal.l1_freq(refs, preds))}")
    return 0


def cmd_serve(args, argv) -> int:
    from .server import run_blocking

    store = args.store or os.environ.get("GENKIT_STORE") or "."
    run_blocking(store, args.bind)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="genkit",
                                     description="desk-scale generative-audio algorithm engine")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("mgm-decode", help="iterative parallel decoding with a table predictor")
    p.add_argument("--n", type=int, required=True, help="sequence length")
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--schedule", choices=["cosine", "linear"], default="cosine")
    p.add_argument("--horizon", type=float, default=1.0)
    p.add_argument("--predictor", required=True, help="table predictor JSON file")
    p.add_argument("--condition", default=None, help="comma-separated condition ids")
    p.add_argument("--mode", choices=["argmax", "sample"], default="argmax")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--temperature", type=float, default=1.0)
    p.add_argument("--store", default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--id", default=None)
    p.set_defaults(func=cmd_mgm_decode, stochastic_when=lambda a: a.mode == "sample")

    p = sub.add_parser("ar-sample", help="token-by-token autoregressive sampling")
    p.add_argument("--predictor", required=True)
    p.add_argument("--prefix", default="", help="comma-separated prefix ids")
    p.add_argument("--max-len", type=int, required=True)
    p.add_argument("--eos", type=int, required=True)
    p.add_argument("--vocab", type=int, default=None)
    p.add_argument("--mode", choices=["argmax", "sample"], default="argmax")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--temperature", type=float, default=1.0)
    p.add_argument("--store", default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--id", default=None)
    p.set_defaults(func=cmd_ar_sample, stochastic_when=lambda a: a.mode == "sample")

    p = sub.add_parser("diffuse", help="reverse-SDE sampling with a built-in score")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--beta-kind", choices=["constant", "linear"], default="constant")
    p.add_argument("--beta0", type=float, default=1.0)
    p.add_argument("--beta1", type=float, default=1.0)
    p.add_argument("--score", choices=["gaussian", "zero"], default="gaussian")
    p.add_argument("--noise-scale", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--store", default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--id", default=None)
    p.set_defaults(func=cmd_diffuse, stochastic_when=lambda a: True)

    p = sub.add_parser("flow-integrate", help="integrate the transport field between two states")
    p.add_argument("--field", choices=["ot"], default="ot")
    p.add_argument("--sigma", type=float, default=0.0)
    p.add_argument("--x0", required=True, help="JSON vector file")
    p.add_argument("--x1", required=True, help="JSON vector file")
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--method", choices=["euler", "midpoint"], default="euler")
    p.add_argument("--store", default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--id", default=None)
    p.set_defaults(func=cmd_flow_integrate, stochastic_when=lambda a: False)

    p = sub.add_parser("rvq", help="residual vector quantizer tools")
    rsub = p.add_subparsers(dest="rvq_cmd", required=True)
    pf = rsub.add_parser("fit", help="fit a codebook stack with k-means")
    pf.add_argument("--data", required=True, help="JSON matrix file")
    pf.add_argument("--sizes", required=True, help="comma-separated layer sizes")
    pf.add_argument("--iters", type=int, default=25)
    pf.add_argument("--seed", type=int, required=True)
    pf.add_argument("--out", required=True)
    pe = rsub.add_parser("encode")
    pe.add_argument("--stack", required=True)
    pe.add_argument("--x", required=True, help="JSON vector file")
    pd = rsub.add_parser("decode")
    pd.add_argument("--stack", required=True)
    pd.add_argument("--codes", required=True, help="comma-separated layer codes")
    p.set_defaults(func=cmd_rvq, stochastic_when=lambda a: False)

    p = sub.add_parser("caption", help="temporal caption tools")
    csub = p.add_subparsers(dest="caption_cmd", required=True)
    pp = csub.add_parser("parse")
    pp.add_argument("--text", required=True)
    pp.add_argument("--kind", choices=["timestamp", "frequency"], default="timestamp")
    pm = csub.add_parser("matrix")
    pm.add_argument("--text", required=True)
    pm.add_argument("--clip", type=float, required=True)
    pe = csub.add_parser("eval-f1")
    pe.add_argument("--ref", required=True)
    pe.add_argument("--pred", required=True)
    pe.add_argument("--clip", type=float, required=True)
    pe.add_argument("--segment", type=float, default=1.0)
    pq = csub.add_parser("eval-freq")
    pq.add_argument("--ref", required=True)
    pq.add_argument("--pred", required=True)
    p.set_defaults(func=cmd_caption, stochastic_when=lambda a: False)

    p = sub.add_parser("serve", help="serve a trajectory store over HTTP")
    p.add_argument("--store", default=None)
    p.add_argument("--bind", default="127.0.0.1:8000")
    p.set_defaults(func=cmd_serve, stochastic_when=lambda a: False)

    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    if args.stochastic_when(args) and getattr(args, "seed", None) is None:
        print("error: --seed is required for stochastic modes", file=sys.stderr)
        return 1
    try:
        return args.func(args, argv)
    except DivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ParseError, ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def entrypoint() -> None:
    raise SystemExit(main())
