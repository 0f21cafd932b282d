"""Command-line entry point (``icbound``)."""
from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys

from . import harness
from .bound import BoundConfig, bits_to_nats, icb
from .datasets import DATA_DIR_ENV, make_binary_task
from .errors import ICBError
from .infometrics import DEFAULT_ROUNDS
from .kernels import NetConfig, gram, save_gram_pair


def _floats(text: str) -> tuple:
    try:
        vals = tuple(float(v) for v in text.replace(",", " ").split())
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a list of numbers: {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _common(p: argparse.ArgumentParser, seeds: bool = True) -> None:
    p.add_argument("--dataset", default="mnist",
                   help="mnist | idx:DIR | csv:PATH[#COL] | synthetic[:d=..,sep=..,n=..]")
    p.add_argument("--data-dir", default=os.environ.get(DATA_DIR_ENV),
                   help=f"directory holding the IDX files (default ${DATA_DIR_ENV})")
    p.add_argument("--seed", type=int, default=0, help="master seed")
    if seeds:
        p.add_argument("--seeds", type=int, default=harness.DEFAULT_SEEDS,
                       help="metaparameter draws per task")
        p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True, help="output CSV path")
    p.add_argument("--delta", type=float, default=0.05)
    p.add_argument("--mc-rounds", type=int, default=DEFAULT_ROUNDS)
    p.add_argument("--n-tst", type=int, default=2000)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="icbound",
        description="Information-based generalization bounds for infinite-width network ensembles.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("icb", help="bound value from an MI estimate")
    p.add_argument("--i", type=float, required=True, dest="i_value", help="mutual information")
    p.add_argument("--n", type=int, required=True, help="training set size")
    p.add_argument("--delta", type=float, default=0.05)
    p.add_argument("--bits", action="store_true", help="--i is in bits (default nats)")

    p = sub.add_parser("kernel", help="compute and dump the train NNGP/NTK Grams")
    _common(p, seeds=False)
    p.add_argument("--task", type=int, nargs=2, default=(0, 1), metavar=("A", "B"))
    p.add_argument("--n-trn", type=int, default=1000)
    p.add_argument("--depth", type=int, default=2)
    p.add_argument("--activation", default="relu", choices=("relu", "erf"))
    p.add_argument("--w-var", type=float, default=None)
    p.add_argument("--b-var", type=float, default=0.1)

    p = sub.add_parser("run-exp-a", help="time-grid sweep over neighbouring-digit tasks")
    _common(p)
    p.add_argument("--lambda-grid", type=_floats, default=harness.EXP_A_LAMBDAS,
                   help="lambda values sampled uniformly (comma or space separated)")

    p = sub.add_parser("run-exp-b", help="t = inf sweep over all 45 class pairs")
    _common(p)
    p.add_argument("--n-trn", type=int, default=None, help="override the per-dataset default")
    p.add_argument("--task", type=int, nargs=2, action="append", metavar=("A", "B"),
                   help="restrict to these class pairs (repeatable)")

    p = sub.add_parser("rand-test", help="natural vs random labels")
    _common(p, seeds=False)
    p.add_argument("--task", type=int, nargs=2, default=(0, 1), metavar=("A", "B"))
    p.add_argument("--lambda-grid", type=_floats, default=(1e-1, 1e-2, 1e-3))
    p.add_argument("--n-trn", type=int, default=1000)

    p = sub.add_parser("rank", help="Kendall tau report from a sweep CSV")
    p.add_argument("records", help="sweep CSV")
    p.add_argument("--group-by", default="task")
    p.add_argument("--out", default=None)
    p.add_argument("--overfitted", action="store_true", help="only rows with 100%% train accuracy")
    p.add_argument("--bound", default="icb_ub", choices=("icb_ub", "icb_lb"))

    p = sub.add_parser("run-trial", help="one trial from a JSON TrialSpec")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    return ap


def _print_rows(rows, cols) -> None:
    print(",".join(cols))
    for r in rows:
        print(",".join("" if r.get(c) is None else harness._fmt(r[c]) for c in cols))


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _dispatch(args)
    except (ICBError, FileNotFoundError, ValueError) as exc:
        print(f"icbound: error: {exc}", file=sys.stderr)
        return 2


def _dispatch(args) -> int:
    if getattr(args, "data_dir", None):
        os.environ[DATA_DIR_ENV] = args.data_dir
    data_dir = getattr(args, "data_dir", None)

    if args.cmd == "icb":
        i_nats = bits_to_nats(args.i_value) if args.bits else args.i_value
        print(repr(icb(i_nats, args.n, BoundConfig(args.delta))))
        return 0

    if args.cmd == "kernel":
        raw = harness.load_source(args.dataset, data_dir)
        seed = harness.derive_seed(args.seed, 0, "task")
        ds = make_binary_task(raw, args.task[0], args.task[1], args.n_trn, args.n_tst, seed)
        cfg = NetConfig(depth=args.depth, activation=args.activation, w_var=args.w_var,
                        b_var=args.b_var)
        save_gram_pair(args.out, gram(ds.X_trn, cfg), ds.fingerprint(), cfg.kernel_key())
        print(f"wrote {ds.n_trn}x{ds.n_trn} K and Theta to {args.out}")
        return 0

    if args.cmd == "run-trial":
        with open(args.config) as fh:
            spec = harness.TrialSpec.from_json(fh.read())
        print(json.dumps(harness.summarize(harness.run_specs([spec], args.out)), sort_keys=True))
        return 0

    if args.cmd == "rank":
        rows = harness.rank(args.records, args.group_by, args.out, overfitted=args.overfitted,
                            bound=args.bound)
        _print_rows(rows, harness.RANK_COLUMNS)
        return 0

    common = dict(master_seed=args.seed, delta=args.delta, mc_rounds=args.mc_rounds,
                  n_tst=args.n_tst, data_dir=data_dir)
    if args.cmd == "run-exp-a":
        recs = harness.exp_a(args.dataset, args.seeds, args.out, workers=args.workers,
                             lambdas=args.lambda_grid, **common)
    elif args.cmd == "run-exp-b":
        recs = harness.exp_b(args.dataset, args.seeds, args.out, workers=args.workers,
                             n_trn=args.n_trn, tasks=args.task, **common)
    elif args.cmd == "rand-test":
        rows = harness.randomization_test(
            args.dataset, tuple(args.task), args.lambda_grid, args.out, n_trn=args.n_trn,
            n_tst=args.n_tst, master_seed=args.seed, mc_rounds=args.mc_rounds,
            delta=args.delta, data_dir=data_dir)
        _print_rows(rows, harness.RAND_COLUMNS)
        return 0
    else:  # pragma: no cover
        raise AssertionError(args.cmd)
    print(json.dumps(harness.summarize(recs), sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
