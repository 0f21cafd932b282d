"""Experiment drivers: single trials, the two sweeps, the randomization test
and the Kendall-tau ranking report.

Every stochastic step takes a seed derived from (master seed, trial index,
purpose) so rows do not depend on execution order or worker count. Sweeps
stream rows to CSV in trial order; wall-clock times go to a sidecar file so
the CSV body is byte-reproducible.
"""
from __future__ import annotations

import csv
import functools
import json
import logging
import math
import multiprocessing
import os
import time
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from itertools import combinations
from pathlib import Path

import numpy as np

from . import datasets as dsets
from .bound import BoundConfig, icb
from .dynamics import fit, predict, predict_train
from .errors import ConfigError, DegenerateInput, ICBError
from .evaluation import FGSM_EPS, evaluate, fgsm_attack, kendall_tau, satisfaction_rate
from .infometrics import DEFAULT_ROUNDS, mi_bounds
from .kernels import NetConfig, cross_gram, gram, input_grad_coeffs

log = logging.getLogger(__name__)

EXP_A_TIMES = (1e2, 1e3, 1e4, 1e5, 1e6)
EXP_A_LAMBDAS = (1.0, 1e-1, 1e-2, 1e-3, 1e-4)
ACTIVATIONS = ("relu", "erf")
DEFAULT_SEEDS = 10
MIN_RANK_N = 10
P_DISCARD = 0.05
HARD_SOURCES = ("svhn", "cifar", "cifar10", "cifar-10")


# -- seeds ----------------------------------------------------------------

def derive_seed(master: int, trial_index: int, purpose: str, *extra: int) -> int:
    """64-bit seed from a counter-based mix of master seed, trial and purpose."""
    tag = zlib.crc32(purpose.encode())
    ss = np.random.SeedSequence(entropy=int(master), spawn_key=(int(trial_index), tag, *extra))
    lo, hi = ss.generate_state(2, dtype=np.uint32)
    return int(lo) | (int(hi) << 32)


# -- data sources ---------------------------------------------------------

@functools.lru_cache(maxsize=4)
def load_source(ref: str, data_dir: str | None = None) -> dsets.RawDataset:
    """Resolve a dataset reference.

    ``mnist``            IDX files under data_dir (or $ICBOUND_DATA_DIR)
    ``idx:DIR``          any MNIST-layout IDX directory
    ``csv:PATH[#COL]``   CSV export with label column COL (default "label")
    ``synthetic[:k=v,...]`` ten tanh-squashed Gaussian classes (d, sep, n, seed)
    ``two-gaussians[:k=v,...]`` two tanh-squashed clusters along e_1 (d, sep, n, seed)
    """
    if ref == "mnist":
        return dsets.load_mnist(data_dir)
    if ref.startswith("idx:"):
        raw = dsets.load_mnist(ref[4:])
        return dsets.RawDataset(raw.inputs, raw.labels, dict(raw.meta, source=Path(ref[4:]).name))
    if ref.startswith("csv:"):
        path, _, col = ref[4:].partition("#")
        return dsets.load_csv(path, col or "label")
    kind = ref.split(":")[0]
    if kind == "synthetic":
        o = _synth_opts(ref, {"d": 32, "sep": 3.0, "n": 2500, "seed": 0})
        return dsets.synth_gaussian_classes(o["d"], o["n"], 10, o["sep"], o["seed"])
    if kind == "two-gaussians":
        o = _synth_opts(ref, {"d": 32, "sep": 3.0, "n": 1500, "seed": 0})
        return dsets.synth_two_gaussians(o["d"], o["n"], o["sep"], o["seed"])
    raise ConfigError(f"unknown dataset reference {ref!r}")


def _synth_opts(ref: str, opts: dict) -> dict:
    if ":" in ref:
        for kv in ref.split(":", 1)[1].split(","):
            k, _, v = kv.partition("=")
            if k not in opts:
                raise ConfigError(f"unknown option {k!r} in {ref!r}")
            try:
                opts[k] = type(opts[k])(v)
            except ValueError:
                raise ConfigError(f"bad value for {k!r} in {ref!r}") from None
    return opts


def default_n_trn_b(ref: str) -> int:
    name = ref.split(":")[0].lower()
    return 2000 if name in HARD_SOURCES or any(h in ref.lower() for h in HARD_SOURCES) else 1000


# -- trial spec and record ------------------------------------------------

@dataclass(frozen=True)
class TrialSpec:
    dataset: str = "synthetic"
    class_a: int = 0
    class_b: int = 1
    depth: int = 2
    activation: str = "relu"
    w_var: float | None = None
    b_var: float = 0.1
    readout_bias: bool = True
    lam: float = 0.1
    eta: float = 1.0
    times: tuple = (math.inf,)
    n_trn: int = 1000
    n_tst: int = 2000
    master_seed: int = 0
    trial_index: int = 0
    experiment: str = "trial"
    label_mode: str = "natural"
    delta: float = 0.05
    mc_rounds: int = DEFAULT_ROUNDS
    awgn_var: float | None = None
    fgsm_eps: float = FGSM_EPS
    data_dir: str | None = None

    def __post_init__(self):
        if self.label_mode not in ("natural", "random"):
            raise ConfigError("label_mode must be natural or random")
        object.__setattr__(self, "times", tuple(float(t) for t in self.times))
        if not self.times:
            raise ConfigError("need at least one time point")

    def net(self, time_t: float) -> NetConfig:
        return NetConfig(depth=self.depth, activation=self.activation, w_var=self.w_var,
                         b_var=self.b_var, lam=self.lam, eta=self.eta, time_t=time_t,
                         readout_bias=self.readout_bias)

    @classmethod
    def from_json(cls, text: str) -> "TrialSpec":
        raw = json.loads(text)
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(raw) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        if "times" in raw:
            raw["times"] = tuple(math.inf if t in ("inf", None) else float(t) for t in raw["times"])
        return cls(**raw)


CSV_COLUMNS = (
    "experiment", "trial_index", "dataset", "class_a", "class_b", "label_mode",
    "depth", "activation", "w_var", "b_var", "readout_bias", "lam", "eta", "time_t",
    "n_trn", "n_tst", "master_seed", "task_seed", "mc_rounds", "delta", "awgn_var", "fgsm_eps",
    "train_acc", "test_acc", "test_acc_awgn", "test_acc_fgsm",
    "ge_clean", "ge_awgn", "ge_fgsm", "train_mse", "test_mse", "ge_mse",
    "i_lb_nats", "i_ub_nats", "valid", "icb_lb", "icb_ub", "reg_add", "var_floor", "error",
)


@dataclass
class TrialRecord:
    experiment: str
    trial_index: int
    dataset: str
    class_a: int
    class_b: int
    label_mode: str
    depth: int
    activation: str
    w_var: float
    b_var: float
    readout_bias: bool
    lam: float
    eta: float
    time_t: float
    n_trn: int
    n_tst: int
    master_seed: int
    task_seed: int
    mc_rounds: int
    delta: float
    awgn_var: float
    fgsm_eps: float
    train_acc: float = math.nan
    test_acc: float = math.nan
    test_acc_awgn: float = math.nan
    test_acc_fgsm: float = math.nan
    ge_clean: float = math.nan
    ge_awgn: float = math.nan
    ge_fgsm: float = math.nan
    train_mse: float = math.nan
    test_mse: float = math.nan
    ge_mse: float = math.nan
    i_lb_nats: float = math.nan
    i_ub_nats: float = math.nan
    valid: bool = False
    icb_lb: float = math.nan
    icb_ub: float = math.nan
    reg_add: float = math.nan
    var_floor: float = math.nan
    error: str = ""
    wall_time_s: float = field(default=0.0, compare=False)

    def csv_row(self) -> list[str]:
        return [_fmt(getattr(self, c)) for c in CSV_COLUMNS]


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return repr(v)
    return str(v)


# -- single trial ---------------------------------------------------------

def _base_record(spec: TrialSpec, time_t: float, task_seed: int, awgn_var: float) -> TrialRecord:
    net = spec.net(time_t)
    return TrialRecord(
        experiment=spec.experiment, trial_index=spec.trial_index, dataset=spec.dataset,
        class_a=spec.class_a, class_b=spec.class_b, label_mode=spec.label_mode,
        depth=spec.depth, activation=spec.activation, w_var=float(net.w_var),
        b_var=float(spec.b_var), readout_bias=spec.readout_bias, lam=float(spec.lam),
        eta=float(spec.eta), time_t=float(time_t), n_trn=spec.n_trn, n_tst=spec.n_tst,
        master_seed=spec.master_seed, task_seed=task_seed, mc_rounds=spec.mc_rounds,
        delta=float(spec.delta), awgn_var=float(awgn_var), fgsm_eps=float(spec.fgsm_eps),
    )


def run_trial(spec: TrialSpec, raw: dsets.RawDataset | None = None) -> list[TrialRecord]:
    """One (dataset, net) pair evaluated at every requested time point.

    Module errors become records with the ``error`` column set; the function
    itself only raises on programming errors.
    """
    t_start = time.perf_counter()
    m, k = spec.master_seed, spec.trial_index
    task_seed = derive_seed(m, k, "task")
    awgn_var = math.nan if spec.awgn_var is None else spec.awgn_var
    try:
        raw = raw if raw is not None else load_source(spec.dataset, spec.data_dir)
        ds = dsets.make_binary_task(raw, spec.class_a, spec.class_b, spec.n_trn, spec.n_tst, task_seed)
        if spec.label_mode == "random":
            ds = dsets.randomize_labels(ds, derive_seed(m, k, "labels"))
        if spec.awgn_var is None:
            awgn_var = dsets.default_awgn_var(ds.meta.get("image_shape"))
        X_awgn = dsets.awgn_perturb(ds.X_tst, awgn_var, derive_seed(m, k, "awgn"))
        net0 = spec.net(spec.times[0])
        g = gram(ds.X_trn, net0)
        cross, coeffs = input_grad_coeffs(ds.X_tst, ds.X_trn, net0)
        cross_awgn = cross_gram(X_awgn, ds.X_trn, net0)
    except (ICBError, ValueError, FloatingPointError, np.linalg.LinAlgError) as exc:
        return [_failed(spec, t, task_seed, awgn_var, exc, t_start) for t in spec.times]

    bcfg = BoundConfig(spec.delta)
    records = []
    for ti, t in enumerate(spec.times):
        t0 = time.perf_counter()
        rec = _base_record(spec, t, task_seed, awgn_var)
        try:
            net = spec.net(t)
            ens = fit(g, ds.y_trn, net, X=ds.X_trn)
            p_trn = predict_train(ens, g)
            p_tst = predict(ens, cross)
            p_awgn = predict(ens, cross_awgn)
            if spec.fgsm_eps > 0:
                X_adv = fgsm_attack(ens, net, ds.X_tst, ds.y_tst, spec.fgsm_eps,
                                    ds.X_trn, coeffs=coeffs, cross=cross)
                p_fgsm = predict(ens, cross_gram(X_adv, ds.X_trn, net))
            else:
                p_fgsm = p_tst
            ev = evaluate(p_trn, ds.y_trn, p_tst, ds.y_tst, p_awgn, p_fgsm)
            mi = mi_bounds(p_trn, seed=derive_seed(m, k, "mi", ti), S=spec.mc_rounds)
            for name in ("train_acc", "test_acc", "test_acc_awgn", "test_acc_fgsm", "ge_clean",
                         "ge_awgn", "ge_fgsm", "train_mse", "test_mse", "ge_mse"):
                setattr(rec, name, float(getattr(ev, name)))
            rec.i_lb_nats = float(mi.i_lb_nats)
            rec.i_ub_nats = float(mi.i_ub_nats)
            rec.valid = bool(mi.valid)
            rec.icb_lb = icb(mi.i_lb_nats, ds.n_trn, bcfg)
            rec.icb_ub = icb(mi.i_ub_nats, ds.n_trn, bcfg)
            rec.reg_add = float(ens.reg_add)
            rec.var_floor = float(ens.var_floor)
        except (ICBError, ValueError, FloatingPointError, np.linalg.LinAlgError) as exc:
            rec = _failed(spec, t, task_seed, awgn_var, exc, t0)
        rec.wall_time_s = time.perf_counter() - (t_start if ti == 0 else t0)
        records.append(rec)
    return records


def _failed(spec, t, task_seed, awgn_var, exc, t0) -> TrialRecord:
    rec = _base_record(spec, t, task_seed, awgn_var)
    rec.error = getattr(exc, "code", type(exc).__name__)
    rec.wall_time_s = time.perf_counter() - t0
    log.warning("trial %d (t=%g) failed: %s", spec.trial_index, t, exc)
    return rec


# -- sweeps ---------------------------------------------------------------

def exp_a_specs(dataset: str, n_seeds: int, master_seed: int = 0, lambdas=EXP_A_LAMBDAS,
                **overrides) -> list[TrialSpec]:
    """Nine "i vs i+1" tasks x n_seeds metaparameter draws, five time points each."""
    lambdas = tuple(float(v) for v in lambdas)
    if not lambdas:
        raise ConfigError("lambda set must be non-empty")
    specs = []
    for task_i in range(9):
        for s in range(n_seeds):
            k = task_i * n_seeds + s
            rng = np.random.default_rng(derive_seed(master_seed, k, "meta"))
            specs.append(TrialSpec(**{
                "dataset": dataset, "class_a": task_i, "class_b": task_i + 1,
                "depth": int(rng.integers(1, 6)),
                "lam": lambdas[rng.integers(len(lambdas))],
                "activation": ACTIVATIONS[rng.integers(2)],
                "n_trn": int(rng.integers(250, 2001)),
                "n_tst": 2000, "times": EXP_A_TIMES, "master_seed": master_seed,
                "trial_index": k, "experiment": "A", **overrides,
            }))
    return specs


def exp_b_specs(dataset: str, n_seeds: int, master_seed: int = 0, n_trn: int | None = None,
                tasks=None, **overrides) -> list[TrialSpec]:
    """All 45 class pairs (or ``tasks``) x n_seeds draws, evaluated at t = inf."""
    n_trn = default_n_trn_b(dataset) if n_trn is None else n_trn
    tasks = list(combinations(range(10), 2)) if tasks is None else [tuple(t) for t in tasks]
    specs = []
    for ti, (a, b) in enumerate(tasks):
        for s in range(n_seeds):
            k = ti * n_seeds + s
            rng = np.random.default_rng(derive_seed(master_seed, k, "meta"))
            specs.append(TrialSpec(**{
                "dataset": dataset, "class_a": a, "class_b": b,
                "depth": int(rng.integers(1, 6)),
                "lam": float(rng.uniform(0.0, 2.0)),
                "activation": ACTIVATIONS[rng.integers(2)],
                "n_trn": n_trn, "n_tst": 2000, "times": (math.inf,),
                "master_seed": master_seed, "trial_index": k, "experiment": "B", **overrides,
            }))
    return specs


def _run_spec(spec: TrialSpec) -> list[TrialRecord]:
    return run_trial(spec)


def run_specs(specs, out_path=None, workers: int = 1) -> list[TrialRecord]:
    """Run trials with a bounded pool and stream rows in trial order."""
    out_path = Path(out_path) if out_path else None
    records: list[TrialRecord] = []
    fh = timing = writer = None
    if out_path:
        out_path.parent.mkdir(parents=True, exist_ok=True)
        fh = open(out_path, "w", newline="")
        timing = open(str(out_path) + ".timing.csv", "w", newline="")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        tw = csv.writer(timing, lineterminator="\n")
        tw.writerow(["trial_index", "time_t", "wall_time_s"])
    try:
        if workers > 1:
            # spawn: forking after numba's OpenMP runtime has started is unsafe
            pool = ProcessPoolExecutor(max_workers=workers,
                                       mp_context=multiprocessing.get_context("spawn"))
            results = pool.map(_run_spec, specs)
        else:
            pool = None
            results = map(_run_spec, specs)
        for recs in results:
            for rec in recs:
                records.append(rec)
                if writer:
                    writer.writerow(rec.csv_row())
                    tw.writerow([rec.trial_index, _fmt(rec.time_t), f"{rec.wall_time_s:.3f}"])
            if fh:
                fh.flush()
                timing.flush()
        if pool:
            pool.shutdown()
    finally:
        if fh:
            fh.close()
            timing.close()
    if out_path:
        write_summary(records, str(out_path) + ".summary.json")
    return records


def summarize(records) -> dict:
    ok = [r for r in records if not r.error]
    valid = [r for r in ok if r.valid]
    out = {"rows": len(records), "failed": len(records) - len(ok), "valid": len(valid)}
    if valid:
        out["satisfaction_ub_pct"] = satisfaction_rate((r.ge_clean, r.icb_ub) for r in valid)
        out["satisfaction_lb_pct"] = satisfaction_rate((r.ge_clean, r.icb_lb) for r in valid)
        out["satisfaction_mse_pct"] = satisfaction_rate((100.0 * r.ge_mse, r.icb_ub) for r in valid)
        over = [r for r in valid if r.train_acc == 100.0]
        out["overfitted"] = len(over)
        if over:
            out["satisfaction_overfitted_pct"] = satisfaction_rate((r.ge_clean, r.icb_ub) for r in over)
    return out


def write_summary(records, path) -> dict:
    summary = summarize(records)
    with open(path, "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return summary


def exp_a(dataset: str, n_seeds: int = DEFAULT_SEEDS, out_path=None, master_seed: int = 0,
          workers: int = 1, lambdas=EXP_A_LAMBDAS, **overrides) -> list[TrialRecord]:
    specs = exp_a_specs(dataset, n_seeds, master_seed, lambdas=lambdas, **overrides)
    return run_specs(specs, out_path, workers)


def exp_b(dataset: str, n_seeds: int = DEFAULT_SEEDS, out_path=None, master_seed: int = 0,
          workers: int = 1, n_trn: int | None = None, tasks=None, **overrides) -> list[TrialRecord]:
    specs = exp_b_specs(dataset, n_seeds, master_seed, n_trn=n_trn, tasks=tasks, **overrides)
    return run_specs(specs, out_path, workers)


def best_model(records, top: int = 3):
    """Smallest-ICB model among the ``top`` most test-accurate valid rows."""
    valid = [r for r in records if r.valid and not r.error]
    if not valid:
        return None
    ranked = sorted(valid, key=lambda r: (-r.test_acc, r.trial_index, r.time_t))[:top]
    return min(ranked, key=lambda r: (r.icb_ub, r.trial_index))


# -- randomization test ---------------------------------------------------

RAND_COLUMNS = ("labels", "lam", "i_lb_nats", "i_ub_nats", "icb_lb", "icb_ub",
                "train_acc", "test_acc", "ge_clean", "valid")


def randomization_test(dataset: str, task=(0, 1), lambdas=(1e-1, 1e-2, 1e-3), out_path=None,
                       n_trn: int = 1000, n_tst: int = 2000, master_seed: int = 0,
                       depth: int = 2, activation: str = "relu", mc_rounds: int = DEFAULT_ROUNDS,
                       delta: float = 0.05, data_dir=None) -> list[dict]:
    """Natural vs i.i.d. random training labels on one task, t = inf.

    Both label types share the task draw (same inputs); rows are emitted for
    every lambda, natural block first.
    """
    if not lambdas:
        raise ConfigError("lambdas must be non-empty")
    raw = load_source(dataset, data_dir)
    rows = []
    for mode in ("natural", "random"):
        for li, lam in enumerate(lambdas):
            spec = TrialSpec(dataset=dataset, class_a=task[0], class_b=task[1], depth=depth,
                             activation=activation, lam=float(lam), times=(math.inf,),
                             n_trn=n_trn, n_tst=n_tst, master_seed=master_seed, trial_index=0,
                             experiment="rand", label_mode=mode, mc_rounds=mc_rounds,
                             delta=delta, fgsm_eps=0.0, awgn_var=0.0, data_dir=data_dir)
            (rec,) = run_trial(spec, raw)
            rows.append({"labels": mode, "lam": float(lam), "i_lb_nats": rec.i_lb_nats,
                         "i_ub_nats": rec.i_ub_nats, "icb_lb": rec.icb_lb, "icb_ub": rec.icb_ub,
                         "train_acc": rec.train_acc, "test_acc": rec.test_acc,
                         "ge_clean": rec.ge_clean, "valid": rec.valid, "error": rec.error})
    if out_path:
        with open(out_path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(RAND_COLUMNS)
            for r in rows:
                w.writerow([_fmt(r[c]) for c in RAND_COLUMNS])
    return rows


def matched_lambda(rows) -> float | None:
    """Largest lambda at which both label types reach 100% train accuracy."""
    by = {}
    for r in rows:
        by.setdefault(r["lam"], {})[r["labels"]] = r
    both = [lam for lam, d in by.items()
            if len(d) == 2 and all(x["train_acc"] == 100.0 for x in d.values())]
    return max(both) if both else None


# -- ranking --------------------------------------------------------------

GE_KINDS = ("ge_clean", "ge_awgn", "ge_fgsm")
RANK_COLUMNS = ("group", "n_valid", "icb_sat_pct",
                "base_tau_clean", "base_tau_awgn", "base_tau_fgsm",
                "icb_tau_clean", "icb_tau_awgn", "icb_tau_fgsm")


def read_records(path) -> list[dict]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    out = []
    for r in rows:
        d = {}
        for k, v in r.items():
            if k in ("experiment", "dataset", "label_mode", "activation", "error"):
                d[k] = v
            elif k == "valid" or k == "readout_bias":
                d[k] = v == "1"
            else:
                d[k] = float(v)
        out.append(d)
    return out


def _tau_or_none(a, b):
    if len(a) < MIN_RANK_N:
        return None
    try:
        res = kendall_tau(a, b)
    except DegenerateInput:
        return None
    if res.p_value > P_DISCARD or math.isnan(res.tau):
        return None
    return res.tau


def _group_row(name, recs, bound="icb_ub"):
    row = {"group": name, "n_valid": len(recs)}
    row["icb_sat_pct"] = satisfaction_rate((r["ge_clean"], r[bound]) for r in recs) if recs else None
    for kind in GE_KINDS:
        suffix = kind.split("_")[1]
        ge = [r[kind] for r in recs]
        row[f"base_tau_{suffix}"] = _tau_or_none([r["train_acc"] for r in recs], ge)
        row[f"icb_tau_{suffix}"] = _tau_or_none([r[bound] for r in recs], ge)
    return row


def rank(records, group_by: str = "task", out_path=None, overfitted: bool = False,
         bound: str = "icb_ub") -> list[dict]:
    """Per-group Kendall tau of ICB and the train-accuracy baseline against each GE type.

    Only valid, error-free rows are used. Entries with p > 0.05, fewer than
    ten rows, or constant inputs are left empty. Two aggregate rows follow the
    groups: "Row average" (mean of the kept per-group values) and "Overall"
    (tau over all rows pooled).
    """
    if isinstance(records, (str, os.PathLike)):
        records = read_records(records)
    recs = [r for r in records if r["valid"] and not r["error"]]
    if overfitted:
        recs = [r for r in recs if r["train_acc"] == 100.0]

    def key(r):
        if group_by == "task":
            return f"{int(r['class_a'])}/{int(r['class_b'])}"
        if group_by in ("", "none"):
            return "all"
        v = r[group_by]
        return f"{v:g}" if isinstance(v, float) else str(v)

    groups: dict[str, list] = {}
    for r in recs:
        groups.setdefault(key(r), []).append(r)
    rows = [_group_row(name, groups[name], bound) for name in sorted(groups, key=_natural_key)]
    avg = {"group": "Row average", "n_valid": len(recs)}
    avg["icb_sat_pct"] = _mean([r["icb_sat_pct"] for r in rows])
    for c in RANK_COLUMNS[3:]:
        avg[c] = _mean([r[c] for r in rows])
    rows.append(avg)
    rows.append(dict(_group_row("Overall", recs, bound)))
    if out_path:
        with open(out_path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(RANK_COLUMNS)
            for r in rows:
                w.writerow(["" if r[c] is None else _fmt(r[c]) for c in RANK_COLUMNS])
    return rows


def _mean(vals):
    vals = [v for v in vals if v is not None]
    return sum(vals) / len(vals) if vals else None


def _natural_key(s):
    parts = s.split("/")
    try:
        return (0, tuple(float(p) for p in parts))
    except ValueError:
        return (1, (s,))
