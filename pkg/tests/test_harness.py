import csv
import json
import math

import numpy as np
import pytest

from icbound import harness as H
from icbound.bound import BoundConfig, icb
from icbound.datasets import synth_two_gaussians
from icbound.errors import ConfigError

SMALL = dict(n_trn=40, n_tst=40, mc_rounds=2)


def body(path):
    return open(path, "rb").read()


def test_derive_seed():
    a = H.derive_seed(0, 3, "task")
    assert a == H.derive_seed(0, 3, "task")
    assert len({a, H.derive_seed(0, 4, "task"), H.derive_seed(0, 3, "awgn"),
                H.derive_seed(1, 3, "task"), H.derive_seed(0, 3, "mi", 1)}) == 5
    assert 0 <= a < 2 ** 64


def test_exp_a_sampling_ranges():
    specs = H.exp_a_specs("synthetic", 40)
    assert len(specs) == 360
    assert [(s.class_a, s.class_b) for s in specs[::40]] == [(i, i + 1) for i in range(9)]
    assert {s.depth for s in specs} == {1, 2, 3, 4, 5}
    assert {s.lam for s in specs} == set(H.EXP_A_LAMBDAS)
    assert {s.activation for s in specs} == {"relu", "erf"}
    n = [s.n_trn for s in specs]
    assert min(n) >= 250 and max(n) <= 2000
    assert all(s.times == H.EXP_A_TIMES and s.n_tst == 2000 for s in specs)
    assert [s.trial_index for s in specs] == list(range(360))


def test_exp_b_sampling_ranges():
    specs = H.exp_b_specs("mnist", 3)
    assert len(specs) == 135 and len({(s.class_a, s.class_b) for s in specs}) == 45
    lam = [s.lam for s in specs]
    assert min(lam) >= 0 and max(lam) <= 2 and len(set(lam)) == len(lam)
    assert all(s.times == (math.inf,) and s.n_trn == 1000 for s in specs)
    assert H.exp_b_specs("idx:/data/svhn", 1)[0].n_trn == 2000
    assert H.exp_b_specs("mnist", 1, n_trn=500)[0].n_trn == 500


def test_exp_a_row_count_and_footer(tmp_path):
    out = tmp_path / "a.csv"
    recs = H.exp_a("synthetic", 2, out, **SMALL)
    assert len(recs) == 9 * 2 * 5
    rows = list(csv.reader(open(out)))
    assert tuple(rows[0]) == H.CSV_COLUMNS and len(rows) == 91
    summary = json.load(open(str(out) + ".summary.json"))
    assert summary["rows"] == 90 and summary["failed"] == 0
    timing = list(csv.reader(open(str(out) + ".timing.csv")))
    assert len(timing) == 91 and timing[0] == ["trial_index", "time_t", "wall_time_s"]


def test_exp_b_row_count(tmp_path):
    recs = H.exp_b("synthetic", 1, tmp_path / "b.csv", **SMALL)
    assert len(recs) == 45
    assert all(r.time_t == math.inf for r in recs)


def test_determinism_across_workers(tmp_path):
    kw = dict(tasks=[(0, 1), (2, 3)], **SMALL)
    H.exp_b("synthetic", 2, tmp_path / "1.csv", master_seed=9, **kw)
    H.exp_b("synthetic", 2, tmp_path / "2.csv", master_seed=9, **kw)
    H.exp_b("synthetic", 2, tmp_path / "3.csv", master_seed=9, workers=2, **kw)
    assert body(tmp_path / "1.csv") == body(tmp_path / "2.csv") == body(tmp_path / "3.csv")
    H.exp_b("synthetic", 2, tmp_path / "4.csv", master_seed=10, **kw)
    assert body(tmp_path / "1.csv") != body(tmp_path / "4.csv")


def test_failure_rows_do_not_abort(tmp_path):
    good = H.TrialSpec(**SMALL)
    bad = H.TrialSpec(class_a=0, class_b=1, n_trn=10_000, n_tst=10, trial_index=1,
                      times=(1.0, math.inf))
    recs = H.run_specs([good, bad], tmp_path / "f.csv")
    assert [r.error for r in recs] == ["", "insufficient_samples", "insufficient_samples"]
    assert math.isnan(recs[1].test_acc)
    s = H.summarize(recs)
    assert s["failed"] == 2 and s["rows"] == 3


def test_separation_zero_symmetry():
    raw = synth_two_gaussians(4, 2500, 0.0, 0)
    (r,) = H.run_trial(H.TrialSpec(lam=1.0, n_trn=500, n_tst=2000, mc_rounds=2), raw)
    assert not r.error
    assert abs(r.test_acc - 50.0) <= 3.5  # 3 sigma binomial at n_tst = 2000


def test_icb_columns_consistent(tmp_path):
    recs = H.run_trial(H.TrialSpec(times=(10.0, math.inf), **SMALL))
    for r in recs:
        assert r.icb_ub == icb(r.i_ub_nats, r.n_trn, BoundConfig(r.delta))
        assert r.icb_lb == icb(r.i_lb_nats, r.n_trn, BoundConfig(r.delta))
        assert r.valid == (r.i_ub_nats <= math.log(r.n_trn))


def test_validity_toggle_changes_aggregates():
    recs = H.run_trial(H.TrialSpec(times=(1.0, 10.0, math.inf), **SMALL))
    for r in recs:
        r.valid, r.ge_clean, r.icb_ub = True, 0.0, 0.5
    recs[0].ge_clean = 90.0
    assert H.summarize(recs)["satisfaction_ub_pct"] == pytest.approx(200 / 3)
    recs[0].valid = False
    s = H.summarize(recs)
    assert s["valid"] == 2 and s["satisfaction_ub_pct"] == 100.0


def test_randomization_test_rows(tmp_path):
    out = tmp_path / "r.csv"
    rows = H.randomization_test("synthetic:d=16,n=600", (0, 1), (1e-1, 1e-3), out,
                                n_trn=200, n_tst=400, mc_rounds=2)
    assert [r["labels"] for r in rows] == ["natural"] * 2 + ["random"] * 2
    for r in rows:
        assert r["icb_ub"] == icb(r["i_ub_nats"], 200)
        assert r["ge_clean"] == r["train_acc"] - r["test_acc"]
    assert len(list(csv.reader(open(out)))) == 5
    with pytest.raises(ConfigError):
        H.randomization_test("synthetic", (0, 1), ())


def test_matched_lambda():
    rows = [dict(labels=l, lam=lam, train_acc=acc) for l, lam, acc in [
        ("natural", 0.1, 100.0), ("random", 0.1, 90.0),
        ("natural", 0.01, 100.0), ("random", 0.01, 100.0),
        ("natural", 0.001, 100.0), ("random", 0.001, 100.0)]]
    assert H.matched_lambda(rows) == 0.01
    assert H.matched_lambda(rows[:2]) is None


def _rec(i, ge, bound, task=(0, 1), valid=True, train=100.0):
    return dict(class_a=task[0], class_b=task[1], ge_clean=ge, ge_awgn=ge + 1.0, ge_fgsm=2 * ge,
                icb_ub=bound, icb_lb=bound / 2, train_acc=train - i * 0.01, valid=valid, error="",
                lam=0.1)


def test_rank_monotone_and_degenerate():
    mono = [_rec(i, float(i), 0.01 * i + 0.05) for i in range(12)]
    const = [_rec(i, float(i), 0.2, task=(1, 2)) for i in range(12)]
    rows = H.rank(mono + const)
    by = {r["group"]: r for r in rows}
    assert by["0/1"]["icb_tau_clean"] == 1.0 and by["0/1"]["icb_tau_fgsm"] == 1.0
    assert by["1/2"]["icb_tau_clean"] is None
    assert by["0/1"]["base_tau_clean"] == -1.0
    assert [r["group"] for r in rows][-2:] == ["Row average", "Overall"]
    assert by["Row average"]["icb_tau_clean"] == 1.0


def test_rank_lambda_sweep_positive():
    # GE falls as lambda grows while the bound also falls: positive association
    recs = []
    for i, lam in enumerate(np.geomspace(1e-4, 1, 15)):
        ge = 10.0 / (1 + 10 * lam) + 0.1 * math.sin(i)
        recs.append(dict(_rec(i, ge, 0.5 - 0.1 * math.log10(lam) / 4), lam=lam))
    rows = H.rank(recs, group_by="none")
    assert rows[0]["icb_tau_clean"] > 0


def test_rank_filters_invalid_small_and_overfitted(tmp_path):
    recs = [_rec(i, float(i), 0.01 * i + 0.05) for i in range(12)]
    recs[3]["valid"] = False
    for r in recs:
        r["train_acc"] = 100.0
    rows = H.rank(recs)
    assert rows[0]["n_valid"] == 11
    few = H.rank(recs[:6])
    assert few[0]["icb_tau_clean"] is None
    for r in recs[:4]:
        r["train_acc"] = 99.0
    assert H.rank(recs, overfitted=True)[0]["n_valid"] == 8


def test_rank_from_csv(tmp_path):
    out = tmp_path / "b.csv"
    H.exp_b("synthetic", 12, out, tasks=[(0, 1)], **SMALL)
    rep = tmp_path / "rank.csv"
    rows = H.rank(str(out), out_path=rep)
    assert rows[-1]["group"] == "Overall"
    assert list(csv.reader(open(rep)))[0] == list(H.RANK_COLUMNS)


def test_trialspec_json():
    s = H.TrialSpec.from_json('{"dataset": "synthetic", "times": [100, "inf"], "lam": 0.5}')
    assert s.times == (100.0, math.inf) and s.lam == 0.5
    with pytest.raises(ConfigError):
        H.TrialSpec.from_json('{"lam": 0.5, "depht": 3}')
    with pytest.raises(ConfigError):
        H.TrialSpec(label_mode="shuffled")


def test_load_source_refs(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("a,b,y\n0,1,0\n1,0,1\n")
    raw = H.load_source(f"csv:{p}#y")
    assert raw.n == 2
    assert H.load_source("synthetic:d=12,n=20").d == 12
    two = H.load_source("two-gaussians:d=5,sep=6,n=40")
    assert (two.n, two.d, two.n_classes) == (80, 5, 2)
    with pytest.raises(ConfigError):
        H.load_source("synthetic:depth=3")
    with pytest.raises(ConfigError):
        H.load_source("two-gaussians:sep=wide")
    with pytest.raises(ConfigError):
        H.load_source("imagenet")


def test_mnist_example_trial(mnist_dir):
    spec = H.TrialSpec(dataset="mnist", n_trn=1000, n_tst=2000, lam=0.1, depth=2,
                       activation="relu", data_dir=mnist_dir)
    (r,) = H.run_trial(spec)
    assert not r.error and r.valid
    assert r.ge_clean / 100 < r.icb_ub
