"""Time the numba and pure-numpy backends on the hot kernels.

    python benchmarks/bench_backends.py [--n 1000] [--repeat 3]

Each timing is the best of ``--repeat`` runs after one warm-up call, which
also absorbs numba compilation. Results from both backends are compared so a
speedup never hides a disagreement.
"""
import argparse
import os
import time

import numpy as np

from icbound.dynamics import PredictiveGaussian
from icbound.evaluation import kendall_tau
from icbound.infometrics import mi_bounds
from icbound.kernels import NetConfig, gram, input_grad_coeffs


def _best(fn, repeat):
    out = fn()
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=1000, help="training points")
    ap.add_argument("--d", type=int, default=784, help="input dimension")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    r = np.random.default_rng(0)
    X = r.uniform(-1, 1, (args.n, args.d))
    Xq = r.uniform(-1, 1, (args.n // 2, args.d))
    pred = PredictiveGaussian(r.normal(0, 1, args.n), r.uniform(0.1, 1, args.n))
    a, b = r.normal(size=2000), r.normal(size=2000)
    cfg = NetConfig(depth=3, activation="relu")
    cases = {
        "gram (relu, L=3)": lambda: gram(X, cfg).Theta,
        "gram (erf, L=3)": lambda: gram(X, cfg.with_(activation="erf")).Theta,
        "input-grad coeffs": lambda: input_grad_coeffs(Xq, X, cfg)[0].Theta_cross,
        "MI bounds (S=8)": lambda: np.array([mi_bounds(pred, seed=1, S=8).i_ub_nats]),
        "Kendall tau (n=2000)": lambda: np.array([kendall_tau(a, b).tau]),
    }

    saved = os.environ.get("ICBOUND_BACKEND")
    print(f"{'case':<24}{'numpy s':>10}{'numba s':>10}{'speedup':>9}{'max diff':>11}")
    try:
        for name, fn in cases.items():
            res = {}
            for be in ("numpy", "numba"):
                os.environ["ICBOUND_BACKEND"] = be
                res[be] = _best(fn, args.repeat)
            (tn, on), (tb, ob) = res["numpy"], res["numba"]
            diff = float(np.max(np.abs(np.asarray(on) - np.asarray(ob))))
            print(f"{name:<24}{tn:>10.3f}{tb:>10.3f}{tn / tb:>8.1f}x{diff:>11.1e}")
    finally:
        if saved is None:
            os.environ.pop("ICBOUND_BACKEND", None)
        else:
            os.environ["ICBOUND_BACKEND"] = saved


if __name__ == "__main__":
    main()
