"""Accuracies, generalization gaps, attacks and rank correlation."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc

from ._accel import njit, use_numba
from .dynamics import PredictiveGaussian, TrainedEnsemble
from .errors import DegenerateInput, DimMismatch, EmptyInput
from .kernels import NetConfig, input_grad_coeffs

FGSM_EPS = 4.0 / 255.0


@dataclass(frozen=True)
class EvalResult:
    train_acc: float
    test_acc: float
    ge_clean: float
    ge_awgn: float
    ge_fgsm: float
    train_mse: float
    test_mse: float
    ge_mse: float
    test_acc_awgn: float = math.nan
    test_acc_fgsm: float = math.nan


@dataclass(frozen=True)
class RankResult:
    tau: float
    p_value: float
    n_pairs: int


def _sign(v):
    # sign(0) counts as +1
    return np.where(np.asarray(v) >= 0, 1.0, -1.0)


def accuracy(mean, y) -> float:
    """Percentage of points whose predicted sign matches the +-1 label."""
    mean = np.asarray(mean, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if mean.shape != y.shape:
        raise DimMismatch(f"{mean.shape} predictions vs {y.shape} labels")
    if mean.size == 0:
        raise EmptyInput("accuracy of an empty set")
    return 100.0 * float(np.count_nonzero(_sign(mean) == y)) / mean.size


def mse(mean, y) -> float:
    mean = np.asarray(mean, dtype=np.float64)
    if mean.size == 0:
        raise EmptyInput("mse of an empty set")
    return float(np.mean((mean - np.asarray(y, dtype=np.float64)) ** 2))


def evaluate(train: PredictiveGaussian, y_trn, test: PredictiveGaussian, y_tst,
             test_awgn: PredictiveGaussian | None = None,
             test_fgsm: PredictiveGaussian | None = None) -> EvalResult:
    """Gaps are train minus test accuracy (pp) and test minus train MSE."""
    tr = accuracy(train.mean, y_trn)
    te = accuracy(test.mean, y_tst)
    te_awgn = accuracy(test_awgn.mean, y_tst) if test_awgn is not None else math.nan
    te_fgsm = accuracy(test_fgsm.mean, y_tst) if test_fgsm is not None else math.nan
    tr_mse = mse(train.mean, y_trn)
    te_mse = mse(test.mean, y_tst)
    return EvalResult(
        train_acc=tr, test_acc=te, ge_clean=tr - te, ge_awgn=tr - te_awgn, ge_fgsm=tr - te_fgsm,
        train_mse=tr_mse, test_mse=te_mse, ge_mse=te_mse - tr_mse,
        test_acc_awgn=te_awgn, test_acc_fgsm=te_fgsm,
    )


def fgsm_attack(ens: TrainedEnsemble, cfg: NetConfig, X_tst, y_tst, eps: float = FGSM_EPS,
                X_trn=None, coeffs=None, cross=None):
    """One signed-gradient step on the squared error of the ensemble mean.

    ``coeffs`` and ``cross`` from :func:`input_grad_coeffs` may be passed in to
    skip recomputing them; they do not depend on the training time.
    Returns the perturbed inputs clamped to [-1, 1].
    """
    if eps < 0:
        raise ValueError("eps must be non-negative")
    X_tst = np.asarray(X_tst, dtype=np.float64)
    if eps == 0:
        return X_tst.copy()
    X_trn = ens.X_train if X_trn is None else np.asarray(X_trn, dtype=np.float64)
    if X_trn is None:
        raise ValueError("training inputs are required for the attack gradient")
    if coeffs is None or cross is None:
        cross, coeffs = input_grad_coeffs(X_tst, X_trn, cfg)
    mu = cross.Theta_cross @ ens.alpha
    grad_mu = coeffs.grad_weighted_theta(X_tst, X_trn, ens.alpha)
    g = (mu - np.asarray(y_tst, dtype=np.float64))[:, None] * grad_mu
    return np.clip(X_tst + eps * np.sign(g), -1.0, 1.0)


# -- Kendall tau ----------------------------------------------------------

@njit(cache=True)
def _score_nb(a, b):
    """Concordant minus discordant pair count."""
    n = a.shape[0]
    s = 0
    for i in range(n):
        ai = a[i]
        bi = b[i]
        for j in range(i + 1, n):
            da = ai - a[j]
            db = bi - b[j]
            if da != 0.0 and db != 0.0:
                if (da > 0.0) == (db > 0.0):
                    s += 1
                else:
                    s -= 1
    return s


def _score_np(a, b, chunk=512):
    n = a.size
    s = 0
    for lo in range(0, n, chunk):
        hi = min(lo + chunk, n)
        prod = np.sign(a[lo:hi, None] - a[None, :]) * np.sign(b[lo:hi, None] - b[None, :])
        upper = np.arange(lo, hi)[:, None] < np.arange(n)[None, :]
        s += int(np.sum(prod[upper]))
    return s


def _tie_sums(x):
    _, t = np.unique(x, return_counts=True)
    t = t.astype(np.float64)
    return (float(np.sum(t * (t - 1) / 2)), float(np.sum(t * (t - 1) * (t - 2))),
            float(np.sum(t * (t - 1) * (2 * t + 5))))


def kendall_tau(a, b) -> RankResult:
    """Tau-b with a two-sided p-value from the tie-corrected normal approximation."""
    a = np.ascontiguousarray(a, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise DimMismatch("kendall_tau needs two equal-length vectors")
    n = a.size
    if n < 2:
        raise DegenerateInput("need at least two observations")
    if np.all(a == a[0]) or np.all(b == b[0]):
        raise DegenerateInput("constant input; tau is undefined")
    s = _score_nb(a, b) if use_numba() else _score_np(a, b)
    n0 = n * (n - 1) // 2
    xtie, x0, x1 = _tie_sums(a)
    ytie, y0, y1 = _tie_sums(b)
    tau = float(s) / math.sqrt((n0 - xtie) * (n0 - ytie))
    tau = min(1.0, max(-1.0, tau))
    m = n * (n - 1.0)
    var = (m * (2 * n + 5) - x1 - y1) / 18.0 + 2.0 * xtie * ytie / m
    if n > 2:
        var += x0 * y0 / (9.0 * m * (n - 2))
    p = float(erfc(abs(s) / math.sqrt(var) / math.sqrt(2.0))) if var > 0 else 1.0
    return RankResult(tau=tau, p_value=min(1.0, p), n_pairs=n0)


# -- aggregates -----------------------------------------------------------

def satisfaction_rate(records) -> float:
    """Percentage of (ge_pp, icb_fraction) pairs with ge / 100 < icb."""
    records = list(records)
    if not records:
        raise EmptyInput("no records to aggregate")
    hits = sum(1 for ge, bound in records if ge / 100.0 < bound)
    return 100.0 * hits / len(records)
