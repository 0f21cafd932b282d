"""Sandwich bounds on I(X; Z) from per-point Gaussian conditionals.

For one joint draw z_i ~ p(z | x_i), i = 1..N, the per-point terms are

    upper_i = log p(z_i|x_i) - log( 1/(N-1) sum_{j != i} p(z_i|x_j) )
    lower_i = log p(z_i|x_i) - log( 1/N     sum_j      p(z_i|x_j) )

and each bound is the average over points and Monte-Carlo rounds. Every
denominator is a log-sum-exp over the row sorted ascending, so results do not
depend on the order of the points, and the point averages use ``math.fsum``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._accel import njit, prange, use_numba
from .dynamics import PredictiveGaussian
from .errors import NonPositiveVariance

DEFAULT_ROUNDS = 32
LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class MIEstimate:
    i_ub_nats: float
    i_lb_nats: float
    n: int
    mc_rounds: int
    seed: int
    valid: bool
    mode: str = "sample"
    ub_rounds: np.ndarray = field(default=None, repr=False)
    lb_rounds: np.ndarray = field(default=None, repr=False)

    def stderr(self):
        """Standard errors of the two estimates over rounds (nan for one round)."""
        if self.mc_rounds < 2:
            return math.nan, math.nan
        s = math.sqrt(self.mc_rounds)
        return (float(np.std(self.ub_rounds, ddof=1)) / s, float(np.std(self.lb_rounds, ddof=1)) / s)


def gaussian_logpdf(z, mean, var):
    """Log density of N(mean, var) at z; works elementwise on arrays."""
    var = np.asarray(var, dtype=np.float64)
    if np.any(var <= 0):
        raise NonPositiveVariance("variance must be positive")
    out = -0.5 * (LOG_2PI + np.log(var)) - (np.asarray(z) - mean) ** 2 / (2.0 * var)
    return float(out) if np.ndim(out) == 0 else out


def mi_validity(i_ub_nats: float, n: int) -> bool:
    """An estimate is usable only while the upper bound stays below ln n."""
    if n < 2:
        raise ValueError("need n >= 2")
    return bool(i_ub_nats <= math.log(n))


# -- per-round terms ------------------------------------------------------

@njit(cache=True, parallel=True)
def _terms_nb(z, mu, var):
    N = z.shape[0]
    ub = np.empty(N)
    lb = np.empty(N)
    half_log = 0.5 * (np.log(2.0 * np.pi) + np.log(var))
    inv2 = 0.5 / var
    for i in prange(N):
        buf = np.empty(N - 1)
        k = 0
        zi = z[i]
        for j in range(N):
            if j != i:
                dz = zi - mu[j]
                buf[k] = -half_log[j] - dz * dz * inv2[j]
                k += 1
        buf.sort()
        m = buf[N - 2]
        acc = 0.0
        for k in range(N - 1):
            acc += math.exp(buf[k] - m)
        dz = zi - mu[i]
        lii = -half_log[i] - dz * dz * inv2[i]
        # log-mean-exp with the division inside the log: equal terms give exactly 0
        ub[i] = lii - (m + math.log(acc / (N - 1.0)))
        hi = max(m, lii)
        tot = acc * math.exp(m - hi) + math.exp(lii - hi)
        lb[i] = lii - (hi + math.log(tot / N))
    return ub, lb


def _terms_np(z, mu, var):
    N = z.size
    L = -0.5 * (LOG_2PI + np.log(var))[None, :] - (z[:, None] - mu[None, :]) ** 2 / (2.0 * var)[None, :]
    lii = L.diagonal().copy()
    np.fill_diagonal(L, -np.inf)
    L.sort(axis=1)
    L = L[:, 1:]  # drop the -inf placeholder
    m = L[:, -1]
    acc = np.zeros(N)
    for k in range(N - 1):
        acc += np.exp(L[:, k] - m)
    ub = lii - (m + np.log(acc / (N - 1.0)))
    hi = np.maximum(m, lii)
    tot = acc * np.exp(m - hi) + np.exp(lii - hi)
    lb = lii - (hi + np.log(tot / N))
    return ub, lb


def _round_terms(z, mu, var):
    # numpy's vectorized row sort beats numba's per-row sort, so auto picks numpy
    if use_numba(auto=False):
        return _terms_nb(z, mu, var)
    return _terms_np(z, mu, var)


def _draw_noise(seed, rnd, keys):
    rng = np.random.default_rng([int(seed) & 0xFFFFFFFFFFFFFFFF, rnd])
    return rng.standard_normal(int(keys.max()) + 1)[keys]


def _estimate(pred: PredictiveGaussian, seed: int, S: int, keys=None, mode: str = "sample"):
    mu = np.ascontiguousarray(pred.mean, dtype=np.float64)
    var = np.ascontiguousarray(pred.var, dtype=np.float64)
    N = mu.size
    if N < 2:
        raise ValueError("need at least two points")
    if S < 1:
        raise ValueError("need at least one round")
    if np.any(~(var > 0)):
        raise NonPositiveVariance("conditional variances must be positive")
    if mode not in ("sample", "mean"):
        raise ValueError("mode must be 'sample' or 'mean'")
    keys = np.arange(N) if keys is None else np.asarray(keys, dtype=np.int64)
    if keys.shape != (N,) or np.unique(keys).size != N:
        raise ValueError("keys must be N distinct non-negative integers")
    rounds = 1 if mode == "mean" else S
    sd = np.sqrt(var)
    log_n = math.log(N)
    ubs = np.empty(rounds)
    lbs = np.empty(rounds)
    for r in range(rounds):
        z = mu if mode == "mean" else mu + sd * _draw_noise(seed, r, keys)
        ub, lb = _round_terms(z, mu, var)
        ubs[r] = math.fsum(ub) / N
        # each lower term is <= ln N; clamp the division roundoff of the mean
        lbs[r] = min(math.fsum(lb) / N, log_n)
    return ubs, lbs


def mi_upper(pred: PredictiveGaussian, seed: int = 0, S: int = DEFAULT_ROUNDS, keys=None,
             mode: str = "sample") -> float:
    """Leave-one-out upper bound on I(X; Z), in nats."""
    ubs, _ = _estimate(pred, seed, S, keys, mode)
    return math.fsum(ubs) / ubs.size


def mi_lower(pred: PredictiveGaussian, seed: int = 0, S: int = DEFAULT_ROUNDS, keys=None,
             mode: str = "sample") -> float:
    """Multi-sample lower bound on I(X; Z), in nats; never exceeds ln N."""
    _, lbs = _estimate(pred, seed, S, keys, mode)
    return min(math.fsum(lbs) / lbs.size, math.log(pred.mean.size))


def mi_bounds(pred: PredictiveGaussian, seed: int = 0, S: int = DEFAULT_ROUNDS, keys=None,
              mode: str = "sample") -> MIEstimate:
    """Both bounds from shared draws, with the validity flag."""
    ubs, lbs = _estimate(pred, seed, S, keys, mode)
    n = pred.mean.size
    i_ub = math.fsum(ubs) / ubs.size
    i_lb = min(math.fsum(lbs) / lbs.size, math.log(n))
    return MIEstimate(i_ub_nats=i_ub, i_lb_nats=i_lb, n=n, mc_rounds=ubs.size, seed=int(seed),
                      valid=mi_validity(i_ub, n), mode=mode, ub_rounds=ubs, lb_rounds=lbs)
