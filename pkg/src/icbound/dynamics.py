"""Gradient-flow dynamics of the infinite ensemble on the MSE loss.

After training time t with learning rate eta, the ensemble output at x is
Gaussian with

    mean(x) = Theta(x, X) T_t y
    var(x)  = K(x, x) + Theta(x, X) T_t K T_t Theta(X, x) - 2 Theta(x, X) T_t K(X, x)

where ``T_t = Theta*^-1 (I - exp(-eta Theta* t))`` and ``Theta*`` is the
regularized train NTK ``Theta + lam * (tr Theta / N) I``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import DimMismatch, EigFailure, NonPositiveVariance, SingularKernel
from .kernels import CrossGram, GramPair, NetConfig

JITTER_REL = 1e-10
JITTER_TRIES = 3
RECON_TOL = 1e-8
VAR_FLOOR_REL = 1e-12
NEG_VAR_TOL = 1e-8


@dataclass(frozen=True)
class TrainedEnsemble:
    eigvals: np.ndarray
    eigvecs: np.ndarray
    y: np.ndarray
    Tt: np.ndarray
    alpha: np.ndarray
    cfg: NetConfig
    reg_add: float
    var_floor: float
    K_train: np.ndarray
    X_train: np.ndarray | None = None

    @property
    def n(self) -> int:
        return self.y.size


@dataclass(frozen=True)
class PredictiveGaussian:
    mean: np.ndarray
    var: np.ndarray

    def __post_init__(self):
        if self.mean.shape != self.var.shape:
            raise DimMismatch("mean and var lengths differ")


def _spectral_filter(e: np.ndarray, eta: float, t: float) -> np.ndarray:
    """(1 - exp(-eta e t)) / e, with the e -> 0 limit eta t."""
    if math.isinf(t):
        with np.errstate(divide="ignore"):
            return 1.0 / e
    x = eta * t * e
    out = np.empty_like(e)
    small = np.abs(x) < 1e-300
    out[small] = eta * t
    big = ~small
    out[big] = -np.expm1(-x[big]) / e[big]
    return out


def _eigh(A: np.ndarray, scale: float):
    """Eigendecomposition with reconstruction check and bounded jitter retries."""
    added = 0.0
    ref = np.abs(A).max()
    for attempt in range(JITTER_TRIES + 1):
        B = A + added * np.eye(A.shape[0]) if added else A
        try:
            e, V = np.linalg.eigh(B)
        except np.linalg.LinAlgError as exc:
            e = None
            err = exc
        if e is not None:
            recon = np.abs((V * e) @ V.T - B).max()
            if recon <= RECON_TOL * ref and e.min() >= -RECON_TOL * max(ref, abs(e).max()):
                return np.maximum(e, 0.0), V, added
            err = f"reconstruction error {recon:.3g}, min eigenvalue {e.min():.3g}"
        added += JITTER_REL * scale
    raise EigFailure(f"eigendecomposition failed after {JITTER_TRIES} jitter increments: {err}")


def fit(gram: GramPair, y, cfg: NetConfig, X=None) -> TrainedEnsemble:
    """Solve the linearized training dynamics on the training Gram matrices.

    ``X`` (the training inputs) is only kept for input-gradient attacks.
    """
    y = np.asarray(y, dtype=np.float64)
    Theta = gram.Theta
    N = Theta.shape[0]
    if Theta.shape != (N, N) or y.shape != (N,):
        raise DimMismatch(f"Theta {Theta.shape} vs {y.shape[0]} labels")
    scale = float(np.trace(Theta)) / N
    reg = cfg.lam * scale
    e, V, jitter = _eigh(Theta + reg * np.eye(N), scale)
    reg += jitter
    if math.isinf(cfg.time_t) and e.min() <= JITTER_REL * scale * 1e-4:
        raise SingularKernel("regularized NTK is singular; the t = inf solution does not exist")
    filt = _spectral_filter(e, cfg.eta, cfg.time_t)
    Tt = (V * filt) @ V.T
    Tt = 0.5 * (Tt + Tt.T)
    alpha = Tt @ y
    if not np.all(np.isfinite(alpha)):
        raise SingularKernel("non-finite dual coefficients")
    return TrainedEnsemble(
        eigvals=e, eigvecs=V, y=y, Tt=Tt, alpha=alpha, cfg=cfg, reg_add=reg,
        var_floor=VAR_FLOOR_REL * float(np.median(np.diag(gram.K))), K_train=gram.K,
        X_train=None if X is None else np.asarray(X, dtype=np.float64),
    )


def _predict(ens: TrainedEnsemble, Theta_x, K_x, K_xx) -> PredictiveGaussian:
    if Theta_x.shape[1] != ens.n or K_x.shape != Theta_x.shape or K_xx.shape[0] != Theta_x.shape[0]:
        raise DimMismatch("cross blocks do not match the trained ensemble")
    mean = Theta_x @ ens.alpha
    A = Theta_x @ ens.Tt
    var = K_xx + np.einsum("ij,ij->i", A @ ens.K_train, A) - 2.0 * np.einsum("ij,ij->i", A, K_x)
    if var.size and var.min() < -NEG_VAR_TOL * max(float(np.max(K_xx)), 0.0):
        raise NonPositiveVariance(f"predictive variance {var.min():.3g} is negative beyond roundoff")
    return PredictiveGaussian(mean=mean, var=np.maximum(var, ens.var_floor))


def predict(ens: TrainedEnsemble, cross: CrossGram) -> PredictiveGaussian:
    """Marginal predictive Gaussians at query points."""
    return _predict(ens, cross.Theta_cross, cross.K_cross, cross.K_test_diag)


def predict_train(ens: TrainedEnsemble, gram: GramPair) -> PredictiveGaussian:
    return _predict(ens, gram.Theta, gram.K, np.diag(gram.K).copy())


def dump_spectrum(ens: TrainedEnsemble, path) -> None:
    """Debug dump: one row per eigenvalue with the matching dual coefficient."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "eigval", "alpha"])
        for i, (e, a) in enumerate(zip(ens.eigvals, ens.alpha)):
            w.writerow([i, repr(float(e)), repr(float(a))])
