"""NNGP and NTK kernels of deep fully-connected networks.

A network with ``depth`` hidden layers is ``Dense -> (phi -> Dense) * depth``;
the final Dense is the scalar readout. Kernels follow the usual layer
recursion on (cross covariance s, self variances q, q'):

    K+    = b + w * E[phi(u) phi(v)]
    Kdot+ = w * E[phi'(u) phi'(v)]
    Theta+ = K+ + Kdot+ * Theta

starting from the input layer ``K0 = Theta0 = w <x, x'> / d + b``.

Input gradients are tracked as coefficients: at every layer the derivative of
a cross entry (x, x_j) w.r.t. x is ``a_j * g_j + c_j * h`` with
``g_j = w x_j / d`` and ``h = 2 w x / d`` the input-layer gradients of the
cross and self terms, so gradients for a whole batch cost O(M N depth).
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from ._accel import njit, prange, use_numba
from .errors import DimMismatch, NumericalDomain

ACTIVATIONS = ("relu", "erf", "identity")
_ACT_CODE = {"relu": 0, "erf": 1, "identity": 2}

# roundoff beyond [-1, 1] up to DOMAIN_TOL is clamped, larger violations are errors.
# arccos is exact at +-1 so the ReLU cosine is clamped to [-1, 1]; the arcsin
# argument and the Erf Kdot denominator keep a CLAMP_EPS margin.
CLAMP_EPS = 1e-12
DOMAIN_TOL = 1e-6
# below this 1 - |c| the ReLU Kdot gradient is treated as its zero subgradient
SINGULAR_TOL = 1e-8

BLOCK_ROWS = 256


@dataclass(frozen=True)
class NetConfig:
    """Metaparameters of one infinite-width ensemble."""

    depth: int = 2
    activation: str = "relu"
    w_var: float | None = None
    b_var: float = 0.1
    lam: float = 0.0
    eta: float = 1.0
    time_t: float = math.inf
    readout_bias: bool = True

    def __post_init__(self):
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"activation must be one of {ACTIVATIONS}")
        if self.w_var is None:
            object.__setattr__(self, "w_var", 2.0 if self.activation == "relu" else 1.0)
        if not 1 <= int(self.depth) <= 64:
            raise ValueError("depth must lie in [1, 64]")
        if self.w_var <= 0 or self.b_var < 0 or self.lam < 0 or self.eta <= 0:
            raise ValueError("need w_var > 0, b_var >= 0, lam >= 0, eta > 0")
        if not self.time_t > 0:
            raise ValueError("time_t must be positive (math.inf for the fixed point)")

    @property
    def b_last(self) -> float:
        return self.b_var if self.readout_bias else 0.0

    def kernel_key(self) -> str:
        """Hash of the fields that determine the kernels (not lam/eta/t)."""
        d = {k: v for k, v in asdict(self).items() if k not in ("lam", "eta", "time_t")}
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()

    def with_(self, **changes) -> "NetConfig":
        d = asdict(self)
        d.update(changes)
        return NetConfig(**d)


@dataclass(frozen=True)
class GramPair:
    K: np.ndarray
    Theta: np.ndarray

    @property
    def n(self) -> int:
        return self.K.shape[0]


@dataclass(frozen=True)
class CrossGram:
    K_cross: np.ndarray
    Theta_cross: np.ndarray
    K_test_diag: np.ndarray


@dataclass
class InputGradCoeffs:
    """Per-entry gradient coefficients for a (test, train) block."""

    aK: np.ndarray
    cK: np.ndarray
    aT: np.ndarray
    cT: np.ndarray
    w_var: float
    d: int

    def grad_theta(self, i: int, x: np.ndarray, X: np.ndarray) -> np.ndarray:
        """d x N gradient of Theta(x_i, X_j) w.r.t. x_i."""
        return self.w_var / self.d * (X.T * self.aT[i] + 2.0 * np.outer(x, self.cT[i]))

    def grad_nngp(self, i: int, x: np.ndarray, X: np.ndarray) -> np.ndarray:
        return self.w_var / self.d * (X.T * self.aK[i] + 2.0 * np.outer(x, self.cK[i]))

    def grad_weighted_theta(self, Xq: np.ndarray, X: np.ndarray, alpha: np.ndarray) -> np.ndarray:
        """Row i: gradient of sum_j alpha_j Theta(x_i, x_j) w.r.t. x_i (M x d)."""
        scale = self.w_var / self.d
        return scale * ((self.aT * alpha) @ X) + 2.0 * scale * (self.cT @ alpha)[:, None] * Xq


# -- layer zero -----------------------------------------------------------

def base_gram(X, X2, w_var: float, b_var: float) -> np.ndarray:
    """Input-layer kernel ``w_var * <x_i, x2_j> / d + b_var``."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    X2 = np.atleast_2d(np.asarray(X2, dtype=np.float64))
    if X.shape[1] != X2.shape[1]:
        raise DimMismatch(f"feature dims differ: {X.shape[1]} vs {X2.shape[1]}")
    return (w_var / X.shape[1]) * (X @ X2.T) + b_var


def _base_diag(X, w_var, b_var):
    return (w_var / X.shape[1]) * np.einsum("ij,ij->i", X, X) + b_var


# -- self-variance recursion ----------------------------------------------

def _diag_step(act: str, q, w, b):
    """Return (q+, dq+/dq) for self variances."""
    if act == "relu":
        return b + 0.5 * w * q, np.full_like(q, 0.5 * w)
    if act == "erf":
        A = 1.0 + 2.0 * q
        return (b + w * (2.0 / np.pi) * np.arcsin(2.0 * q / A),
                w * (4.0 / np.pi) / (A * np.sqrt(1.0 + 4.0 * q)))
    return b + w * q, np.full_like(q, w)


def _diag_path(X, cfg: NetConfig):
    """Self variances entering each layer: (depth+1) x M, plus dq^l/dq^0."""
    q = _base_diag(X, cfg.w_var, cfg.b_var)
    qs = [q]
    betas = [np.ones_like(q)]
    for layer in range(cfg.depth):
        b = cfg.b_last if layer == cfg.depth - 1 else cfg.b_var
        q, dq = _diag_step(cfg.activation, q, cfg.w_var, b)
        qs.append(q)
        betas.append(betas[-1] * dq)
    return np.array(qs), np.array(betas)


# -- cross recursion: numpy -----------------------------------------------

def _step_np(act, s, qa, qb, w, b, grad):
    """One hidden layer on a block. qa: (M,1) rows, qb: (1,N) columns."""
    if act == 0:
        r = np.sqrt(qa * qb)
        c = s / r
        if np.any(np.abs(c) > 1.0 + DOMAIN_TOL):
            raise NumericalDomain("ReLU arccos argument outside [-1, 1]")
        c = np.clip(c, -1.0, 1.0)
        theta = np.arccos(c)
        sin_t = np.sqrt(1.0 - c * c)
        F = b + w / (2.0 * np.pi) * r * (sin_t + (np.pi - theta) * c)
        G = w * (np.pi - theta) / (2.0 * np.pi)
        if not grad:
            return F, G, None
        rsin = r * sin_t
        Fs = G
        Fq = w / (4.0 * np.pi) * rsin / qa
        ok = (1.0 - np.abs(c)) >= SINGULAR_TOL
        inv = np.where(ok, 1.0 / np.where(ok, rsin, 1.0), 0.0)
        Gs = w / (2.0 * np.pi) * inv
        Gq = -w / (4.0 * np.pi) * s / qa * inv
        return F, G, (Fs, Fq, Gs, Gq)
    if act == 1:
        A = 1.0 + 2.0 * qa
        P = A * (1.0 + 2.0 * qb)
        u = 2.0 * s / np.sqrt(P)
        if np.any(np.abs(u) > 1.0 + DOMAIN_TOL):
            raise NumericalDomain("Erf arcsin argument outside [-1, 1]")
        u = np.clip(u, -1.0 + CLAMP_EPS, 1.0 - CLAMP_EPS)
        F = b + w * (2.0 / np.pi) * np.arcsin(u)
        Dm = np.maximum(P - 4.0 * s * s, P * (1.0 - (1.0 - CLAMP_EPS) ** 2))
        G = w * (4.0 / np.pi) / np.sqrt(Dm)
        if not grad:
            return F, G, None
        B = P / A
        Fs = G
        Fq = -G * s / A
        Gs = 4.0 * s * G / Dm
        Gq = -B * G / Dm
        return F, G, (Fs, Fq, Gs, Gq)
    F = b + w * s
    G = np.full_like(s, w)
    if not grad:
        return F, G, None
    z = np.zeros_like(s)
    return F, G, (np.full_like(s, w), z, z, z)


def _cross_np(s0, qa, qb, betas, act, w, b, b_last, depth, grad):
    s = s0
    T = s0.copy()
    if grad:
        aK = np.ones_like(s0)
        cK = np.zeros_like(s0)
        aT = np.ones_like(s0)
        cT = np.zeros_like(s0)
    for layer in range(depth):
        bl = b_last if layer == depth - 1 else b
        F, G, parts = _step_np(act, s, qa[layer][:, None], qb[layer][None, :], w, bl, grad)
        if grad:
            Fs, Fq, Gs, Gq = parts
            beta = betas[layer][:, None]
            daK = Fs * aK
            dcK = Fs * cK + Fq * beta
            daG = Gs * aK
            dcG = Gs * cK + Gq * beta
            aT = daK + T * daG + G * aT
            cT = dcK + T * dcG + G * cT
            aK, cK = daK, dcK
        T = F + G * T
        s = F
    if grad:
        return s, T, (aK, cK, aT, cT)
    return s, T, None


# -- cross recursion: numba -----------------------------------------------

@njit(cache=True)
def _step_nb(act, s, qa, qb, w, b):
    """Scalar layer step; returns F, G, Fs, Fq, Gs, Gq, domain_error."""
    if act == 0:
        r = math.sqrt(qa * qb)
        c = s / r
        bad = abs(c) > 1.0 + DOMAIN_TOL
        if c > 1.0:
            c = 1.0
        elif c < -1.0:
            c = -1.0
        theta = math.acos(c)
        sin_t = math.sqrt(1.0 - c * c)
        F = b + w / (2.0 * math.pi) * r * (sin_t + (math.pi - theta) * c)
        G = w * (math.pi - theta) / (2.0 * math.pi)
        rsin = r * sin_t
        Fq = w / (4.0 * math.pi) * rsin / qa
        if 1.0 - abs(c) >= SINGULAR_TOL:
            Gs = w / (2.0 * math.pi) / rsin
            Gq = -w / (4.0 * math.pi) * s / qa / rsin
        else:
            Gs = 0.0
            Gq = 0.0
        return F, G, G, Fq, Gs, Gq, bad
    elif act == 1:
        A = 1.0 + 2.0 * qa
        P = A * (1.0 + 2.0 * qb)
        u = 2.0 * s / math.sqrt(P)
        bad = abs(u) > 1.0 + DOMAIN_TOL
        if u > 1.0 - CLAMP_EPS:
            u = 1.0 - CLAMP_EPS
        elif u < -1.0 + CLAMP_EPS:
            u = -1.0 + CLAMP_EPS
        F = b + w * (2.0 / math.pi) * math.asin(u)
        Dm = max(P - 4.0 * s * s, P * (1.0 - (1.0 - CLAMP_EPS) ** 2))
        G = w * (4.0 / math.pi) / math.sqrt(Dm)
        B = P / A
        return F, G, G, -G * s / A, 4.0 * s * G / Dm, -B * G / Dm, bad
    return b + w * s, w, w, 0.0, 0.0, 0.0, False


@njit(cache=True, parallel=True)
def _cross_nb(s0, qa, qb, betas, act, w, b, b_last, depth, grad):
    M, N = s0.shape
    K = np.empty((M, N))
    T = np.empty((M, N))
    if grad:
        aKo = np.empty((M, N))
        cKo = np.empty((M, N))
        aTo = np.empty((M, N))
        cTo = np.empty((M, N))
    else:
        aKo = np.empty((0, 0))
        cKo = np.empty((0, 0))
        aTo = np.empty((0, 0))
        cTo = np.empty((0, 0))
    bad_rows = np.zeros(M, dtype=np.bool_)
    for i in prange(M):
        for j in range(N):
            s = s0[i, j]
            t = s
            aK = 1.0
            cK = 0.0
            aT = 1.0
            cT = 0.0
            for layer in range(depth):
                bl = b_last if layer == depth - 1 else b
                F, G, Fs, Fq, Gs, Gq, bad = _step_nb(act, s, qa[layer, i], qb[layer, j], w, bl)
                if bad:
                    bad_rows[i] = True
                if grad:
                    beta = betas[layer, i]
                    daK = Fs * aK
                    dcK = Fs * cK + Fq * beta
                    daG = Gs * aK
                    dcG = Gs * cK + Gq * beta
                    aT = daK + t * daG + G * aT
                    cT = dcK + t * dcG + G * cT
                    aK = daK
                    cK = dcK
                t = F + G * t
                s = F
            K[i, j] = s
            T[i, j] = t
            if grad:
                aKo[i, j] = aK
                cKo[i, j] = cK
                aTo[i, j] = aT
                cTo[i, j] = cT
    return K, T, aKo, cKo, aTo, cTo, bad_rows


# -- public API -----------------------------------------------------------

def _cross(X, X2, cfg: NetConfig, grad: bool, block_rows: int = BLOCK_ROWS):
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    X2 = np.atleast_2d(np.asarray(X2, dtype=np.float64))
    if X.shape[1] != X2.shape[1]:
        raise DimMismatch(f"feature dims differ: {X.shape[1]} vs {X2.shape[1]}")
    qa, betas = _diag_path(X, cfg)
    qb, _ = _diag_path(X2, cfg)
    act = _ACT_CODE[cfg.activation]
    M, N = X.shape[0], X2.shape[0]
    K = np.empty((M, N))
    T = np.empty((M, N))
    coeffs = [np.empty((M, N)) for _ in range(4)] if grad else None
    # under auto, numba only pays off once the gradient coefficients are tracked
    numba_path = use_numba(auto=grad)
    for lo in range(0, M, block_rows):
        hi = min(lo + block_rows, M)
        s0 = base_gram(X[lo:hi], X2, cfg.w_var, cfg.b_var)
        if numba_path:
            k, t, aK, cK, aT, cT, bad = _cross_nb(
                s0, np.ascontiguousarray(qa[:, lo:hi]), qb, np.ascontiguousarray(betas[:, lo:hi]),
                act, float(cfg.w_var), float(cfg.b_var), float(cfg.b_last), int(cfg.depth), grad)
            if bad.any():
                raise NumericalDomain("kernel recursion argument outside [-1, 1]")
            parts = (aK, cK, aT, cT)
        else:
            k, t, parts = _cross_np(s0, qa[:, lo:hi], qb, betas[:, lo:hi], act, cfg.w_var,
                                    cfg.b_var, cfg.b_last, cfg.depth, grad)
        K[lo:hi] = k
        T[lo:hi] = t
        if grad:
            for dst, src in zip(coeffs, parts):
                dst[lo:hi] = src
    return K, T, qa[-1], qb[-1], coeffs


def nngp_ntk(X, X2, cfg: NetConfig, block_rows: int = BLOCK_ROWS):
    """Return (K, Theta, K(x,x) for rows of X, K(x,x) for rows of X2)."""
    K, T, da, db, _ = _cross(X, X2, cfg, grad=False, block_rows=block_rows)
    return K, T, da, db


def gram(X, cfg: NetConfig, block_rows: int = BLOCK_ROWS) -> GramPair:
    """Train-train NNGP/NTK pair, symmetrized exactly."""
    X = np.asarray(X, dtype=np.float64)
    K, T, _, _ = nngp_ntk(X, X, cfg, block_rows)
    return GramPair(K=0.5 * (K + K.T), Theta=0.5 * (T + T.T))


def cross_gram(X_query, X_train, cfg: NetConfig, block_rows: int = BLOCK_ROWS) -> CrossGram:
    K, T, dq, _ = nngp_ntk(X_query, X_train, cfg, block_rows)
    return CrossGram(K_cross=K, Theta_cross=T, K_test_diag=dq)


def input_grad_coeffs(X_query, X_train, cfg: NetConfig, block_rows: int = BLOCK_ROWS):
    """CrossGram plus gradient coefficients for every (query, train) pair."""
    K, T, dq, _, coeffs = _cross(X_query, X_train, cfg, grad=True, block_rows=block_rows)
    X_query = np.atleast_2d(X_query)
    grads = InputGradCoeffs(*coeffs, w_var=float(cfg.w_var), d=X_query.shape[1])
    return CrossGram(K_cross=K, Theta_cross=T, K_test_diag=dq), grads


def kernel_input_grad(x, X, cfg: NetConfig):
    """Gradients of Theta(x, X_j) and K(x, X_j) w.r.t. x, each d x N."""
    x = np.asarray(x, dtype=np.float64).ravel()
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    _, g = input_grad_coeffs(x[None, :], X, cfg)
    return g.grad_theta(0, x, X), g.grad_nngp(0, x, X)


# -- on-disk cache --------------------------------------------------------

_CACHE_MAGIC = b"ICBGRAM1"


def save_gram_pair(path, pair: GramPair, dataset_hash: str, cfg_hash: str) -> None:
    """Write K then Theta as little-endian f64 after a fixed header.

    Header: 8-byte magic, u64 rows, u64 cols, 32-byte dataset sha256,
    32-byte config sha256.
    """
    n, m = pair.K.shape
    with open(path, "wb") as fh:
        fh.write(_CACHE_MAGIC)
        fh.write(np.array([n, m], dtype="<u8").tobytes())
        fh.write(bytes.fromhex(dataset_hash))
        fh.write(bytes.fromhex(cfg_hash))
        fh.write(np.ascontiguousarray(pair.K, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(pair.Theta, dtype="<f8").tobytes())


def load_gram_pair(path, dataset_hash: str | None = None, cfg_hash: str | None = None):
    """Read a cached pair; returns None when the stored hashes do not match."""
    with open(path, "rb") as fh:
        if fh.read(8) != _CACHE_MAGIC:
            raise ValueError(f"{path}: not a Gram cache file")
        n, m = np.frombuffer(fh.read(16), dtype="<u8")
        dh = fh.read(32).hex()
        ch = fh.read(32).hex()
        if (dataset_hash and dh != dataset_hash) or (cfg_hash and ch != cfg_hash):
            return None
        count = int(n) * int(m)
        K = np.frombuffer(fh.read(8 * count), dtype="<f8")
        T = np.frombuffer(fh.read(8 * count), dtype="<f8")
    if K.size != count or T.size != count:
        raise ValueError(f"{path}: truncated Gram cache")
    return GramPair(K=K.reshape(int(n), int(m)).copy(), Theta=T.reshape(int(n), int(m)).copy())
