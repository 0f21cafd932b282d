"""Data ingestion and binary task construction.

Sources (IDX files, CSV exports, a synthetic generator) are loaded into a
:class:`RawDataset` holding raw feature values and integer class ids. A
:class:`Dataset` is one binary task: inputs rescaled to [-1, 1] and labels
mapped to -1 / +1.
"""
from __future__ import annotations

import csv
import gzip
import hashlib
import os
import struct
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import (
    BadMagic,
    DimMismatch,
    InsufficientSamples,
    MissingLabelColumn,
    ParseError,
    Truncated,
)

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801

DATA_DIR_ENV = "ICBOUND_DATA_DIR"


@dataclass(frozen=True)
class RawDataset:
    inputs: np.ndarray
    labels: np.ndarray
    meta: dict = field(default_factory=dict)
    n_classes: int = 10

    def __post_init__(self):
        if self.inputs.ndim != 2:
            raise DimMismatch(f"inputs must be 2-D, got shape {self.inputs.shape}")
        if self.inputs.shape[0] != self.labels.shape[0]:
            raise DimMismatch(
                f"{self.inputs.shape[0]} input rows but {self.labels.shape[0]} labels"
            )
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= self.n_classes):
            raise ValueError(f"class ids must lie in [0, {self.n_classes})")

    @property
    def n(self) -> int:
        return self.inputs.shape[0]

    @property
    def d(self) -> int:
        return self.inputs.shape[1]


@dataclass(frozen=True)
class Dataset:
    X_trn: np.ndarray
    y_trn: np.ndarray
    X_tst: np.ndarray
    y_tst: np.ndarray
    task: tuple = (0, 1)
    seed: int = 0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("X_trn", "X_tst"):
            X = getattr(self, name)
            if X.ndim != 2:
                raise DimMismatch(f"{name} must be 2-D")
            if X.size and (X.min() < -1.0 or X.max() > 1.0):
                raise ValueError(f"{name} has entries outside [-1, 1]")
        for name in ("y_trn", "y_tst"):
            y = getattr(self, name)
            if not np.all(np.abs(y) == 1.0):
                raise ValueError(f"{name} must hold only -1/+1 labels")
        if self.X_trn.shape[0] != self.y_trn.shape[0] or self.X_tst.shape[0] != self.y_tst.shape[0]:
            raise DimMismatch("input/label counts differ")
        if self.X_trn.shape[0] < 2:
            raise ValueError("need at least two training points")
        if self.X_trn.shape[1] != self.X_tst.shape[1]:
            raise DimMismatch("train and test dimensions differ")

    @property
    def n_trn(self) -> int:
        return self.X_trn.shape[0]

    @property
    def n_tst(self) -> int:
        return self.X_tst.shape[0]

    def fingerprint(self) -> str:
        """sha256 over the training inputs and labels (used as a cache key)."""
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.X_trn, dtype="<f8").tobytes())
        h.update(np.ascontiguousarray(self.y_trn, dtype="<f8").tobytes())
        return h.hexdigest()


@dataclass(frozen=True)
class PerturbSpec:
    kind: str = "awgn"
    awgn_var: float = 0.25
    fgsm_eps: float = 4.0 / 255.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("awgn", "fgsm"):
            raise ValueError(f"unknown perturbation kind {self.kind!r}")
        if self.awgn_var < 0 or self.fgsm_eps < 0:
            raise ValueError("perturbation sizes must be non-negative")


# -- IDX ------------------------------------------------------------------

def _read_bytes(path) -> bytes:
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:2] == b"\x1f\x8b":
        data = gzip.decompress(data)
    return data


def _parse_idx(data: bytes, expected_magic: int, path) -> np.ndarray:
    if len(data) < 4:
        raise Truncated(f"{path}: file shorter than the IDX magic word")
    (magic,) = struct.unpack(">I", data[:4])
    if magic != expected_magic:
        raise BadMagic(f"{path}: magic {magic} (expected {expected_magic})")
    ndim = magic & 0xFF
    header = 4 + 4 * ndim
    if len(data) < header:
        raise Truncated(f"{path}: header cut short")
    dims = struct.unpack(f">{ndim}I", data[4:header])
    count = int(np.prod(dims))
    if len(data) - header < count:
        raise Truncated(f"{path}: payload has {len(data) - header} bytes, dims {dims} need {count}")
    return np.frombuffer(data, dtype=np.uint8, count=count, offset=header).reshape(dims)


def load_idx(images_path, labels_path) -> RawDataset:
    """Read an IDX image/label file pair (optionally gzip-compressed)."""
    images = _parse_idx(_read_bytes(images_path), IDX_IMAGES_MAGIC, images_path)
    labels = _parse_idx(_read_bytes(labels_path), IDX_LABELS_MAGIC, labels_path)
    if images.shape[0] != labels.shape[0]:
        raise DimMismatch(f"{images.shape[0]} images but {labels.shape[0]} labels")
    n = images.shape[0]
    return RawDataset(
        inputs=images.reshape(n, -1).astype(np.float64),
        labels=labels.astype(np.int64),
        meta={
            "source": Path(images_path).name,
            "image_shape": tuple(int(s) for s in images.shape[1:]),
            "value_range": (0.0, 255.0),
        },
    )


def _find(data_dir: Path, stem: str) -> Path:
    for candidate in (stem, stem + ".gz", stem.replace("-idx", ".idx")):
        p = data_dir / candidate
        if p.exists():
            return p
    raise FileNotFoundError(f"{stem} not found in {data_dir}")


def load_mnist(data_dir=None) -> RawDataset:
    """Load the MNIST train and t10k splits from ``data_dir`` and pool them.

    Falls back to ``$ICBOUND_DATA_DIR`` (and its ``mnist/`` subdirectory).
    """
    if data_dir is None:
        data_dir = os.environ.get(DATA_DIR_ENV)
        if data_dir is None:
            raise FileNotFoundError(f"no data directory given and ${DATA_DIR_ENV} unset")
    data_dir = Path(data_dir)
    if not any(data_dir.glob("train-images*")) and (data_dir / "mnist").is_dir():
        data_dir = data_dir / "mnist"
    parts = []
    for split in ("train", "t10k"):
        parts.append(load_idx(_find(data_dir, f"{split}-images-idx3-ubyte"),
                              _find(data_dir, f"{split}-labels-idx1-ubyte")))
    meta = dict(parts[0].meta, source="mnist", splits="train+t10k")
    return RawDataset(
        inputs=np.concatenate([p.inputs for p in parts]),
        labels=np.concatenate([p.labels for p in parts]),
        meta=meta,
    )


# -- CSV ------------------------------------------------------------------

def load_csv(path, label_column: str = "label", value_range=None) -> RawDataset:
    """Read a headered CSV whose non-label columns are numeric features.

    ``value_range`` is the native (min, max) of the features; by default the
    global min and max over all feature cells is used.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty file, no header row") from None
        header = [h.strip() for h in header]
        if label_column not in header:
            raise MissingLabelColumn(f"{path}: no column named {label_column!r}")
        li = header.index(label_column)
        feats, labels = [], []
        for rowno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ParseError(f"{path}: expected {len(header)} fields, got {len(row)}", row=rowno)
            vals = []
            for ci, cell in enumerate(row):
                if ci == li:
                    try:
                        lab = float(cell)
                    except ValueError:
                        raise ParseError(f"{path}: label {cell!r} is not a number",
                                         row=rowno, column=header[ci]) from None
                    if not lab.is_integer() or lab < 0:
                        raise ParseError(f"{path}: label {cell!r} is not a class id",
                                         row=rowno, column=header[ci])
                    labels.append(int(lab))
                else:
                    try:
                        vals.append(float(cell))
                    except ValueError:
                        raise ParseError(f"{path}: {cell!r} is not numeric",
                                         row=rowno, column=header[ci]) from None
            feats.append(vals)
    inputs = np.asarray(feats, dtype=np.float64).reshape(len(feats), len(header) - 1)
    labels = np.asarray(labels, dtype=np.int64)
    if value_range is None:
        value_range = (float(inputs.min()), float(inputs.max())) if inputs.size else (-1.0, 1.0)
    return RawDataset(
        inputs=inputs,
        labels=labels,
        meta={"source": Path(path).name, "value_range": tuple(value_range),
              "normalization": "global"},
        n_classes=max(10, int(labels.max()) + 1) if labels.size else 10,
    )


# -- synthetic ------------------------------------------------------------

def synth_two_gaussians(d: int, n_per_class: int, separation: float, seed: int) -> RawDataset:
    """Two unit-variance Gaussian clusters at +-(separation/2) e_1, squashed by tanh."""
    if d < 1 or n_per_class < 1 or separation < 0:
        raise ValueError("need d >= 1, n_per_class >= 1, separation >= 0")
    rng = np.random.default_rng(seed)
    Z = rng.standard_normal((2 * n_per_class, d))
    labels = np.repeat(np.array([0, 1], dtype=np.int64), n_per_class)
    Z[:, 0] += np.where(labels == 1, separation / 2.0, -separation / 2.0)
    return RawDataset(
        inputs=np.tanh(Z),
        labels=labels,
        meta={"source": f"synthetic(d={d},sep={separation:g})", "value_range": (-1.0, 1.0)},
        n_classes=2,
    )


# -- tasks ----------------------------------------------------------------

def rescale(X: np.ndarray, value_range) -> np.ndarray:
    lo, hi = value_range
    if lo == -1.0 and hi == 1.0:
        return np.array(X, dtype=np.float64)
    out = (np.asarray(X, dtype=np.float64) - lo) * (2.0 / (hi - lo)) - 1.0
    # guard roundoff at the range ends
    return np.clip(out, -1.0, 1.0)


def make_binary_task(raw: RawDataset, class_a: int, class_b: int, n_trn: int, n_tst: int,
                     seed: int) -> Dataset:
    """Draw a class-balanced binary task with disjoint train and test sets.

    ``class_a`` maps to -1 and ``class_b`` to +1. Each split is split as evenly
    as possible between the two classes (``class_b`` takes the odd sample).
    """
    if class_a == class_b:
        raise ValueError("the two classes must differ")
    rng = np.random.default_rng(seed)
    need = {
        class_a: (n_trn // 2, n_tst // 2),
        class_b: (n_trn - n_trn // 2, n_tst - n_tst // 2),
    }
    trn_idx, tst_idx = [], []
    for cls in (class_a, class_b):
        pool = np.flatnonzero(raw.labels == cls)
        k_trn, k_tst = need[cls]
        if pool.size < k_trn + k_tst:
            raise InsufficientSamples(
                f"class {cls} has {pool.size} samples, need {k_trn + k_tst}", class_id=cls
            )
        pick = rng.choice(pool, size=k_trn + k_tst, replace=False)
        trn_idx.append(pick[:k_trn])
        tst_idx.append(pick[k_trn:])
    trn_idx = rng.permutation(np.concatenate(trn_idx))
    tst_idx = rng.permutation(np.concatenate(tst_idx))
    vr = raw.meta.get("value_range", (float(raw.inputs.min()), float(raw.inputs.max())))

    def labels(idx):
        return np.where(raw.labels[idx] == class_b, 1.0, -1.0)

    return Dataset(
        X_trn=rescale(raw.inputs[trn_idx], vr),
        y_trn=labels(trn_idx),
        X_tst=rescale(raw.inputs[tst_idx], vr),
        y_tst=labels(tst_idx),
        task=(int(class_a), int(class_b)),
        seed=int(seed),
        meta={
            "source": raw.meta.get("source", "unknown"),
            "value_range": tuple(vr),
            "normalization": raw.meta.get("normalization", "global"),
            "image_shape": raw.meta.get("image_shape"),
            "train_index": trn_idx,
            "test_index": tst_idx,
        },
    )


def randomize_labels(ds: Dataset, seed: int) -> Dataset:
    """Replace the training labels with i.i.d. uniform +-1 draws."""
    rng = np.random.default_rng(seed)
    y = rng.choice(np.array([-1.0, 1.0]), size=ds.n_trn)
    return replace(ds, y_trn=y, meta=dict(ds.meta, labels="random", label_seed=int(seed)))


def awgn_perturb(X: np.ndarray, var: float, seed: int) -> np.ndarray:
    """Add white Gaussian noise of the given per-entry variance. Not clamped."""
    if var < 0:
        raise ValueError("noise variance must be non-negative")
    X = np.asarray(X, dtype=np.float64)
    if var == 0:
        return X.copy()
    rng = np.random.default_rng(seed)
    return X + np.sqrt(var) * rng.standard_normal(X.shape)


def default_awgn_var(image_shape) -> float:
    """1/16 for 64x64 sources, 1/4 otherwise."""
    if image_shape is not None and tuple(image_shape[:2]) == (64, 64):
        return 1.0 / 16.0
    return 0.25


def synth_gaussian_classes(d: int, n_per_class: int, n_classes: int, separation: float,
                           seed: int) -> RawDataset:
    """Multi-class variant for data-free sweeps: unit Gaussians around random
    orthonormal directions scaled by separation/2, squashed by tanh."""
    if d < n_classes:
        raise ValueError("need d >= n_classes for orthonormal class directions")
    rng = np.random.default_rng(seed)
    Q, _ = np.linalg.qr(rng.standard_normal((d, n_classes)))
    labels = np.repeat(np.arange(n_classes, dtype=np.int64), n_per_class)
    Z = rng.standard_normal((n_classes * n_per_class, d)) + (separation / 2.0) * Q.T[labels]
    return RawDataset(
        inputs=np.tanh(Z),
        labels=labels,
        meta={"source": f"synthetic{n_classes}(d={d},sep={separation:g})",
              "value_range": (-1.0, 1.0)},
        n_classes=n_classes,
    )
