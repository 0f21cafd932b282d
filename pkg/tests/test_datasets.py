import gzip
import struct

import numpy as np
import pytest

from icbound import datasets as ds
from icbound.errors import (BadMagic, DimMismatch, InsufficientSamples, MissingLabelColumn,
                            ParseError, Truncated)


def write_idx_images(path, arr):
    n, h, w = arr.shape
    with open(path, "wb") as fh:
        fh.write(struct.pack(">IIII", 0x803, n, h, w))
        fh.write(arr.astype(np.uint8).tobytes())


def write_idx_labels(path, lab):
    with open(path, "wb") as fh:
        fh.write(struct.pack(">II", 0x801, len(lab)))
        fh.write(np.asarray(lab, dtype=np.uint8).tobytes())


@pytest.fixture
def idx_pair(tmp_path, rng):
    imgs = rng.integers(0, 256, size=(10, 28, 28))
    labs = np.arange(10) % 10
    ip, lp = tmp_path / "img", tmp_path / "lab"
    write_idx_images(ip, imgs)
    write_idx_labels(lp, labs)
    return ip, lp, imgs, labs


def test_load_idx_shapes_and_values(idx_pair):
    ip, lp, imgs, labs = idx_pair
    raw = ds.load_idx(ip, lp)
    assert raw.n == 10 and raw.d == 784
    assert raw.meta["image_shape"] == (28, 28)
    np.testing.assert_array_equal(raw.inputs, imgs.reshape(10, -1).astype(float))
    np.testing.assert_array_equal(raw.labels, labs)


def test_load_idx_gzip(idx_pair, tmp_path):
    ip, lp, imgs, _ = idx_pair
    gz = tmp_path / "img.gz"
    gz.write_bytes(gzip.compress(ip.read_bytes()))
    raw = ds.load_idx(gz, lp)
    np.testing.assert_array_equal(raw.inputs[3], imgs[3].ravel())


def test_load_idx_wrong_magic(idx_pair):
    ip, _, _, _ = idx_pair
    with pytest.raises(BadMagic):
        ds.load_idx(ip, ip)


def test_load_idx_truncated(idx_pair, tmp_path):
    ip, lp, _, _ = idx_pair
    data = ip.read_bytes()
    cut = tmp_path / "cut"
    cut.write_bytes(data[: 16 + (len(data) - 16) // 2])
    with pytest.raises(Truncated):
        ds.load_idx(cut, lp)


def test_load_idx_count_mismatch(idx_pair, tmp_path):
    ip, _, _, _ = idx_pair
    lp = tmp_path / "lab9"
    write_idx_labels(lp, np.arange(9))
    with pytest.raises(DimMismatch):
        ds.load_idx(ip, lp)


def test_real_mnist_header(mnist_dir):
    raw = ds.load_mnist(mnist_dir)
    assert raw.n == 70000 and raw.d == 784
    assert raw.inputs.max() == 255.0
    assert np.bincount(raw.labels).tolist()[:2] == [6903, 7877]


def test_load_csv_basic(tmp_path):
    p = tmp_path / "a.csv"
    p.write_text("f0,f1,label\n0.5,1,0\n2,3,1\n-1,0,2\n")
    raw = ds.load_csv(p)
    assert raw.n == 3 and raw.d == 2
    np.testing.assert_array_equal(raw.labels, [0, 1, 2])


def test_load_csv_bad_label_cell(tmp_path):
    p = tmp_path / "a.csv"
    p.write_text("f0,f1,label\n0.5,1,0\n2,3,1.5\n")
    with pytest.raises(ParseError) as ei:
        ds.load_csv(p)
    assert ei.value.row == 3 and ei.value.column == "label"


def test_load_csv_empty_and_missing_column(tmp_path):
    p = tmp_path / "e.csv"
    p.write_text("")
    with pytest.raises(ParseError):
        ds.load_csv(p)
    q = tmp_path / "m.csv"
    q.write_text("f0,f1\n1,2\n")
    with pytest.raises(MissingLabelColumn):
        ds.load_csv(q)


def test_synth_determinism_and_range():
    a = ds.synth_two_gaussians(5, 100, 2.0, 7)
    b = ds.synth_two_gaussians(5, 100, 2.0, 7)
    assert a.inputs.tobytes() == b.inputs.tobytes()
    assert np.abs(a.inputs).max() < 1.0
    assert set(np.unique(a.labels)) == {0, 1}


def test_synth_separable_linear_oracle():
    raw = ds.synth_two_gaussians(2, 500, 6.0, 3)
    task = ds.make_binary_task(raw, 0, 1, 400, 400, seed=1)
    A = np.c_[task.X_trn, np.ones(task.n_trn)]
    w, *_ = np.linalg.lstsq(A, task.y_trn, rcond=None)
    pred = np.sign(np.c_[task.X_tst, np.ones(task.n_tst)] @ w)
    assert np.mean(pred == task.y_tst) >= 0.99


def test_make_binary_task_contract():
    raw = ds.synth_two_gaussians(3, 300, 2.0, 0)
    t = ds.make_binary_task(raw, 0, 1, 100, 200, seed=5)
    assert t.X_trn.shape == (100, 3) and t.X_tst.shape == (200, 3)
    assert set(np.unique(t.y_trn)) == {-1.0, 1.0}
    tr, te = t.meta["train_index"], t.meta["test_index"]
    assert not set(tr) & set(te)
    # class_a -> -1
    np.testing.assert_array_equal(raw.labels[tr] == 0, t.y_trn == -1)
    t2 = ds.make_binary_task(raw, 0, 1, 100, 200, seed=5)
    assert t.X_trn.tobytes() == t2.X_trn.tobytes()
    t3 = ds.make_binary_task(raw, 0, 1, 100, 200, seed=6)
    assert not np.array_equal(tr, t3.meta["train_index"])


def test_make_binary_task_insufficient():
    raw = ds.synth_two_gaussians(3, 50, 2.0, 0)
    with pytest.raises(InsufficientSamples) as ei:
        ds.make_binary_task(raw, 0, 1, 80, 40, seed=0)
    assert ei.value.class_id in (0, 1)


def test_mnist_task_sizes(mnist_dir):
    raw = ds.load_mnist(mnist_dir)
    t = ds.make_binary_task(raw, 0, 1, 1000, 2000, seed=0)
    assert (t.n_trn, t.n_tst) == (1000, 2000)
    assert t.X_trn.min() == -1.0 and t.X_trn.max() == 1.0


def test_rescale_identity_on_unit_range(rng):
    X = rng.uniform(-1, 1, size=(20, 4))
    assert ds.rescale(X, (-1.0, 1.0)) is X or np.array_equal(ds.rescale(X, (-1.0, 1.0)), X)
    np.testing.assert_array_equal(ds.rescale(np.array([[0.0, 127.5, 255.0]]), (0, 255)),
                                  [[-1.0, 0.0, 1.0]])


def test_randomize_labels():
    raw = ds.synth_two_gaussians(3, 1500, 2.0, 0)
    t = ds.make_binary_task(raw, 0, 1, 1000, 500, seed=1)
    r = ds.randomize_labels(t, 9)
    flipped = np.mean(r.y_trn != t.y_trn)
    assert abs(flipped - 0.5) <= 3 * np.sqrt(0.25 / 1000)
    assert r.X_trn.tobytes() == t.X_trn.tobytes()
    assert r.X_tst.tobytes() == t.X_tst.tobytes() and r.y_tst.tobytes() == t.y_tst.tobytes()
    assert ds.randomize_labels(t, 9).y_trn.tobytes() == r.y_trn.tobytes()


def test_awgn(rng):
    X = rng.uniform(-1, 1, size=(2000, 784))
    np.testing.assert_array_equal(ds.awgn_perturb(X, 0.0, 1), X)
    Y = ds.awgn_perturb(X, 0.25, 1)
    noise = Y - X
    assert abs(noise.var() - 0.25) <= 0.05 * 0.25
    assert abs(noise.mean()) <= 4 * 0.5 / np.sqrt(noise.size)
    Z = ds.awgn_perturb(X, 1 / 16, 2)
    assert np.abs(Z).max() > 1.0
    np.testing.assert_array_equal(ds.awgn_perturb(X, 0.25, 1), Y)


def test_default_awgn_var():
    assert ds.default_awgn_var((28, 28)) == 0.25
    assert ds.default_awgn_var((64, 64)) == 1 / 16
    assert ds.default_awgn_var((64, 64, 3)) == 1 / 16
    assert ds.default_awgn_var(None) == 0.25


def test_perturb_spec_validation():
    with pytest.raises(ValueError):
        ds.PerturbSpec(awgn_var=-1.0)
    with pytest.raises(ValueError):
        ds.PerturbSpec(kind="pgd")


def test_dataset_invariants_enforced():
    X = np.zeros((3, 2))
    with pytest.raises(ValueError):
        ds.Dataset(X + 2.0, np.ones(3), X, np.ones(3))
    with pytest.raises(ValueError):
        ds.Dataset(X, np.array([1.0, 0.0, 1.0]), X, np.ones(3))


def test_synth_gaussian_classes():
    raw = ds.synth_gaussian_classes(16, 30, 10, 3.0, 0)
    assert raw.n == 300 and raw.n_classes == 10
    assert np.abs(raw.inputs).max() < 1.0
