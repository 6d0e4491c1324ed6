"""Compiled and pure-Python kernels must agree bit for bit."""
import numpy as np
import pytest

from freightmode import _pykernels as py
from freightmode.learners.tree import presort

ck = pytest.importorskip("freightmode._ckernels")

KEYS = ("feature", "threshold", "left", "right", "value", "cover", "gain")


def same(a, b):
    for k in KEYS:
        assert np.array_equal(np.asarray(a[k]), np.asarray(b[k])), k


def data(seed, n=300, f=6, ties=False):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, f))
    if ties:
        X = np.round(X, 1)
    y = rng.integers(0, 5, n).astype(np.int64)
    return X, y, rng


@pytest.mark.parametrize("seed", range(6))
@pytest.mark.parametrize("extra", [False, True])
def test_classifier_tree(seed, extra):
    X, y, rng = data(seed, ties=seed % 2 == 0)
    Xt, order = presort(X)
    counts = rng.integers(0, 3, len(y)).astype(np.int64)
    args = (Xt, y, counts, order, 5, [-1, 3, 6][seed % 3], 1 + seed % 4, 0.0, 1 + seed % 6, extra, seed)
    same(py.build_classifier_tree(*args), ck.build_classifier_tree(*args))


@pytest.mark.parametrize("seed", range(6))
def test_regressor_tree(seed):
    X, _, rng = data(seed, ties=True)
    Xt, order = presort(X)
    g = rng.normal(size=len(X))
    h = rng.uniform(0.01, 0.25, len(X))
    args = (Xt, g, h, order, [-1, 2, 6][seed % 3], 1 + seed % 3, 1.0, 0.0, 0.0)
    same(py.build_regressor_tree(*args), ck.build_regressor_tree(*args))


@pytest.mark.parametrize("seed", range(4))
def test_apply_and_shap(seed):
    X, y, rng = data(seed)
    Xt, order = presort(X)
    t = py.build_classifier_tree(Xt, y, np.ones(len(y), dtype=np.int64), order, 5, 5, 2, 0.0, 6, False, 0)
    Z = np.ascontiguousarray(rng.normal(size=(40, X.shape[1])))
    tree = (t["feature"], t["threshold"], t["left"], t["right"])
    assert np.array_equal(py.apply_tree(Z, *tree), ck.apply_tree(Z, *tree))
    a = py.tree_shap(Z, *tree, t["value"], t["cover"])
    b = ck.tree_shap(Z, *tree, t["value"], t["cover"])
    assert np.array_equal(a, b)
