"""CART classification trees on the compiled (or fallback) kernels."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import kernels
from ..core import N_MODES
from ..errors import DegenerateNode, SchemaMismatch


def gini(counts) -> float:
    """Gini impurity ``1 - sum p_c^2`` of a class-count vector."""
    c = np.asarray(counts, dtype=np.float64)
    if (c < 0).any():
        raise ValueError("class counts must be nonnegative")
    n = c.sum()
    if n == 0:
        raise DegenerateNode("Gini impurity of an empty node is undefined")
    p = c / n
    return float(1.0 - (p * p).sum())


@dataclass
class Tree:
    """Flat node arrays. Leaves have ``feature == -1``; rows with
    ``x[feature] <= threshold`` go left."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray  # (n_nodes, n_outputs)
    cover: np.ndarray  # training rows reaching each node
    gain: np.ndarray  # impurity decrease (classification) or structure gain

    @classmethod
    def from_arrays(cls, d: dict) -> "Tree":
        return cls(
            feature=np.asarray(d["feature"], dtype=np.int32),
            threshold=np.asarray(d["threshold"], dtype=np.float64),
            left=np.asarray(d["left"], dtype=np.int32),
            right=np.asarray(d["right"], dtype=np.int32),
            value=np.asarray(d["value"], dtype=np.float64).reshape(len(d["feature"]), -1),
            cover=np.asarray(d["cover"], dtype=np.float64),
            gain=np.asarray(d["gain"], dtype=np.float64),
        )

    def to_arrays(self) -> dict:
        return {k: getattr(self, k) for k in
                ("feature", "threshold", "left", "right", "value", "cover", "gain")}

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    @property
    def is_leaf(self) -> np.ndarray:
        return self.feature < 0

    def apply(self, X) -> np.ndarray:
        return kernels.apply_tree(X, self.feature, self.threshold, self.left, self.right)

    def predict(self, X) -> np.ndarray:
        return self.value[self.apply(X)]

    def expected_value(self) -> np.ndarray:
        """Cover-weighted mean leaf output (the mean training prediction)."""
        leaves = self.is_leaf
        return (self.value[leaves] * self.cover[leaves, None]).sum(axis=0) / self.cover[0]

    def depth(self) -> int:
        depth = np.zeros(self.n_nodes, dtype=np.int64)
        for i in range(self.n_nodes):  # children always follow their parent
            if self.feature[i] >= 0:
                depth[self.left[i]] = depth[i] + 1
                depth[self.right[i]] = depth[i] + 1
        return int(depth.max()) if self.n_nodes else 0


def presort(X) -> tuple[np.ndarray, np.ndarray]:
    """Feature-major copy of ``X`` and the stable sort order of every feature."""
    Xt = np.ascontiguousarray(np.asarray(X, dtype=np.float64).T)
    order = np.argsort(Xt, axis=1, kind="stable").astype(np.int64)
    return Xt, order


def check_X(X, n_features) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[1] != n_features:
        raise SchemaMismatch(f"expected {n_features} features, got {X.shape[1]}")
    return np.ascontiguousarray(X)


def check_Xy(X, y):
    X = np.ascontiguousarray(np.asarray(X, dtype=np.float64))
    y = np.asarray(y, dtype=np.int64)
    if X.ndim != 2 or X.shape[0] != len(y) or len(y) == 0:
        raise ValueError("X must be 2-D with one row per label and at least one row")
    if not np.isfinite(X).all():
        raise ValueError("features must be finite")
    if y.min() < 0 or y.max() >= N_MODES:
        raise ValueError(f"labels must lie in 0..{N_MODES - 1}")
    return X, y


class Classifier:
    """Shared prediction surface for every level-1 learner."""

    n_classes = N_MODES
    n_features_: int

    def predict_proba(self, X) -> np.ndarray:
        raise NotImplementedError

    def predict(self, X) -> np.ndarray:
        # argmax returns the first maximum: ties resolve to the lowest mode
        return np.argmax(self.predict_proba(X), axis=1)


class DecisionTree(Classifier):
    """Single CART tree, Gini criterion, exhaustive threshold search."""

    kind = "DT"

    def __init__(self, max_depth=None, min_leaf=1, min_gain=0.0):
        self.max_depth = max_depth
        self.min_leaf = min_leaf
        self.min_gain = min_gain
        self.tree_: Tree | None = None

    def get_params(self) -> dict:
        return {"max_depth": self.max_depth, "min_leaf": self.min_leaf, "min_gain": self.min_gain}

    def fit(self, X, y, presorted=None):
        X, y = check_Xy(X, y)
        Xt, order = presorted if presorted is not None else presort(X)
        self.n_features_ = X.shape[1]
        self.tree_ = grow_tree(Xt, y, np.ones(len(y), dtype=np.int64), order,
                               max_depth=self.max_depth, min_leaf=self.min_leaf,
                               min_gain=self.min_gain, max_features=self.n_features_,
                               extra=False, seed=0)
        return self

    def predict_proba(self, X) -> np.ndarray:
        return self.tree_.predict(check_X(X, self.n_features_))


def grow_tree(Xt, y, counts, order, *, max_depth, min_leaf, min_gain, max_features,
              extra, seed) -> Tree:
    arrays = kernels.build_classifier_tree(
        Xt, y, counts, order, N_MODES, -1 if max_depth is None else int(max_depth),
        int(min_leaf), float(min_gain), int(max_features), bool(extra), int(seed),
    )
    return Tree.from_arrays(arrays)


def fit_tree(X, y, max_depth=None, min_leaf=1, min_gain=0.0) -> DecisionTree:
    return DecisionTree(max_depth, min_leaf, min_gain).fit(X, y)
