"""Multiclass Newton boosting with a softmax objective.

Each round fits one regression tree per class on the gradient ``p - y`` and
hessian ``p (1 - p)`` of the multinomial log-loss, with leaf weight
``-G / (H + lambda)`` shrunk by the learning rate.
"""
from __future__ import annotations

import numpy as np

from .. import kernels
from ..core import N_MODES
from .tree import Classifier, Tree, check_X, check_Xy, presort

PRIOR_FLOOR = 1e-12
HESS_FLOOR = 1e-16


def softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def log_loss(P: np.ndarray, y: np.ndarray) -> float:
    return float(-np.mean(np.log(np.clip(P[np.arange(len(y)), y], 1e-300, None))))


class BoostedTrees(Classifier):
    kind = "BOOST"

    def __init__(self, n_rounds=200, learning_rate=0.1, max_depth=6, reg_lambda=1.0,
                 min_leaf=1, min_child_weight=0.0, min_gain=0.0, seed=0):
        if n_rounds < 1:
            raise ValueError("n_rounds must be >= 1")
        if not learning_rate >= 0:
            raise ValueError("learning_rate must be nonnegative")
        self.n_rounds = int(n_rounds)
        self.learning_rate = float(learning_rate)
        self.max_depth = max_depth
        self.reg_lambda = float(reg_lambda)
        self.min_leaf = int(min_leaf)
        self.min_child_weight = float(min_child_weight)
        self.min_gain = float(min_gain)
        self.seed = int(seed)  # no row/column subsampling; kept for a uniform learner API
        self.base_scores_: np.ndarray | None = None
        self.trees_: list[list[Tree]] = []
        self.train_loss_: list[float] = []

    def get_params(self) -> dict:
        return {"n_rounds": self.n_rounds, "learning_rate": self.learning_rate,
                "max_depth": self.max_depth, "reg_lambda": self.reg_lambda,
                "min_leaf": self.min_leaf, "min_child_weight": self.min_child_weight,
                "min_gain": self.min_gain, "seed": self.seed}

    def fit(self, X, y, presorted=None):
        X, y = check_Xy(X, y)
        n, self.n_features_ = X.shape
        Xt, order = presorted if presorted is not None else presort(X)
        K = self.n_classes
        priors = np.bincount(y, minlength=K) / n
        self.base_scores_ = np.log(np.maximum(priors, PRIOR_FLOOR))
        Y = np.zeros((n, K))
        Y[np.arange(n), y] = 1.0
        margin = np.tile(self.base_scores_, (n, 1))
        max_depth = -1 if self.max_depth is None else int(self.max_depth)
        self.trees_ = []
        P = softmax(margin)
        self.train_loss_ = [log_loss(P, y)]
        for _ in range(self.n_rounds):
            round_trees = []
            for k in range(K):
                g = P[:, k] - Y[:, k]
                h = np.maximum(P[:, k] * (1.0 - P[:, k]), HESS_FLOOR)
                arrays = kernels.build_regressor_tree(
                    Xt, g, h, order, max_depth, self.min_leaf, self.reg_lambda,
                    self.min_gain, self.min_child_weight)
                arrays["value"] = arrays["value"] * self.learning_rate
                round_trees.append(Tree.from_arrays(arrays))
            for k, t in enumerate(round_trees):
                margin[:, k] += t.predict(X)[:, 0]
            self.trees_.append(round_trees)
            P = softmax(margin)
            self.train_loss_.append(log_loss(P, y))
        return self

    def decision_function(self, X) -> np.ndarray:
        """Raw per-class margins (pre-softmax)."""
        X = check_X(X, self.n_features_)
        margin = np.tile(self.base_scores_, (X.shape[0], 1))
        for round_trees in self.trees_:
            for k, t in enumerate(round_trees):
                margin[:, k] += t.predict(X)[:, 0]
        return margin

    def predict_proba(self, X) -> np.ndarray:
        return softmax(self.decision_function(X))


def fit_boosted(X, y, n_rounds=200, learning_rate=0.1, max_depth=6, reg_lambda=1.0,
                seed=0, **kw) -> BoostedTrees:
    return BoostedTrees(n_rounds, learning_rate, max_depth, reg_lambda, seed=seed, **kw).fit(X, y)


__all__ = ["BoostedTrees", "fit_boosted", "softmax", "log_loss", "N_MODES"]
