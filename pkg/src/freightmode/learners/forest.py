"""Random forest, bagged trees and extremely randomized trees."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from ..seeding import derive_seed
from .tree import Classifier, Tree, check_X, check_Xy, grow_tree, presort

VARIANTS = ("RF", "BAG", "Extra")
# worker threads used when a forest is built with n_jobs=None; the kernels release the GIL
N_JOBS = 1


def resolve_max_features(max_features, n_features: int) -> int:
    if max_features is None or max_features == "all":
        return n_features
    if max_features == "sqrt":
        return max(1, int(math.sqrt(n_features)))
    if isinstance(max_features, float):
        return max(1, min(n_features, int(max_features * n_features)))
    return max(1, min(n_features, int(max_features)))


class Forest(Classifier):
    """Averaged ensemble of CART trees.

    ``RF`` bootstraps rows and samples ``sqrt(n_features)`` split candidates
    per node; ``BAG`` bootstraps rows and searches all features; ``Extra``
    uses every row and draws one random threshold per candidate feature.
    Prediction is the mean of the member trees' leaf distributions.
    """

    def __init__(self, variant="RF", n_trees=200, max_depth=None, min_leaf=5,
                 max_features=None, bootstrap=None, seed=0, n_jobs=None):
        if variant not in VARIANTS:
            raise ValueError(f"unknown forest variant {variant!r}")
        self.variant = variant
        self.kind = variant
        self.n_trees = int(n_trees)
        self.max_depth = max_depth
        self.min_leaf = min_leaf
        if max_features is None:
            max_features = "all" if variant == "BAG" else "sqrt"
        self.max_features = max_features
        self.bootstrap = variant != "Extra" if bootstrap is None else bool(bootstrap)
        self.seed = int(seed)
        self.n_jobs = n_jobs
        self.trees_: list[Tree] = []
        if self.n_trees < 1:
            raise ValueError("n_trees must be >= 1")

    def get_params(self) -> dict:
        return {"variant": self.variant, "n_trees": self.n_trees, "max_depth": self.max_depth,
                "min_leaf": self.min_leaf, "max_features": self.max_features,
                "bootstrap": self.bootstrap, "seed": self.seed}

    def fit(self, X, y, presorted=None):
        X, y = check_Xy(X, y)
        n, self.n_features_ = X.shape
        Xt, order = presorted if presorted is not None else presort(X)
        mtry = resolve_max_features(self.max_features, self.n_features_)
        self.max_features_ = mtry

        def one(i):
            tree_seed = derive_seed(self.seed, "tree", i)
            if self.bootstrap:
                rng = np.random.default_rng(tree_seed)
                counts = np.bincount(rng.integers(0, n, n), minlength=n)
            else:
                counts = np.ones(n, dtype=np.int64)
            return grow_tree(Xt, y, counts, order, max_depth=self.max_depth,
                             min_leaf=self.min_leaf, min_gain=0.0, max_features=mtry,
                             extra=self.variant == "Extra", seed=tree_seed)

        n_jobs = N_JOBS if self.n_jobs is None else self.n_jobs
        if n_jobs > 1:
            with ThreadPoolExecutor(n_jobs) as pool:
                self.trees_ = list(pool.map(one, range(self.n_trees)))
        else:
            self.trees_ = [one(i) for i in range(self.n_trees)]
        return self

    def predict_proba(self, X) -> np.ndarray:
        X = check_X(X, self.n_features_)
        acc = np.zeros((X.shape[0], self.n_classes))
        for t in self.trees_:
            acc += t.predict(X)
        return acc / len(self.trees_)


def fit_forest(X, y, n_trees=200, variant="RF", max_depth=None, min_leaf=5,
               feature_subsample=None, seed=0, bootstrap=None, n_jobs=None) -> Forest:
    return Forest(variant, n_trees, max_depth, min_leaf, feature_subsample, bootstrap,
                  seed, n_jobs).fit(X, y)
