"""Feature importance and Shapley attributions for tree models.

Attributions use the path-dependent convention: a feature outside the
coalition is integrated out by following both children of a split in
proportion to their training cover. ``brute_force_shapley`` enumerates every
coalition under the same convention and serves as an exact reference for
``tree_shap``.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from math import factorial

import numpy as np
import pandas as pd

from . import kernels
from .errors import TooManyFeatures, UnknownFeature
from .learners import BoostedTrees, DecisionTree, Forest, Tree

MAX_BRUTE_FORCE_FEATURES = 12


def _unwrap(model):
    # GlobalModel and similar wrappers keep the fitted learner in ``learner``
    return getattr(model, "learner", model)


def _trees(model) -> list[Tree]:
    model = _unwrap(model)
    if isinstance(model, Tree):
        return [model]
    if isinstance(model, DecisionTree):
        return [model.tree_]
    if isinstance(model, Forest):
        return list(model.trees_)
    if isinstance(model, BoostedTrees):
        return [t for rnd in model.trees_ for t in rnd]
    raise TypeError(f"not a tree model: {type(model).__name__}")


def _n_features(model) -> int:
    m = _unwrap(model)
    if isinstance(m, Tree):
        return int(m.feature.max()) + 1 if (m.feature >= 0).any() else 0
    return m.n_features_


def _normalize(imp: np.ndarray) -> np.ndarray:
    s = imp.sum()
    return imp / s if s > 0 else imp


def impurity_importance(model, names=None, n_features: int | None = None) -> dict | np.ndarray:
    """Mean decrease in impurity, each split weighted by its share of the root cover.

    Averaged over the trees of a forest and normalized to sum to one. A model
    with no splits yields all zeros.
    """
    F = n_features if n_features is not None else (len(names) if names is not None else _n_features(model))
    imp = np.zeros(F)
    trees = _trees(model)
    for t in trees:
        internal = t.feature >= 0
        np.add.at(imp, t.feature[internal], t.cover[internal] / t.cover[0] * t.gain[internal])
    imp = _normalize(imp / len(trees))
    return dict(zip(names, imp.tolist())) if names is not None else imp


def gain_importance(model, names=None, average: bool = False) -> dict | np.ndarray:
    """Boosting importance: total (or mean per split) structure-score gain per feature."""
    m = _unwrap(model)
    F = len(names) if names is not None else m.n_features_
    total = np.zeros(F)
    count = np.zeros(F)
    for t in _trees(m):
        internal = t.feature >= 0
        np.add.at(total, t.feature[internal], t.gain[internal])
        np.add.at(count, t.feature[internal], 1)
    imp = np.divide(total, count, out=np.zeros(F), where=count > 0) if average else total
    imp = _normalize(imp)
    return dict(zip(names, imp.tolist())) if names is not None else imp


# --- Shapley values ---------------------------------------------------------------


@dataclass
class ShapResult:
    phi: np.ndarray  # (n_rows, n_features, n_outputs)
    base: np.ndarray  # (n_outputs,)
    output: np.ndarray  # (n_rows, n_outputs) model output on the attributed scale
    scale: str  # "probability" or "margin"

    def subset(self, rows) -> "ShapResult":
        return ShapResult(self.phi[rows], self.base, self.output[rows], self.scale)

    def local_accuracy_error(self) -> float:
        return float(np.abs(self.phi.sum(axis=1) + self.base - self.output).max())


def _tree_phi(t: Tree, X) -> np.ndarray:
    return kernels.tree_shap(X, t.feature, t.threshold, t.left, t.right, t.value, t.cover)


def tree_shap(model, X, background=None) -> ShapResult:
    """Exact path-dependent TreeSHAP.

    Forest attributions are the mean over trees on the probability scale.
    Boosted attributions are per class on the margin scale, with the base
    equal to the mean training margin. ``background`` is accepted for API
    symmetry; the training cover stored in the trees plays its role.
    """
    m = _unwrap(model)
    X = np.ascontiguousarray(np.asarray(X, dtype=np.float64))
    if X.ndim == 1:
        X = X[None, :]
    if isinstance(m, BoostedTrees):
        K = len(m.base_scores_)
        phi = np.zeros((X.shape[0], X.shape[1], K))
        base = m.base_scores_.astype(np.float64).copy()
        for rnd in m.trees_:
            for k, t in enumerate(rnd):
                phi[:, :, k] += _tree_phi(t, X)[:, :, 0]
                base[k] += t.expected_value()[0]
        return ShapResult(phi, base, m.decision_function(X), "margin")
    trees = _trees(m)
    phi = sum(_tree_phi(t, X) for t in trees) / len(trees)
    base = sum(t.expected_value() for t in trees) / len(trees)
    out = sum(t.predict(X) for t in trees) / len(trees)
    return ShapResult(phi, base, out, "probability")


def _coalition_values(t: Tree, x, F: int) -> np.ndarray:
    """v(S) for every coalition bitmask S, shape (2**F, n_outputs)."""
    masks = np.arange(1 << F)
    vals: dict[int, np.ndarray] = {}
    for node in range(t.n_nodes - 1, -1, -1):  # children are stored after their parent
        f = t.feature[node]
        if f < 0:
            vals[node] = np.broadcast_to(t.value[node], (len(masks), t.value.shape[1]))
            continue
        l, r = t.left[node], t.right[node]
        hot = l if x[f] <= t.threshold[node] else r
        mix = (t.cover[l] * vals[l] + t.cover[r] * vals[r]) / t.cover[node]
        known = ((masks >> f) & 1).astype(bool)[:, None]
        vals[node] = np.where(known, vals[hot], mix)
        del vals[l], vals[r]
    return vals[0]


def _shapley_from_values(v: np.ndarray, F: int) -> np.ndarray:
    masks = np.arange(1 << F)
    size = np.array([bin(s).count("1") for s in masks])
    w = np.array([factorial(k) * factorial(F - k - 1) / factorial(F) if k < F else 0.0
                  for k in range(F + 1)])
    phi = np.zeros((F, v.shape[1]))
    for i in range(F):
        without = masks[((masks >> i) & 1) == 0]
        phi[i] = (w[size[without]][:, None] * (v[without | (1 << i)] - v[without])).sum(axis=0)
    return phi


def brute_force_shapley(model, x, background=None) -> tuple[np.ndarray, np.ndarray]:
    """Exact Shapley values by coalition enumeration; returns ``(phi, base)``.

    ``phi`` has shape (n_features, n_outputs). Scales follow :func:`tree_shap`.
    """
    m = _unwrap(model)
    x = np.asarray(x, dtype=np.float64).ravel()
    F = len(x)
    if F > MAX_BRUTE_FORCE_FEATURES:
        raise TooManyFeatures(f"{F} features exceed the enumeration limit of {MAX_BRUTE_FORCE_FEATURES}")
    if isinstance(m, BoostedTrees):
        v = np.tile(m.base_scores_.astype(np.float64), (1 << F, 1))
        for rnd in m.trees_:
            for k, t in enumerate(rnd):
                v[:, k] += _coalition_values(t, x, F)[:, 0]
    else:
        trees = _trees(m)
        v = sum(_coalition_values(t, x, F) for t in trees) / len(trees)
    return _shapley_from_values(v, F), v[0].copy()


# --- summaries and exports --------------------------------------------------------


def shap_summary(shap: ShapResult | np.ndarray, names) -> pd.DataFrame:
    """Mean |phi| per feature and output, ranked by the total over outputs."""
    phi = shap.phi if isinstance(shap, ShapResult) else np.asarray(shap)
    mean_abs = np.abs(phi).mean(axis=0)
    df = pd.DataFrame(mean_abs, columns=[f"class{k + 1}" for k in range(mean_abs.shape[1])])
    df.insert(0, "feature", list(names))
    df["total"] = mean_abs.sum(axis=1)
    return df.sort_values(["total", "feature"], ascending=[False, True], kind="mergesort").reset_index(drop=True)


def write_summary_csv(summary: pd.DataFrame, path) -> None:
    rows = summary.melt(id_vars=["feature"], value_vars=[c for c in summary.columns if c.startswith("class")],
                        var_name="class", value_name="mean_abs_phi")
    rows["class"] = rows["class"].str.replace("class", "", regex=False).astype(int)
    rows[["class", "feature", "mean_abs_phi"]].to_csv(path, index=False, float_format="%.17g")


def write_swarm_csv(shap: ShapResult, X, names, path, ids=None) -> None:
    X = np.asarray(X)
    n, F, K = shap.phi.shape
    ids = list(range(n)) if ids is None else list(ids)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["record", "class", "feature", "phi", "feature_value"])
        for r in range(n):
            for k in range(K):
                for j in range(F):
                    w.writerow([ids[r], k + 1, names[j], repr(float(shap.phi[r, j, k])), repr(float(X[r, j]))])


def shap_dependence_export(shap: ShapResult | np.ndarray, X, names, feature: str,
                           interaction: str | None = None, output: int = 0, path=None) -> pd.DataFrame:
    """Points (feature value, phi, interaction value) for one feature and output."""
    names = list(names)
    for f in (feature, interaction):
        if f is not None and f not in names:
            raise UnknownFeature(f"feature {f!r} not in schema")
    phi = shap.phi if isinstance(shap, ShapResult) else np.asarray(shap)
    X = np.asarray(X)
    j = names.index(feature)
    df = pd.DataFrame({"feature_value": X[:, j], "phi": phi[:, j, output]})
    df["interaction_value"] = X[:, names.index(interaction)] if interaction else np.nan
    if path is not None:
        df.to_csv(path, index=False, float_format="%.17g")
    return df


def read_dependence_csv(path) -> pd.DataFrame:
    return pd.read_csv(path, float_precision="round_trip")


def force_json(shap: ShapResult, names, path=None, ids=None) -> list[dict]:
    """Per-record {base, phi per feature, output} for each output class."""
    n, F, K = shap.phi.shape
    ids = list(range(n)) if ids is None else list(ids)
    recs = []
    for r in range(n):
        recs.append({
            "record": ids[r] if not isinstance(ids[r], np.generic) else ids[r].item(),
            "scale": shap.scale,
            "classes": [{"class": k + 1, "base": float(shap.base[k]), "output": float(shap.output[r, k]),
                         "phi": {names[j]: float(shap.phi[r, j, k]) for j in range(F)}}
                        for k in range(K)],
        })
    if path is not None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(recs, fh, indent=1)
            fh.write("\n")
    return recs


__all__ = ["impurity_importance", "gain_importance", "ShapResult", "tree_shap",
           "brute_force_shapley", "shap_summary", "shap_dependence_export", "write_summary_csv",
           "write_swarm_csv", "force_json", "read_dependence_csv", "MAX_BRUTE_FORCE_FEATURES"]
