"""Classification metrics, one-vs-rest ROC curves and bootstrap standard errors."""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

from .core import N_MODES
from .errors import EmptyMatrix, LengthMismatch, UndefinedAuc
from .seeding import derive_seed


def confusion(predictions, truths, n_classes: int = N_MODES) -> np.ndarray:
    """Count matrix with rows = truth and columns = prediction (0-based labels)."""
    p = np.asarray(predictions, dtype=np.int64)
    t = np.asarray(truths, dtype=np.int64)
    if p.shape != t.shape:
        raise LengthMismatch(f"{len(p)} predictions vs {len(t)} truths")
    if p.size == 0:
        raise LengthMismatch("no records to evaluate")
    cm = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(cm, (t, p), 1)
    return cm


def metrics(cm) -> dict:
    """Accuracy, balanced accuracy and support-weighted / macro precision, recall, F1.

    Balanced accuracy averages recall over classes present in the truth.
    Precision of a class that is never predicted is taken as 0.
    """
    cm = np.asarray(cm, dtype=np.float64)
    total = cm.sum()
    if total <= 0:
        raise EmptyMatrix("confusion matrix is empty")
    tp = np.diag(cm)
    support = cm.sum(axis=1)
    predicted = cm.sum(axis=0)
    present = support > 0
    recall = np.divide(tp, support, out=np.zeros_like(tp), where=present)
    precision = np.divide(tp, predicted, out=np.zeros_like(tp), where=predicted > 0)
    denom = precision + recall
    f1 = np.divide(2 * precision * recall, denom, out=np.zeros_like(tp), where=denom > 0)
    w = support / total
    return {
        "accuracy": float(tp.sum() / total),
        "balanced_accuracy": float(recall[present].mean()),
        "precision_weighted": float((w * precision).sum()),
        "recall_weighted": float((w * recall).sum()),
        "f1_weighted": float((w * f1).sum()),
        "precision_macro": float(precision[present].mean()),
        "recall_macro": float(recall[present].mean()),
        "f1_macro": float(f1[present].mean()),
        "n": int(total),
    }


def evaluate(proba, truths, B: int = 1000, seed: int = 0, roc: bool = True) -> dict:
    """Full metric report for a probability matrix."""
    proba = np.asarray(proba)
    pred = np.argmax(proba, axis=1)
    out = metrics(confusion(pred, truths))
    out["accuracy_se"] = bootstrap_se_accuracy(pred, truths, B, seed) if B >= 2 else None
    if roc:
        aucs = {}
        for m in range(N_MODES):
            try:
                aucs[f"mode{m + 1}"] = roc_curve(proba, truths, m).auc
            except UndefinedAuc:
                aucs[f"mode{m + 1}"] = None
        defined = [a for a in aucs.values() if a is not None]
        out["auc"] = aucs
        out["auc_mean"] = float(np.mean(defined)) if defined else None
    return out


@dataclass
class RocCurve:
    mode: int
    thresholds: np.ndarray
    fpr: np.ndarray
    tpr: np.ndarray
    auc: float

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["threshold", "fpr", "tpr"])
            for row in zip(self.thresholds, self.fpr, self.tpr):
                w.writerow([repr(float(v)) for v in row])


def roc_curve(probabilities, truths, mode: int) -> RocCurve:
    """One-vs-rest ROC for the 0-based ``mode``.

    One point per distinct score, so tied scores form a single diagonal step
    and the trapezoid over it counts tied pairs as half correct.
    """
    P = np.asarray(probabilities, dtype=np.float64)
    scores = P[:, mode] if P.ndim == 2 else P
    pos = np.asarray(truths) == mode
    n_pos, n_neg = int(pos.sum()), int((~pos).sum())
    if n_pos == 0 or n_neg == 0:
        raise UndefinedAuc(f"mode index {mode} has {n_pos} positives and {n_neg} negatives")
    order = np.argsort(-scores, kind="stable")
    s = scores[order]
    p = pos[order]
    last = np.r_[np.flatnonzero(np.diff(s) != 0), len(s) - 1]
    tp = np.cumsum(p)[last]
    fp = np.cumsum(~p)[last]
    tpr = np.r_[0.0, tp / n_pos]
    fpr = np.r_[0.0, fp / n_neg]
    thr = np.r_[np.inf, s[last]]
    auc = float(np.sum((fpr[1:] - fpr[:-1]) * (tpr[1:] + tpr[:-1]) / 2.0))
    return RocCurve(mode, thr, fpr, tpr, auc)


def bootstrap_se_accuracy(predictions, truths, B: int = 1000, seed: int = 0) -> float:
    """Sample standard deviation of accuracy over ``B`` with-replacement resamples."""
    if B < 2:
        raise ValueError("B must be at least 2")
    hit = (np.asarray(predictions) == np.asarray(truths)).astype(np.float64)
    n = len(hit)
    if n == 0:
        raise LengthMismatch("no records to evaluate")
    rng = np.random.default_rng(derive_seed(seed, "bootstrap"))
    accs = np.empty(B)
    for b in range(B):
        accs[b] = hit[rng.integers(0, n, n)].mean()
    return float(accs.std(ddof=1))


def write_metrics_json(report: dict, path) -> None:
    """Stable, byte-reproducible JSON (sorted keys, shortest round-trip floats)."""
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")


def write_roc_csvs(proba, truths, prefix) -> list[str]:
    paths = []
    for m in range(N_MODES):
        try:
            c = roc_curve(proba, truths, m)
        except UndefinedAuc:
            continue
        path = f"{prefix}_mode{m + 1}.csv"
        c.to_csv(path)
        paths.append(path)
    return paths


__all__ = ["confusion", "metrics", "evaluate", "RocCurve", "roc_curve", "bootstrap_se_accuracy",
           "write_metrics_json", "write_roc_csvs"]
