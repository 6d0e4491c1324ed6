"""Level-1 learners and a factory keyed by short learner names."""
from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import UnsupportedLearner
from .baselines import KNearest, LogisticRegression, NaiveBayes, fit_baseline
from .boosting import BoostedTrees, fit_boosted, softmax
from .forest import Forest, fit_forest
from .tree import Classifier, DecisionTree, Tree, fit_tree, gini, presort

TREE_KINDS = ("DT", "RF", "BAG", "Extra", "BOOST")
BASELINE_KINDS = ("LR", "NB", "KNN")
KNOWN_KINDS = TREE_KINDS + BASELINE_KINDS
# listed in the comparison tables of the reference study but not provided here
UNSUPPORTED_KINDS = ("SVM", "MLP", "ADA")


@dataclass(frozen=True)
class LearnerSpec:
    kind: str
    params: dict = field(default_factory=dict, hash=False, compare=True)

    def __post_init__(self):
        if self.kind in UNSUPPORTED_KINDS:
            raise UnsupportedLearner(f"unsupported learner {self.kind!r}")
        if self.kind not in KNOWN_KINDS:
            raise UnsupportedLearner(f"unknown learner {self.kind!r}")

    @property
    def uses_seed(self) -> bool:
        return self.kind in ("RF", "BAG", "Extra", "BOOST")

    def to_dict(self) -> dict:
        return {"kind": self.kind, "params": dict(self.params)}


def make_learner(spec: LearnerSpec, seed: int = 0) -> Classifier:
    p = dict(spec.params)
    if spec.kind == "DT":
        return DecisionTree(**p)
    if spec.kind in ("RF", "BAG", "Extra"):
        p.setdefault("seed", seed)
        return Forest(variant=spec.kind, **p)
    if spec.kind == "BOOST":
        p.setdefault("seed", seed)
        return BoostedTrees(**p)
    if spec.kind == "LR":
        return LogisticRegression(**p)
    if spec.kind == "NB":
        return NaiveBayes(**p)
    return KNearest(**p)


__all__ = [
    "Classifier", "DecisionTree", "Forest", "BoostedTrees", "LogisticRegression", "NaiveBayes",
    "KNearest", "Tree", "LearnerSpec", "make_learner", "fit_tree", "fit_forest",
    "fit_boosted", "fit_baseline", "gini", "presort", "softmax", "TREE_KINDS",
    "BASELINE_KINDS", "KNOWN_KINDS", "UNSUPPORTED_KINDS",
]
