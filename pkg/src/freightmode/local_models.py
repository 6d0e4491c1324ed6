"""Dedicated per-category models concatenated behind one dispatching predictor."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .core import N_MODES
from .features import FeatureSchema
from .learners import Classifier, LearnerSpec, make_learner
from .seeding import derive_seed

KEYS = ("sctg", "naics")


@dataclass
class GlobalModel:
    """One learner over every row, reading features through ``schema``."""

    spec: LearnerSpec
    schema: FeatureSchema
    learner: Classifier

    scope = "global"

    def predict_proba(self, frame: pd.DataFrame, X: np.ndarray | None = None) -> np.ndarray:
        if X is None:
            X = self.schema.transform(frame)
        return self.learner.predict_proba(X)


def fit_global(train: pd.DataFrame, y, spec: LearnerSpec, schema: FeatureSchema, seed=0,
               X: np.ndarray | None = None) -> GlobalModel:
    if X is None:
        X = schema.transform(train)
    learner = make_learner(spec, derive_seed(seed, "global", spec.kind)).fit(X, y)
    return GlobalModel(spec, schema, learner)


@dataclass
class SegmentedModel:
    """Category -> learner, with a global fallback for small or unseen categories.

    Local models drop the one-hot block of their own key (it is constant inside
    a segment) but keep the other key's block.
    """

    key: str
    spec: LearnerSpec
    schema: FeatureSchema  # full layout; the fallback reads it as is
    min_samples: int
    models: dict = field(default_factory=dict)
    fallback: GlobalModel | None = None

    @property
    def scope(self) -> str:
        return self.key

    @property
    def local_schema(self) -> FeatureSchema:
        return self.schema.without_block(self.key)

    @property
    def categories(self) -> list[str]:
        return sorted(self.models)

    def model_for(self, category):
        return self.models.get(str(category))

    def predict_proba(self, frame: pd.DataFrame, X: np.ndarray | None = None) -> np.ndarray:
        if X is None:
            X = self.schema.transform(frame)
        cols = _columns(self.schema, self.local_schema)
        cats = frame[self.key].astype(str).to_numpy()
        out = np.empty((len(frame), N_MODES))
        routed = np.zeros(len(frame), dtype=bool)
        for c in np.unique(cats):
            m = self.models.get(c)
            if m is None:
                continue
            rows = np.flatnonzero(cats == c)
            out[rows] = m.predict_proba(X[np.ix_(rows, cols)])
            routed[rows] = True
        if (~routed).any():
            out[~routed] = self.fallback.predict_proba(frame[~routed], X[~routed])
        return out


def _columns(full: FeatureSchema, sub: FeatureSchema) -> np.ndarray:
    pos = {n: i for i, n in enumerate(full.names)}
    return np.array([pos[n] for n in sub.names], dtype=np.int64)


def fit_segmented(train: pd.DataFrame, y, key: str, spec: LearnerSpec, schema: FeatureSchema,
                  min_samples: int = 50, seed: int = 0, fallback: GlobalModel | None = None,
                  X: np.ndarray | None = None) -> SegmentedModel:
    """Fit one learner per ``key`` category having at least ``min_samples`` rows.

    ``fallback`` may be passed to share an already fitted global model of the
    same learner; otherwise one is fit on all rows.
    """
    if key not in KEYS:
        raise ValueError(f"segment key must be one of {KEYS}")
    y = np.asarray(y)
    if X is None:
        X = schema.transform(train)
    model = SegmentedModel(key, spec, schema, int(min_samples))
    cols = _columns(schema, model.local_schema)
    cats = train[key].astype(str).to_numpy()
    for c in sorted(np.unique(cats)):
        rows = np.flatnonzero(cats == c)
        if len(rows) < min_samples:
            continue
        learner = make_learner(spec, derive_seed(seed, key, c, spec.kind))
        model.models[c] = learner.fit(X[np.ix_(rows, cols)], y[rows])
    model.fallback = fallback if fallback is not None else fit_global(train, y, spec, schema, seed, X)
    return model


def predict_segmented(model: SegmentedModel, frame: pd.DataFrame) -> np.ndarray:
    """Dispatch each prepared row to its category's model, else the fallback."""
    return model.predict_proba(frame)


__all__ = ["GlobalModel", "SegmentedModel", "fit_global", "fit_segmented", "predict_segmented",
           "KEYS"]
