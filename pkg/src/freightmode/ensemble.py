"""Probability voting and two-level stacking over global and segmented learners."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .core import N_MODES
from .errors import NoModelsAvailable, SchemaMismatch
from .features import FeatureSchema
from .learners import BoostedTrees, LearnerSpec
from .local_models import GlobalModel, SegmentedModel, fit_global, fit_segmented
from .seeding import derive_seed

SCOPES = ("global", "sctg", "naics")
DEFAULT_PASSTHROUGH = ("sw", "sv", "v2w", "gc_dist", "M1", "M2", "M3", "M4", "M5")
DEFAULT_META = {"n_rounds": 60, "learning_rate": 0.15, "max_depth": 4, "reg_lambda": 1.0}


@dataclass(frozen=True)
class Family:
    """A level-1 family: one learner spec applied at one modeling scope."""

    spec: LearnerSpec
    scope: str = "global"

    def __post_init__(self):
        if self.scope not in SCOPES:
            raise ValueError(f"scope must be one of {SCOPES}")

    @property
    def name(self) -> str:
        return f"{self.spec.kind}-{self.scope}"


def default_roster(params: dict | None = None) -> list[Family]:
    """{RF, BAG, Extra} x {global, sctg, naics}; ``params`` maps kind -> learner params."""
    params = params or {}
    return [Family(LearnerSpec(k, dict(params.get(k, {}))), s)
            for k in ("RF", "BAG", "Extra") for s in SCOPES]


def fit_family(fam: Family, train: pd.DataFrame, y, schema: FeatureSchema, seed: int = 0,
               min_samples: int = 50, X=None, fallback: GlobalModel | None = None):
    if fam.scope == "global":
        return fit_global(train, y, fam.spec, schema, seed, X)
    return fit_segmented(train, y, fam.scope, fam.spec, schema, min_samples, seed,
                         fallback=fallback, X=X)


def fit_families(roster, train, y, schema, seed=0, min_samples=50, X=None) -> dict:
    """Fit every family; segmented families reuse the matching global fit as fallback."""
    if X is None:
        X = schema.transform(train)
    fitted: dict[str, object] = {}
    globals_: dict[str, GlobalModel] = {}
    for fam in sorted(roster, key=lambda f: f.scope != "global"):
        fb = globals_.get(fam.spec.kind) if fam.scope != "global" else None
        if fam.scope != "global" and fb is None:
            fb = fit_global(train, y, fam.spec, schema, seed, X)
            globals_[fam.spec.kind] = fb
        m = fit_family(fam, train, y, schema, seed, min_samples, X, fb)
        if fam.scope == "global":
            globals_[fam.spec.kind] = m
        fitted[fam.name] = m
    return {f.name: fitted[f.name] for f in roster}


# --- voting --------------------------------------------------------------------


@dataclass
class PoolEntry:
    source: str  # "sctg-local", "naics-local" or "global"
    kind: str
    model: object
    category: str | None = None

    def predict_proba(self, frame):
        return self.model.predict_proba(frame)


def collect_models_for_record(record, model_types, registry: dict) -> list[PoolEntry]:
    """Pool the record's SCTG-local, NAICS-local and global learners of the given kinds.

    ``registry`` maps (scope, kind) to a fitted model; ``record`` is anything
    with ``sctg`` and ``naics`` attributes or keys. A segmented model with no
    local learner for the record's category contributes its fallback.
    """
    get = record.get if isinstance(record, (dict, pd.Series)) else lambda k: getattr(record, k)
    pool = []
    for kind in model_types:
        for scope, source in (("sctg", "sctg-local"), ("naics", "naics-local"), ("global", "global")):
            m = registry.get((scope, kind))
            if m is None:
                continue
            if isinstance(m, SegmentedModel):
                cat = str(get(scope))
                pool.append(PoolEntry(source, kind, m, cat))
            else:
                pool.append(PoolEntry(source, kind, m))
    if not pool:
        raise NoModelsAvailable(f"no fitted models for types {list(model_types)}")
    return pool


def vote_average(outputs) -> np.ndarray:
    """Unweighted mean of probability vectors (or of equally shaped matrices)."""
    arr = np.asarray([np.asarray(o, dtype=np.float64) for o in outputs])
    if len(arr) == 0:
        raise NoModelsAvailable("cannot vote over an empty pool")
    return arr.mean(axis=0)


def vote_predict(models, frame: pd.DataFrame, X=None) -> np.ndarray:
    """Average the probability outputs of fitted models over a prepared frame."""
    return vote_average([m.predict_proba(frame, X) for m in models])


# --- stacking ------------------------------------------------------------------


@dataclass
class OofAudit:
    """Which folds trained the model behind each block of meta-features."""

    folds: np.ndarray
    entries: list = field(default_factory=list)  # (family, predicted rows, training folds)

    def record(self, family: str, rows: np.ndarray, train_rows: np.ndarray) -> None:
        self.entries.append((family, np.asarray(rows), frozenset(np.unique(self.folds[train_rows]).tolist())))

    def violations(self) -> int:
        """Meta-feature rows produced by a model whose training folds include the row's fold."""
        bad = 0
        for _, rows, trained_on in self.entries:
            bad += int(np.isin(self.folds[rows], list(trained_on)).sum())
        return bad

    def coverage(self, n_families: int) -> bool:
        """Every row received exactly one prediction per family."""
        counts = np.zeros(len(self.folds), dtype=np.int64)
        for _, rows, _ in self.entries:
            np.add.at(counts, rows, 1)
        return bool((counts == n_families).all())


def layout(roster, passthrough) -> list[str]:
    return [f"{f.name}_p{m + 1}" for f in roster for m in range(N_MODES)] + list(passthrough)


def passthrough_matrix(frame: pd.DataFrame, schema: FeatureSchema, names, X=None) -> np.ndarray:
    if not names:
        return np.zeros((len(frame), 0))
    if X is None:
        X = schema.transform(frame)
    try:
        idx = [schema.index(n) for n in names]
    except ValueError as exc:
        raise SchemaMismatch(f"passthrough feature missing from schema: {exc}") from None
    return X[:, idx]


def build_oof_meta_features(train: pd.DataFrame, y, roster, folds, schema: FeatureSchema,
                            passthrough=DEFAULT_PASSTHROUGH, seed: int = 0, min_samples: int = 50,
                            X=None):
    """Out-of-fold level-1 probabilities plus passthrough columns.

    Returns ``(meta, audit)``. For each fold every family is refit on the
    other folds and predicts the held-out rows only.
    """
    y = np.asarray(y)
    folds = np.asarray(folds)
    if X is None:
        X = schema.transform(train)
    n = len(train)
    meta = np.full((n, N_MODES * len(roster)), np.nan)
    audit = OofAudit(folds)
    for f in np.unique(folds):
        tr = np.flatnonzero(folds != f)
        te = np.flatnonzero(folds == f)
        sub = train.iloc[tr].reset_index(drop=True)
        held = train.iloc[te].reset_index(drop=True)
        fitted = fit_families(roster, sub, y[tr], schema, derive_seed(seed, "fold", int(f)),
                              min_samples, X[tr])
        for j, fam in enumerate(roster):
            meta[te, j * N_MODES:(j + 1) * N_MODES] = fitted[fam.name].predict_proba(held, X[te])
            audit.record(fam.name, te, tr)
    if audit.violations():
        raise AssertionError("out-of-fold protocol violated")
    meta = np.hstack([meta, passthrough_matrix(train, schema, passthrough, X)])
    return meta, audit


@dataclass
class StackedModel:
    roster: list
    models: dict  # family name -> fitted level-1 model (all training rows)
    meta: BoostedTrees
    passthrough: tuple
    k: int
    schema: FeatureSchema
    layout: list

    def level1(self, frame, X=None, roster=None) -> np.ndarray:
        roster = self.roster if roster is None else roster
        if layout(roster, self.passthrough) != self.layout:
            raise SchemaMismatch("roster order differs from the layout the meta-learner was fit on")
        if X is None:
            X = self.schema.transform(frame)
        blocks = [self.models[f.name].predict_proba(frame, X) for f in roster]
        blocks.append(passthrough_matrix(frame, self.schema, self.passthrough, X))
        return np.hstack(blocks)

    def predict_proba(self, frame, X=None, roster=None) -> np.ndarray:
        return self.meta.predict_proba(self.level1(frame, X, roster))

    def predict(self, frame, X=None) -> np.ndarray:
        return np.argmax(self.predict_proba(frame, X), axis=1)


def fit_stacker(train: pd.DataFrame, y, roster, folds, schema: FeatureSchema,
                passthrough=DEFAULT_PASSTHROUGH, meta_params=None, seed: int = 0,
                min_samples: int = 50, X=None, return_audit=False, deployed: dict | None = None):
    """Fit the meta-learner on out-of-fold meta-features, then refit the roster on all rows.

    ``deployed`` may supply roster models already fit on all of ``train``.
    """
    y = np.asarray(y)
    if X is None:
        X = schema.transform(train)
    passthrough = tuple(passthrough)
    meta_X, audit = build_oof_meta_features(train, y, roster, folds, schema, passthrough, seed,
                                            min_samples, X)
    params = {**DEFAULT_META, **(meta_params or {})}
    params.setdefault("seed", derive_seed(seed, "meta"))
    meta = BoostedTrees(**params).fit(meta_X, y)
    if deployed is not None and all(f.name in deployed for f in roster):
        models = {f.name: deployed[f.name] for f in roster}
    else:
        models = fit_families(roster, train, y, schema, seed, min_samples, X)
    k = len(np.unique(folds))
    model = StackedModel(list(roster), models, meta, passthrough, k, schema,
                         layout(roster, passthrough))
    return (model, audit) if return_audit else model


def predict_stacked(model: StackedModel, frame: pd.DataFrame, roster=None) -> np.ndarray:
    return model.predict_proba(frame, roster=roster)


__all__ = ["Family", "default_roster", "fit_family", "fit_families", "PoolEntry",
           "collect_models_for_record", "vote_average", "vote_predict", "OofAudit",
           "build_oof_meta_features", "StackedModel", "fit_stacker", "predict_stacked",
           "layout", "DEFAULT_PASSTHROUGH", "SCOPES"]
