"""Model inputs: derived per-mode distances, imputation flags and encodings.

Derived distances for a row are always computed from tables that exclude
that row's own group: test rows use tables built on the full training set,
training rows use out-of-fold tables.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
import pandas as pd

from .core import N_MODES, AreaType, Hazmat, ModeLabel, classify_area
from .errors import NonpositiveWeight, SchemaMismatch

MODES = [int(m) for m in ModeLabel]
M_COLS = [f"M{m}" for m in MODES]
I_COLS = [f"I{m}" for m in MODES]
AREA_LEVELS = [a.value for a in AreaType]
HAZMAT_LEVELS = [h.value for h in Hazmat]


# --- distance table ----------------------------------------------------------

class DistanceTable:
    """Median routed miles per (origin, destination, mode) over a record set."""

    def __init__(self, frame: pd.DataFrame):
        # columns: orig, dest, mode, median_mi, support
        self.frame = frame.sort_values(["orig", "dest", "mode"]).reset_index(drop=True)
        self._index = {
            (o, d, int(m)): (float(v), int(s))
            for o, d, m, v, s in self.frame[["orig", "dest", "mode", "median_mi", "support"]]
            .itertuples(index=False)
        }

    def __len__(self):
        return len(self._index)

    def __contains__(self, key):
        o, d, m = key
        return (o, d, int(m)) in self._index

    def __getitem__(self, key):
        o, d, m = key
        return self._index[(o, d, int(m))]

    def get(self, orig, dest, mode, default=None):
        return self._index.get((orig, dest, int(mode)), default)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["orig", "dest", "mode", "median_mi", "support"])
            for o, d, m, v, s in self.frame.itertuples(index=False):
                w.writerow([o, d, int(m), repr(float(v)), int(s)])

    @classmethod
    def from_csv(cls, path) -> "DistanceTable":
        df = pd.read_csv(path, dtype={"orig": str, "dest": str, "mode": np.int64,
                                      "median_mi": np.float64, "support": np.int64},
                         float_precision="round_trip")
        return cls(df)


def build_distance_table(train: pd.DataFrame) -> DistanceTable:
    """Exact median of chosen-mode routed distance for every observed key."""
    if len(train) == 0:
        empty = pd.DataFrame({"orig": pd.Series(dtype=str), "dest": pd.Series(dtype=str),
                              "mode": pd.Series(dtype=np.int64),
                              "median_mi": pd.Series(dtype=np.float64),
                              "support": pd.Series(dtype=np.int64)})
        return DistanceTable(empty)
    g = train.groupby(["orig_area", "dest_area", "mode"], sort=True)["routed_dist_mi"]
    out = g.agg(median_mi="median", support="size").reset_index()
    out = out.rename(columns={"orig_area": "orig", "dest_area": "dest"})
    out["mode"] = out["mode"].astype(np.int64)
    out["support"] = out["support"].astype(np.int64)
    return DistanceTable(out)


# --- imputation --------------------------------------------------------------

@dataclass
class ModeFit:
    intercept: float
    slope: float
    n_fit: int
    fallback: bool = False


@dataclass
class ImputationModel:
    """Per-mode linear map from great-circle to routed miles."""

    fits: dict = field(default_factory=dict)  # mode int -> ModeFit

    def predict(self, mode: int, gc):
        f = self.fits[int(mode)]
        return np.maximum(f.intercept + f.slope * np.asarray(gc, dtype=np.float64), 0.0)

    def to_dict(self) -> dict:
        return {str(m): vars(f) for m, f in sorted(self.fits.items())}

    @classmethod
    def from_dict(cls, d) -> "ImputationModel":
        return cls({int(m): ModeFit(**v) for m, v in d.items()})


def ols_line(x, y) -> tuple[float, float]:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    xm = x.mean()
    ym = y.mean()
    dx = x - xm
    sxx = float(dx @ dx)
    b = float(dx @ (y - ym)) / sxx
    return float(ym - b * xm), b


def fit_imputation(train: pd.DataFrame) -> ImputationModel:
    """Least-squares routed ~ great-circle line per mode.

    Modes with fewer than two rows, or no spread in great-circle distance,
    get the identity line (intercept 0, slope 1) and ``fallback=True``.
    """
    fits = {}
    for m in MODES:
        sub = train[train["mode"] == m]
        x = sub["gc_dist_mi"].to_numpy(dtype=np.float64)
        y = sub["routed_dist_mi"].to_numpy(dtype=np.float64)
        if len(x) < 2 or np.ptp(x) == 0.0:
            fits[m] = ModeFit(0.0, 1.0, len(x), True)
            continue
        a, b = ols_line(x, y)
        fits[m] = ModeFit(a, b, len(x), False)
    return ImputationModel(fits)


def derive_distances(rows: pd.DataFrame, table: DistanceTable, imp: ImputationModel) -> pd.DataFrame:
    """M1..M5 (median or imputed miles) and I1..I5 (1 when imputed) per row."""
    out = pd.DataFrame(index=rows.index)
    keys = rows[["orig_area", "dest_area"]]
    gc = rows["gc_dist_mi"].to_numpy(dtype=np.float64)
    tab = table.frame
    for m in MODES:
        t = tab[tab["mode"] == m][["orig", "dest", "median_mi"]]
        merged = keys.merge(t, how="left", left_on=["orig_area", "dest_area"],
                            right_on=["orig", "dest"], sort=False)
        med = merged["median_mi"].to_numpy(dtype=np.float64)
        missing = np.isnan(med)
        med[missing] = imp.predict(m, gc[missing])
        out[f"M{m}"] = med
        out[f"I{m}"] = missing.astype(np.int64)
    return out[M_COLS + I_COLS]


def derive_training_features_oob(train: pd.DataFrame, folds: np.ndarray) -> pd.DataFrame:
    """Derived distances for training rows, each from tables fit on the other folds."""
    folds = np.asarray(folds)
    parts = []
    for f in np.unique(folds):
        held = folds == f
        rest = train[~held]
        table = build_distance_table(rest)
        imp = fit_imputation(rest)
        parts.append(derive_distances(train[held], table, imp))
    return pd.concat(parts).loc[train.index]


def add_area_types(df: pd.DataFrame, lookup: Mapping[str, AreaType]) -> pd.DataFrame:
    """Return a copy with ``orig_type``/``dest_type`` columns from the lookup."""
    df = df.copy()
    cache = {}

    def typ(a):
        if a not in cache:
            cache[a] = classify_area(a, lookup).value
        return cache[a]

    df["orig_type"] = [typ(a) for a in df["orig_area"]]
    df["dest_type"] = [typ(a) for a in df["dest_area"]]
    return df


# --- schema ------------------------------------------------------------------

NUMERIC = "numeric"
ONEHOT = "onehot"
FLAG = "flag"


@dataclass
class FeatureSchema:
    """Ordered feature layout; ``features`` is a list of (name, kind, block)."""

    features: list
    with_derived: bool = True
    levels: dict = field(default_factory=dict)

    @property
    def names(self) -> list[str]:
        return [f[0] for f in self.features]

    @property
    def kinds(self) -> list[str]:
        return [f[1] for f in self.features]

    def __len__(self):
        return len(self.features)

    def index(self, name: str) -> int:
        return self.names.index(name)

    @classmethod
    def build(cls, *, with_derived=True, sctg_levels: Sequence[str] = (),
              naics_levels: Sequence[str] = (), include_export=True) -> "FeatureSchema":
        feats = [("sw", NUMERIC, "sw"), ("sv", NUMERIC, "sv"), ("v2w", NUMERIC, "v2w"),
                 ("gc_dist", NUMERIC, "gc_dist")]
        if with_derived:
            feats += [(c, NUMERIC, "M") for c in M_COLS]
            feats += [(c, FLAG, "I") for c in I_COLS]
        feats += [(f"sctg_n_{g}", ONEHOT, "sctg_n") for g in range(1, 10)]
        feats += [(f"orig_type_{a}", ONEHOT, "orig_type") for a in AREA_LEVELS]
        feats += [(f"dest_type_{a}", ONEHOT, "dest_type") for a in AREA_LEVELS]
        feats += [(f"haz_{h}", ONEHOT, "hazmat") for h in HAZMAT_LEVELS]
        feats += [("temp_cntl", FLAG, "temp_cntl")]
        if include_export:
            feats += [("export", FLAG, "export")]
        levels = {}
        if sctg_levels:
            levels["sctg"] = sorted(map(str, sctg_levels))
            feats += [(f"sctg_{c}", ONEHOT, "sctg") for c in levels["sctg"]]
        if naics_levels:
            levels["naics"] = sorted(map(str, naics_levels))
            feats += [(f"naics_{c}", ONEHOT, "naics") for c in levels["naics"]]
        return cls(feats, with_derived, levels)

    def without_block(self, block: str) -> "FeatureSchema":
        levels = {k: v for k, v in self.levels.items() if k != block}
        return FeatureSchema([f for f in self.features if f[2] != block], self.with_derived, levels)

    def to_dict(self) -> dict:
        return {"features": [list(f) for f in self.features], "with_derived": self.with_derived,
                "levels": self.levels}

    @classmethod
    def from_dict(cls, d) -> "FeatureSchema":
        return cls([tuple(f) for f in d["features"]], bool(d["with_derived"]),
                   {k: list(v) for k, v in d.get("levels", {}).items()})

    def transform(self, df: pd.DataFrame) -> np.ndarray:
        """Dense float matrix for a prepared frame (derived and area-type columns present)."""
        return _transform(df, self)


def _onehot(values, levels) -> np.ndarray:
    codes = pd.Categorical(values, categories=list(levels)).codes
    out = np.zeros((len(codes), len(levels)))
    hit = codes >= 0  # values outside the level list encode as all zeros
    out[np.flatnonzero(hit), codes[hit]] = 1.0
    return out


def _transform(df: pd.DataFrame, schema: FeatureSchema) -> np.ndarray:
    sw = df["weight_lb"].to_numpy(dtype=np.float64)
    if len(sw) and not (sw > 0).all():
        raise NonpositiveWeight("shipment weight must be positive to form v2w")
    sv = df["value_usd"].to_numpy(dtype=np.float64)
    cols = {
        "sw": sw[:, None], "sv": sv[:, None], "v2w": (sv / sw)[:, None],
        "gc_dist": df["gc_dist_mi"].to_numpy(dtype=np.float64)[:, None],
        "temp_cntl": df["temp_controlled"].to_numpy(dtype=np.float64)[:, None],
        "export": df["export_flag"].to_numpy(dtype=np.float64)[:, None],
    }
    blocks = []
    seen = set()
    for name, kind, block in schema.features:
        if block in seen:
            continue
        seen.add(block)
        if block in cols:
            blocks.append(cols[block])
        elif block == "M":
            blocks.append(df[M_COLS].to_numpy(dtype=np.float64))
        elif block == "I":
            blocks.append(df[I_COLS].to_numpy(dtype=np.float64))
        elif block == "sctg_n":
            blocks.append(_onehot(df["sctg_group"].astype(int).tolist(), list(range(1, 10))))
        elif block in ("orig_type", "dest_type"):
            blocks.append(_onehot(df[block].tolist(), AREA_LEVELS))
        elif block == "hazmat":
            blocks.append(_onehot(df["hazmat"].tolist(), HAZMAT_LEVELS))
        elif block in ("sctg", "naics"):
            blocks.append(_onehot(df[block].astype(str).tolist(), schema.levels[block]))
        else:
            raise SchemaMismatch(f"unknown feature block {block!r}")
    X = np.hstack(blocks) if blocks else np.zeros((len(df), 0))
    if X.shape[1] != len(schema):
        raise SchemaMismatch(f"assembled {X.shape[1]} columns, schema has {len(schema)}")
    return np.ascontiguousarray(X)


def assemble_features(record, derived: Mapping[str, float] | None, schema: FeatureSchema,
                      area_lookup: Mapping[str, AreaType]) -> np.ndarray:
    """Feature vector for a single record.

    ``derived`` maps M1..M5/I1..I5 to values; it may be ``None`` for a schema
    without derived distances.
    """
    if not record.weight_lb > 0:
        raise NonpositiveWeight("shipment weight must be positive to form v2w")
    row = {
        "weight_lb": record.weight_lb, "value_usd": record.value_usd,
        "gc_dist_mi": record.gc_dist_mi, "temp_controlled": record.temp_controlled,
        "export_flag": record.export_flag, "sctg_group": record.sctg_group,
        "hazmat": record.hazmat.value, "sctg": record.sctg, "naics": record.naics,
        "orig_type": classify_area(record.orig_area, area_lookup).value,
        "dest_type": classify_area(record.dest_area, area_lookup).value,
    }
    if schema.with_derived:
        for c in M_COLS + I_COLS:
            row[c] = derived[c]
    return _transform(pd.DataFrame([row]), schema)[0]


@dataclass
class PreparedData:
    """Training and test frames carrying every column the schemas consume."""

    train: pd.DataFrame
    test: pd.DataFrame
    table: DistanceTable
    imputation: ImputationModel

    @property
    def y_train(self) -> np.ndarray:
        return self.train["mode_idx"].to_numpy(dtype=np.int64)

    @property
    def y_test(self) -> np.ndarray:
        return self.test["mode_idx"].to_numpy(dtype=np.int64)


def prepare(df: pd.DataFrame, is_test: np.ndarray, folds: np.ndarray,
            area_lookup: Mapping[str, AreaType]) -> PreparedData:
    """Split a record frame and attach derived distances without leakage.

    ``folds`` gives the out-of-fold group of every *training* row (in train
    row order).
    """
    df = add_area_types(df, area_lookup)
    train = df[~is_test].reset_index(drop=True)
    test = df[is_test].reset_index(drop=True)
    table = build_distance_table(train)
    imp = fit_imputation(train)
    test = pd.concat([test, derive_distances(test, table, imp)], axis=1)
    train = pd.concat([train, derive_training_features_oob(train, folds)], axis=1)
    return PreparedData(train, test, table, imp)


__all__ = [
    "DistanceTable", "ImputationModel", "ModeFit", "FeatureSchema", "PreparedData",
    "build_distance_table", "fit_imputation", "derive_distances",
    "derive_training_features_oob", "assemble_features", "add_area_types", "prepare",
    "M_COLS", "I_COLS", "N_MODES",
]
