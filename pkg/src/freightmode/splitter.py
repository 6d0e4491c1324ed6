"""Stratified train/test splitting and stratified k-fold assignment."""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
import pandas as pd

from .errors import EmptyDataset, TooFewRecords

TRAIN = "Train"
TEST = "Test"
DEFAULT_STRATA = ("sctg", "naics")


def _as_frame(records) -> pd.DataFrame:
    if isinstance(records, pd.DataFrame):
        return records
    from .core import records_to_frame

    return records_to_frame(records)


def _strata(df: pd.DataFrame, by) -> list[np.ndarray]:
    """Row positions of each stratum, strata in sorted key order."""
    keys = df[list(by)].astype(str)
    groups = keys.groupby(list(by), sort=True).indices
    return [np.asarray(groups[k]) for k in sorted(groups)]


def stratum_test_count(n: int, test_fraction: float) -> int:
    """Round half up, then keep at least one training row per stratum."""
    if n <= 1:
        return 0
    t = int(np.floor(n * test_fraction + 0.5))
    return min(max(t, 0), n - 1)


@dataclass
class SplitAssignment:
    ids: np.ndarray
    is_test: np.ndarray
    seed: int
    test_fraction: float

    @property
    def tags(self) -> np.ndarray:
        return np.where(self.is_test, TEST, TRAIN)

    def to_csv(self, path) -> None:
        _write_two_col(path, "tag", self.ids, self.tags)

    @classmethod
    def from_csv(cls, path, seed=0, test_fraction=float("nan")) -> "SplitAssignment":
        ids, tags = _read_two_col(path)
        return cls(np.asarray(ids, dtype=object), np.asarray(tags) == TEST, seed, test_fraction)


@dataclass
class FoldAssignment:
    ids: np.ndarray
    folds: np.ndarray
    k: int

    def to_csv(self, path) -> None:
        _write_two_col(path, "fold", self.ids, self.folds)

    @classmethod
    def from_csv(cls, path) -> "FoldAssignment":
        ids, folds = _read_two_col(path)
        folds = np.asarray(folds, dtype=np.int64)
        return cls(np.asarray(ids, dtype=object), folds, int(folds.max()) + 1 if len(folds) else 0)


def _write_two_col(path, name, ids, values):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", name])
        w.writerows(zip(ids, values))


def _read_two_col(path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))[1:]
    return [r[0] for r in rows], [r[1] for r in rows]


def stratified_split(records, test_fraction: float = 0.2, seed: int = 0,
                     by=DEFAULT_STRATA) -> SplitAssignment:
    """Reserve ``test_fraction`` of each (sctg, naics) stratum as test rows."""
    if not 0.0 < test_fraction < 1.0:
        raise ValueError("test_fraction must lie in (0, 1)")
    df = _as_frame(records)
    if len(df) == 0:
        raise EmptyDataset("cannot split an empty dataset")
    rng = np.random.default_rng(seed)
    is_test = np.zeros(len(df), dtype=bool)
    for members in _strata(df, by):
        t = stratum_test_count(len(members), test_fraction)
        if t:
            is_test[rng.permutation(members)[:t]] = True
    return SplitAssignment(df["id"].to_numpy(dtype=object), is_test, seed, test_fraction)


def stratified_kfold(records, k: int = 5, seed: int = 0, by=DEFAULT_STRATA) -> FoldAssignment:
    """Deal shuffled stratum members to folds round-robin.

    The dealing position carries over between strata so that many small
    strata do not all land in fold 0.
    """
    if k < 2:
        raise ValueError("k must be at least 2")
    df = _as_frame(records)
    if k > len(df):
        raise TooFewRecords(f"k={k} exceeds {len(df)} records")
    rng = np.random.default_rng(seed)
    folds = np.empty(len(df), dtype=np.int64)
    offset = 0
    for members in _strata(df, by):
        shuffled = rng.permutation(members)
        folds[shuffled] = (offset + np.arange(len(shuffled))) % k
        offset = (offset + len(shuffled)) % k
    return FoldAssignment(df["id"].to_numpy(dtype=object), folds, k)
