import numpy as np
import pandas as pd
import pytest

from freightmode.errors import EmptyDataset, TooFewRecords
from freightmode.splitter import (FoldAssignment, SplitAssignment, stratified_kfold,
                                  stratified_split, stratum_test_count)


def frame(sizes):
    rows = []
    for s, n in enumerate(sizes):
        rows += [{"id": f"{s}-{i}", "sctg": f"{s:02d}", "naics": "311"} for i in range(n)]
    return pd.DataFrame(rows)


def test_one_stratum_of_100():
    sp = stratified_split(frame([100]), 0.2, seed=1)
    assert sp.is_test.sum() == 20


def test_singleton_stratum_goes_to_train():
    sp = stratified_split(frame([1]), 0.2, seed=1)
    assert not sp.is_test.any()


def test_two_strata_counts():
    df = frame([10, 30])
    sp = stratified_split(df, 0.2, seed=3)
    assert sp.is_test[df["sctg"] == "00"].sum() == 2
    assert sp.is_test[df["sctg"] == "01"].sum() == 6


@pytest.mark.parametrize("n,frac,expected", [(2, 0.2, 0), (3, 0.5, 2), (2, 0.9, 1), (5, 0.5, 3),
                                             (1, 0.9, 0), (10, 0.25, 3)])
def test_round_half_up_with_clamp(n, frac, expected):
    assert stratum_test_count(n, frac) == expected


def test_split_seed_changes_members_not_counts():
    df = frame([40, 25, 7])
    a = stratified_split(df, 0.2, seed=1)
    b = stratified_split(df, 0.2, seed=2)
    assert (a.is_test != b.is_test).any()
    for s in df["sctg"].unique():
        m = (df["sctg"] == s).to_numpy()
        assert a.is_test[m].sum() == b.is_test[m].sum()


def test_empty_input():
    with pytest.raises(EmptyDataset):
        stratified_split(frame([]).reindex(columns=["id", "sctg", "naics"]), 0.2, 0)


def test_kfold_sizes():
    f = stratified_kfold(frame([10]), 5, seed=0)
    assert np.bincount(f.folds).tolist() == [2] * 5
    f = stratified_kfold(frame([7]), 5, seed=0)
    assert sorted(np.bincount(f.folds).tolist(), reverse=True) == [2, 2, 1, 1, 1]


def test_kfold_deterministic_and_balanced_per_stratum():
    df = frame([13, 9, 4, 1])
    a = stratified_kfold(df, 5, seed=8)
    b = stratified_kfold(df, 5, seed=8)
    assert np.array_equal(a.folds, b.folds)
    for s in df["sctg"].unique():
        c = np.bincount(a.folds[(df["sctg"] == s).to_numpy()], minlength=5)
        assert c.max() - c.min() <= 1


def test_kfold_too_few_records():
    with pytest.raises(TooFewRecords):
        stratified_kfold(frame([3]), 5, seed=0)


def test_csv_round_trip(tmp_path):
    df = frame([12, 5])
    sp = stratified_split(df, 0.2, seed=4)
    sp.to_csv(tmp_path / "split.csv")
    back = SplitAssignment.from_csv(tmp_path / "split.csv")
    assert list(back.ids) == list(sp.ids) and np.array_equal(back.is_test, sp.is_test)
    f = stratified_kfold(df, 3, seed=4)
    f.to_csv(tmp_path / "folds.csv")
    back = FoldAssignment.from_csv(tmp_path / "folds.csv")
    assert np.array_equal(back.folds, f.folds) and back.k == 3
