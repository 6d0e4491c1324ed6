import numpy as np
import pandas as pd
import pytest

from freightmode.core import AreaType, Hazmat, ModeLabel, ShipmentRecord
from freightmode.features import FeatureSchema, prepare
from freightmode.splitter import stratified_kfold, stratified_split
from freightmode.synth import SynthConfig, generate


def make_record(id="r1", *, weight=10.0, value=100.0, sctg="01", group=1, naics="311",
                orig="A", dest="B", gc=100.0, routed=120.0, hazmat=Hazmat.NotHaz,
                temp=False, export=False, mode=ModeLabel.ForHireTruck) -> ShipmentRecord:
    return ShipmentRecord(id, weight, value, sctg, group, naics, orig, dest, gc, routed,
                          hazmat, temp, export, mode)


def record_frame(rows) -> pd.DataFrame:
    """Minimal record frame from (orig, dest, mode, gc, routed) tuples."""
    df = pd.DataFrame(rows, columns=["orig_area", "dest_area", "mode", "gc_dist_mi", "routed_dist_mi"])
    df["mode"] = df["mode"].astype(np.int64)
    df[["gc_dist_mi", "routed_dist_mi"]] = df[["gc_dist_mi", "routed_dist_mi"]].astype(np.float64)
    return df


@pytest.fixture(scope="session")
def small_synth():
    return generate(SynthConfig(n_records=3000), seed=11)


@pytest.fixture(scope="session")
def small_prepared(small_synth):
    frame = small_synth.frame
    split = stratified_split(frame, 0.2, seed=5)
    train = frame[~split.is_test].reset_index(drop=True)
    folds = stratified_kfold(train, 5, seed=6).folds
    prep = prepare(frame, split.is_test, folds, small_synth.area_lookup)
    schema = FeatureSchema.build(with_derived=True,
                                 sctg_levels=sorted(prep.train["sctg"].unique()),
                                 naics_levels=sorted(prep.train["naics"].unique()))
    return prep, folds, schema


@pytest.fixture
def area_lookup():
    return {"A": AreaType.C, "B": AreaType.M, "C": AreaType.R}


def random_tree(rng, n_features: int, max_depth: int = 4, n_outputs: int = 5):
    """Random tree with consistent covers (children sum to their parent)."""
    from freightmode.learners.tree import Tree

    feature, threshold, left, right, value, cover = [], [], [], [], [], []

    def grow(depth, n):
        i = len(feature)
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(rng.dirichlet(np.ones(n_outputs)) if n_outputs > 1 else rng.normal(size=1))
        cover.append(float(n))
        if depth < max_depth and n >= 2 and rng.random() < 0.8:
            feature[i] = int(rng.integers(0, n_features))
            threshold[i] = float(rng.normal())
            nl = int(rng.integers(1, n))
            left[i] = grow(depth + 1, nl)
            right[i] = grow(depth + 1, n - nl)
        return i

    grow(0, int(rng.integers(20, 200)))
    return Tree.from_arrays({"feature": feature, "threshold": threshold, "left": left,
                             "right": right, "value": value, "cover": cover,
                             "gain": np.zeros(len(feature))})


# --- acceptance reporting --------------------------------------------------------

ACCEPTANCE_LINES: list[str] = []


def criterion(number, title: str, passed: bool, detail: str) -> None:
    """Record and print one pass/fail line, then fail the test if the criterion fails."""
    line = f"CRITERION {number} {'PASS' if passed else 'FAIL'}: {title} ({detail})"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert passed, line


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
