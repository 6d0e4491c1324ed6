import numpy as np
import pytest

from freightmode.learners import LearnerSpec
from freightmode.local_models import SegmentedModel, fit_global, fit_segmented, predict_segmented

DT = LearnerSpec("DT", {"min_leaf": 3})


def _rows_of(prep, n=1500):
    return prep.train.iloc[:n].reset_index(drop=True), prep.y_train[:n]


def test_one_model_per_qualifying_category(small_prepared):
    prep, _, schema = small_prepared
    train, y = _rows_of(prep)
    counts = train["sctg"].value_counts()
    m = fit_segmented(train, y, "sctg", DT, schema, min_samples=80, seed=1)
    assert m.categories == sorted(counts[counts >= 80].index)
    assert m.fallback is not None
    for c in m.categories:
        assert m.model_for(c).n_features_ == len(m.local_schema)


def test_local_schema_drops_own_key_only(small_prepared):
    _, _, schema = small_prepared
    m = SegmentedModel("naics", DT, schema, 50)
    names = m.local_schema.names
    assert not any(n.startswith("naics_") for n in names)
    assert any(n.startswith("sctg_") for n in names)


def test_small_category_routes_to_fallback(small_prepared):
    prep, _, schema = small_prepared
    train, y = _rows_of(prep)
    small = train["naics"].value_counts().idxmin()
    m = fit_segmented(train, y, "naics", DT, schema, min_samples=10**6, seed=1)
    assert m.categories == []
    rows = train[train["naics"] == small].reset_index(drop=True)
    assert np.array_equal(m.predict_proba(rows), m.fallback.predict_proba(rows))


def test_dispatch_matches_local_model(small_prepared):
    prep, _, schema = small_prepared
    train, y = _rows_of(prep)
    m = fit_segmented(train, y, "sctg", DT, schema, min_samples=50, seed=2)
    test = prep.test
    P = predict_segmented(m, test)
    X = schema.transform(test)
    cols = [schema.index(n) for n in m.local_schema.names]
    for c in m.categories[:3]:
        rows = np.flatnonzero(test["sctg"].astype(str).to_numpy() == c)
        assert np.array_equal(P[rows], m.model_for(c).predict_proba(X[np.ix_(rows, cols)]))
    assert np.allclose(P.sum(axis=1), 1.0)


def test_unseen_category_uses_fallback(small_prepared):
    prep, _, schema = small_prepared
    train, y = _rows_of(prep)
    m = fit_segmented(train, y, "sctg", DT, schema, min_samples=50, seed=2)
    rec = prep.test.iloc[:3].copy()
    rec["sctg"] = "99"
    rec = rec.reset_index(drop=True)
    assert np.array_equal(m.predict_proba(rec), m.fallback.predict_proba(rec))


def test_segment_purity(small_prepared):
    prep, _, schema = small_prepared
    train, y = _rows_of(prep)
    m = fit_segmented(train, y, "naics", DT, schema, min_samples=50, seed=3)
    for c in m.categories:
        n = int((train["naics"] == c).sum())
        assert m.model_for(c).tree_.cover[0] == n


def test_global_model_seed_determinism(small_prepared):
    prep, _, schema = small_prepared
    train, y = _rows_of(prep, 800)
    spec = LearnerSpec("RF", {"n_trees": 3})
    a = fit_global(train, y, spec, schema, seed=4).predict_proba(prep.test)
    b = fit_global(train, y, spec, schema, seed=4).predict_proba(prep.test)
    assert np.array_equal(a, b)


def test_bad_key(small_prepared):
    prep, _, schema = small_prepared
    with pytest.raises(ValueError):
        fit_segmented(prep.train, prep.y_train, "orig_area", DT, schema)
