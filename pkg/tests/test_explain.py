import json

import numpy as np
import pytest

from freightmode.errors import TooManyFeatures, UnknownFeature
from freightmode.explain import (brute_force_shapley, force_json, gain_importance,
                                 impurity_importance, read_dependence_csv, shap_dependence_export,
                                 shap_summary, tree_shap, write_summary_csv, write_swarm_csv)
from freightmode.learners.boosting import fit_boosted
from freightmode.learners.forest import fit_forest
from freightmode.learners.tree import Tree, fit_tree

from conftest import random_tree


def stump(feature=0, n_features=3):
    X = np.zeros((40, n_features))
    X[20:, feature] = 1.0
    y = np.r_[np.zeros(20, int), np.ones(20, int)]
    return fit_tree(X, y, max_depth=1), X


def test_stump_importance():
    dt, _ = stump(1)
    imp = impurity_importance(dt, ["a", "b", "c"])
    assert imp == {"a": 0.0, "b": 1.0, "c": 0.0}


def test_forest_importance_sums_to_one():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(200, 4))
    y = (X[:, 0] > 0).astype(int) + (X[:, 2] > 1)
    imp = impurity_importance(fit_forest(X, y, n_trees=5, seed=1), list("abcd"))
    assert sum(imp.values()) == pytest.approx(1.0, abs=1e-9)
    gimp = gain_importance(fit_boosted(X, y, n_rounds=3), list("abcd"))
    assert sum(gimp.values()) == pytest.approx(1.0, abs=1e-9)


def test_constant_model_has_zero_phi():
    dt = fit_tree(np.random.default_rng(0).normal(size=(10, 3)), np.full(10, 2))
    res = tree_shap(dt, np.ones((4, 3)))
    assert (res.phi == 0).all()


def test_stump_phi_is_output_minus_base():
    dt, X = stump(2)
    res = tree_shap(dt, X[[0, 39]])
    assert np.allclose(res.phi[:, 2, :], res.output - res.base, atol=1e-15)
    assert (res.phi[:, :2, :] == 0).all()


def test_single_feature_oracle():
    dt, X = stump(0, n_features=1)
    phi, base = brute_force_shapley(dt, X[0])
    assert np.allclose(phi[0], dt.predict_proba(X[:1])[0] - base, atol=1e-15)


def test_symmetric_duplicate_features():
    t = Tree.from_arrays({
        "feature": [0, 1, -1, -1, 1, -1, -1], "threshold": [0.5, 0.5, 0, 0, 0.5, 0, 0],
        "left": [1, 2, -1, -1, 5, -1, -1], "right": [4, 3, -1, -1, 6, -1, -1],
        "value": [[0.0], [0.0], [0.0], [1.0], [0.0], [1.0], [2.0]],
        "cover": [40.0, 20, 10, 10, 20, 10, 10], "gain": np.zeros(7)})
    x = np.array([1.0, 1.0])
    phi, _ = brute_force_shapley(t, x)
    assert phi[0, 0] == pytest.approx(phi[1, 0], abs=1e-15)
    assert np.allclose(tree_shap(t, x).phi[0], phi, atol=1e-12)


def test_dummy_feature_gets_zero():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(100, 3))
    dt = fit_tree(X, (X[:, 0] > 0).astype(int))
    assert set(dt.tree_.feature) == {-1, 0}
    res = tree_shap(dt, X[:5])
    assert (res.phi[:, 1:] == 0).all()


@pytest.mark.parametrize("seed", range(10))
def test_random_trees_match_oracle(seed):
    rng = np.random.default_rng(seed)
    F = int(rng.integers(2, 9))
    t = random_tree(rng, F)
    X = rng.normal(size=(5, F))
    res = tree_shap(t, X)
    for i in range(5):
        phi, base = brute_force_shapley(t, X[i])
        assert np.allclose(res.phi[i], phi, rtol=0, atol=1e-9)
        assert np.allclose(res.base, base, atol=1e-12)


def test_forest_and_boosted_local_accuracy():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(300, 5))
    y = (X[:, 0] > 0).astype(int) + 2 * (X[:, 1] > 0.3)
    for model in (fit_forest(X, y, n_trees=4, seed=0), fit_boosted(X, y, n_rounds=4, max_depth=3)):
        res = tree_shap(model, X[:50])
        assert res.local_accuracy_error() <= 1e-9
        phi, base = brute_force_shapley(model, X[0])
        assert np.allclose(res.phi[0], phi, atol=1e-9) and np.allclose(res.base, base, atol=1e-9)
    assert tree_shap(fit_boosted(X, y, n_rounds=2), X[:2]).scale == "margin"


def test_too_many_features():
    with pytest.raises(TooManyFeatures):
        brute_force_shapley(fit_tree(np.zeros((2, 13)), np.zeros(2, int)), np.zeros(13))


def test_summary_properties():
    rng = np.random.default_rng(3)
    phi = rng.normal(size=(6, 3, 5))
    names = ["a", "b", "c"]
    s = shap_summary(np.zeros_like(phi), names)
    assert (s[[f"class{k}" for k in range(1, 6)]].to_numpy() == 0).all()
    one = shap_summary(phi[:1], names).set_index("feature")
    assert np.allclose(one.loc[names, "class1"], np.abs(phi[0, :, 0]))
    a = shap_summary(phi, names)
    b = shap_summary(phi[rng.permutation(6)], names)
    assert list(a["feature"]) == list(b["feature"])


def test_dependence_export_round_trip(tmp_path):
    rng = np.random.default_rng(4)
    phi = rng.normal(size=(7, 3, 5))
    X = rng.normal(size=(7, 3)) * 1e3
    df = shap_dependence_export(phi, X, ["a", "b", "c"], "b", "c", output=2, path=tmp_path / "d.csv")
    assert len(df) == 7 and np.array_equal(df["phi"], phi[:, 1, 2])
    back = read_dependence_csv(tmp_path / "d.csv")
    assert np.allclose(back.to_numpy(), df.to_numpy(), rtol=0, atol=1e-12)
    with pytest.raises(UnknownFeature):
        shap_dependence_export(phi, X, ["a", "b", "c"], "zz")


def test_exports(tmp_path):
    rng = np.random.default_rng(5)
    X = rng.normal(size=(60, 3))
    y = (X[:, 0] > 0).astype(int)
    res = tree_shap(fit_tree(X, y, max_depth=3), X[:4])
    names = ["a", "b", "c"]
    write_summary_csv(shap_summary(res, names), tmp_path / "s.csv")
    assert (tmp_path / "s.csv").read_text().splitlines()[0] == "class,feature,mean_abs_phi"
    write_swarm_csv(res, X[:4], names, tmp_path / "w.csv", ids=list("wxyz"))
    assert len((tmp_path / "w.csv").read_text().splitlines()) == 1 + 4 * 5 * 3
    recs = force_json(res, names, tmp_path / "f.json", ids=list("wxyz"))
    assert json.loads((tmp_path / "f.json").read_text()) == recs
    c = recs[0]["classes"][0]
    assert c["base"] + sum(c["phi"].values()) == pytest.approx(c["output"], abs=1e-12)
