import numpy as np
import pytest

from freightmode.errors import EmptyMatrix, LengthMismatch, UndefinedAuc
from freightmode.evaluation import (bootstrap_se_accuracy, confusion, evaluate, metrics,
                                    roc_curve, write_metrics_json)


def test_confusion_examples():
    y = np.array([0, 1, 2, 3, 4, 4])
    assert np.array_equal(confusion(y, y), np.diag([1, 1, 1, 1, 2]))
    cm = confusion([2], [0])
    assert cm.sum() == 1 and cm[0, 2] == 1
    rng = np.random.default_rng(0)
    p, t = rng.integers(0, 5, 50), rng.integers(0, 5, 50)
    perm = rng.permutation(50)
    assert np.array_equal(confusion(p, t), confusion(p[perm], t[perm]))


def test_confusion_length_mismatch():
    with pytest.raises(LengthMismatch):
        confusion([0, 1], [0])


def test_metrics_diagonal():
    m = metrics(np.diag([3, 1, 4, 1, 5]))
    for k in ("accuracy", "balanced_accuracy", "precision_weighted", "recall_weighted", "f1_weighted"):
        assert m[k] == 1.0


def test_metrics_two_class_fixture():
    m = metrics([[9, 1], [1, 1]])
    assert m["accuracy"] == pytest.approx(10 / 12, abs=1e-9)
    assert m["balanced_accuracy"] == pytest.approx(0.7, abs=1e-9)
    # hand-computed: precision (0.9, 0.5), recall (0.9, 0.5), supports (10, 2)
    assert m["precision_weighted"] == pytest.approx((10 * 0.9 + 2 * 0.5) / 12, abs=1e-12)
    assert m["f1_weighted"] == pytest.approx((10 * 0.9 + 2 * 0.5) / 12, abs=1e-12)


def test_metrics_hand_computed_three_class():
    cm = np.array([[5, 0, 0], [2, 0, 0], [1, 1, 1]])
    m = metrics(cm)
    assert m["accuracy"] == pytest.approx(6 / 10)
    assert m["balanced_accuracy"] == pytest.approx((1 + 0 + 1 / 3) / 3)
    prec = np.array([5 / 8, 0.0, 1.0])  # class 1 is predicted once, never correctly
    rec = np.array([1.0, 0.0, 1 / 3])
    w = np.array([5, 2, 3]) / 10
    assert m["precision_weighted"] == pytest.approx((w * prec).sum(), abs=1e-12)
    f1 = np.divide(2 * prec * rec, prec + rec, out=np.zeros(3), where=prec + rec > 0)
    assert m["f1_weighted"] == pytest.approx((w * f1).sum(), abs=1e-12)


def test_never_predicted_class_has_zero_precision():
    m = metrics([[2, 0], [3, 0]])
    assert m["precision_macro"] == pytest.approx((2 / 5 + 0) / 2)


def test_absent_class_excluded_from_ba():
    cm = np.zeros((5, 5))
    cm[0, 0], cm[1, 0] = 4, 2
    assert metrics(cm)["balanced_accuracy"] == pytest.approx(0.5)


def test_weighted_recall_equals_accuracy():
    rng = np.random.default_rng(1)
    for _ in range(200):
        cm = rng.integers(0, 20, (5, 5))
        m = metrics(cm)
        assert m["recall_weighted"] == pytest.approx(m["accuracy"], abs=1e-12)


def test_empty_matrix():
    with pytest.raises(EmptyMatrix):
        metrics(np.zeros((5, 5)))


def test_auc_fixtures():
    y = np.array([1, 1, 0, 0])
    assert roc_curve(np.array([0.9, 0.8, 0.2, 0.1]), y, 1).auc == 1.0
    assert roc_curve(np.array([0.1, 0.2, 0.8, 0.9]), y, 1).auc == 0.0
    assert roc_curve(np.array([0.9, 0.4, 0.6, 0.1]), y, 1).auc == pytest.approx(0.75, abs=1e-12)


def test_auc_ties_count_half():
    assert roc_curve(np.array([0.5, 0.5]), np.array([1, 0]), 1).auc == 0.5


def test_roc_endpoints_and_monotone():
    rng = np.random.default_rng(2)
    P = rng.dirichlet(np.ones(5), 300)
    y = rng.integers(0, 5, 300)
    for m in range(5):
        c = roc_curve(P, y, m)
        assert (c.fpr[0], c.tpr[0]) == (0.0, 0.0) and (c.fpr[-1], c.tpr[-1]) == (1.0, 1.0)
        assert (np.diff(c.fpr) >= 0).all() and (np.diff(c.tpr) >= 0).all()


def test_auc_invariant_to_monotone_transform():
    rng = np.random.default_rng(3)
    s = rng.uniform(size=200)
    y = (rng.uniform(size=200) < s).astype(int)
    assert roc_curve(s, y, 1).auc == pytest.approx(roc_curve(np.exp(3 * s), y, 1).auc, abs=1e-15)


def test_undefined_auc():
    with pytest.raises(UndefinedAuc):
        roc_curve(np.array([0.2, 0.4]), np.array([0, 0]), 1)


def test_bootstrap_examples():
    y = np.arange(100) % 5
    assert bootstrap_se_accuracy(y, y, 50, seed=0) == 0.0
    rng = np.random.default_rng(4)
    p = rng.integers(0, 5, 100)
    assert bootstrap_se_accuracy(p, y, 50, 1) == bootstrap_se_accuracy(p, y, 50, 1)


def test_evaluate_and_json(tmp_path):
    rng = np.random.default_rng(5)
    P = rng.dirichlet(np.ones(5), 100)
    y = rng.integers(0, 5, 100)
    r = evaluate(P, y, B=20, seed=0)
    assert set(r["auc"]) == {f"mode{m}" for m in range(1, 6)}
    write_metrics_json(r, tmp_path / "a.json")
    write_metrics_json(evaluate(P, y, B=20, seed=0), tmp_path / "b.json")
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()
