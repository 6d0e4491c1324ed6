"""Acceptance criteria on the bundled synthetic scenario (50k records, 8 areas, 10 categories).

Every test prints one ``CRITERION n PASS|FAIL`` line; the lines are repeated in
the pytest terminal summary.
"""
import json
import os
import time

import numpy as np
import pytest
import yaml

from freightmode.cli import main
from freightmode.config import DEFAULTS
from freightmode.ensemble import Family, fit_stacker, vote_average
from freightmode.evaluation import bootstrap_se_accuracy, metrics, roc_curve
from freightmode.explain import brute_force_shapley, tree_shap
from freightmode.features import I_COLS, M_COLS, FeatureSchema, prepare
from freightmode.ingest import ColumnMap, parse_shipments
from freightmode.learners import LearnerSpec
from freightmode.learners.boosting import BoostedTrees
from freightmode.local_models import fit_global, fit_segmented
from freightmode.seeding import derive_seed, rng_for
from freightmode.splitter import stratified_kfold, stratified_split
from freightmode.synth import SynthConfig, bayes_accuracy, generate

from conftest import criterion, random_tree

SEED = 0
CAP = DEFAULTS["scenarios"]["global_train_cap"]
MIN_SAMPLES = DEFAULTS["scenarios"]["min_samples"]


def spec(kind):
    return LearnerSpec(kind, dict(DEFAULTS["learners"][kind]))


def acc(P, y):
    return float((np.argmax(P, axis=1) == y).mean())


class Scenario:
    """The default synthetic scenario, split and featurized once per session."""

    def __init__(self):
        self.ds = generate(SynthConfig(), seed=SEED)
        frame = self.ds.frame
        self.split = stratified_split(frame, 0.2, derive_seed(SEED, "split"))
        train = frame[~self.split.is_test].reset_index(drop=True)
        self.folds = stratified_kfold(train, 5, derive_seed(SEED, "folds")).folds
        self.prep = prepare(frame, self.split.is_test, self.folds, self.ds.area_lookup)
        levels = dict(sctg_levels=sorted(self.prep.train["sctg"].unique()),
                      naics_levels=sorted(self.prep.train["naics"].unique()))
        self.schema = {d: FeatureSchema.build(with_derived=d, **levels) for d in (True, False)}
        self.X = {(w, d): self.schema[d].transform(getattr(self.prep, w))
                  for w in ("train", "test") for d in (True, False)}
        n = len(self.prep.train)
        self.cap = np.sort(rng_for(SEED, "global_cap").permutation(n)[:CAP])
        self.bayes = bayes_accuracy(frame, self.ds.truth, self.split.is_test)
        self.accuracies: dict[str, float] = {}
        self._models: dict = {}

    @property
    def y_train(self):
        return self.prep.y_train

    @property
    def y_test(self):
        return self.prep.y_test

    def score(self, name, P):
        self.accuracies[name] = acc(P, self.y_test)
        return self.accuracies[name]

    def capped_rf(self, derived):
        key = ("capped", derived)
        if key not in self._models:
            rows = self.cap
            self._models[key] = fit_global(self.prep.train.iloc[rows].reset_index(drop=True),
                                           self.y_train[rows], spec("RF"), self.schema[derived],
                                           SEED, self.X[("train", derived)][rows])
        return self._models[key]

    def full_global(self, kind):
        key = ("global", kind)
        if key not in self._models:
            self._models[key] = fit_global(self.prep.train, self.y_train, spec(kind), self.schema[True],
                                           SEED, self.X[("train", True)])
        return self._models[key]

    def segmented(self, kind, key):
        k = ("seg", kind, key)
        if k not in self._models:
            self._models[k] = fit_segmented(self.prep.train, self.y_train, key, spec(kind),
                                            self.schema[True], MIN_SAMPLES, SEED,
                                            fallback=self.full_global(kind), X=self.X[("train", True)])
        return self._models[k]

    def predict(self, model):
        return model.predict_proba(self.prep.test, self.X[("test", True)])


@pytest.fixture(scope="module")
def sc():
    return Scenario()


@pytest.fixture(scope="module")
def c1(sc):
    t0 = time.perf_counter()
    without = sc.score("RF-capped-without", sc.capped_rf(False).predict_proba(sc.prep.test, sc.X[("test", False)]))
    with_ = sc.score("RF-capped-with", sc.capped_rf(True).predict_proba(sc.prep.test, sc.X[("test", True)]))
    return without, with_, time.perf_counter() - t0


@pytest.fixture(scope="module")
def ensemble(sc):
    roster = [Family(spec(k), s) for k in ("RF", "BAG", "Extra") for s in ("global", "sctg", "naics")]
    deployed = {f.name: sc.full_global(f.spec.kind) if f.scope == "global" else sc.segmented(f.spec.kind, f.scope)
                for f in roster}
    names = set(sc.schema[True].names)
    passthrough = [n for n in DEFAULTS["stacking"]["passthrough"] if n in names]
    t0 = time.perf_counter()
    stack, audit = fit_stacker(sc.prep.train, sc.y_train, roster, sc.folds, sc.schema[True], passthrough,
                               DEFAULTS["stacking"]["meta"], derive_seed(SEED, "stack", "g"), MIN_SAMPLES,
                               sc.X[("train", True)], return_audit=True, deployed=deployed)
    fit_time = time.perf_counter() - t0
    member_P = {f.name: sc.predict(deployed[f.name]) for f in roster}
    members = {n: sc.score(n, P) for n, P in member_P.items()}
    vote = sc.score("Vote", vote_average(list(member_P.values())))
    stacked = sc.score("Stack", sc.predict(stack))
    return {"members": members, "vote": vote, "stack": stacked, "audit": audit, "roster": roster,
            "fit_time": fit_time}


def test_criterion_1_derived_distance_gain(c1):
    without, with_, secs = c1
    gain = with_ - without
    criterion(1, "RF accuracy gain from derived distances >= 0.05 in < 3 min", gain >= 0.05 and secs < 180,
              f"without {without:.4f}, with {with_:.4f}, gain {gain:+.4f}, {secs:.1f}s")


def test_criterion_2_segmentation_gain(sc, c1):
    glob = c1[1]
    sctg = sc.score("RF-sctg", sc.predict(sc.segmented("RF", "sctg")))
    naics = sc.score("RF-naics", sc.predict(sc.segmented("RF", "naics")))
    criterion(2, "SCTG- and NAICS-segmented RF each beat the global RF by >= 0.02",
              sctg - glob >= 0.02 and naics - glob >= 0.02,
              f"global {glob:.4f}, sctg {sctg:.4f} ({sctg - glob:+.4f}), naics {naics:.4f} ({naics - glob:+.4f})")


def test_criterion_3_ensemble_ordering(ensemble):
    best = max(ensemble["members"].values())
    mean = float(np.mean(list(ensemble["members"].values())))
    st, vt = ensemble["stack"], ensemble["vote"]
    criterion(3, "stack >= best family - 0.005 and vote >= mean family",
              st >= best - 0.005 and vt >= mean,
              f"stack {st:.4f}, best family {best:.4f}, vote {vt:.4f}, mean family {mean:.4f}")


def test_criterion_4_bayes_ceiling(sc, c1, ensemble):
    sc.score("RF-sctg", sc.predict(sc.segmented("RF", "sctg")))
    sc.score("RF-naics", sc.predict(sc.segmented("RF", "naics")))
    name, top = max(sc.accuracies.items(), key=lambda kv: kv[1])
    criterion(4, "no model exceeds the Bayes accuracy + 0.01", top <= sc.bayes + 0.01,
              f"Bayes {sc.bayes:.4f}, best {name} {top:.4f}, {len(sc.accuracies)} models")


def test_criterion_5_leakage(sc, ensemble):
    frame = sc.ds.frame.copy()
    test_idx = np.flatnonzero(sc.split.is_test)
    rng = np.random.default_rng(1)
    frame.loc[test_idx, "routed_dist_mi"] = rng.permutation(frame.loc[test_idx, "routed_dist_mi"].to_numpy())
    frame.loc[test_idx, "mode"] = rng.permutation(frame.loc[test_idx, "mode"].to_numpy())
    again = prepare(frame, sc.split.is_test, sc.folds, sc.ds.area_lookup)
    cols = M_COLS + I_COLS
    changed = int((again.test[cols].to_numpy() != sc.prep.test[cols].to_numpy()).any(axis=1).sum())
    audit = ensemble["audit"]
    violations = audit.violations()
    covered = audit.coverage(len(ensemble["roster"]))
    criterion(5, "test derived distances invariant to test permutation; zero OOF violations",
              changed == 0 and violations == 0 and covered,
              f"{changed} changed test rows, {violations} OOF violations over {len(audit.entries)} blocks, "
              f"coverage {'complete' if covered else 'incomplete'}")


def test_criterion_6_tree_shap(sc, c1):
    t0 = time.perf_counter()
    rng = np.random.default_rng(6)
    worst = 0.0
    for _ in range(100):
        F = int(rng.integers(1, 11))
        t = random_tree(rng, F, max_depth=int(rng.integers(1, 5)))
        X = rng.normal(size=(20, F))
        res = tree_shap(t, X)
        for i in range(20):
            phi, base = brute_force_shapley(t, X[i])
            worst = max(worst, float(np.abs(res.phi[i] - phi).max()), float(np.abs(res.base - base).max()))
    rows = np.sort(rng_for(SEED, "explain").permutation(len(sc.prep.test))[:500])
    Xs = sc.X[("test", True)][rows]
    rf_err = tree_shap(sc.capped_rf(True), Xs).local_accuracy_error()
    cap = sc.cap
    boost = BoostedTrees(**DEFAULTS["learners"]["BOOST"]).fit(sc.X[("train", True)][cap], sc.y_train[cap])
    boost_err = tree_shap(boost, Xs).local_accuracy_error()
    secs = time.perf_counter() - t0
    criterion(6, "TreeSHAP = brute force within 1e-9; local accuracy <= 1e-6; < 2 min",
              worst <= 1e-9 and rf_err <= 1e-6 and boost_err <= 1e-6 and secs < 120,
              f"max oracle gap {worst:.1e}, RF {rf_err:.1e}, boosted {boost_err:.1e}, {secs:.1f}s")


def test_criterion_7_metric_oracles():
    checks = []
    m = metrics([[9, 1], [1, 1]])
    checks.append(abs(m["accuracy"] - 10 / 12) <= 1e-9 and abs(m["balanced_accuracy"] - 0.7) <= 1e-9)
    d = metrics(np.diag([4, 3, 2, 1, 5]))
    checks.append(all(d[k] == 1.0 for k in ("accuracy", "balanced_accuracy", "precision_weighted",
                                            "recall_weighted", "f1_weighted")))
    rng = np.random.default_rng(7)
    worst_recall = 0.0
    for _ in range(1000):
        cm = rng.integers(0, 30, (5, 5))
        cm[0, 0] += 1
        mm = metrics(cm)
        worst_recall = max(worst_recall, abs(mm["recall_weighted"] - mm["accuracy"]))
    checks.append(worst_recall <= 1e-12)
    y = np.array([1, 1, 0, 0])
    aucs = (roc_curve(np.array([0.9, 0.8, 0.2, 0.1]), y, 1).auc,
            roc_curve(np.array([0.1, 0.2, 0.8, 0.9]), y, 1).auc,
            roc_curve(np.array([0.9, 0.4, 0.6, 0.1]), y, 1).auc)
    checks.append(abs(aucs[0] - 1) <= 1e-12 and abs(aucs[1]) <= 1e-12 and abs(aucs[2] - 0.75) <= 1e-12)
    n, p = 10_000, 0.8
    truth = rng.integers(0, 5, n)
    pred = np.where(rng.random(n) < p, truth, (truth + 1) % 5)
    p_hat = float((pred == truth).mean())
    se = bootstrap_se_accuracy(pred, truth, B=1000, seed=SEED)
    closed = np.sqrt(p_hat * (1 - p_hat) / n)
    checks.append(abs(se / closed - 1) <= 0.2)
    criterion(7, "metric oracles (fixture, recall identity, AUC fixtures, bootstrap SE)", all(checks),
              f"acc {m['accuracy']:.10f}, BA {m['balanced_accuracy']:.10f}, max |recall_w - acc| "
              f"{worst_recall:.1e}, AUC {aucs[0]}/{aucs[1]}/{aucs[2]}, SE {se:.5f} vs {closed:.5f}")


REDUCED = {
    "seed": 5,
    "synth": {"n_records": 4000},
    "learners": {"RF": {"n_trees": 5}, "BAG": {"n_trees": 5}, "Extra": {"n_trees": 5},
                 "BOOST": {"n_rounds": 5}, "LR": {"max_iter": 50}},
    "scenarios": {"global_train_cap": 1500, "panel_stack": True},
    "stacking": {"meta": {"n_rounds": 10}},
    "evaluate": {"bootstrap": 50},
    "explain": {"n_samples": 50},
}


def _tree_bytes(root):
    return {str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def test_criterion_8_determinism(tmp_path):
    outs = []
    for run in ("one", "two"):
        cfg = {**REDUCED, "paths": {"output": run}}
        path = tmp_path / f"{run}.yaml"
        path.write_text(yaml.safe_dump(cfg))
        assert main(["run-all", "--config", str(path)]) == 0
        outs.append(_tree_bytes(tmp_path / run))
    a, b = outs
    metrics_files = [k for k in a if k.startswith("metrics/")]
    model_files = [k for k in a if k.startswith("models/")]
    differ = sorted(k for k in set(a) | set(b) if a.get(k) != b.get(k))
    criterion(8, "two pipeline runs give byte-identical metrics JSON and model files",
              not differ and len(metrics_files) == 7 and len(model_files) > 0,
              f"{len(a)} files compared ({len(metrics_files)} metrics, {len(model_files)} models), "
              f"{len(differ)} differ")


def test_criterion_9_stratified_split(sc):
    frame = sc.ds.frame
    is_test = sc.split.is_test
    ids = list(sc.split.ids)
    exhaustive = sorted(ids) == sorted(frame["id"]) and len(set(ids)) == len(ids)
    strata = frame.groupby(["sctg", "naics"]).indices
    worst = 0.0
    for rows in strata.values():
        worst = max(worst, abs(float(is_test[rows].sum()) - 0.2 * len(rows)))
    criterion(9, "per-stratum test count within 1 record of 20%; partitions disjoint and exhaustive",
              exhaustive and worst < 1.0,
              f"{len(strata)} strata, max deviation {worst:.2f} records, {int(is_test.sum())} test / "
              f"{int((~is_test).sum())} train")


@pytest.mark.skipif(not os.environ.get("FREIGHTMODE_PUF"), reason="documented check: set FREIGHTMODE_PUF "
                    "to a 2017 CFS PUF CSV to run it")
def test_criterion_10_real_puf():
    _, report = parse_shipments(os.environ["FREIGHTMODE_PUF"], ColumnMap.puf2017())
    pct = 100 * report.unmatched_fraction
    criterion(10, "rejected-unmatched-mode share on the 2017 PUF is 0.31% +- 0.01", abs(pct - 0.31) <= 0.01,
              f"{report.rejected_unmatched_mode} of {report.total_rows} rows, {pct:.3f}%; "
              f"report {json.dumps(report.to_dict(), sort_keys=True)}")
