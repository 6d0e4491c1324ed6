"""Stage runner: synth -> ingest -> split -> featurize -> train -> evaluate -> explain -> report.

Every stage writes its artifacts under the output directory plus a manifest
carrying the hash of the configuration sections it (and its upstream stages)
read. A stage refuses to run when an upstream manifest is missing or was
produced under a different configuration.
"""
from __future__ import annotations

import json
import logging
from pathlib import Path

import numpy as np
import pandas as pd

from . import __version__
from .config import RunConfig
from .core import SctgGroups, load_area_lookup, records_to_frame
from .ensemble import Family, fit_stacker, vote_average
from .errors import StageOrderError, StaleArtifactError
from .evaluation import evaluate, write_metrics_json, write_roc_csvs
from .explain import (force_json, gain_importance, impurity_importance, shap_summary,
                      tree_shap, write_summary_csv, write_swarm_csv, shap_dependence_export)
from .features import I_COLS, FeatureSchema, prepare
from .ingest import ColumnMap, parse_shipments
from .learners import LearnerSpec
from .learners import forest as _forest
from .local_models import GlobalModel, fit_global, fit_segmented
from .persist import load_model, save_model
from .seeding import derive_seed, rng_for
from .splitter import FoldAssignment, SplitAssignment, stratified_kfold, stratified_split
from .synth import SynthConfig, generate, write_dataset

log = logging.getLogger(__name__)

PANELS = {
    "a": {"scope": "global", "derived": False, "capped": True,
          "title": "Unified models, without derived distance"},
    "b": {"scope": "global", "derived": True, "capped": True,
          "title": "Unified models, with derived distance"},
    "c": {"scope": "naics", "derived": False, "capped": False,
          "title": "Local models per NAICS, without derived distance"},
    "d": {"scope": "naics", "derived": True, "capped": False,
          "title": "Local models per NAICS, with derived distance"},
    "e": {"scope": "sctg", "derived": False, "capped": False,
          "title": "Local models per SCTG, without derived distance"},
    "f": {"scope": "sctg", "derived": True, "capped": False,
          "title": "Local models per SCTG, with derived distance"},
}
SCENARIOS = tuple(PANELS) + ("g",)
G_TITLE = "Ensemble of global and local models"

_STR_COLS = {"id": str, "sctg": str, "naics": str, "orig_area": str, "dest_area": str,
             "hazmat": str, "orig_type": str, "dest_type": str}


def _tag(derived: bool) -> str:
    return "with" if derived else "without"


def read_frame(path) -> pd.DataFrame:
    df = pd.read_csv(path, dtype=_STR_COLS, float_precision="round_trip", keep_default_na=False)
    for c in ("temp_controlled", "export_flag"):
        if c in df:
            df[c] = df[c].astype(str).str.lower().eq("true")
    return df


def write_frame(df: pd.DataFrame, path) -> None:
    df.to_csv(path, index=False, float_format="%.17g", lineterminator="\n")


def _write_json(obj, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _read_json(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


class Pipeline:
    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.out = Path(cfg.output)
        self.out.mkdir(parents=True, exist_ok=True)
        _forest.N_JOBS = max(1, int(cfg["threads"]))
        self._cache: dict = {}

    # -- manifests ---------------------------------------------------------------

    def _manifest_path(self, stage: str) -> Path:
        return self.out / "manifests" / f"{stage}.json"

    def require(self, stage: str) -> dict:
        p = self._manifest_path(stage)
        if not p.exists():
            raise StageOrderError(f"stage {stage!r} has not been run (no {p})")
        m = _read_json(p)
        if m.get("config_hash") != self.cfg.stage_hash(stage):
            raise StaleArtifactError(
                f"artifacts of stage {stage!r} were produced under a different configuration; rerun it")
        return m

    def _finish(self, stage: str, outputs: list, **extra) -> dict:
        m = {"stage": stage, "config_hash": self.cfg.stage_hash(stage), "seed": self.cfg.seed,
             "version": __version__,
             "outputs": sorted(str(Path(o).relative_to(self.out)) for o in outputs), **extra}
        self._manifest_path(stage).parent.mkdir(parents=True, exist_ok=True)
        _write_json(m, self._manifest_path(stage))
        return m

    def _dir(self, *parts) -> Path:
        d = self.out.joinpath(*parts)
        d.mkdir(parents=True, exist_ok=True)
        return d

    def _input_path(self) -> tuple[Path, bool]:
        p = self.cfg.path("input")
        return (p, False) if p is not None else (self.out / "data" / "shipments.csv", True)

    def _areas_path(self) -> Path:
        p = self.cfg.path("areas")
        return p if p is not None else self.out / "data" / "areas.csv"

    def _truth_path(self) -> Path | None:
        p = self.cfg.path("truth")
        if p is not None:
            return p
        default = self.out / "data" / "truth.csv"
        return default if self.cfg.path("input") is None else None

    # -- stages ------------------------------------------------------------------

    def synth(self) -> dict:
        d = self._dir("data")
        ds = generate(SynthConfig.from_dict(self.cfg["synth"]), seed=self.cfg.seed)
        paths = [d / "shipments.csv", d / "truth.csv", d / "areas.csv"]
        write_dataset(ds, *paths)
        return self._finish("synth", paths, n_records=len(ds.frame),
                            bayes_accuracy=ds.bayes_accuracy)

    def ingest(self) -> dict:
        src, generated = self._input_path()
        if generated:
            self.require("synth")
        elif not src.exists():
            raise StageOrderError(f"input file not found: {src}")
        groups_path = self.cfg.path("sctg_groups")
        groups = SctgGroups.from_csv(groups_path) if groups_path else SctgGroups.default()
        schema = ColumnMap.from_dict(self.cfg["ingest"]["schema"])
        records, report = parse_shipments(src, schema, groups, strict=bool(self.cfg["ingest"]["strict"]))
        d = self._dir("ingest")
        frame = records_to_frame(records)
        write_frame(frame, d / "records.csv")
        _write_json(report.to_dict(), d / "ingest_report.json")
        return self._finish("ingest", [d / "records.csv", d / "ingest_report.json"],
                            report=report.to_dict())

    def split(self) -> dict:
        self.require("ingest")
        frame = read_frame(self.out / "ingest" / "records.csv")
        sp = self.cfg["split"]
        split = stratified_split(frame, float(sp["test_fraction"]), derive_seed(self.cfg.seed, "split"))
        train = frame[~split.is_test].reset_index(drop=True)
        folds = stratified_kfold(train, int(sp["k"]), derive_seed(self.cfg.seed, "folds"))
        d = self._dir("split")
        split.to_csv(d / "split.csv")
        folds.to_csv(d / "folds.csv")
        return self._finish("split", [d / "split.csv", d / "folds.csv"],
                            n_train=int((~split.is_test).sum()), n_test=int(split.is_test.sum()))

    def featurize(self) -> dict:
        self.require("split")
        frame = read_frame(self.out / "ingest" / "records.csv")
        split = SplitAssignment.from_csv(self.out / "split" / "split.csv")
        folds = FoldAssignment.from_csv(self.out / "split" / "folds.csv")
        if list(split.ids) != list(frame["id"]):
            raise StaleArtifactError("split does not match the ingested records")
        lookup = load_area_lookup(self._areas_path())
        prep = prepare(frame, split.is_test, folds.folds, lookup)
        d = self._dir("features")
        write_frame(prep.train, d / "train.csv")
        write_frame(prep.test, d / "test.csv")
        prep.table.to_csv(d / "distance_table.csv")
        _write_json(prep.imputation.to_dict(), d / "imputation.json")
        onehots = bool(self.cfg["features"]["category_onehots"])
        levels = dict(sctg_levels=sorted(prep.train["sctg"].unique()) if onehots else (),
                      naics_levels=sorted(prep.train["naics"].unique()) if onehots else ())
        for derived in (True, False):
            _write_json(FeatureSchema.build(with_derived=derived, **levels).to_dict(),
                        d / f"schema_{_tag(derived)}.json")
        outs = [d / n for n in ("train.csv", "test.csv", "distance_table.csv", "imputation.json",
                                "schema_with.json", "schema_without.json")]
        return self._finish("featurize", outs, imputed_test_share=float(prep.test[I_COLS].mean().mean()))

    # -- training ----------------------------------------------------------------

    def _load_features(self):
        if "train" not in self._cache:
            d = self.out / "features"
            self._cache["train"] = read_frame(d / "train.csv")
            self._cache["test"] = read_frame(d / "test.csv")
            self._cache["folds"] = FoldAssignment.from_csv(self.out / "split" / "folds.csv").folds
            for derived in (True, False):
                self._cache[("schema", derived)] = FeatureSchema.from_dict(
                    _read_json(d / f"schema_{_tag(derived)}.json"))
        return self._cache["train"], self._cache["test"], self._cache["folds"]

    def _schema(self, derived: bool) -> FeatureSchema:
        return self._cache[("schema", derived)]

    def _X(self, which: str, derived: bool) -> np.ndarray:
        key = ("X", which, derived)
        if key not in self._cache:
            self._cache[key] = self._schema(derived).transform(self._cache[which])
        return self._cache[key]

    def _spec(self, kind: str) -> LearnerSpec:
        return LearnerSpec(kind, dict(self.cfg["learners"].get(kind, {})))

    def _full_global(self, kind: str, derived: bool) -> GlobalModel:
        """Global learner on every training row (fallbacks and the ensemble roster)."""
        key = ("global", kind, derived)
        if key not in self._cache:
            train = self._cache["train"]
            self._cache[key] = fit_global(train, train["mode_idx"].to_numpy(), self._spec(kind),
                                          self._schema(derived), self.cfg.seed, self._X("train", derived))
        return self._cache[key]

    def _segmented(self, kind: str, key: str, derived: bool):
        ck = ("seg", kind, key, derived)
        if ck not in self._cache:
            train = self._cache["train"]
            self._cache[ck] = fit_segmented(
                train, train["mode_idx"].to_numpy(), key, self._spec(kind), self._schema(derived),
                int(self.cfg["scenarios"]["min_samples"]), self.cfg.seed,
                fallback=self._full_global(kind, derived), X=self._X("train", derived))
        return self._cache[ck]

    def _cap_rows(self) -> np.ndarray:
        n = len(self._cache["train"])
        cap = self.cfg["scenarios"]["global_train_cap"]
        if cap is None or cap >= n:
            return np.arange(n)
        return np.sort(rng_for(self.cfg.seed, "global_cap").permutation(n)[: int(cap)])

    def _save(self, model, path: Path) -> Path:
        path.parent.mkdir(parents=True, exist_ok=True)
        save_model(model, path, {"config_hash": self.cfg.stage_hash("train"), "seed": self.cfg.seed})
        return path

    def _train_panel(self, name: str) -> dict:
        p = PANELS[name]
        train, _, folds = self._load_features()
        y = train["mode_idx"].to_numpy()
        derived = p["derived"]
        schema = self._schema(derived)
        X = self._X("train", derived)
        d = self.out / "models" / name
        entries = {}
        kinds = list(self.cfg["scenarios"]["panel_kinds"])
        if p["capped"]:
            rows = self._cap_rows()
            sub = train.iloc[rows].reset_index(drop=True)
            for kind in kinds:
                m = fit_global(sub, y[rows], self._spec(kind), schema, self.cfg.seed, X[rows])
                entries[kind] = str(self._save(m, d / f"{kind}.json").relative_to(self.out))
        else:
            for kind in kinds:
                m = self._segmented(kind, p["scope"], derived)
                entries[kind] = str(self._save(m, d / f"{kind}.json").relative_to(self.out))
        if self.cfg["scenarios"]["panel_stack"]:
            roster = [Family(self._spec(k), p["scope"]) for k in kinds]
            rows = self._cap_rows() if p["capped"] else np.arange(len(train))
            sub = train.iloc[rows].reset_index(drop=True)
            st = fit_stacker(sub, y[rows], roster, folds[rows], schema,
                             self._passthrough(schema), self.cfg["stacking"]["meta"],
                             derive_seed(self.cfg.seed, "stack", name),
                             int(self.cfg["scenarios"]["min_samples"]), X[rows])
            entries["Stack"] = str(self._save(st, d / "Stack.json").relative_to(self.out))
        return {"members": kinds, "models": entries}

    def _passthrough(self, schema: FeatureSchema) -> list[str]:
        names = set(schema.names)
        return [n for n in self.cfg["stacking"]["passthrough"] if n in names]

    def _roster(self) -> list[Family]:
        st = self.cfg["stacking"]
        return [Family(self._spec(k), s) for k in st["kinds"] for s in st["scopes"]]

    def _train_ensemble(self) -> dict:
        train, _, folds = self._load_features()
        y = train["mode_idx"].to_numpy()
        roster = self._roster()
        d = self.out / "models" / "g"
        entries = {}
        for derived in (False, True):
            schema = self._schema(derived)
            deployed = {}
            for fam in roster:
                deployed[fam.name] = (self._full_global(fam.spec.kind, derived) if fam.scope == "global"
                                      else self._segmented(fam.spec.kind, fam.scope, derived))
            members = {}
            for fam in roster:
                path = self.out / "models" / "g" / "members" / f"{fam.name}_{_tag(derived)}.json"
                members[fam.name] = str(self._save(deployed[fam.name], path).relative_to(self.out))
            st = fit_stacker(train, y, roster, folds, schema, self._passthrough(schema),
                             self.cfg["stacking"]["meta"], derive_seed(self.cfg.seed, "stack", "g"),
                             int(self.cfg["scenarios"]["min_samples"]), self._X("train", derived),
                             deployed=deployed)
            entries[f"Stack_{_tag(derived)}"] = str(self._save(st, d / f"Stack_{_tag(derived)}.json")
                                                    .relative_to(self.out))
            entries[f"members_{_tag(derived)}"] = members
        return {"roster": [f.name for f in roster], "models": entries}

    def train(self, scenarios=None) -> dict:
        self.require("featurize")
        self._load_features()
        scenarios = list(scenarios or SCENARIOS)
        trained = {}
        prev = self._manifest_path("train")
        if prev.exists():
            old = _read_json(prev)
            if old.get("config_hash") == self.cfg.stage_hash("train"):
                trained.update(old.get("scenarios", {}))
        outs = []
        for s in scenarios:
            log.info("training scenario %s", s)
            trained[s] = self._train_ensemble() if s == "g" else self._train_panel(s)
        for info in trained.values():
            for v in info["models"].values():
                outs += list(v.values()) if isinstance(v, dict) else [v]
        return self._finish("train", [self.out / o for o in outs],
                            scenarios={k: trained[k] for k in sorted(trained)})

    # -- evaluation --------------------------------------------------------------

    def _test_truth(self):
        test = self._cache["test"]
        return test["mode_idx"].to_numpy()

    def _bayes(self) -> float | None:
        tp = self._truth_path()
        if tp is None or not Path(tp).exists():
            return None
        truth = pd.read_csv(tp, dtype={"id": str})
        test = self._cache["test"]
        t = truth.set_index("id").loc[test["id"]]
        return float((t["bayes_label"].to_numpy() == test["mode"].to_numpy()).mean())

    def _predict(self, rel: str, derived: bool) -> np.ndarray:
        model = load_model(self.out / rel)
        return model.predict_proba(self._cache["test"], self._X("test", derived))

    def evaluate(self, scenarios=None) -> dict:
        man = self.require("train")
        self._load_features()
        ev = self.cfg["evaluate"]
        B, roc = int(ev["bootstrap"]), bool(ev["roc"])
        y = self._test_truth()
        scenarios = list(scenarios or sorted(man["scenarios"]))
        d_m = self._dir("metrics")
        outs = []
        for s in scenarios:
            if s not in man["scenarios"]:
                raise StageOrderError(f"scenario {s!r} has not been trained")
            info = man["scenarios"][s]
            results = {}
            probas = {}
            if s == "g":
                for derived in (False, True):
                    tag = _tag(derived)
                    members = [self._predict(rel, derived) for rel in info["models"][f"members_{tag}"].values()]
                    probas[f"Vote_{tag}"] = vote_average(members)
                    probas[f"Stack_{tag}"] = self._predict(info["models"][f"Stack_{tag}"], derived)
                    for fam, P in zip(info["models"][f"members_{tag}"], members):
                        results[f"{fam}_{tag}"] = evaluate(P, y, B, derive_seed(self.cfg.seed, "se", s, fam, tag), roc=False)
            else:
                derived = PANELS[s]["derived"]
                for kind, rel in info["models"].items():
                    probas[kind] = self._predict(rel, derived)
                probas["Vote"] = vote_average([probas[k] for k in info["members"]])
            for name, P in probas.items():
                results[name] = evaluate(P, y, B, derive_seed(self.cfg.seed, "se", s, name), roc)
                if roc:
                    d_s = self._dir("roc", s)
                    outs += write_roc_csvs(P, y, str(d_s / name))
            path = d_m / f"scenario_{s}.json"
            write_metrics_json({"scenario": s, "title": PANELS[s]["title"] if s in PANELS else G_TITLE,
                                "n_test": int(len(y)), "models": results}, path)
            outs.append(path)
        bayes = self._bayes()
        return self._finish("evaluate", outs, scenarios=scenarios, bayes_accuracy=bayes)

    # -- explanation -------------------------------------------------------------

    def explain(self) -> dict:
        man = self.require("train")
        train, test, _ = self._load_features()
        ex = self.cfg["explain"]
        kind = ex["model"]
        n = min(int(ex["n_samples"]), len(test))
        rows = np.sort(rng_for(self.cfg.seed, "explain").permutation(len(test))[:n])
        d = self._dir("explain")
        outs = []
        schema = self._schema(True)
        names = schema.names
        Xs = self._X("test", True)[rows]
        ids = test["id"].to_numpy()[rows]
        g = man["scenarios"].get("g")
        member = g["models"]["members_with"].get(f"{kind}-global") if g else None
        model = load_model(self.out / member) if member else self._full_global(kind, True)
        imp = impurity_importance(model, names)
        _write_json(imp, d / f"importance_{kind}_global.json")
        outs.append(d / f"importance_{kind}_global.json")
        res = tree_shap(model, Xs)
        summ = shap_summary(res, names)
        write_summary_csv(summ, d / f"shap_summary_{kind}_global.csv")
        write_swarm_csv(res, Xs, names, d / f"shap_swarm_{kind}_global.csv", ids)
        shap_dependence_export(res, Xs, names, "sw", "v2w", 0, d / f"shap_dependence_{kind}_global_sw.csv")
        force_json(res.subset(slice(0, 5)), names, d / f"force_{kind}_global.json", ids[:5])
        outs += [d / f"shap_summary_{kind}_global.csv", d / f"shap_swarm_{kind}_global.csv",
                 d / f"shap_dependence_{kind}_global_sw.csv", d / f"force_{kind}_global.json"]
        if g:
            st = load_model(self.out / g["models"]["Stack_with"])
            meta_X = st.level1(test.iloc[rows].reset_index(drop=True), Xs)
            _write_json(gain_importance(st.meta, st.layout), d / "importance_stack_meta.json")
            res_m = tree_shap(st.meta, meta_X)
            write_summary_csv(shap_summary(res_m, st.layout), d / "shap_summary_stack_meta.csv")
            write_swarm_csv(res_m, meta_X, st.layout, d / "shap_swarm_stack_meta.csv", ids)
            outs += [d / "importance_stack_meta.json", d / "shap_summary_stack_meta.csv",
                     d / "shap_swarm_stack_meta.csv"]
        return self._finish("explain", outs, n_samples=n,
                            local_accuracy_error=res.local_accuracy_error())

    # -- report ------------------------------------------------------------------

    def report(self) -> dict:
        ev = self.require("evaluate")
        panels = {}
        for s in SCENARIOS:
            p = self.out / "metrics" / f"scenario_{s}.json"
            if p.exists():
                panels[s] = _read_json(p)
        rows = ("accuracy", "balanced_accuracy", "precision_weighted", "recall_weighted",
                "f1_weighted", "accuracy_se")
        table = {}
        for s, doc in panels.items():
            table[s] = {"title": doc["title"],
                        "columns": list(doc["models"]),
                        "rows": {r: {m: doc["models"][m].get(r) for m in doc["models"]} for r in rows}}
        report = {"panels": table, "bayes_accuracy": ev.get("bayes_accuracy"),
                  "ablation": _ablation(panels),
                  "checks": _checks(panels, ev.get("bayes_accuracy"))}
        d = self._dir("report")
        write_metrics_json(report, d / "report.json")
        (d / "report.md").write_text(_markdown(report), encoding="utf-8")
        return self._finish("report", [d / "report.json", d / "report.md"])

    def run_all(self, with_synth: bool = True) -> None:
        if with_synth and self.cfg.path("input") is None:
            self.synth()
        self.ingest()
        self.split()
        self.featurize()
        self.train()
        self.evaluate()
        self.explain()
        self.report()


def _acc(panels, s, m):
    try:
        return panels[s]["models"][m]["accuracy"]
    except KeyError:
        return None


def _ablation(panels: dict) -> dict:
    """Accuracy deltas isolating each countermeasure, per learner kind."""
    out = {"derived_distance": {}, "segmentation_naics": {}, "segmentation_sctg": {}, "ensemble": {}}
    kinds = sorted(set(panels.get("a", {}).get("models", {})) & set(panels.get("b", {}).get("models", {})))
    for k in kinds:
        a, b = _acc(panels, "a", k), _acc(panels, "b", k)
        out["derived_distance"][k] = {"without": a, "with": b, "delta": b - a}
        for s, key in (("d", "segmentation_naics"), ("f", "segmentation_sctg")):
            v = _acc(panels, s, k)
            if v is not None:
                out[key][k] = {"global": b, "local": v, "delta": v - b}
    if "g" in panels:
        g = panels["g"]["models"]
        fams = {m: r["accuracy"] for m, r in g.items() if m.endswith("_with") and "-" in m}
        for m in ("Vote_with", "Stack_with", "Vote_without", "Stack_without"):
            if m in g:
                out["ensemble"][m] = {"accuracy": g[m]["accuracy"]}
        if fams:
            out["ensemble"]["best_member_with"] = max(fams.values())
            out["ensemble"]["mean_member_with"] = float(np.mean(list(fams.values())))
    return out


def _checks(panels: dict, bayes: float | None) -> dict:
    """Ordering checks on the RF columns and the panel (g) ensemble, plus the Bayes ceiling."""
    out = {}
    a, b = _acc(panels, "a", "RF"), _acc(panels, "b", "RF")
    if a is not None and b is not None:
        out["derived_distance_gain"] = {"value": b - a, "threshold": 0.05, "pass": b - a >= 0.05}
    for s, key in (("d", "naics_segmentation_gain"), ("f", "sctg_segmentation_gain")):
        v = _acc(panels, s, "RF")
        if v is not None and b is not None:
            out[key] = {"value": v - b, "threshold": 0.02, "pass": v - b >= 0.02}
    if "g" in panels:
        g = panels["g"]["models"]
        fams = [r["accuracy"] for m, r in g.items() if m.endswith("_with") and "-" in m]
        if fams and "Stack_with" in g:
            st = g["Stack_with"]["accuracy"]
            out["stack_vs_best_member"] = {"value": st - max(fams), "threshold": -0.005,
                                           "pass": st >= max(fams) - 0.005}
        if fams and "Vote_with" in g:
            vt = g["Vote_with"]["accuracy"]
            out["vote_vs_mean_member"] = {"value": vt - float(np.mean(fams)), "threshold": 0.0,
                                          "pass": vt >= float(np.mean(fams))}
    if bayes is not None:
        best = max(r["accuracy"] for doc in panels.values() for r in doc["models"].values())
        out["bayes_ceiling"] = {"value": best - bayes, "threshold": 0.01, "pass": best <= bayes + 0.01}
    return out


def _fmt(v):
    return "" if v is None else f"{v:.3f}"


def _markdown(report: dict) -> str:
    lines = ["# Mode choice results", ""]
    if report.get("bayes_accuracy") is not None:
        lines += [f"Generator Bayes accuracy on the test set: {report['bayes_accuracy']:.4f}", ""]
    for s, p in report["panels"].items():
        cols = p["columns"]
        lines += [f"## ({s}) {p['title']}", "", "| metric | " + " | ".join(cols) + " |",
                  "|---" * (len(cols) + 1) + "|"]
        for r, vals in p["rows"].items():
            lines.append(f"| {r} | " + " | ".join(_fmt(vals[c]) for c in cols) + " |")
        lines.append("")
    lines += ["## Countermeasure ablation (accuracy)", ""]
    for name, block in report["ablation"].items():
        lines.append(f"- {name}: " + ", ".join(
            f"{k} {v['delta']:+.3f}" if isinstance(v, dict) and "delta" in v else
            f"{k} {_fmt(v['accuracy'] if isinstance(v, dict) else v)}" for k, v in block.items()))
    if report.get("checks"):
        lines += ["", "## Ordering checks", "", "| check | value | pass |", "|---|---|---|"]
        for k, c in report["checks"].items():
            lines.append(f"| {k} | {c['value']:+.4f} | {'yes' if c['pass'] else 'no'} |")
    return "\n".join(lines) + "\n"


__all__ = ["Pipeline", "PANELS", "SCENARIOS", "read_frame", "write_frame"]
