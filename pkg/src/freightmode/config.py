"""Run configuration: one YAML file, defaults below, stage-scoped hashes."""
from __future__ import annotations

import copy
import hashlib
import json
import os
from pathlib import Path

import yaml

from .errors import ConfigError

DEFAULTS: dict = {
    "seed": 0,
    "threads": 1,
    "paths": {
        "output": "out",
        "input": None,  # survey-schema CSV; defaults to <output>/data/shipments.csv
        "areas": None,  # area-type lookup CSV; defaults to <output>/data/areas.csv
        "truth": None,  # optional generator sidecar
        "sctg_groups": None,  # optional replacement for the bundled SCTG group table
    },
    "synth": {"n_records": 50_000},
    "ingest": {"schema": {"preset": "canonical"}, "strict": False},
    "split": {"test_fraction": 0.2, "k": 5},
    "features": {"category_onehots": True},
    "learners": {
        "DT": {"min_leaf": 5},
        "RF": {"n_trees": 30, "min_leaf": 5},
        "BAG": {"n_trees": 30, "min_leaf": 5},
        "Extra": {"n_trees": 30, "min_leaf": 5},
        "BOOST": {"n_rounds": 40, "learning_rate": 0.25, "max_depth": 6, "reg_lambda": 1.0},
        "LR": {"max_iter": 300, "step": 0.5, "l2": 1e-4},
        "NB": {},
        "KNN": {"k": 15},
    },
    "scenarios": {
        "panel_kinds": ["LR", "DT", "KNN", "NB", "RF", "BAG", "Extra", "BOOST"],
        "global_train_cap": 10_000,
        "panel_stack": False,
        "min_samples": 50,
    },
    "stacking": {
        "kinds": ["RF", "BAG", "Extra"],
        "scopes": ["global", "sctg", "naics"],
        "passthrough": ["sw", "sv", "v2w", "gc_dist", "M1", "M2", "M3", "M4", "M5"],
        "meta": {"n_rounds": 60, "learning_rate": 0.15, "max_depth": 4, "reg_lambda": 1.0},
    },
    "evaluate": {"bootstrap": 1000, "roc": True},
    "explain": {"n_samples": 500, "model": "RF"},
}

STAGES = ("synth", "ingest", "split", "featurize", "train", "evaluate", "explain", "report")
# configuration sections each stage reads, cumulative along the pipeline
_STAGE_SECTIONS = {
    "synth": ["seed", "synth"],
    "ingest": ["ingest", "paths.input", "paths.sctg_groups"],
    "split": ["split"],
    "featurize": ["features", "paths.areas"],
    "train": ["learners", "scenarios", "stacking"],
    "evaluate": ["evaluate"],
    "explain": ["explain"],
    "report": [],
}


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in (over or {}).items():
        if isinstance(v, dict) and isinstance(out.get(k), dict) and k != "learners":
            out[k] = _merge(out[k], v)
        elif k == "learners" and isinstance(v, dict):
            merged = copy.deepcopy(out.get(k, {}))
            for kind, params in v.items():
                merged[kind] = {**merged.get(kind, {}), **(params or {})}
            out[k] = merged
        else:
            out[k] = copy.deepcopy(v)
    return out


class RunConfig:
    def __init__(self, data: dict | None = None, base_dir: str | os.PathLike = "."):
        self.data = _merge(DEFAULTS, data or {})
        self.base_dir = Path(base_dir)
        self._validate()

    @classmethod
    def load(cls, path) -> "RunConfig":
        p = Path(path)
        if not p.exists():
            raise ConfigError(f"config file not found: {p}")
        try:
            data = yaml.safe_load(p.read_text(encoding="utf-8")) or {}
        except yaml.YAMLError as exc:
            raise ConfigError(f"invalid YAML in {p}: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config root must be a mapping")
        return cls(data, p.parent)

    def _validate(self):
        d = self.data
        unknown = set(d) - set(DEFAULTS)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if not isinstance(d["seed"], int) or d["seed"] < 0:
            raise ConfigError("seed must be a nonnegative integer")
        tf = d["split"]["test_fraction"]
        if not 0 < tf < 1:
            raise ConfigError("split.test_fraction must lie in (0, 1)")
        if int(d["split"]["k"]) < 2:
            raise ConfigError("split.k must be at least 2")

    def override(self, *, seed=None, threads=None, strict=None) -> "RunConfig":
        if seed is not None:
            self.data["seed"] = int(seed)
        if threads is not None:
            self.data["threads"] = int(threads)
        if strict is not None and strict:
            self.data["ingest"]["strict"] = True
        env_out = os.environ.get("FREIGHTMODE_OUTPUT")
        if env_out:
            self.data["paths"]["output"] = env_out
        env_threads = os.environ.get("FREIGHTMODE_THREADS")
        if env_threads and threads is None:
            self.data["threads"] = int(env_threads)
        self._validate()
        return self

    def __getitem__(self, key):
        return self.data[key]

    @property
    def seed(self) -> int:
        return int(self.data["seed"])

    def path(self, name: str) -> Path | None:
        v = self.data["paths"].get(name)
        if v is None:
            return None
        p = Path(v)
        return p if p.is_absolute() else self.base_dir / p

    @property
    def output(self) -> Path:
        return self.path("output")

    def _section(self, dotted: str):
        cur = self.data
        for part in dotted.split("."):
            cur = cur.get(part) if isinstance(cur, dict) else None
        return cur

    def stage_hash(self, stage: str) -> str:
        """Hash of every config section the stage or its upstream stages read."""
        keys = []
        for s in STAGES[: STAGES.index(stage) + 1]:
            keys += _STAGE_SECTIONS[s]
        payload = {k: self._section(k) for k in keys}
        blob = json.dumps(payload, sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def dump(self) -> str:
        return yaml.safe_dump(self.data, sort_keys=True)


__all__ = ["RunConfig", "DEFAULTS", "STAGES"]
