"""Versioned JSON model files.

Numeric arrays are stored as base64 of their zlib-compressed little-endian
bytes, so a reloaded model reproduces its probabilities bit for bit and the
same model always serializes to the same bytes.
"""
from __future__ import annotations

import base64
import json
import zlib

import numpy as np

from .ensemble import Family, StackedModel
from .errors import ParseError, UnsupportedVersion
from .features import FeatureSchema
from .learners import (BoostedTrees, DecisionTree, Forest, KNearest, LearnerSpec,
                       LogisticRegression, NaiveBayes, Tree)
from .learners.baselines import Standardizer
from .local_models import GlobalModel, SegmentedModel

FORMAT = "freightmode-model"
VERSION = 1


def encode_array(a) -> dict:
    a = np.ascontiguousarray(a)
    dt = a.dtype.newbyteorder("<") if a.dtype.byteorder == ">" else a.dtype
    raw = a.astype(dt, copy=False).tobytes()
    return {"dtype": dt.str, "shape": list(a.shape),
            "data": base64.b64encode(zlib.compress(raw, 6)).decode("ascii")}


def decode_array(d: dict) -> np.ndarray:
    raw = zlib.decompress(base64.b64decode(d["data"]))
    return np.frombuffer(raw, dtype=np.dtype(d["dtype"])).reshape(d["shape"]).copy()


def _tree(t: Tree) -> dict:
    return {k: encode_array(v) for k, v in t.to_arrays().items()}


def _untree(d: dict) -> Tree:
    return Tree.from_arrays({k: decode_array(v) for k, v in d.items()})


def _scaler(s: Standardizer) -> dict:
    return {"mean": encode_array(s.mean_), "scale": encode_array(s.scale_)}


def _unscaler(d) -> Standardizer:
    s = Standardizer()
    s.mean_, s.scale_ = decode_array(d["mean"]), decode_array(d["scale"])
    return s


def _spec(s: LearnerSpec) -> dict:
    return s.to_dict()


def _unspec(d) -> LearnerSpec:
    return LearnerSpec(d["kind"], dict(d["params"]))


def to_dict(m) -> dict:
    if isinstance(m, DecisionTree):
        return {"type": "DecisionTree", "params": m.get_params(), "n_features": m.n_features_,
                "tree": _tree(m.tree_)}
    if isinstance(m, Forest):
        return {"type": "Forest", "params": m.get_params(), "n_features": m.n_features_,
                "trees": [_tree(t) for t in m.trees_]}
    if isinstance(m, BoostedTrees):
        return {"type": "BoostedTrees", "params": m.get_params(), "n_features": m.n_features_,
                "base_scores": encode_array(m.base_scores_),
                "rounds": [[_tree(t) for t in rnd] for rnd in m.trees_]}
    if isinstance(m, LogisticRegression):
        return {"type": "LogisticRegression", "params": m.get_params(), "n_features": m.n_features_,
                "scaler": _scaler(m.scaler_), "coef": encode_array(m.coef_)}
    if isinstance(m, NaiveBayes):
        return {"type": "NaiveBayes", "params": m.get_params(), "n_features": m.n_features_,
                **{k: encode_array(getattr(m, k + "_")) for k in
                   ("binary", "present", "log_prior", "mu", "var", "rate")}}
    if isinstance(m, KNearest):
        return {"type": "KNearest", "params": m.get_params(), "n_features": m.n_features_,
                "scaler": _scaler(m.scaler_), "X": encode_array(m.X_), "y": encode_array(m.y_)}
    if isinstance(m, GlobalModel):
        return {"type": "GlobalModel", "spec": _spec(m.spec), "schema": m.schema.to_dict(),
                "learner": to_dict(m.learner)}
    if isinstance(m, SegmentedModel):
        return {"type": "SegmentedModel", "key": m.key, "spec": _spec(m.spec),
                "schema": m.schema.to_dict(), "min_samples": m.min_samples,
                "categories": m.categories,
                "models": {c: to_dict(m.models[c]) for c in m.categories},
                "fallback": to_dict(m.fallback)}
    if isinstance(m, StackedModel):
        return {"type": "StackedModel",
                "roster": [{"spec": _spec(f.spec), "scope": f.scope} for f in m.roster],
                "models": {f.name: to_dict(m.models[f.name]) for f in m.roster},
                "meta": to_dict(m.meta), "passthrough": list(m.passthrough), "k": m.k,
                "schema": m.schema.to_dict(), "layout": list(m.layout)}
    raise TypeError(f"cannot serialize {type(m).__name__}")


def from_dict(d: dict):
    t = d["type"]
    if t == "DecisionTree":
        m = DecisionTree(**d["params"])
        m.n_features_, m.tree_ = d["n_features"], _untree(d["tree"])
        return m
    if t == "Forest":
        m = Forest(**d["params"])
        m.n_features_ = d["n_features"]
        m.trees_ = [_untree(x) for x in d["trees"]]
        return m
    if t == "BoostedTrees":
        m = BoostedTrees(**d["params"])
        m.n_features_ = d["n_features"]
        m.base_scores_ = decode_array(d["base_scores"])
        m.trees_ = [[_untree(x) for x in rnd] for rnd in d["rounds"]]
        return m
    if t == "LogisticRegression":
        m = LogisticRegression(**d["params"])
        m.n_features_, m.scaler_, m.coef_ = d["n_features"], _unscaler(d["scaler"]), decode_array(d["coef"])
        return m
    if t == "NaiveBayes":
        m = NaiveBayes(**d["params"])
        m.n_features_ = d["n_features"]
        for k in ("binary", "present", "log_prior", "mu", "var", "rate"):
            setattr(m, k + "_", decode_array(d[k]))
        return m
    if t == "KNearest":
        m = KNearest(**d["params"])
        m.n_features_, m.scaler_ = d["n_features"], _unscaler(d["scaler"])
        m.X_, m.y_ = decode_array(d["X"]), decode_array(d["y"])
        m.sq_ = (m.X_ ** 2).sum(axis=1)
        return m
    if t == "GlobalModel":
        return GlobalModel(_unspec(d["spec"]), FeatureSchema.from_dict(d["schema"]), from_dict(d["learner"]))
    if t == "SegmentedModel":
        return SegmentedModel(d["key"], _unspec(d["spec"]), FeatureSchema.from_dict(d["schema"]),
                              int(d["min_samples"]),
                              {c: from_dict(d["models"][c]) for c in d["categories"]},
                              from_dict(d["fallback"]))
    if t == "StackedModel":
        roster = [Family(_unspec(f["spec"]), f["scope"]) for f in d["roster"]]
        return StackedModel(roster, {f.name: from_dict(d["models"][f.name]) for f in roster},
                            from_dict(d["meta"]), tuple(d["passthrough"]), int(d["k"]),
                            FeatureSchema.from_dict(d["schema"]), list(d["layout"]))
    raise ParseError(f"unknown model type {t!r}")


def dumps(model, extra: dict | None = None) -> str:
    doc = {"format": FORMAT, "version": VERSION, "meta": extra or {}, "model": to_dict(model)}
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def loads(text: str):
    try:
        doc = json.loads(text)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ParseError(f"model file is not valid JSON: {exc}") from None
    if not isinstance(doc, dict) or doc.get("format") != FORMAT:
        raise ParseError("not a freightmode model file")
    if doc.get("version") != VERSION:
        raise UnsupportedVersion(f"model format version {doc.get('version')!r}; expected {VERSION}")
    try:
        return from_dict(doc["model"])
    except (KeyError, TypeError, ValueError, zlib.error) as exc:
        raise ParseError(f"corrupt model payload: {exc}") from None


def save_model(model, path, extra: dict | None = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(model, extra))
        fh.write("\n")


def load_model(path):
    with open(path, "rb") as fh:
        raw = fh.read()
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError(f"model file is not UTF-8: {exc}") from None
    return loads(text)


def read_model_meta(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh).get("meta", {})


__all__ = ["save_model", "load_model", "dumps", "loads", "to_dict", "from_dict", "encode_array",
           "decode_array", "read_model_meta", "FORMAT", "VERSION"]
