"""Synthetic survey-like shipments with planted mode-choice structure.

Areas sit on a plane. Every origin-destination pair has its own per-mode
circuity and availability, so the routed distance of a mode on a pair is only
recoverable from other shipments on that pair. Commodity categories carry their
own utility weights, so a single global rule fits poorly. The generator also
returns the true choice probabilities, which give the Bayes accuracy.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np
import pandas as pd

from .core import (AreaType, Hazmat, N_MODES, SctgGroups, ShipmentRecord,
                   frame_to_records, write_area_lookup)
from .seeding import rng_for

FH, PT, PARCEL, AIR, OTHER = range(N_MODES)
# raw survey codes emitted for each aggregated mode
RAW_CODES = {0: ("04",), 1: ("05",), 2: ("14",), 3: ("11",), 4: ("06", "07", "15", "16")}


@dataclass
class SynthConfig:
    n_records: int = 50_000
    n_areas: int = 8
    n_categories: int = 10
    plane_miles: float = 2000.0
    gc_noise: float = 0.45  # lognormal sigma of shipment distance around the pair distance
    route_noise: float = 0.05
    private_truck_cap: float = 500.0
    other_availability: float = 0.5
    air_availability: float = 0.6
    air_min_miles: float = 300.0
    naics_mix: float = 0.03  # share of shipments whose NAICS is drawn from another category
    utility_scale: float = 2.0
    heterogeneity: float = 1.0  # spread of category-specific slopes
    intercept_spread: float = 1.0
    covariate_spread: float = 0.3  # how far category weight/value distributions drift apart
    lane_spread: float = 2.5  # category-by-lane preference shocks (commodity-specific networks)
    # several categories per SCTG group, so the group code alone does not identify them
    sctg_codes: tuple = ("01", "02", "03", "06", "07", "08", "10", "11", "12", "13")
    naics_codes: tuple = ("311", "312", "321", "325", "327", "331", "332", "333", "334", "4541")
    seed: int = 0

    def __post_init__(self):
        if self.private_truck_cap <= 0:
            raise ValueError("private_truck_cap must be positive")
        if self.n_categories > min(len(self.sctg_codes), len(self.naics_codes)):
            raise ValueError("not enough sctg/naics codes for the category count")
        if self.n_records < 1 or self.n_areas < 2:
            raise ValueError("need at least one record and two areas")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["sctg_codes"] = list(self.sctg_codes)
        d["naics_codes"] = list(self.naics_codes)
        return d

    @classmethod
    def from_dict(cls, d) -> "SynthConfig":
        d = dict(d or {})
        for k in ("sctg_codes", "naics_codes"):
            if k in d:
                d[k] = tuple(str(v) for v in d[k])
        return cls(**d)


@dataclass
class SynthDataset:
    frame: pd.DataFrame  # record columns plus mode_idx
    truth: pd.DataFrame  # id, p1..p5, bayes_label
    area_lookup: dict
    raw_modes: list = field(default_factory=list)

    @property
    def bayes_accuracy(self) -> float:
        return bayes_accuracy(self.frame, self.truth)

    @property
    def records(self) -> list[ShipmentRecord]:
        return frame_to_records(self.frame)


def bayes_accuracy(frame: pd.DataFrame, truth: pd.DataFrame, mask=None) -> float:
    """Share of shipments whose realized mode equals the argmax of the true probabilities."""
    hit = truth["bayes_label"].to_numpy() == frame["mode"].to_numpy()
    if mask is not None:
        hit = hit[np.asarray(mask, dtype=bool)]
    return float(hit.mean())


def _areas(cfg: SynthConfig, rng):
    xy = rng.uniform(0, cfg.plane_miles, size=(cfg.n_areas, 2))
    names = [f"A{i + 1:02d}" for i in range(cfg.n_areas)]
    kinds = [AreaType.C, AreaType.M, AreaType.R]
    types = {n: kinds[i % 3] for i, n in enumerate(names)}
    return names, xy, types


def _pair_tables(cfg: SynthConfig, xy, rng):
    A = cfg.n_areas
    base = np.sqrt(((xy[:, None, :] - xy[None, :, :]) ** 2).sum(-1))
    base[np.arange(A), np.arange(A)] = 40.0  # intra-area hauls
    circuity = np.empty((A, A, N_MODES))
    circuity[..., FH] = rng.uniform(1.05, 1.35, (A, A))
    circuity[..., PT] = circuity[..., FH] * rng.uniform(0.95, 1.05, (A, A))
    circuity[..., PARCEL] = rng.uniform(1.1, 1.6, (A, A))
    circuity[..., AIR] = rng.uniform(1.0, 1.1, (A, A))
    circuity[..., OTHER] = rng.uniform(1.2, 2.6, (A, A))
    avail = np.ones((A, A, N_MODES), dtype=bool)
    avail[..., OTHER] = rng.random((A, A)) < cfg.other_availability
    avail[..., AIR] = (rng.random((A, A)) < cfg.air_availability) & (base >= cfg.air_min_miles)
    return base, circuity, avail


def _category_params(cfg: SynthConfig, rng):
    C, h = cfg.n_categories, cfg.heterogeneity
    return {
        "alpha": rng.normal(0, cfg.intercept_spread, (C, N_MODES)),
        "b_weight": rng.normal(0, 0.8 * h, (C, N_MODES)),
        "b_v2w": rng.normal(0, 0.8 * h, (C, N_MODES)),
        "b_dist": rng.normal(0, 0.8 * h, (C, N_MODES)),
        "mu_logw": 4.5 + cfg.covariate_spread * rng.uniform(-2.5, 2.5, C),
        "mu_logv2w": 1.5 + cfg.covariate_spread * rng.uniform(-2.5, 2.5, C),
        "p_haz": rng.uniform(0.0, 0.15, C),
        "p_temp": rng.uniform(0.0, 0.3, C),
    }


def generate(config: SynthConfig | None = None, seed: int | None = None) -> SynthDataset:
    """Draw a dataset; ``seed`` overrides ``config.seed``."""
    cfg = config or SynthConfig()
    seed = cfg.seed if seed is None else int(seed)
    rng = rng_for(seed, "synth", "world")
    names, xy, area_types = _areas(cfg, rng)
    base, circuity, avail = _pair_tables(cfg, xy, rng)
    par = _category_params(cfg, rng)
    lane = rng.normal(0, cfg.lane_spread, (cfg.n_categories, cfg.n_areas, cfg.n_areas, N_MODES))

    n, C = cfg.n_records, cfg.n_categories
    r = rng_for(seed, "synth", "records")
    cat = r.integers(0, C, n)
    o = r.integers(0, cfg.n_areas, n)
    d = r.integers(0, cfg.n_areas, n)
    gc = base[o, d] * r.lognormal(0.0, cfg.gc_noise, n)
    logw = par["mu_logw"][cat] + r.normal(0, 1.2, n)
    logv2w = par["mu_logv2w"][cat] + r.normal(0, 0.8, n)
    weight = np.round(np.exp(logw), 1) + 0.1
    value = np.round(weight * np.exp(logv2w), 2)
    haz = r.random(n) < par["p_haz"][cat]
    haz_class3 = haz & (r.random(n) < 0.5)
    temp = r.random(n) < par["p_temp"][cat]
    export = r.random(n) < 0.05
    routed = gc[:, None] * circuity[o, d] * r.lognormal(0.0, cfg.route_noise, (n, N_MODES))

    # standardized covariates of the utility
    zw = (logw - 4.5) / 1.5
    zv = (logv2w - 1.5) / 1.2
    zd = np.log(routed / 300.0)
    U = (par["alpha"][cat] + par["b_weight"][cat] * zw[:, None] + par["b_v2w"][cat] * zv[:, None]
         + par["b_dist"][cat] * zd + lane[cat, o, d])
    # shared structure: long hauls penalize trucks, heavy loads penalize parcel and air
    U[:, PT] -= 1.5 * np.maximum(zd[:, PT], 0)
    U[:, PARCEL] -= 1.2 * np.maximum(zw, 0)
    U[:, AIR] -= 1.0 * np.maximum(zw, 0) - 0.8 * zd[:, AIR]
    U[:, OTHER] += 1.0 * zw - 0.6 * np.log(circuity[o, d, OTHER])
    U *= cfg.utility_scale

    ok = avail[o, d].copy()
    ok[:, PT] &= gc <= cfg.private_truck_cap
    ok[haz, AIR] = False
    ok[haz, PARCEL] = False
    U = np.where(ok, U, -np.inf)
    U -= U.max(axis=1, keepdims=True)
    P = np.exp(U)
    P /= P.sum(axis=1, keepdims=True)
    u = r.random(n)
    choice = np.minimum((P.cumsum(axis=1) < u[:, None]).sum(axis=1), N_MODES - 1)
    while True:  # guard against a draw landing on a zero-probability tail
        bad = ~ok[np.arange(n), choice]
        if not bad.any():
            break
        choice[bad] = np.argmax(P[bad], axis=1)

    naics_cat = np.where(r.random(n) < cfg.naics_mix, r.integers(0, C, n), cat)
    sctg = np.asarray(cfg.sctg_codes[:C])[cat]
    groups = SctgGroups.default()
    frame = pd.DataFrame({
        "id": [f"S{i + 1:07d}" for i in range(n)],
        "weight_lb": weight,
        "value_usd": value,
        "sctg": sctg,
        "sctg_group": [groups(s) for s in sctg],
        "naics": np.asarray(cfg.naics_codes[:C])[naics_cat],
        "orig_area": np.asarray(names)[o],
        "dest_area": np.asarray(names)[d],
        "gc_dist_mi": np.round(gc, 1),
        "routed_dist_mi": np.round(routed[np.arange(n), choice], 1),
        "hazmat": np.where(haz_class3, Hazmat.Class3.value,
                           np.where(haz, Hazmat.OtherHaz.value, Hazmat.NotHaz.value)),
        "temp_controlled": temp,
        "export_flag": export,
        "mode": choice + 1,
    })
    frame["sctg_group"] = frame["sctg_group"].astype("int64")
    frame["mode"] = frame["mode"].astype("int64")
    frame["mode_idx"] = frame["mode"] - 1
    truth = pd.DataFrame({"id": frame["id"]})
    for m in range(N_MODES):
        truth[f"p{m + 1}"] = P[:, m]
    truth["bayes_label"] = np.argmax(P, axis=1) + 1
    raw_pick = r.integers(0, 4, n)
    raw_modes = [RAW_CODES[c][0] if c != OTHER else RAW_CODES[OTHER][k]
                 for c, k in zip(choice.tolist(), raw_pick.tolist())]
    return SynthDataset(frame, truth, area_types, raw_modes)


def expected_shares(truth: pd.DataFrame) -> np.ndarray:
    return truth[[f"p{m + 1}" for m in range(N_MODES)]].to_numpy().mean(axis=0)


def write_dataset(ds: SynthDataset, csv_path, truth_path, areas_path, schema=None) -> None:
    """Survey-schema CSV, the truth sidecar, and the area-type lookup."""
    from .ingest import write_shipments

    write_shipments(ds.records, csv_path, schema=schema, raw_modes=ds.raw_modes)
    ds.truth.to_csv(truth_path, index=False, float_format="%.17g")
    write_area_lookup(ds.area_lookup, areas_path)


__all__ = ["SynthConfig", "SynthDataset", "generate", "bayes_accuracy", "expected_shares",
           "write_dataset", "RAW_CODES"]
