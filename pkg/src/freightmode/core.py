"""Domain types shared by every stage: modes, categories, area types, records."""
from __future__ import annotations

import csv
import enum
from dataclasses import dataclass, fields
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping

import pandas as pd

from .errors import ConfigError, UnknownArea, UnknownCategory

N_MODES = 5


class ModeLabel(enum.IntEnum):
    ForHireTruck = 1
    PrivateTruck = 2
    Parcel = 3
    Air = 4
    Other = 5

    @property
    def index(self) -> int:
        """Zero-based column index used in probability vectors."""
        return int(self) - 1

    @classmethod
    def from_index(cls, i: int) -> "ModeLabel":
        return cls(int(i) + 1)


class _Unmatched:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "Unmatched"

    def __bool__(self):
        return False


#: Returned by :func:`aggregate_mode` for codes outside the five-mode taxonomy.
Unmatched = _Unmatched()

MODE_CODES: dict[str, ModeLabel] = {
    "04": ModeLabel.ForHireTruck,
    "05": ModeLabel.PrivateTruck,
    "14": ModeLabel.Parcel,
    "11": ModeLabel.Air,
    "06": ModeLabel.Other,  # rail
    "07": ModeLabel.Other,  # water
    "08": ModeLabel.Other,  # inland water
    "09": ModeLabel.Other,  # great lakes
    "10": ModeLabel.Other,  # deep sea
    "101": ModeLabel.Other,  # multiple waterways
    "12": ModeLabel.Other,  # pipeline
    "15": ModeLabel.Other,  # truck and rail
    "16": ModeLabel.Other,  # truck and water
    "17": ModeLabel.Other,  # rail and water
}


def aggregate_mode(code: str):
    """Map a raw survey mode code onto the five aggregated modes.

    Returns ``Unmatched`` for any code outside the fourteen mapped codes;
    this is a value, not an error.
    """
    if not isinstance(code, str):
        return Unmatched
    return MODE_CODES.get(code.strip(), Unmatched)


class AreaType(str, enum.Enum):
    C = "C"  # combined statistical area
    M = "M"  # metropolitan statistical area
    R = "R"  # remainder of state


class Hazmat(str, enum.Enum):
    Class3 = "Class3"
    OtherHaz = "OtherHaz"
    NotHaz = "NotHaz"


@dataclass(frozen=True, slots=True)
class ShipmentRecord:
    id: str
    weight_lb: float
    value_usd: float
    sctg: str
    sctg_group: int
    naics: str
    orig_area: str
    dest_area: str
    gc_dist_mi: float
    routed_dist_mi: float
    hazmat: Hazmat
    temp_controlled: bool
    export_flag: bool
    mode: ModeLabel

    def __post_init__(self):
        if not self.weight_lb > 0:
            raise ValueError("weight_lb must be positive")
        if self.value_usd < 0 or self.gc_dist_mi < 0 or self.routed_dist_mi < 0:
            raise ValueError("value and distances must be nonnegative")


RECORD_COLUMNS = [f.name for f in fields(ShipmentRecord)]


def records_to_frame(records: Iterable[ShipmentRecord]) -> pd.DataFrame:
    """Columnar view of records; modes become 0-based ints in ``mode_idx``."""
    rows = [
        (r.id, r.weight_lb, r.value_usd, r.sctg, r.sctg_group, r.naics, r.orig_area,
         r.dest_area, r.gc_dist_mi, r.routed_dist_mi, r.hazmat.value, r.temp_controlled,
         r.export_flag, int(r.mode))
        for r in records
    ]
    df = pd.DataFrame(rows, columns=RECORD_COLUMNS)
    df["sctg_group"] = df["sctg_group"].astype("int64")
    df["mode"] = df["mode"].astype("int64")
    df["mode_idx"] = df["mode"] - 1
    df["temp_controlled"] = df["temp_controlled"].astype(bool)
    df["export_flag"] = df["export_flag"].astype(bool)
    return df


def frame_to_records(df: pd.DataFrame) -> list[ShipmentRecord]:
    return [
        ShipmentRecord(
            id=str(r.id), weight_lb=float(r.weight_lb), value_usd=float(r.value_usd),
            sctg=str(r.sctg), sctg_group=int(r.sctg_group), naics=str(r.naics),
            orig_area=str(r.orig_area), dest_area=str(r.dest_area),
            gc_dist_mi=float(r.gc_dist_mi), routed_dist_mi=float(r.routed_dist_mi),
            hazmat=Hazmat(r.hazmat), temp_controlled=bool(r.temp_controlled),
            export_flag=bool(r.export_flag), mode=ModeLabel(int(r.mode)),
        )
        for r in df.itertuples(index=False)
    ]


# --- category tables ---------------------------------------------------------

class SctgGroups:
    """SCTG code -> aggregated commodity group (9 groups)."""

    N_GROUPS = 9

    def __init__(self, mapping: Mapping[str, int]):
        self.mapping = {str(k).strip(): int(v) for k, v in mapping.items()}
        groups = set(self.mapping.values())
        if groups != set(range(1, self.N_GROUPS + 1)):
            raise ConfigError(
                f"SCTG group table must cover groups 1..{self.N_GROUPS}, got {sorted(groups)}"
            )

    @classmethod
    def from_csv(cls, path) -> "SctgGroups":
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or not {"sctg", "sctg_group"} <= set(reader.fieldnames):
                raise ConfigError(f"{path}: expected columns 'sctg,sctg_group'")
            return cls({row["sctg"]: int(row["sctg_group"]) for row in reader})

    @classmethod
    def default(cls) -> "SctgGroups":
        ref = resources.files("freightmode") / "data" / "sctg_groups.csv"
        with resources.as_file(ref) as p:
            return cls.from_csv(p)

    @property
    def codes(self) -> list[str]:
        return sorted(self.mapping)

    def __call__(self, sctg: str) -> int:
        return sctg_to_group(sctg, self)


def sctg_to_group(sctg: str, table: SctgGroups) -> int:
    try:
        return table.mapping[str(sctg).strip()]
    except KeyError:
        raise UnknownCategory(f"SCTG code {sctg!r} not in group table") from None


def load_area_lookup(path) -> dict[str, AreaType]:
    """Read an ``area,area_type`` CSV into a lookup dict."""
    out = {}
    with open(Path(path), newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"area", "area_type"} <= set(reader.fieldnames):
            raise ConfigError(f"{path}: expected columns 'area,area_type'")
        for row in reader:
            try:
                out[row["area"].strip()] = AreaType(row["area_type"].strip())
            except ValueError:
                raise ConfigError(f"{path}: bad area type {row['area_type']!r}") from None
    return out


def write_area_lookup(lookup: Mapping[str, AreaType], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["area", "area_type"])
        for area in sorted(lookup):
            w.writerow([area, AreaType(lookup[area]).value])


def classify_area(area: str, lookup: Mapping[str, AreaType]) -> AreaType:
    try:
        return AreaType(lookup[area])
    except KeyError:
        raise UnknownArea(f"CFS area {area!r} missing from area-type lookup") from None
