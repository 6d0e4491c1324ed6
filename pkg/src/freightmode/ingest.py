"""Parse survey-schema CSV files into validated shipment records."""
from __future__ import annotations

import csv
import io
import math
from collections import Counter
from dataclasses import asdict, dataclass, field
from typing import IO, Iterable, Iterator

from .core import Hazmat, SctgGroups, ShipmentRecord, Unmatched, aggregate_mode, sctg_to_group
from .errors import FieldError, SchemaError, UnknownCategory

LOGICAL_FIELDS = (
    "id", "orig_area", "dest_area", "naics", "sctg", "mode", "value_usd", "weight_lb",
    "gc_dist_mi", "routed_dist_mi", "temp_controlled", "export_flag", "hazmat",
)

PUF_2017_COLUMNS = {
    "id": "SHIPMT_ID",
    "orig_area": "ORIG_CFS_AREA",
    "dest_area": "DEST_CFS_AREA",
    "naics": "NAICS",
    "sctg": "SCTG",
    "mode": "MODE",
    "value_usd": "SHIPMT_VALUE",
    "weight_lb": "SHIPMT_WGHT",
    "gc_dist_mi": "SHIPMT_DIST_GC",
    "routed_dist_mi": "SHIPMT_DIST_ROUTED",
    "temp_controlled": "TEMP_CNTL_YN",
    "export_flag": "EXPORT_YN",
    "hazmat": "HAZMAT",
}

CANONICAL_HAZMAT = {h.value: h for h in Hazmat}
# letter codes used by the 2017 public use file
PUF_HAZMAT = {"P": Hazmat.Class3, "H": Hazmat.OtherHaz, "N": Hazmat.NotHaz}

_TRUE = {"Y", "1", "TRUE", "T"}
_FALSE = {"N", "0", "FALSE", "F"}


@dataclass
class ColumnMap:
    """Logical field -> CSV column name, plus the hazmat token encoding."""

    columns: dict = field(default_factory=lambda: dict(PUF_2017_COLUMNS))
    hazmat_codes: dict = field(default_factory=lambda: dict(CANONICAL_HAZMAT))

    @classmethod
    def puf2017(cls) -> "ColumnMap":
        """Column names and hazmat letters exactly as published in the 2017 file."""
        return cls(hazmat_codes={**CANONICAL_HAZMAT, **PUF_HAZMAT})

    @classmethod
    def from_dict(cls, d: dict | None) -> "ColumnMap":
        d = dict(d or {})
        preset = d.pop("preset", "canonical")
        base = cls.puf2017() if preset == "puf2017" else cls()
        base.columns.update(d.get("columns", {}))
        if "hazmat_codes" in d:
            base.hazmat_codes = {str(k): Hazmat(v) for k, v in d["hazmat_codes"].items()}
        missing = set(LOGICAL_FIELDS) - set(base.columns)
        if missing:
            raise SchemaError(f"column map lacks fields {sorted(missing)}")
        return base


@dataclass
class IngestReport:
    total_rows: int = 0
    accepted: int = 0
    rejected_unmatched_mode: int = 0
    rejected_invalid_field: int = 0
    column_errors: dict = field(default_factory=dict)

    @property
    def unmatched_fraction(self) -> float:
        return self.rejected_unmatched_mode / self.total_rows if self.total_rows else 0.0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["unmatched_fraction"] = self.unmatched_fraction
        return d


def normalize_mode_code(code: str) -> str:
    code = code.strip()
    # some extracts drop the leading zero ("4" for "04")
    if len(code) == 1 and code.isdigit():
        code = "0" + code
    return code


def _number(row, col, *, positive=False):
    raw = row[col]
    try:
        v = float(raw.strip())
    except (ValueError, AttributeError):
        raise FieldError(col, raw, "not a number") from None
    if not math.isfinite(v):
        raise FieldError(col, raw, "not finite")
    if positive and not v > 0:
        raise FieldError(col, raw, "must be positive")
    if v < 0:
        raise FieldError(col, raw, "must be nonnegative")
    return v


def _flag(row, col):
    raw = row[col]
    tok = (raw or "").strip().upper()
    if tok in _TRUE:
        return True
    if tok in _FALSE:
        return False
    raise FieldError(col, raw, "expected Y/N")


def validate_record(row: dict, schema: ColumnMap | None = None,
                    sctg_groups: SctgGroups | None = None) -> ShipmentRecord:
    """Build a record from one raw CSV row, raising :class:`FieldError` on bad input."""
    schema = schema or ColumnMap()
    sctg_groups = sctg_groups or SctgGroups.default()
    c = schema.columns
    for logical in LOGICAL_FIELDS:
        if row.get(c[logical]) is None:
            raise FieldError(c[logical], None, "missing")

    mode = aggregate_mode(normalize_mode_code(row[c["mode"]]))
    if mode is Unmatched:
        raise FieldError(c["mode"], row[c["mode"]], "unmatched mode code")

    sctg = row[c["sctg"]].strip()
    try:
        group = sctg_to_group(sctg, sctg_groups)
    except UnknownCategory:
        raise FieldError(c["sctg"], row[c["sctg"]], "unknown SCTG code") from None
    haz_raw = row[c["hazmat"]]
    try:
        hazmat = schema.hazmat_codes[haz_raw.strip()]
    except KeyError:
        raise FieldError(c["hazmat"], haz_raw, "unknown hazmat code") from None
    naics = row[c["naics"]].strip()
    if not naics:
        raise FieldError(c["naics"], row[c["naics"]], "empty")
    orig = row[c["orig_area"]].strip()
    dest = row[c["dest_area"]].strip()
    if not orig:
        raise FieldError(c["orig_area"], row[c["orig_area"]], "empty")
    if not dest:
        raise FieldError(c["dest_area"], row[c["dest_area"]], "empty")

    return ShipmentRecord(
        id=row[c["id"]].strip(),
        weight_lb=_number(row, c["weight_lb"], positive=True),
        value_usd=_number(row, c["value_usd"]),
        sctg=sctg,
        sctg_group=group,
        naics=naics,
        orig_area=orig,
        dest_area=dest,
        gc_dist_mi=_number(row, c["gc_dist_mi"]),
        routed_dist_mi=_number(row, c["routed_dist_mi"]),
        hazmat=hazmat,
        temp_controlled=_flag(row, c["temp_controlled"]),
        export_flag=_flag(row, c["export_flag"]),
        mode=mode,
    )


def _open_text(source) -> tuple[IO[str], bool]:
    if isinstance(source, (bytes, bytearray)):
        return io.StringIO(source.decode("utf-8-sig")), True
    if isinstance(source, io.TextIOBase):
        return source, False
    if hasattr(source, "read"):
        return io.TextIOWrapper(source, encoding="utf-8-sig", newline=""), False
    return open(source, newline="", encoding="utf-8-sig"), True


def parse_shipments(source, schema: ColumnMap | None = None,
                    sctg_groups: SctgGroups | None = None, strict: bool = False
                    ) -> tuple[list[ShipmentRecord], IngestReport]:
    """Read a CSV (path, bytes or stream) into records plus an ingest report.

    Rows whose mode code is outside the taxonomy are dropped and counted.
    Rows failing field validation are counted per column, or abort the parse
    when ``strict`` is set.
    """
    schema = schema or ColumnMap()
    sctg_groups = sctg_groups or SctgGroups.default()
    fh, owned = _open_text(source)
    try:
        reader = csv.DictReader(fh)
        header = reader.fieldnames
        if not header:
            raise SchemaError("missing header row")
        header = [h.strip() for h in header]
        reader.fieldnames = header
        missing = [col for col in schema.columns.values() if col not in header]
        if missing:
            raise SchemaError(f"header lacks columns {missing}")
        if len(set(header)) != len(header):
            raise SchemaError("duplicate column names in header")

        mode_col = schema.columns["mode"]
        records = []
        report = IngestReport()
        col_errors: Counter = Counter()
        for row in reader:
            report.total_rows += 1
            code = row.get(mode_col)
            if code is not None and aggregate_mode(normalize_mode_code(code)) is Unmatched:
                report.rejected_unmatched_mode += 1
                continue
            try:
                rec = validate_record(row, schema, sctg_groups)
            except (FieldError, ValueError) as exc:
                if strict:
                    raise
                report.rejected_invalid_field += 1
                col_errors[getattr(exc, "column", "?")] += 1
                continue
            records.append(rec)
            report.accepted += 1
        report.column_errors = dict(sorted(col_errors.items()))
        return records, report
    finally:
        if owned:
            fh.close()


def iter_rows(records: Iterable[ShipmentRecord], schema: ColumnMap | None = None) -> Iterator[dict]:
    """Inverse of :func:`validate_record`: records back to raw CSV rows."""
    schema = schema or ColumnMap()
    c = schema.columns
    haz_token = {}
    for tok, h in schema.hazmat_codes.items():
        haz_token.setdefault(h, tok)
    mode_token = {}
    for tok, m in (("04", 1), ("05", 2), ("14", 3), ("11", 4), ("06", 5)):
        mode_token[m] = tok
    for r in records:
        yield {
            c["id"]: r.id,
            c["orig_area"]: r.orig_area,
            c["dest_area"]: r.dest_area,
            c["naics"]: r.naics,
            c["sctg"]: r.sctg,
            c["mode"]: mode_token[int(r.mode)],
            c["value_usd"]: repr(float(r.value_usd)),
            c["weight_lb"]: repr(float(r.weight_lb)),
            c["gc_dist_mi"]: repr(float(r.gc_dist_mi)),
            c["routed_dist_mi"]: repr(float(r.routed_dist_mi)),
            c["temp_controlled"]: "Y" if r.temp_controlled else "N",
            c["export_flag"]: "Y" if r.export_flag else "N",
            c["hazmat"]: haz_token[r.hazmat],
        }


def write_shipments(records: Iterable[ShipmentRecord], path, schema: ColumnMap | None = None,
                    raw_modes: Iterable[str] | None = None) -> None:
    """Write records as a survey-schema CSV.

    ``raw_modes`` optionally overrides the emitted mode code per record (the
    generator uses it to spread the Other mode across its raw codes).
    """
    schema = schema or ColumnMap()
    cols = [schema.columns[f] for f in LOGICAL_FIELDS]
    modes = iter(raw_modes) if raw_modes is not None else None
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=cols, lineterminator="\n")
        w.writeheader()
        for row in iter_rows(records, schema):
            if modes is not None:
                row[schema.columns["mode"]] = next(modes)
            w.writerow(row)
