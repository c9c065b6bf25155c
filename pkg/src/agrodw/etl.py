"""CSV extract / transform / load pipeline plus warehouse quality scoring.

The pipeline never drops rows silently: every input row either becomes a
typed output row, is merged into one (duplicate aggregation), or lands in a
quarantine list with a machine-readable reason. Reasons use the forms
``arity``, ``quoting``, ``coerce:<column>``, ``null:<column>``,
``unresolved:<dimension>``, ``duplicate``.

Quality is scored on five measurable criteria: completeness (non-null
required cells), referential integrity (fact keys and dimension links that
resolve to a real member), duplicates (rejected by load history),
consistency (values passing range checks), and timeliness (delta share of
fact rows).
"""

import csv
import io
from dataclasses import dataclass, field
from datetime import date, datetime
from pathlib import Path
from typing import Any, Optional, Union

import numpy as np

from .errors import (
    AgrodwError,
    EmptySource,
    HeaderMismatch,
    UnknownTable,
)
from .schema import ConstellationSchema, DimensionDef, FactDef
from .storage import Snapshot, Store, UNKNOWN_KEY

DEFAULT_DATE_FORMATS = ("%Y-%m-%d", "%d/%m/%Y")

DATE_RANGE = (date(1900, 1, 1), date(2100, 12, 31))


@dataclass(frozen=True)
class QuarantineRow:
    index: int
    raw: str
    reason: str


@dataclass
class RecordBatch:
    source_id: str
    header: list[str]
    rows: list[tuple[str, ...]]
    quarantine: list[QuarantineRow] = field(default_factory=list)

    @property
    def input_count(self) -> int:
        return len(self.rows) + len(self.quarantine)


@dataclass(frozen=True)
class TransformPolicy:
    """Knobs for reference resolution, duplicates, trimming and dates."""

    unresolved: str = "map-to-unknown"  # or "quarantine"
    duplicates: str = "aggregate-additive"  # or "quarantine"
    trim: bool = True
    date_formats: tuple[str, ...] = DEFAULT_DATE_FORMATS

    def __post_init__(self):
        if self.unresolved not in ("map-to-unknown", "quarantine"):
            raise ValueError(f"bad unresolved action {self.unresolved!r}")
        if self.duplicates not in ("aggregate-additive", "quarantine"):
            raise ValueError(f"bad duplicate action {self.duplicates!r}")
        if not self.date_formats:
            raise ValueError("at least one date format required")


@dataclass
class TransformResult:
    rows: list
    quarantine: list[QuarantineRow]
    merged_duplicates: int = 0

    def __iter__(self):
        return iter((self.rows, self.quarantine))


@dataclass
class LoadReport:
    inserted: int
    rejected: int
    reasons: list[tuple[int, str]] = field(default_factory=list)


# -- extract ---------------------------------------------------------------


def _split_records(text: str) -> list[str]:
    """Split CSV text into logical records, honouring quoted newlines."""
    records = []
    buf = []
    in_quotes = False
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == '"':
            in_quotes = not in_quotes
            buf.append(ch)
        elif ch == "\n" and not in_quotes:
            rec = "".join(buf)
            records.append(rec[:-1] if rec.endswith("\r") else rec)
            buf = []
        else:
            buf.append(ch)
        i += 1
    if buf:
        rec = "".join(buf)
        records.append(rec[:-1] if rec.endswith("\r") else rec)
    return records


def _parse_record(record: str) -> list[str]:
    reader = csv.reader(io.StringIO(record), strict=True)
    fields = next(reader, [])
    if next(reader, None) is not None:
        raise csv.Error("embedded record separator")
    return fields


def extract_csv(source: Union[bytes, str, io.IOBase], source_id: str) -> RecordBatch:
    """Parse one CSV source into a RecordBatch.

    The first record is the header. Malformed records are quarantined, not
    dropped: wrong field count → ``arity``, broken quoting → ``quoting``.
    Blank records are ignored.
    """
    if hasattr(source, "read"):
        source = source.read()
    if isinstance(source, bytes):
        source = source.decode("utf-8", errors="replace")
    records = [r for r in _split_records(source) if r.strip() != ""]
    if not records:
        raise EmptySource(f"{source_id}: no header row")
    try:
        header = [h.strip() for h in _parse_record(records[0])]
    except csv.Error as exc:
        raise EmptySource(f"{source_id}: unreadable header row ({exc})") from exc
    batch = RecordBatch(source_id=source_id, header=header, rows=[])
    for index, record in enumerate(records[1:]):
        try:
            fields = _parse_record(record)
        except csv.Error:
            batch.quarantine.append(QuarantineRow(index, record, "quoting"))
            continue
        if len(fields) != len(header):
            batch.quarantine.append(QuarantineRow(index, record, "arity"))
            continue
        batch.rows.append(tuple(fields))
    return batch


# -- transform -------------------------------------------------------------


def _normalize_name(name: str) -> str:
    return name.strip().lower().replace(" ", "_").replace("-", "_")


def _coerce(kind: str, text: str, policy: TransformPolicy) -> Any:
    """Coerce one raw cell to its declared kind; '' means null."""
    if policy.trim:
        text = text.strip()
    if text == "":
        return None
    if kind in ("identifier", "integer"):
        value = int(text)
        if kind == "identifier" and value < 0:
            raise ValueError("negative identifier")
        return value
    if kind == "decimal":
        value = float(text)
        if value != value or value in (float("inf"), float("-inf")):
            raise ValueError("non-finite decimal")
        return value
    if kind == "date":
        for fmt in policy.date_formats:
            try:
                return datetime.strptime(text, fmt).date()
            except ValueError:
                continue
        raise ValueError(f"unparseable date {text!r}")
    return text


def _raw_of(fields: tuple[str, ...]) -> str:
    out = io.StringIO()
    csv.writer(out, lineterminator="").writerow(fields)
    return out.getvalue()


def _column_map(header: list[str], wanted: dict[str, str]) -> dict[str, int]:
    """Map target column name -> source position via normalized aliases."""
    positions = {}
    normalized = [_normalize_name(h) for h in header]
    for target, alias in wanted.items():
        for cand in dict.fromkeys((_normalize_name(target), _normalize_name(alias))):
            if cand in normalized:
                positions[target] = normalized.index(cand)
                break
    return positions


def transform(
    batch: RecordBatch,
    target: Union[DimensionDef, FactDef],
    snapshot: Optional[Snapshot],
    policy: TransformPolicy = TransformPolicy(),
) -> TransformResult:
    """Type, cleanse and resolve a batch against one target table.

    Dimension targets yield attribute dicts; fact targets yield
    ``(key tuple, measure tuple)`` pairs ready for storage inserts.
    Raises HeaderMismatch when a required column has no source counterpart.
    """
    if isinstance(target, DimensionDef):
        return _transform_dimension(batch, target, policy)
    return _transform_fact(batch, target, snapshot, policy)


def _transform_dimension(
    batch: RecordBatch, target: DimensionDef, policy: TransformPolicy
) -> TransformResult:
    positions = _column_map(batch.header, {a.name: a.name for a in target.attributes})
    required = [target.key] + [
        a.name for a in target.attributes if not a.nullable and a.name != target.key
    ]
    missing = [name for name in required if name not in positions]
    if missing:
        raise HeaderMismatch(f"{batch.source_id}: no column for required {missing[0]!r}")
    rows: list[dict[str, Any]] = []
    quarantine: list[QuarantineRow] = []
    seen: set[int] = set()
    for index, fields in enumerate(batch.rows):
        row: dict[str, Any] = {}
        bad = None
        for attr in target.attributes:
            pos = positions.get(attr.name)
            if pos is None:
                row[attr.name] = None
                continue
            try:
                row[attr.name] = _coerce(attr.kind, fields[pos], policy)
            except ValueError:
                bad = f"coerce:{attr.name}"
                break
        if bad is None and row[target.key] is None:
            bad = f"null:{target.key}"
        if bad is None and row[target.key] in seen:
            bad = "duplicate"
        if bad is not None:
            quarantine.append(QuarantineRow(index, _raw_of(fields), bad))
            continue
        seen.add(row[target.key])
        rows.append(row)
    return TransformResult(rows, quarantine)


def _transform_fact(
    batch: RecordBatch,
    target: FactDef,
    snapshot: Optional[Snapshot],
    policy: TransformPolicy,
) -> TransformResult:
    if snapshot is None:
        raise ValueError("fact transform needs a store snapshot to resolve references")
    schema = snapshot.schema
    wanted = {d: schema.dimensions[d].key for d in target.dimensions}
    measures = [m.name for m in target.additive_measures()]
    positions = _column_map(batch.header, {**wanted, **{m: m for m in measures}})
    missing = [c for c in list(target.dimensions) + measures if c not in positions]
    if missing:
        raise HeaderMismatch(f"{batch.source_id}: no column for required {missing[0]!r}")
    members = {d: set(snapshot.dim_keys(d).tolist()) for d in target.dimensions}
    rows: list[tuple[tuple[int, ...], tuple[float, ...]]] = []
    quarantine: list[QuarantineRow] = []
    merged = 0
    by_key: dict[tuple[int, ...], int] = {}
    for index, fields in enumerate(batch.rows):
        keys: list[int] = []
        values: list[float] = []
        bad = None
        for dim in target.dimensions:
            try:
                key = _coerce("identifier", fields[positions[dim]], policy)
            except ValueError:
                bad = f"coerce:{dim}"
                break
            if key is None or key not in members[dim]:
                if policy.unresolved == "map-to-unknown":
                    key = UNKNOWN_KEY
                else:
                    bad = f"unresolved:{dim}"
                    break
            keys.append(key)
        if bad is None:
            for name in measures:
                try:
                    value = _coerce("decimal", fields[positions[name]], policy)
                except ValueError:
                    bad = f"coerce:{name}"
                    break
                if value is None:
                    bad = f"null:{name}"
                    break
                values.append(value)
        if bad is not None:
            quarantine.append(QuarantineRow(index, _raw_of(fields), bad))
            continue
        key_tuple = tuple(keys)
        if key_tuple in by_key:
            if policy.duplicates == "aggregate-additive":
                at = by_key[key_tuple]
                old = rows[at]
                rows[at] = (key_tuple, tuple(a + b for a, b in zip(old[1], values)))
                merged += 1
            else:
                quarantine.append(QuarantineRow(index, _raw_of(fields), "duplicate"))
            continue
        by_key[key_tuple] = len(rows)
        rows.append((key_tuple, tuple(values)))
    return TransformResult(rows, quarantine, merged)


# -- load ------------------------------------------------------------------


def load(
    store: Store,
    target: str,
    rows: list,
    partition: Optional[str] = None,
) -> LoadReport:
    """Insert transformed rows one by one; per-row failures are recorded.

    Duplicate rejects feed the store's load history for the duplicates
    quality metric. inserted + rejected always equals len(rows).
    """
    if target in store.schema.dimensions:
        insert = lambda row: store.insert_dimension_rows(target, [row])
    elif target in store.schema.facts:
        part = partition or "base"
        insert = lambda row: store.insert_fact_rows(target, part, [row])
    else:
        raise UnknownTable(f"no table named {target!r}")
    inserted = 0
    reasons: list[tuple[int, str]] = []
    duplicates = 0
    for index, row in enumerate(rows):
        try:
            insert(row)
            inserted += 1
        except AgrodwError as exc:
            reason = type(exc).__name__
            if reason in ("DuplicateKey", "DuplicateFactKey"):
                duplicates += 1
                reason = "duplicate-fact-key" if reason == "DuplicateFactKey" else "duplicate-key"
            reasons.append((index, reason))
    store.record_duplicate_rejects(target, duplicates)
    store.record_load(inserted, len(reasons))
    return LoadReport(inserted=inserted, rejected=len(reasons), reasons=reasons)


def write_quarantine(
    directory, name: str, header: list[str], quarantine: list[QuarantineRow]
) -> Path:
    """Write quarantined rows to <name>.quarantine.csv with a reason column."""
    path = Path(directory) / f"{name}.quarantine.csv"
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header + ["reason"])
        for q in quarantine:
            try:
                fields = _parse_record(q.raw)
            except csv.Error:
                fields = [q.raw]
            fields = (fields + [""] * len(header))[: len(header)]
            writer.writerow(fields + [q.reason])
    return path


# -- quality ---------------------------------------------------------------


@dataclass
class TableQuality:
    completeness: float
    referential_integrity: float
    duplicates: int
    consistency: float
    timeliness: float


@dataclass
class QualityReport:
    tables: dict[str, TableQuality]
    load_counts: dict[str, int]

    def to_json_dict(self) -> dict:
        return {
            "tables": {
                name: {
                    "completeness": t.completeness,
                    "referential_integrity": t.referential_integrity,
                    "duplicates": t.duplicates,
                    "consistency": t.consistency,
                    "timeliness": t.timeliness,
                }
                for name, t in self.tables.items()
            },
            "load_counts": dict(self.load_counts),
        }


def _fraction(good: int, total: int) -> float:
    return 1.0 if total == 0 else good / total


def _check_range(kind: str, value: Any) -> bool:
    if value is None:
        return True
    if kind == "date":
        return DATE_RANGE[0] <= value <= DATE_RANGE[1]
    return True


def quality_report(snapshot: Snapshot) -> QualityReport:
    """Score every table by a full walk of the snapshot.

    A reference cell resolves only when it names a real member other than
    UNKNOWN (key 0): rows parked at UNKNOWN are precisely the unresolved
    ones. Null dimension links are absence, not references, and stay out of
    the referential denominator. The structural UNKNOWN member itself is
    skipped. Dimensions have no partitions, so their timeliness is vacuously
    1.0.
    """
    schema = snapshot.schema
    tables: dict[str, TableQuality] = {}
    for name, defn in schema.dimensions.items():
        required = [a.name for a in defn.attributes if not a.nullable]
        key = defn.key
        cells_required = 0
        cells_filled = 0
        cells_checked = 0
        cells_ok = 0
        links_total = 0
        links_good = 0
        link_targets = {l.attribute: l.target for l in defn.links}
        kinds = {a.name: a.kind for a in defn.attributes}
        for row in snapshot.dimension_rows(name):
            if row[key] == UNKNOWN_KEY:
                continue
            for attr in required:
                cells_required += 1
                if row[attr] is not None:
                    cells_filled += 1
            for attr, kind in kinds.items():
                if row[attr] is None:
                    continue
                cells_checked += 1
                if _check_range(kind, row[attr]):
                    cells_ok += 1
            for attr, target in link_targets.items():
                value = row[attr]
                if value is None:
                    continue
                links_total += 1
                if value != UNKNOWN_KEY and snapshot.lookup_dimension(target, value):
                    links_good += 1
        tables[name] = TableQuality(
            completeness=_fraction(cells_filled, cells_required),
            referential_integrity=_fraction(links_good, links_total),
            duplicates=snapshot.duplicate_rejects.get(name, 0),
            consistency=_fraction(cells_ok, cells_checked),
            timeliness=1.0,
        )
    for name, defn in schema.facts.items():
        base_n = snapshot.fact_size(name, "base")
        delta_n = snapshot.fact_size(name, "delta")
        total = base_n + delta_n
        refs_total = 0
        refs_good = 0
        for dim in defn.dimensions:
            member_keys = snapshot.dim_keys(dim)
            for partition in ("base", "delta"):
                keys = snapshot.fact_keys(name, partition, dim)
                refs_total += keys.size
                good = np.isin(keys, member_keys) & (keys != UNKNOWN_KEY)
                refs_good += int(np.count_nonzero(good))
        tables[name] = TableQuality(
            completeness=1.0,  # fact cells are non-null by construction
            referential_integrity=_fraction(refs_good, refs_total),
            duplicates=snapshot.duplicate_rejects.get(name, 0),
            consistency=1.0,  # keys and measures are range-checked at insert
            timeliness=_fraction(delta_n, total) if total else 1.0,
        )
    return QualityReport(tables=tables, load_counts=dict(snapshot.load_totals))


__all__ = [
    "DEFAULT_DATE_FORMATS",
    "LoadReport",
    "QualityReport",
    "QuarantineRow",
    "RecordBatch",
    "TableQuality",
    "TransformPolicy",
    "TransformResult",
    "extract_csv",
    "load",
    "quality_report",
    "transform",
    "write_quarantine",
]
