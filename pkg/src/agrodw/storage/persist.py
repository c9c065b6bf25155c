"""Store directory layout: schema text plus one CSV per table.

    <root>/schema.txt
    <root>/dim/<Dimension>.csv      header = attribute names
    <root>/fact/<Fact>.base.csv     header = dim keys then additive measures
    <root>/fact/<Fact>.delta.csv

CSV files use a header row, ``\n`` line endings, and an empty field for
null. The implicit UNKNOWN member (key 0) is not written; it is re-seeded
on load. Decimal cells are written with ``repr`` so values round-trip
exactly.
"""

import csv
import io
from datetime import date
from pathlib import Path
from typing import Any, Optional

from ..errors import HeaderMismatch, KindMismatch, ParseError
from ..schema import ConstellationSchema
from ..schema.textfmt import load_schema, serialize_schema
from .store import PARTITIONS, UNKNOWN_KEY, Store, create_store


def format_cell(kind: str, value: Any) -> str:
    if value is None:
        return ""
    if kind == "date":
        return value.isoformat()
    if kind == "decimal":
        return repr(value)
    return str(value)


def parse_cell(kind: str, text: str) -> Any:
    """Strict cell parser for store-owned CSVs (empty field = null)."""
    if text == "":
        return None
    try:
        if kind in ("identifier", "integer"):
            return int(text)
        if kind == "decimal":
            return float(text)
        if kind == "date":
            return date.fromisoformat(text)
    except ValueError as exc:
        raise KindMismatch(f"bad {kind} cell {text!r}") from exc
    return text


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def save_store(store: Store, root) -> None:
    """Write the full store state under ``root``, replacing table files."""
    root = Path(root)
    (root / "dim").mkdir(parents=True, exist_ok=True)
    (root / "fact").mkdir(parents=True, exist_ok=True)
    (root / "schema.txt").write_text(serialize_schema(store.schema), encoding="utf-8")
    snapshot = store.snapshot()
    for name, defn in store.schema.dimensions.items():
        kinds = [a.kind for a in defn.attributes]
        names = [a.name for a in defn.attributes]
        rows = []
        for row in snapshot.dimension_rows(name):
            if row[defn.key] == UNKNOWN_KEY:
                continue
            rows.append([format_cell(k, row[a]) for k, a in zip(kinds, names)])
        _write_csv(root / "dim" / f"{name}.csv", names, rows)
    for name, defn in store.schema.facts.items():
        measures = [m.name for m in defn.additive_measures()]
        header = list(defn.dimensions) + measures
        for partition in PARTITIONS:
            rows = [
                [str(k) for k in fr.keys] + [repr(v) for v in fr.measures]
                for fr in snapshot.scan_fact(name, partitions=(partition,))
            ]
            _write_csv(root / "fact" / f"{name}.{partition}.csv", header, rows)


def _read_csv(path: Path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        try:
            header = next(reader)
        except StopIteration:
            raise HeaderMismatch(f"{path.name}: missing header row") from None
        rows = []
        for row in reader:
            if len(row) != len(header):
                raise HeaderMismatch(
                    f"{path.name}: row {reader.line_num} has {len(row)} fields,"
                    f" header has {len(header)}"
                )
            rows.append(row)
    return header, rows


def load_store(root) -> Store:
    """Rebuild a store from a directory written by save_store."""
    root = Path(root)
    schema_path = root / "schema.txt"
    if not schema_path.is_file():
        raise ParseError(f"no schema.txt under {root}")
    schema = load_schema(schema_path.read_text(encoding="utf-8"))
    store = create_store(schema)
    for name, defn in schema.dimensions.items():
        path = root / "dim" / f"{name}.csv"
        if not path.is_file():
            continue
        header, rows = _read_csv(path)
        expected = [a.name for a in defn.attributes]
        if header != expected:
            raise HeaderMismatch(f"{path.name}: header {header} != schema attributes {expected}")
        kinds = [a.kind for a in defn.attributes]
        key_pos = expected.index(defn.key)
        parsed = []
        for cells in rows:
            if cells[key_pos] == str(UNKNOWN_KEY):
                continue
            parsed.append(
                {n: parse_cell(k, c) for n, k, c in zip(expected, kinds, cells)}
            )
        if parsed:
            store.insert_dimension_rows(name, parsed)
    for name, defn in schema.facts.items():
        measures = [m.name for m in defn.additive_measures()]
        expected = list(defn.dimensions) + measures
        nd = len(defn.dimensions)
        for partition in PARTITIONS:
            path = root / "fact" / f"{name}.{partition}.csv"
            if not path.is_file():
                continue
            header, rows = _read_csv(path)
            if header != expected:
                raise HeaderMismatch(
                    f"{path.name}: header {header} != schema columns {expected}"
                )
            parsed = [
                (
                    tuple(parse_cell("identifier", c) for c in cells[:nd]),
                    tuple(parse_cell("decimal", c) for c in cells[nd:]),
                )
                for cells in rows
            ]
            if parsed:
                store.insert_fact_rows(name, partition, parsed)
    return store


__all__ = ["format_cell", "load_store", "parse_cell", "save_store"]
