"""In-memory columnar store for one constellation schema.

Each dimension is a small append-only table indexed by its integer key.
Each fact keeps two partitions: ``base`` (historical rows, eligible for
pre-aggregation) and ``delta`` (recent rows, always scanned). Writers are
serialised by a per-store lock; readers work from immutable snapshots that
pin the row counts seen at snapshot time.

Every dimension is born with an UNKNOWN member (key 0, all other attributes
null) so fact rows whose reference could not be resolved still land somewhere
that aggregation can see.
"""

import threading
from dataclasses import dataclass
from typing import Any, Callable, Iterator, Optional

import numpy as np

from ..errors import (
    DuplicateFactKey,
    DuplicateKey,
    KindMismatch,
    ReferentialViolation,
    SchemaInvalid,
    UnknownTable,
)
from ..schema import ConstellationSchema, DimensionDef, FactDef, validate_schema
from .columns import ColumnVector, KeyColumn, MeasureColumn, check_value, coerce_measure

UNKNOWN_KEY = 0

PARTITIONS = ("base", "delta")


@dataclass(frozen=True)
class FactRow:
    """One fact row: dimension keys and additive measure values.

    ``keys`` follows the fact's declared dimension order, ``measures`` the
    declared order of its additive measures.
    """

    keys: tuple[int, ...]
    measures: tuple[float, ...]


class DimensionTable:
    def __init__(self, defn: DimensionDef):
        self.defn = defn
        self.columns: dict[str, ColumnVector] = {
            a.name: ColumnVector(a.kind) for a in defn.attributes
        }
        self.key_index: dict[int, int] = {}
        self._seed_unknown()

    def _seed_unknown(self) -> None:
        for attr in self.defn.attributes:
            self.columns[attr.name].append(UNKNOWN_KEY if attr.name == self.defn.key else None)
        self.key_index[UNKNOWN_KEY] = 0

    def __len__(self) -> int:
        return len(self.key_index)

    def row(self, index: int) -> dict[str, Any]:
        return {name: col.get(index) for name, col in self.columns.items()}

    def stage(self, rows: list[dict]) -> list[dict[str, Any]]:
        """Validate a batch without mutating; returns normalised rows."""
        staged = []
        seen: set[int] = set()
        for raw in rows:
            unknown = set(raw) - set(self.columns)
            if unknown:
                raise KindMismatch(
                    f"{self.defn.name}: no such attribute {sorted(unknown)[0]!r}"
                )
            key = raw.get(self.defn.key)
            key = check_value("identifier", key, nullable=False)
            if key in self.key_index or key in seen:
                raise DuplicateKey(f"{self.defn.name}: duplicate key {key}")
            seen.add(key)
            row = {}
            for attr in self.defn.attributes:
                # nullability is a quality criterion, not a storage constraint
                row[attr.name] = check_value(attr.kind, raw.get(attr.name))
            staged.append(row)
        return staged

    def commit(self, staged: list[dict[str, Any]]) -> list[int]:
        keys = []
        for row in staged:
            index = len(self.key_index)
            for name, col in self.columns.items():
                col.append(row[name])
            key = row[self.defn.key]
            self.key_index[key] = index
            keys.append(key)
        return keys


class FactPartition:
    def __init__(self, defn: FactDef):
        self.key_columns: dict[str, KeyColumn] = {d: KeyColumn() for d in defn.dimensions}
        self.measure_columns: dict[str, MeasureColumn] = {
            m.name: MeasureColumn() for m in defn.additive_measures()
        }

    def __len__(self) -> int:
        first = next(iter(self.key_columns.values()))
        return len(first)

    def append(self, keys: tuple[int, ...], measures: tuple[float, ...]) -> None:
        for col, k in zip(self.key_columns.values(), keys):
            col.append(k)
        for col, v in zip(self.measure_columns.values(), measures):
            col.append(v)


class FactTable:
    def __init__(self, defn: FactDef):
        self.defn = defn
        self.partitions: dict[str, FactPartition] = {p: FactPartition(defn) for p in PARTITIONS}
        self.key_set: set[tuple[int, ...]] = set()
        self.base_rev = 0

    def stage(
        self,
        rows,
        dim_lookup: Callable[[str, int], bool],
    ) -> list[FactRow]:
        defn = self.defn
        additive = [m.name for m in defn.additive_measures()]
        staged: list[FactRow] = []
        seen: set[tuple[int, ...]] = set()
        for raw in rows:
            if isinstance(raw, FactRow):
                keys, measures = raw.keys, raw.measures
            else:
                keys = tuple(raw[0])
                measures = tuple(raw[1])
            if len(keys) != len(defn.dimensions):
                raise KindMismatch(
                    f"{defn.name}: expected {len(defn.dimensions)} keys, got {len(keys)}"
                )
            if len(measures) != len(additive):
                raise KindMismatch(
                    f"{defn.name}: expected {len(additive)} measures, got {len(measures)}"
                )
            keys = tuple(check_value("identifier", k, nullable=False) for k in keys)
            for dim, k in zip(defn.dimensions, keys):
                if not dim_lookup(dim, k):
                    raise ReferentialViolation(dim, k)
            if keys in self.key_set or keys in seen:
                raise DuplicateFactKey(f"{defn.name}: duplicate key tuple {keys}")
            seen.add(keys)
            measures = tuple(coerce_measure(v) for v in measures)
            staged.append(FactRow(keys, measures))
        return staged

    def commit(self, partition: str, staged: list[FactRow]) -> int:
        part = self.partitions[partition]
        for row in staged:
            part.append(row.keys, row.measures)
            self.key_set.add(row.keys)
        if partition == "base" and staged:
            self.base_rev += 1
        return len(staged)

    def absorb_delta(self) -> int:
        """Move every delta row into base. Returns the row count moved."""
        delta = self.partitions["delta"]
        n = len(delta)
        if n == 0:
            return 0
        base = self.partitions["base"]
        for name, col in delta.key_columns.items():
            base.key_columns[name].extend(col.prefix(n))
        for name, col in delta.measure_columns.items():
            base.measure_columns[name].extend(col.prefix(n))
        self.partitions["delta"] = FactPartition(self.defn)
        self.base_rev += 1
        return n


class Store:
    """Mutable engine state: schema, dimension tables, fact partitions."""

    def __init__(self, schema: ConstellationSchema):
        report = validate_schema(schema)
        if not report.ok:
            raise SchemaInvalid(report)
        self.schema = schema
        self.dimensions = {name: DimensionTable(d) for name, d in schema.dimensions.items()}
        self.facts = {name: FactTable(f) for name, f in schema.facts.items()}
        self.lock = threading.RLock()
        self._epoch = 0
        # load history, reported by the data-quality module
        self.duplicate_rejects: dict[str, int] = {}
        self.load_totals = {"inserted": 0, "rejected": 0}

    # -- writes ---------------------------------------------------------

    def insert_dimension_rows(self, name: str, rows: list[dict]) -> list[int]:
        table = self.dimensions.get(name)
        if table is None:
            raise UnknownTable(f"no dimension named {name!r}")
        with self.lock:
            staged = table.stage(rows)
            return table.commit(staged)

    def insert_fact_rows(self, name: str, partition: str, rows) -> int:
        table = self.facts.get(name)
        if table is None:
            raise UnknownTable(f"no fact named {name!r}")
        if partition not in PARTITIONS:
            raise UnknownTable(f"no partition named {partition!r}")
        with self.lock:
            staged = table.stage(rows, self._has_member)
            return table.commit(partition, staged)

    def _has_member(self, dim: str, key: int) -> bool:
        return key in self.dimensions[dim].key_index

    def record_duplicate_rejects(self, table: str, count: int) -> None:
        with self.lock:
            if count:
                self.duplicate_rejects[table] = self.duplicate_rejects.get(table, 0) + count

    def record_load(self, inserted: int, rejected: int) -> None:
        with self.lock:
            self.load_totals["inserted"] += inserted
            self.load_totals["rejected"] += rejected

    # -- reads ----------------------------------------------------------

    def snapshot(self) -> "Snapshot":
        with self.lock:
            self._epoch += 1
            return Snapshot(self, self._epoch)


def create_store(schema: ConstellationSchema) -> Store:
    """Validate the schema and build an empty store for it."""
    return Store(schema)


class Snapshot:
    """Immutable view of a store: pinned row counts plus derived-array memos.

    Columns are append-only, so the prefix visible at snapshot time never
    changes; memoised numpy projections are therefore safe to share.
    """

    def __init__(self, store: Store, epoch: int):
        self.store = store
        self.schema = store.schema
        self.epoch = epoch
        self.dim_counts = {name: len(t) for name, t in store.dimensions.items()}
        self.fact_counts = {
            name: {p: len(t.partitions[p]) for p in PARTITIONS} for name, t in store.facts.items()
        }
        self.base_revs = {name: t.base_rev for name, t in store.facts.items()}
        self.duplicate_rejects = dict(store.duplicate_rejects)
        self.load_totals = dict(store.load_totals)
        self._memo: dict[tuple, Any] = {}
        self._memo_lock = threading.Lock()

    def _cached(self, key: tuple, build: Callable[[], Any]) -> Any:
        with self._memo_lock:
            hit = self._memo.get(key)
        if hit is not None:
            return hit
        value = build()
        with self._memo_lock:
            return self._memo.setdefault(key, value)

    # -- dimension access ------------------------------------------------

    def _dim(self, name: str) -> DimensionTable:
        table = self.store.dimensions.get(name)
        if table is None:
            raise UnknownTable(f"no dimension named {name!r}")
        return table

    def dimension_size(self, name: str) -> int:
        self._dim(name)
        return self.dim_counts[name]

    def dim_attr_values(self, dim: str, attr: str) -> list:
        """Decoded values of one dimension attribute, row-indexed."""
        n = self.dim_counts[dim]
        return self._cached(
            ("dimvals", dim, attr), lambda: self._dim(dim).columns[attr].prefix(n)
        )

    def dim_keys(self, dim: str) -> np.ndarray:
        table = self._dim(dim)
        n = self.dim_counts[dim]
        return self._cached(
            ("dimkeys", dim),
            lambda: np.asarray(table.columns[table.defn.key].prefix(n), dtype=np.int64),
        )

    def lookup_dimension(self, dim: str, key: int) -> Optional[dict[str, Any]]:
        """The member row for a key, or None when absent from this snapshot."""
        table = self._dim(dim)
        index = table.key_index.get(key)
        if index is None or index >= self.dim_counts[dim]:
            return None
        return table.row(index)

    def dimension_rows(self, dim: str) -> Iterator[dict[str, Any]]:
        table = self._dim(dim)
        for i in range(self.dim_counts[dim]):
            yield table.row(i)

    def dim_row_index(self, dim: str, keys: np.ndarray) -> np.ndarray:
        """Map an array of dimension keys to row indices in the dimension."""
        table_keys = self.dim_keys(dim)
        order = self._cached(("dimorder", dim), lambda: np.argsort(table_keys, kind="stable"))
        pos = np.searchsorted(table_keys, keys, sorter=order)
        return order[pos]

    # -- fact access -------------------------------------------------------

    def _fact(self, name: str) -> FactTable:
        table = self.store.facts.get(name)
        if table is None:
            raise UnknownTable(f"no fact named {name!r}")
        return table

    def fact_size(self, name: str, partition: str) -> int:
        self._fact(name)
        return self.fact_counts[name][partition]

    def fact_keys(self, fact: str, partition: str, dim: str) -> np.ndarray:
        table = self._fact(fact)
        n = self.fact_counts[fact][partition]
        return self._cached(
            ("factkeys", fact, partition, dim),
            lambda: np.asarray(
                table.partitions[partition].key_columns[dim].prefix(n), dtype=np.int64
            ),
        )

    def fact_measure(self, fact: str, partition: str, measure: str) -> np.ndarray:
        table = self._fact(fact)
        n = self.fact_counts[fact][partition]
        return self._cached(
            ("factmeas", fact, partition, measure),
            lambda: np.asarray(
                table.partitions[partition].measure_columns[measure].prefix(n), dtype=np.float64
            ),
        )

    def fact_dim_rows(self, fact: str, partition: str, dim: str) -> np.ndarray:
        """Per fact row, the row index of its member in ``dim``."""
        return self._cached(
            ("factdimrows", fact, partition, dim),
            lambda: self.dim_row_index(dim, self.fact_keys(fact, partition, dim)),
        )

    def scan_fact(
        self,
        fact: str,
        predicate: Optional[Callable[[FactRow], bool]] = None,
        partitions: tuple[str, ...] = PARTITIONS,
    ) -> Iterator[FactRow]:
        """Yield fact rows (base first, then delta) in insertion order."""
        table = self._fact(fact)
        dims = table.defn.dimensions
        measures = [m.name for m in table.defn.additive_measures()]
        for partition in partitions:
            if partition not in PARTITIONS:
                raise UnknownTable(f"no partition named {partition!r}")
            part = table.partitions[partition]
            n = self.fact_counts[fact][partition]
            key_cols = [part.key_columns[d] for d in dims]
            measure_cols = [part.measure_columns[m] for m in measures]
            for i in range(n):
                row = FactRow(
                    tuple(c._values[i] for c in key_cols),
                    tuple(c._values[i] for c in measure_cols),
                )
                if predicate is None or predicate(row):
                    yield row


__all__ = [
    "PARTITIONS",
    "UNKNOWN_KEY",
    "DimensionTable",
    "FactPartition",
    "FactRow",
    "FactTable",
    "Snapshot",
    "Store",
    "create_store",
]
