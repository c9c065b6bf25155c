"""Cuboid lattice planning, building, lookup, export, and delta absorption.

A cuboid pre-aggregates the base partition of one fact over a subset of its
dimensions, each at one granularity. The lattice enumerates every dimension
subset at key level, plus variants that coarsen exactly one member to a
declared hierarchy level at a time (not the full cross-product of levels).
Builds read an immutable snapshot and may run cuboids in parallel; results
are identical to a sequential build.

A cube is tied to the base revision it was built from; once delta rows are
absorbed into base the cube is stale and is simply not consulted (rebuild,
never patch).
"""

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Union

import numpy as np

from .errors import SemanticError, UnknownTable
from .groupby import group_reduce
from .levels import (
    KEY_LEVEL,
    csv_value,
    dimension_levels,
    level_order,
    selector_column,
)
from .schema import ConstellationSchema, FactDef
from .storage import Snapshot, Store

Policy = Union[str, dict]


def parse_policy(policy: Policy) -> tuple[str, Optional[int]]:
    """Normalise a policy spec: 'full', {'cap': N}, or 'cap:N'."""
    if policy == "full":
        return ("full", None)
    if isinstance(policy, str) and policy.startswith("cap:"):
        try:
            policy = {"cap": int(policy.split(":", 1)[1])}
        except ValueError:
            raise SemanticError(f"bad cube policy {policy!r}") from None
    if isinstance(policy, dict) and set(policy) == {"cap"}:
        cap = policy["cap"]
        if not isinstance(cap, int) or isinstance(cap, bool) or cap < 0:
            raise SemanticError(f"cap must be a non-negative integer, got {cap!r}")
        return ("cap", cap)
    raise SemanticError(f"bad cube policy {policy!r}")


@dataclass(frozen=True, order=True)
class CuboidId:
    fact: str
    group: tuple[tuple[str, str], ...]  # (dimension, selector), fact dim order

    def __str__(self) -> str:
        inner = "+".join(d if s == KEY_LEVEL else f"{d}@{s}" for d, s in self.group)
        return f"{self.fact}[{inner}]"

    def selectors(self) -> dict[str, str]:
        return dict(self.group)

    def export_name(self) -> str:
        dims = "+".join(d if s == KEY_LEVEL else f"{d}@{s}" for d, s in self.group)
        return f"{self.fact}.{dims}.cuboid.csv"


@dataclass
class LatticePlan:
    fact: str
    candidates: list[CuboidId]
    policy: Policy
    skipped: list[tuple[CuboidId, int]] = field(default_factory=list)


@dataclass
class CuboidTable:
    """One materialized cuboid, stored columnar in canonical group order.

    Key-level group columns are int64 key arrays; hierarchy-level columns
    are plain value lists. Rows are ordered by group tuple ascending (nulls
    first), which is the canonical export order.
    """

    id: CuboidId
    columns: list
    sums: dict[str, np.ndarray]
    counts: np.ndarray

    @property
    def entry_count(self) -> int:
        return int(self.counts.size)

    def rows(self):
        measure_cols = list(self.sums.values())
        for i in range(self.entry_count):
            group = tuple(
                col[i].item() if isinstance(col[i], np.generic) else col[i]
                for col in self.columns
            )
            yield group, tuple(float(c[i]) for c in measure_cols), int(self.counts[i])


@dataclass
class CubeIndex:
    fact: str
    built_epoch: int
    base_rev: int
    base_rows: int
    policy: Policy
    tables: dict[CuboidId, CuboidTable]
    skipped: list[tuple[CuboidId, int]]
    _cover: Optional[dict[tuple[str, str], set[CuboidId]]] = field(
        default=None, repr=False, compare=False
    )
    _ranks: Optional[dict[CuboidId, tuple[int, CuboidId]]] = field(
        default=None, repr=False, compare=False
    )

    def is_stale(self, snapshot: Snapshot) -> bool:
        return snapshot.base_revs[self.fact] != self.base_rev

    def cover_index(self) -> dict[tuple[str, str], set[CuboidId]]:
        """Inverted map (dimension, selector) -> cuboids carrying it.

        Built on first use; large lattices would otherwise pay a full
        registry scan per lookup.
        """
        if self._cover is None:
            cover: dict[tuple[str, str], set[CuboidId]] = {}
            ranks = {}
            for cid, table in self.tables.items():
                for dim, sel in cid.group:
                    cover.setdefault((dim, sel), set()).add(cid)
                ranks[cid] = (table.entry_count, cid)
            self._cover = cover
            self._ranks = ranks
        return self._cover


def _fact_def(schema: ConstellationSchema, fact) -> FactDef:
    if isinstance(fact, FactDef):
        fact = fact.name
    defn = schema.facts.get(fact)
    if defn is None:
        raise UnknownTable(f"no fact named {fact!r}")
    return defn


def plan_lattice(
    fact,
    schema: ConstellationSchema,
    snapshot: Snapshot,
    policy: Policy = "full",
) -> LatticePlan:
    """Enumerate candidate cuboids, applying the cardinality-cap policy.

    Group cardinality is estimated as the product of exact distinct counts
    of each member's selector values over its dimension table, clamped at
    the base row count. Estimates above the cap move the cuboid to skipped.
    """
    defn = _fact_def(schema, fact)
    kind, cap = parse_policy(policy)
    dims = list(defn.dimensions)
    base_rows = snapshot.fact_size(defn.name, "base")
    distinct = {
        (d, sel): len(level_order(snapshot, d, sel)[1])
        for d in dims
        for sel in dimension_levels(schema.dimensions[d])
    }
    candidates: list[CuboidId] = []
    skipped: list[tuple[CuboidId, int]] = []

    def consider(group: tuple[tuple[str, str], ...]):
        cid = CuboidId(defn.name, group)
        estimate = 1
        for member in group:
            estimate *= distinct[member]
        estimate = min(estimate, base_rows) if group else min(1, max(base_rows, 1))
        if kind == "cap" and estimate > cap:
            skipped.append((cid, estimate))
        else:
            candidates.append(cid)

    for mask in range(1 << len(dims)):
        subset = [d for i, d in enumerate(dims) if mask >> i & 1]
        consider(tuple((d, KEY_LEVEL) for d in subset))
        for j, varied in enumerate(subset):
            for level in dimension_levels(schema.dimensions[varied]):
                if level == KEY_LEVEL:
                    continue
                group = tuple(
                    (d, level if i == j else KEY_LEVEL) for i, d in enumerate(subset)
                )
                consider(group)
    return LatticePlan(fact=defn.name, candidates=candidates, policy=policy, skipped=skipped)


def _build_cuboid(snapshot: Snapshot, cid: CuboidId) -> CuboidTable:
    fact = cid.fact
    n = snapshot.fact_size(fact, "base")
    measures = {
        m.name: snapshot.fact_measure(fact, "base", m.name)
        for m in snapshot.schema.facts[fact].additive_measures()
    }
    codes = []
    uniques = []
    for dim, sel in cid.group:
        dim_codes, uniq, _ = level_order(snapshot, dim, sel)
        codes.append(dim_codes[snapshot.fact_dim_rows(fact, "base", dim)])
        uniques.append(uniq)
    group_columns, sums, counts = group_reduce(codes, measures, n)
    columns = []
    for (dim, sel), col, uniq in zip(cid.group, group_columns, uniques):
        if sel == KEY_LEVEL:
            columns.append(np.asarray(uniq, dtype=np.int64)[col])
        else:
            columns.append([uniq[c] for c in col])
    return CuboidTable(id=cid, columns=columns, sums=sums, counts=counts)


def build_cube(
    snapshot: Snapshot,
    plan: LatticePlan,
    parallel: bool = False,
    max_workers: Optional[int] = None,
) -> CubeIndex:
    """Aggregate every candidate cuboid from the base partition only."""
    if plan.fact not in snapshot.schema.facts:
        raise UnknownTable(f"no fact named {plan.fact!r}")
    if parallel and len(plan.candidates) > 1:
        workers = max_workers or min(8, os.cpu_count() or 1)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            built = list(pool.map(lambda cid: _build_cuboid(snapshot, cid), plan.candidates))
    else:
        built = [_build_cuboid(snapshot, cid) for cid in plan.candidates]
    tables = {table.id: table for table in built}
    return CubeIndex(
        fact=plan.fact,
        built_epoch=snapshot.epoch,
        base_rev=snapshot.base_revs[plan.fact],
        base_rows=snapshot.fact_size(plan.fact, "base"),
        policy=plan.policy,
        tables=tables,
        skipped=list(plan.skipped),
    )


def cuboid_lookup(
    cube: Optional[CubeIndex],
    group: Iterable[tuple[str, str]],
    filters: Iterable[tuple[str, str]] = (),
) -> Optional[CuboidId]:
    """Best materialized cuboid covering a request, or None.

    A cuboid covers a group entry when it carries that dimension at key
    level (any attribute derivable) or at exactly the requested selector;
    a filter attribute is evaluable under the same rule. Best = fewest
    entries, ties broken by lexicographic CuboidId.
    """
    if cube is None or not cube.tables:
        return None
    needed: dict[str, set[str]] = {}
    for dim, sel in group:
        needed.setdefault(dim, set()).add(sel)
    for dim, attr in filters:
        needed.setdefault(dim, set()).add(attr)
    cover = cube.cover_index()
    ranks = cube._ranks
    candidates: Optional[set[CuboidId]] = None
    for dim, wanted in needed.items():
        covering = set(cover.get((dim, KEY_LEVEL), ()))
        # A single requested level can also be served at exactly that
        # level; the key level or two distinct levels force key-level.
        if KEY_LEVEL not in wanted and len(wanted) == 1:
            covering |= cover.get((dim, next(iter(wanted))), set())
        if candidates is None:
            candidates = covering
        else:
            candidates &= covering
        if not candidates:
            return None
    if candidates is None:
        candidates = set(cube.tables)
    return min(ranks[cid] for cid in candidates)[1]


def merge_delta(store: Store, fact: str) -> int:
    """Absorb all delta rows of a fact into base; cubes built before this
    become stale (revision mismatch) and fall back to scans until rebuilt."""
    table = store.facts.get(fact)
    if table is None:
        raise UnknownTable(f"no fact named {fact!r}")
    with store.lock:
        return table.absorb_delta()


def export_cube(cube: CubeIndex, schema: ConstellationSchema, directory) -> list[Path]:
    """Write one CSV per cuboid: group-key columns, then measure columns.

    Rows are in canonical order (group tuple ascending, nulls first), so
    identical cubes export byte-identically regardless of build parallelism.
    """
    import csv

    defn = _fact_def(schema, cube.fact)
    additive = [m.name for m in defn.additive_measures()]
    count_names = [m.name for m in defn.measures if m.kind == "count"]
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for cid, table in cube.tables.items():
        header = [
            f"{dim}.{selector_column(schema.dimensions[dim], sel)}" for dim, sel in cid.group
        ]
        header += additive + count_names
        path = directory / cid.export_name()
        with open(path, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(header)
            for group, sums, count in table.rows():
                cells = [csv_value(v) for v in group]
                cells += [repr(s) for s in sums]
                cells += [str(count)] * len(count_names)
                writer.writerow(cells)
        paths.append(path)
    return paths


__all__ = [
    "CubeIndex",
    "CuboidId",
    "CuboidTable",
    "LatticePlan",
    "build_cube",
    "cuboid_lookup",
    "export_cube",
    "merge_delta",
    "parse_policy",
    "plan_lattice",
]
