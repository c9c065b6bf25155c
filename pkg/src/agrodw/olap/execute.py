"""HOLAP query execution.

The base partition is answered from a materialized cuboid when one covers
the request (group set at compatible-or-finer granularity AND every filter
attribute evaluable on it); otherwise it is scanned. The delta partition is
always scanned. Partial aggregates from both sides merge by group tuple,
and ratio measures are derived last from the merged additive components.

Stale cubes (older base revision than the snapshot) are never consulted;
the planner silently falls back to the scan path, which keeps results
correct immediately after a delta merge.
"""

from typing import Any, Iterable, Optional

import numpy as np

from ..cube import CubeIndex, CuboidId, cuboid_lookup
from ..groupby import group_reduce
from ..levels import KEY_LEVEL, level_order
from ..storage import Snapshot
from .grid import ResultGrid, assemble_grid
from .query import Filter, Query, bind_query, make_predicate

_NULL_BLOCK = 1  # uniques[0] is None when the level has nulls


def filter_mask(snapshot: Snapshot, f: Filter) -> np.ndarray:
    """Boolean mask over the dimension's rows for one predicate.

    Works on the order-preserving level codes of the attribute, so ordering
    operators reduce to integer comparisons against a bisected boundary.
    Null attribute values never match.
    """
    import bisect

    codes, uniques, code_of = level_order(snapshot, f.dimension, f.attribute)
    null_offset = _NULL_BLOCK if uniques and uniques[0] is None else 0
    not_null = codes >= null_offset
    values = uniques[null_offset:]

    def eq_mask(literal) -> np.ndarray:
        code = code_of.get(literal)
        if code is None or code < null_offset:
            return np.zeros(codes.size, dtype=bool)
        return codes == code

    if f.op == "=":
        return eq_mask(f.literal)
    if f.op == "!=":
        return not_null & ~eq_mask(f.literal)
    if f.op == "in":
        mask = np.zeros(codes.size, dtype=bool)
        for lit in f.literal:
            mask |= eq_mask(lit)
        return mask
    if f.op in ("<", "<="):
        side = bisect.bisect_left if f.op == "<" else bisect.bisect_right
        return not_null & (codes < null_offset + side(values, f.literal))
    side = bisect.bisect_right if f.op == ">" else bisect.bisect_left
    return not_null & (codes >= null_offset + side(values, f.literal))


def _merge(
    accumulate: dict,
    entry_uniques: list,
    group_columns: list,
    sums: dict[str, np.ndarray],
    counts,
    additive: list[str],
):
    k = len(counts)
    sum_cols = [sums[name] for name in additive]
    for i in range(k):
        key = tuple(u[int(col[i])] for u, col in zip(entry_uniques, group_columns))
        acc = accumulate.get(key)
        if acc is None:
            accumulate[key] = [
                {name: float(col[i]) for name, col in zip(additive, sum_cols)},
                int(counts[i]),
            ]
        else:
            bucket = acc[0]
            for name, col in zip(additive, sum_cols):
                bucket[name] += float(col[i])
            acc[1] += int(counts[i])


def _aggregate_partition(
    snapshot: Snapshot,
    query: Query,
    partition: str,
    additive: list[str],
    accumulate: dict,
) -> int:
    fact = query.fact
    n = snapshot.fact_size(fact, partition)
    selection = None
    if query.filters and n:
        mask = np.ones(n, dtype=bool)
        for f in query.filters:
            dim_mask = filter_mask(snapshot, f)
            mask &= dim_mask[snapshot.fact_dim_rows(fact, partition, f.dimension)]
        selection = np.flatnonzero(mask)
    codes = []
    entry_uniques = []
    for e in query.group_by:
        dim_codes, uniques, _ = level_order(snapshot, e.dimension, e.selector)
        codes.append(dim_codes[snapshot.fact_dim_rows(fact, partition, e.dimension)])
        entry_uniques.append(uniques)
    measures = {name: snapshot.fact_measure(fact, partition, name) for name in additive}
    group_columns, sums, counts = group_reduce(codes, measures, n, selection)
    _merge(accumulate, entry_uniques, group_columns, sums, counts, additive)
    return n


def _aggregate_cuboid(
    snapshot: Snapshot,
    cube: CubeIndex,
    cid: CuboidId,
    query: Query,
    additive: list[str],
    accumulate: dict,
) -> int:
    table = cube.tables[cid]
    n = table.entry_count
    selectors = cid.selectors()
    position = {dim: i for i, (dim, _) in enumerate(cid.group)}
    row_index_cache: dict[str, np.ndarray] = {}

    def member_rows(dim: str) -> np.ndarray:
        if dim not in row_index_cache:
            keys = table.columns[position[dim]]
            row_index_cache[dim] = snapshot.dim_row_index(dim, keys)
        return row_index_cache[dim]

    selection = None
    if query.filters and n:
        mask = np.ones(n, dtype=bool)
        for f in query.filters:
            if selectors[f.dimension] == KEY_LEVEL:
                mask &= filter_mask(snapshot, f)[member_rows(f.dimension)]
            else:
                pred = make_predicate(f.op, f.literal)
                column = table.columns[position[f.dimension]]
                mask &= np.fromiter((pred(v) for v in column), dtype=bool, count=n)
        selection = np.flatnonzero(mask)
    codes = []
    entry_uniques = []
    for e in query.group_by:
        dim_codes, uniques, code_of = level_order(snapshot, e.dimension, e.selector)
        if selectors[e.dimension] == KEY_LEVEL:
            codes.append(dim_codes[member_rows(e.dimension)])
        else:
            column = table.columns[position[e.dimension]]
            codes.append(np.fromiter((code_of[v] for v in column), dtype=np.int64, count=n))
        entry_uniques.append(uniques)
    measures = {name: table.sums[name] for name in additive}
    measures["__rows"] = table.counts.astype(np.float64)
    group_columns, sums, row_sums = group_reduce(codes, measures, n, selection)
    counts = np.rint(sums.pop("__rows")).astype(np.int64)
    _merge(accumulate, entry_uniques, group_columns, sums, counts, additive)
    return n


def _resolve_cube(cubes, fact: str) -> Optional[CubeIndex]:
    if cubes is None:
        return None
    if isinstance(cubes, CubeIndex):
        return cubes if cubes.fact == fact else None
    getter = getattr(cubes, "get", None)
    return getter(fact) if getter is not None else None


def _needed_additive(query: Query, snapshot: Snapshot) -> list[str]:
    fact = snapshot.schema.facts[query.fact]
    needed: dict[str, None] = {}
    for name in query.measures:
        m = fact.measure(name)
        if m.kind == "additive":
            needed[name] = None
        elif m.kind == "ratio":
            needed[m.numerator] = None
            needed[m.denominator] = None
    return list(needed)


def execute(query: Query, snapshot: Snapshot, cubes=None) -> ResultGrid:
    """Answer a query over base∪delta; see the module docstring for the plan."""
    query = bind_query(query, snapshot.schema)
    fact = snapshot.schema.facts[query.fact]
    additive = _needed_additive(query, snapshot)
    cube = _resolve_cube(cubes, query.fact)
    cid = None
    if cube is not None and not cube.is_stale(snapshot):
        cid = cuboid_lookup(
            cube,
            [(e.dimension, e.selector) for e in query.group_by],
            [(f.dimension, f.attribute) for f in query.filters],
        )
    accumulate: dict[tuple, list] = {}
    if cid is not None:
        base_covered = _aggregate_cuboid(snapshot, cube, cid, query, additive, accumulate)
    else:
        base_covered = _aggregate_partition(snapshot, query, "base", additive, accumulate)
    delta_scanned = _aggregate_partition(snapshot, query, "delta", additive, accumulate)
    if not query.group_by and () not in accumulate:
        accumulate[()] = [{name: 0.0 for name in additive}, 0]
    groups = {
        key: _cell_values(fact, query.measures, sums, count)
        for key, (sums, count) in accumulate.items()
    }
    row_axes = query.pivot.rows if query.pivot is not None else query.group_by
    col_axes = query.pivot.cols if query.pivot is not None else ()
    provenance = {
        "source": str(cid) if cid is not None else "scan",
        "delta_rows_scanned": delta_scanned,
        "base_rows_covered": base_covered,
    }
    return assemble_grid(
        query.fact, query.group_by, row_axes, col_axes, groups, provenance, query.measures
    )


def _cell_values(fact, measures: Iterable[str], sums: dict[str, float], count: int) -> dict:
    values: dict[str, Any] = {}
    for name in measures:
        m = fact.measure(name)
        if m.kind == "additive":
            values[name] = sums[name]
        elif m.kind == "count":
            values[name] = count
        else:
            den = sums[m.denominator]
            if den != 0.0:
                values[name] = sums[m.numerator] / den
    return values


__all__ = ["execute", "filter_mask"]
