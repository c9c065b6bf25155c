"""Reference evaluator: ground truth for every query, cubes ignored.

This path deliberately shares no aggregation machinery with execute(): it
walks fact rows one at a time (base then delta), resolves dimension
attributes through plain per-key dicts, filters with per-member key sets,
sums in Python floats, and lays out the grid with its own sorting. Slower
by design; its only job is to be obviously correct.
"""

import operator
from datetime import date
from typing import Any, Optional

from ..errors import SemanticError
from ..levels import KEY_LEVEL
from ..schema import parse_date_part
from ..storage import Snapshot
from .grid import ResultGrid
from .query import Query, bind_query

_OPS = {
    "=": operator.eq,
    "!=": operator.ne,
    "<": operator.lt,
    "<=": operator.le,
    ">": operator.gt,
    ">=": operator.ge,
}


def _selector_value(row: dict, key_attr: str, selector: str) -> Any:
    if selector == KEY_LEVEL:
        return row[key_attr]
    part = parse_date_part(selector)
    if part is None:
        return row[selector]
    which, attr = part
    value = row[attr]
    if value is None:
        return None
    return value.year if which == "year" else (value.year, value.month)


def _sort_key(header: tuple) -> tuple:
    out = []
    for v in header:
        if v is None:
            out.append((0, ""))
        elif isinstance(v, date):
            out.append((1, v.isoformat()))
        else:
            out.append((1, v))
    return tuple(out)


def oracle_execute(snapshot: Snapshot, query: Query) -> ResultGrid:
    """Evaluate by materializing the join row by row; defines ground truth."""
    query = bind_query(query, snapshot.schema)
    schema = snapshot.schema
    fact = schema.facts[query.fact]
    dim_pos = {d: i for i, d in enumerate(fact.dimensions)}

    # key -> group value, one map per group entry
    group_maps = []
    for e in query.group_by:
        dim = schema.dimensions[e.dimension]
        mapping = {}
        for row in snapshot.dimension_rows(e.dimension):
            mapping[row[dim.key]] = _selector_value(row, dim.key, e.selector)
        group_maps.append((dim_pos[e.dimension], mapping))

    # per filter, the set of member keys that satisfy it
    passing_sets = []
    for f in query.filters:
        dim = schema.dimensions[f.dimension]
        if f.op == "in":
            members = set(f.literal)
            test = lambda v, members=members: v in members
        else:
            test = lambda v, op=_OPS[f.op], lit=f.literal: op(v, lit)
        keys = set()
        for row in snapshot.dimension_rows(f.dimension):
            value = row[f.attribute]
            if value is not None and test(value):
                keys.add(row[dim.key])
        passing_sets.append((dim_pos[f.dimension], keys))

    additive_order = [m.name for m in fact.additive_measures()]
    needed: dict[str, None] = {}
    for name in query.measures:
        m = fact.measure(name)
        if m.kind == "additive":
            needed[name] = None
        elif m.kind == "ratio":
            needed[m.numerator] = None
            needed[m.denominator] = None
    needed_names = list(needed)
    measure_pos = [additive_order.index(name) for name in needed_names]

    accumulate: dict[tuple, list] = {}
    if not query.group_by:
        accumulate[()] = [[0.0] * len(needed_names), 0]
    for row in snapshot.scan_fact(query.fact):
        keep = True
        for pos, keys in passing_sets:
            if row.keys[pos] not in keys:
                keep = False
                break
        if not keep:
            continue
        group = tuple(mapping.get(row.keys[pos]) for pos, mapping in group_maps)
        acc = accumulate.get(group)
        if acc is None:
            acc = [[0.0] * len(needed_names), 0]
            accumulate[group] = acc
        sums = acc[0]
        for j, pos in enumerate(measure_pos):
            sums[j] += row.measures[pos]
        acc[1] += 1

    groups: dict[tuple, dict[str, Any]] = {}
    for key, (sums, count) in accumulate.items():
        by_name = dict(zip(needed_names, sums))
        values: dict[str, Any] = {}
        for name in query.measures:
            m = fact.measure(name)
            if m.kind == "additive":
                values[name] = by_name[name]
            elif m.kind == "count":
                values[name] = count
            else:
                den = by_name[m.denominator]
                if den != 0.0:
                    values[name] = by_name[m.numerator] / den
        groups[key] = values

    entries = query.group_by
    row_axes = query.pivot.rows if query.pivot is not None else entries
    col_axes = query.pivot.cols if query.pivot is not None else ()
    at = {e: i for i, e in enumerate(entries)}
    row_headers = sorted({tuple(g[at[e]] for e in row_axes) for g in groups}, key=_sort_key)
    col_headers = sorted({tuple(g[at[e]] for e in col_axes) for g in groups}, key=_sort_key)
    row_of = {h: i for i, h in enumerate(row_headers)}
    col_of = {h: i for i, h in enumerate(col_headers)}
    cells = {}
    for g, values in groups.items():
        r = row_of[tuple(g[at[e]] for e in row_axes)]
        c = col_of[tuple(g[at[e]] for e in col_axes)]
        cells[(r, c)] = values
    return ResultGrid(
        fact=query.fact,
        row_axes=row_axes,
        col_axes=col_axes,
        rows=row_headers,
        cols=col_headers,
        cells=cells,
        provenance={
            "source": "scan",
            "delta_rows_scanned": snapshot.fact_size(query.fact, "delta"),
            "base_rows_covered": snapshot.fact_size(query.fact, "base"),
        },
        measures=query.measures,
    )


__all__ = ["oracle_execute"]
