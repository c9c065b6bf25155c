"""Granularity selectors shared by the cube builder and the query engine.

A selector names one granularity of a dimension: the literal ``"key"``, an
attribute name, or a date part such as ``year(order_date)``. Selector values
are plain Python scalars; ``month(a)`` yields a ``(year, month)`` pair so
chronological order falls out of tuple order.

``level_order`` factorizes a dimension's selector values into dense codes
whose numeric order equals the value order (nulls first). Group-by kernels
that sort by code therefore emit headers already in display order.
"""

from datetime import date
from typing import Any, Optional

import numpy as np

from .errors import SemanticError
from .schema import DimensionDef, parse_date_part
from .storage import Snapshot, null_sort_key

KEY_LEVEL = "key"


def resolve_selector(dim: DimensionDef, selector: str) -> str:
    """Validate a selector against a dimension; returns its normal form.

    The key attribute's own name normalises to ``"key"``.
    """
    if selector == KEY_LEVEL or selector == dim.key:
        return KEY_LEVEL
    part = parse_date_part(selector)
    if part is not None:
        _, attr_name = part
        attr = dim.attribute(attr_name)
        if attr is None:
            raise SemanticError(f"{dim.name} has no attribute {attr_name!r}")
        if attr.kind != "date":
            raise SemanticError(f"{dim.name}.{attr_name} is not a date attribute")
        return selector
    if dim.attribute(selector) is None:
        raise SemanticError(f"{dim.name} has no attribute {selector!r}")
    return selector


def dimension_levels(dim: DimensionDef) -> list[str]:
    """All materializable granularities: key plus declared hierarchy levels."""
    levels = [KEY_LEVEL]
    for h in dim.hierarchies:
        for level in h.levels:
            if level not in levels and level != dim.key:
                levels.append(level)
    return levels


def drill_path(dim: DimensionDef) -> list[str]:
    """Drill granularities finest-first: key, then the first hierarchy."""
    path = [KEY_LEVEL]
    if dim.hierarchies:
        for level in dim.hierarchies[0].levels:
            if level != dim.key and level not in path:
                path.append(level)
    return path


def level_values(snapshot: Snapshot, dim: str, selector: str) -> list:
    """Selector values for every row of the dimension (memoized)."""
    defn = snapshot.schema.dimensions[dim]
    selector = resolve_selector(defn, selector)

    def build():
        if selector == KEY_LEVEL:
            return snapshot.dim_attr_values(dim, defn.key)
        part = parse_date_part(selector)
        if part is None:
            return snapshot.dim_attr_values(dim, selector)
        which, attr = part
        values = snapshot.dim_attr_values(dim, attr)
        if which == "year":
            return [None if v is None else v.year for v in values]
        return [None if v is None else (v.year, v.month) for v in values]

    return snapshot._cached(("level", dim, selector), build)


def level_order(snapshot: Snapshot, dim: str, selector: str):
    """Order-preserving factorization of a dimension's selector values.

    Returns ``(codes, uniques, code_of)``: an int64 code per dimension row,
    the distinct values sorted ascending with null first, and the value→code
    map. code order == value order.
    """

    def build():
        values = level_values(snapshot, dim, selector)
        uniques = sorted(set(values), key=null_sort_key)
        code_of = {v: i for i, v in enumerate(uniques)}
        codes = np.fromiter((code_of[v] for v in values), dtype=np.int64, count=len(values))
        return codes, uniques, code_of

    return snapshot._cached(("levelorder", dim, selector), build)


def format_value(value: Any) -> Any:
    """JSON form of a header value: dates ISO, months 'YYYY-MM', null None."""
    if isinstance(value, date):
        return value.isoformat()
    if isinstance(value, tuple):
        return f"{value[0]:04d}-{value[1]:02d}"
    return value


def csv_value(value: Any) -> str:
    """CSV cell form of a header or measure value; empty string for null."""
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    v = format_value(value)
    return str(v)


def selector_column(dim: DimensionDef, selector: str) -> str:
    """Column label for exports: the key attribute's name, or the selector."""
    return dim.key if selector == KEY_LEVEL else selector


__all__ = [
    "KEY_LEVEL",
    "csv_value",
    "dimension_levels",
    "drill_path",
    "format_value",
    "level_order",
    "level_values",
    "resolve_selector",
    "selector_column",
]
