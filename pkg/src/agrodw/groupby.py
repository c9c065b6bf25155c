"""Vectorized multi-column group-by reduction.

One kernel serves the cube builder and both planner paths of the query
engine, so aggregates are bit-identical wherever the same rows are reduced.
Group codes must be order-preserving (see levels.level_order): the kernel
sorts by code, so emitted groups are already in header display order.
"""

from typing import Optional

import numpy as np


def group_reduce(
    codes: list[np.ndarray],
    measures: dict[str, np.ndarray],
    n: int,
    selection: Optional[np.ndarray] = None,
):
    """Reduce ``n`` rows into groups keyed by the code columns.

    ``selection`` is an optional row-index array restricting the input.
    Returns ``(group_columns, sums, counts)``: per group entry one code per
    code column, the per-group sums of every measure array, and the group
    sizes. With no code columns the result is the single grand-total group
    (present even over zero rows).
    """
    if selection is not None:
        codes = [c[selection] for c in codes]
        measures = {name: m[selection] for name, m in measures.items()}
        n = selection.size
    if not codes:
        sums = {name: np.array([m.sum() if n else 0.0]) for name, m in measures.items()}
        return [], sums, np.array([n], dtype=np.int64)
    if n == 0:
        empty = np.zeros(0, dtype=np.int64)
        return (
            [empty for _ in codes],
            {name: np.zeros(0) for name in measures},
            empty,
        )
    order = np.lexsort(tuple(reversed(codes)))
    sorted_codes = [c[order] for c in codes]
    boundary = np.zeros(n, dtype=bool)
    boundary[0] = True
    for c in sorted_codes:
        boundary[1:] |= c[1:] != c[:-1]
    starts = np.flatnonzero(boundary)
    counts = np.diff(np.append(starts, n)).astype(np.int64)
    group_columns = [c[starts] for c in sorted_codes]
    sums = {
        name: np.add.reduceat(m[order], starts) for name, m in measures.items()
    }
    return group_columns, sums, counts


__all__ = ["group_reduce"]
