"""Result grids: crosstab layout, pivot re-layout, canonical JSON.

A grid is the rendered face of a cube query: row and column headers (value
tuples over the axis entries) and one measure-value dict per populated
header pair. Headers are sorted ascending with nulls first; an axis with no
entries has the single empty header, so a grand total is a 1x1 grid.

The JSON form carries exactly ``rows``, ``cols``, ``cells``, ``provenance``;
``grid_to_json_bytes`` is the one serializer shared by the CLI and the HTTP
service, which keeps their bodies byte-identical.
"""

import json
import math
from dataclasses import dataclass, field
from typing import Any, Optional

from ..errors import AxisMismatch
from ..levels import format_value
from ..storage import null_sort_key
from .query import GroupEntry


def _header_sort_key(header: tuple) -> tuple:
    return tuple(null_sort_key(v) for v in header)


@dataclass
class ResultGrid:
    fact: str
    row_axes: tuple[GroupEntry, ...]
    col_axes: tuple[GroupEntry, ...]
    rows: list[tuple]
    cols: list[tuple]
    cells: dict[tuple[int, int], dict[str, Any]]
    provenance: dict[str, Any]
    measures: tuple[str, ...] = ()

    def cell(self, r: int, c: int) -> Optional[dict[str, Any]]:
        return self.cells.get((r, c))

    def to_json_dict(self) -> dict:
        return {
            "rows": [[format_value(v) for v in h] for h in self.rows],
            "cols": [[format_value(v) for v in h] for h in self.cols],
            "cells": [
                {"r": r, "c": c, "values": dict(values)}
                for (r, c), values in sorted(self.cells.items())
            ],
            "provenance": dict(self.provenance),
        }


def grid_to_json_bytes(grid: ResultGrid) -> bytes:
    return json.dumps(
        grid.to_json_dict(), ensure_ascii=False, separators=(",", ":")
    ).encode("utf-8")


def assemble_grid(
    fact: str,
    group_entries: tuple[GroupEntry, ...],
    row_axes: tuple[GroupEntry, ...],
    col_axes: tuple[GroupEntry, ...],
    groups: dict[tuple, dict[str, Any]],
    provenance: dict[str, Any],
    measures: tuple[str, ...],
) -> ResultGrid:
    """Lay out per-group value dicts as a crosstab.

    ``groups`` maps full group tuples (in ``group_entries`` order) to cell
    value dicts. Axis assignment splits each tuple; headers come out sorted.
    """
    positions = {e: i for i, e in enumerate(group_entries)}
    row_idx = [positions[e] for e in row_axes]
    col_idx = [positions[e] for e in col_axes]
    row_headers = sorted({tuple(g[i] for i in row_idx) for g in groups}, key=_header_sort_key)
    col_headers = sorted({tuple(g[i] for i in col_idx) for g in groups}, key=_header_sort_key)
    row_of = {h: i for i, h in enumerate(row_headers)}
    col_of = {h: i for i, h in enumerate(col_headers)}
    cells = {}
    for g, values in groups.items():
        r = row_of[tuple(g[i] for i in row_idx)]
        c = col_of[tuple(g[i] for i in col_idx)]
        cells[(r, c)] = values
    return ResultGrid(
        fact=fact,
        row_axes=row_axes,
        col_axes=col_axes,
        rows=row_headers,
        cols=col_headers,
        cells=cells,
        provenance=provenance,
        measures=measures,
    )


def pivot(grid: ResultGrid, rows, cols) -> ResultGrid:
    """Re-layout a grid onto new axes; values are never recomputed.

    The new axes must be a repartition of the grid's axes (same entries,
    each exactly once); otherwise AxisMismatch.
    """
    rows = tuple(rows)
    cols = tuple(cols)
    current = list(grid.row_axes) + list(grid.col_axes)
    requested = list(rows) + list(cols)
    if sorted(map(str, requested)) != sorted(map(str, current)) or len(requested) != len(
        set(map(str, requested))
    ):
        raise AxisMismatch(
            f"pivot axes {requested} do not repartition grid axes {current}"
        )
    groups = {}
    entries = tuple(current)
    for (r, c), values in grid.cells.items():
        assignment = dict(zip(grid.row_axes, grid.rows[r]))
        assignment.update(zip(grid.col_axes, grid.cols[c]))
        groups[tuple(assignment[e] for e in entries)] = values
    return assemble_grid(
        grid.fact, entries, rows, cols, groups, dict(grid.provenance), grid.measures
    )


def grids_equal(
    a: ResultGrid, b: ResultGrid, rel_tol: float = 1e-9, report: Optional[list] = None
) -> bool:
    """Value comparison: same headers, same cells; ints exact, floats within
    relative tolerance. Provenance is intentionally ignored."""

    def note(msg: str) -> bool:
        if report is not None:
            report.append(msg)
        return False

    if a.rows != b.rows or a.cols != b.cols:
        return note(f"headers differ: {a.rows}/{a.cols} vs {b.rows}/{b.cols}")
    if set(a.cells) != set(b.cells):
        return note(f"cell positions differ: {sorted(a.cells)} vs {sorted(b.cells)}")
    for key in a.cells:
        va, vb = a.cells[key], b.cells[key]
        if set(va) != set(vb):
            return note(f"cell {key} measures differ: {sorted(va)} vs {sorted(vb)}")
        for name in va:
            x, y = va[name], vb[name]
            if isinstance(x, int) and isinstance(y, int):
                if x != y:
                    return note(f"cell {key} {name}: {x} != {y}")
            elif x != y and not math.isclose(x, y, rel_tol=rel_tol, abs_tol=0.0):
                return note(f"cell {key} {name}: {x} !~ {y}")
    return True


__all__ = ["ResultGrid", "assemble_grid", "grid_to_json_bytes", "grids_equal", "pivot"]
