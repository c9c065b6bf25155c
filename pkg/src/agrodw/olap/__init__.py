from .execute import execute, filter_mask
from .grid import ResultGrid, assemble_grid, grid_to_json_bytes, grids_equal, pivot
from .oracle import oracle_execute
from .query import (
    OPS,
    Filter,
    GroupEntry,
    PivotSpec,
    Query,
    bind_query,
    compile_query,
    dice,
    drill_down,
    make_predicate,
    roll_up,
    slice,
)

__all__ = [
    "OPS",
    "Filter",
    "GroupEntry",
    "PivotSpec",
    "Query",
    "ResultGrid",
    "assemble_grid",
    "bind_query",
    "compile_query",
    "dice",
    "drill_down",
    "execute",
    "filter_mask",
    "grid_to_json_bytes",
    "grids_equal",
    "make_predicate",
    "oracle_execute",
    "pivot",
    "roll_up",
    "slice",
]
