from .columns import ColumnVector, check_value, coerce_measure, null_sort_key
from .persist import format_cell, load_store, parse_cell, save_store
from .store import (
    PARTITIONS,
    UNKNOWN_KEY,
    DimensionTable,
    FactPartition,
    FactRow,
    FactTable,
    Snapshot,
    Store,
    create_store,
)

__all__ = [
    "PARTITIONS",
    "UNKNOWN_KEY",
    "ColumnVector",
    "DimensionTable",
    "FactPartition",
    "FactRow",
    "FactTable",
    "Snapshot",
    "Store",
    "check_value",
    "coerce_measure",
    "create_store",
    "format_cell",
    "load_store",
    "null_sort_key",
    "parse_cell",
    "save_store",
]
