"""Append-only typed column vectors.

Text and enumeration columns are dictionary-encoded (codes into a per-column
value dictionary); numeric and date columns hold plain Python values. Columns
never mutate existing positions, so a reader that remembers a length can keep
using the prefix while a writer appends.
"""

import math
from datetime import date
from typing import Any, Optional

from ..errors import KindMismatch

_NULL_CODE = -1


def check_value(kind: str, value: Any, *, nullable: bool = True) -> Any:
    """Validate and normalise one cell value for the given attribute kind.

    Returns the stored form (ints stay int, decimals become float). Raises
    KindMismatch on type errors, non-finite decimals, or a null in a
    non-nullable slot.
    """
    if value is None:
        if not nullable:
            raise KindMismatch(f"null not allowed for non-nullable {kind} value")
        return None
    if kind in ("identifier", "integer"):
        if isinstance(value, bool) or not isinstance(value, int):
            raise KindMismatch(f"expected integer for kind {kind!r}, got {value!r}")
        if kind == "identifier" and value < 0:
            raise KindMismatch(f"identifier must be non-negative, got {value!r}")
        if kind == "identifier" and value.bit_length() >= 64:
            # key columns project to int64; wider values would overflow there
            raise KindMismatch(f"identifier exceeds the 64-bit key width: {value!r}")
        return value
    if kind == "decimal":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise KindMismatch(f"expected number for kind decimal, got {value!r}")
        value = float(value)
        if not math.isfinite(value):
            raise KindMismatch(f"decimal must be finite, got {value!r}")
        return value
    if kind == "date":
        if not isinstance(value, date):
            raise KindMismatch(f"expected date for kind date, got {value!r}")
        return value
    if kind in ("text", "enumeration"):
        if not isinstance(value, str):
            raise KindMismatch(f"expected text for kind {kind!r}, got {value!r}")
        return value
    raise KindMismatch(f"unknown attribute kind {kind!r}")


class ColumnVector:
    """One typed column of a dimension table."""

    def __init__(self, kind: str):
        self.kind = kind
        self._encoded = kind in ("text", "enumeration")
        if self._encoded:
            self._codes: list[int] = []
            self._dictionary: list[str] = []
            self._code_of: dict[str, int] = {}
        else:
            self._values: list[Any] = []

    def __len__(self) -> int:
        return len(self._codes) if self._encoded else len(self._values)

    def append(self, value: Any) -> None:
        """Append an already-checked value (None = null)."""
        if not self._encoded:
            self._values.append(value)
            return
        if value is None:
            self._codes.append(_NULL_CODE)
            return
        code = self._code_of.get(value)
        if code is None:
            code = len(self._dictionary)
            self._dictionary.append(value)
            self._code_of[value] = code
        self._codes.append(code)

    def get(self, i: int) -> Any:
        if not self._encoded:
            return self._values[i]
        code = self._codes[i]
        return None if code == _NULL_CODE else self._dictionary[code]

    def prefix(self, n: int) -> list:
        """Decoded values of the first n rows."""
        if not self._encoded:
            return self._values[:n]
        d = self._dictionary
        return [None if c == _NULL_CODE else d[c] for c in self._codes[:n]]

    def distinct_count(self, n: int) -> int:
        """Number of distinct values (nulls count as one value) in the prefix."""
        if self._encoded:
            return len(set(self._codes[:n]))
        return len(set(self._values[:n]))


class MeasureColumn:
    """Float64 measure column of a fact partition."""

    def __init__(self):
        self._values: list[float] = []

    def __len__(self) -> int:
        return len(self._values)

    def append(self, value: float) -> None:
        self._values.append(value)

    def extend(self, values) -> None:
        self._values.extend(values)

    def prefix(self, n: int) -> list[float]:
        return self._values[:n]


class KeyColumn:
    """Int64 dimension-key column of a fact partition."""

    def __init__(self):
        self._values: list[int] = []

    def __len__(self) -> int:
        return len(self._values)

    def append(self, value: int) -> None:
        self._values.append(value)

    def extend(self, values) -> None:
        self._values.extend(values)

    def prefix(self, n: int) -> list[int]:
        return self._values[:n]


def coerce_measure(value: Any) -> float:
    """Validate one measure value: a finite number, stored as float."""
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise KindMismatch(f"expected number for measure, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        raise KindMismatch(f"measure must be finite, got {value!r}")
    return value


def null_sort_key(value: Any):
    """Sort key placing nulls first; values within a column share one type."""
    if value is None:
        return (0, "")
    if isinstance(value, date):
        return (1, value.isoformat())
    return (1, value)


__all__ = [
    "ColumnVector",
    "KeyColumn",
    "MeasureColumn",
    "check_value",
    "coerce_measure",
    "null_sort_key",
]
