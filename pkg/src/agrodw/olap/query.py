"""Query model, text grammar, and the algebraic transforms.

Grammar (one statement, clause order fixed):

    from <Fact>
      [group by <Dim>.<attr-or-level> (, <Dim>.<attr-or-level>)*]
      [where <Dim>.<attr> <op> <literal> (and <pred>)*]
      measure <name> (, <name>)*
      [pivot rows=<refs> cols=<refs>]

Operators: = != < <= > >= in (unicode ≠ ≤ ≥ accepted). String literals are
double-quoted; bare ``YYYY-MM-DD`` is a date. ``sum(x)`` / ``count(x)`` are
accepted for measures of the matching kind.

Group-by holds at most one entry per dimension and is kept in the fact's
declared dimension order, which makes roll-up and drill-down exact inverses:
a dimension re-introduced by drill-down lands back at its canonical slot.
"""

import re
from dataclasses import dataclass, replace
from datetime import date
from typing import Any, Optional, Union

from ..errors import AlreadyFinest, NotGrouped, ParseError, SemanticError
from ..levels import KEY_LEVEL, drill_path, resolve_selector
from ..schema import ConstellationSchema

OPS = ("=", "!=", "<", "<=", ">", ">=", "in")

_UNICODE_OPS = {"≠": "!=", "≤": "<=", "≥": ">="}

KEYWORDS = {"from", "group", "by", "where", "and", "measure", "pivot", "rows", "cols", "in"}


@dataclass(frozen=True)
class GroupEntry:
    dimension: str
    selector: str

    def __str__(self) -> str:
        return f"{self.dimension}.{self.selector}"


@dataclass(frozen=True)
class Filter:
    dimension: str
    attribute: str
    op: str
    literal: Any  # scalar, or tuple of scalars for `in`

    def __str__(self) -> str:
        if self.op == "in":
            inner = ", ".join(_literal_text(v) for v in self.literal)
            return f"{self.dimension}.{self.attribute} in ({inner})"
        return f"{self.dimension}.{self.attribute} {self.op} {_literal_text(self.literal)}"


@dataclass(frozen=True)
class PivotSpec:
    rows: tuple[GroupEntry, ...]
    cols: tuple[GroupEntry, ...]


@dataclass(frozen=True)
class Query:
    fact: str
    group_by: tuple[GroupEntry, ...] = ()
    filters: tuple[Filter, ...] = ()
    measures: tuple[str, ...] = ()
    pivot: Optional[PivotSpec] = None

    def text(self) -> str:
        """Round-trip back to grammar text."""
        parts = [f"from {self.fact}"]
        if self.group_by:
            parts.append("group by " + ", ".join(str(e) for e in self.group_by))
        if self.filters:
            parts.append("where " + " and ".join(str(f) for f in self.filters))
        parts.append("measure " + ", ".join(self.measures))
        if self.pivot is not None:
            rows = ", ".join(str(e) for e in self.pivot.rows)
            cols = ", ".join(str(e) for e in self.pivot.cols)
            parts.append(f"pivot rows={rows} cols={cols}")
        return " ".join(parts)


def _literal_text(value: Any) -> str:
    if isinstance(value, str):
        return f'"{value}"'
    if isinstance(value, date):
        return value.isoformat()
    return repr(value)


# -- tokenizer ---------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<date>\d{4}-\d{2}-\d{2})
  | (?P<number>-?\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<string>"[^"]*")
  | (?P<op><=|>=|!=|[=<>≠≤≥])
  | (?P<punct>[.,()])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str
    value: Any
    pos: int


def _tokenize(text: str) -> list[Token]:
    tokens = []
    i = 0
    while i < len(text):
        m = _TOKEN_RE.match(text, i)
        if m is None:
            line = text.count("\n", 0, i) + 1
            col = i - (text.rfind("\n", 0, i) + 1) + 1
            raise ParseError(f"unexpected character {text[i]!r}", line, col)
        kind = m.lastgroup
        raw = m.group()
        if kind != "ws":
            if kind == "date":
                try:
                    value = date.fromisoformat(raw)
                except ValueError:
                    line = text.count("\n", 0, i) + 1
                    col = i - (text.rfind("\n", 0, i) + 1) + 1
                    raise ParseError(f"bad date literal {raw!r}", line, col) from None
            elif kind == "number":
                value = float(raw) if any(c in raw for c in ".eE") else int(raw)
            elif kind == "string":
                value = raw[1:-1]
            elif kind == "op":
                value = _UNICODE_OPS.get(raw, raw)
            else:
                value = raw
            tokens.append(Token(kind, value, i))
        i = m.end()
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def _fail(self, message: str):
        pos = self.tokens[self.i].pos if self.i < len(self.tokens) else len(self.text)
        line = self.text.count("\n", 0, pos) + 1
        col = pos - (self.text.rfind("\n", 0, pos) + 1) + 1
        raise ParseError(message, line, col)

    def peek(self) -> Optional[Token]:
        return self.tokens[self.i] if self.i < len(self.tokens) else None

    def at_keyword(self, word: str) -> bool:
        t = self.peek()
        return t is not None and t.kind == "ident" and t.value.lower() == word

    def take_keyword(self, word: str):
        if not self.at_keyword(word):
            self._fail(f"expected {word!r}")
        self.i += 1

    def take(self, kind: str, value=None) -> Token:
        t = self.peek()
        if t is None or t.kind != kind or (value is not None and t.value != value):
            what = value if value is not None else kind
            self._fail(f"expected {what!r}")
        self.i += 1
        return t

    def take_name(self) -> str:
        t = self.peek()
        if t is None or t.kind != "ident":
            self._fail("expected a name")
        if t.value.lower() in KEYWORDS:
            self._fail(f"expected a name, got keyword {t.value!r}")
        self.i += 1
        return t.value

    def parse(self) -> Query:
        self.take_keyword("from")
        fact = self.take_name()
        group_by: list[GroupEntry] = []
        filters: list[Filter] = []
        if self.at_keyword("group"):
            self.i += 1
            self.take_keyword("by")
            group_by.append(self.ref())
            while self.at_comma():
                group_by.append(self.ref())
        if self.at_keyword("where"):
            self.i += 1
            filters.append(self.predicate())
            while self.at_keyword("and"):
                self.i += 1
                filters.append(self.predicate())
        self.take_keyword("measure")
        measures = [self.measure()]
        while self.at_comma():
            measures.append(self.measure())
        pivot = None
        if self.at_keyword("pivot"):
            self.i += 1
            pivot = self.pivot_spec()
        if self.peek() is not None:
            self._fail("unexpected trailing input")
        return Query(
            fact=fact,
            group_by=tuple(group_by),
            filters=tuple(filters),
            measures=tuple(measures),  # (name, aggregator) pairs at this stage
            pivot=pivot,
        )

    def at_comma(self) -> bool:
        t = self.peek()
        if t is not None and t.kind == "punct" and t.value == ",":
            self.i += 1
            return True
        return False

    def ref(self) -> GroupEntry:
        dim = self.take_name()
        self.take("punct", ".")
        sel = self.take_name()
        t = self.peek()
        if t is not None and t.kind == "punct" and t.value == "(":
            self.i += 1
            inner = self.take_name()
            self.take("punct", ")")
            sel = f"{sel}({inner})"
        return GroupEntry(dim, sel)

    def predicate(self) -> Filter:
        dim = self.take_name()
        self.take("punct", ".")
        attr = self.take_name()
        if self.at_keyword("in"):
            self.i += 1
            self.take("punct", "(")
            values = [self.literal()]
            while self.at_comma():
                values.append(self.literal())
            self.take("punct", ")")
            return Filter(dim, attr, "in", tuple(values))
        op = self.take("op").value
        return Filter(dim, attr, op, self.literal())

    def literal(self) -> Any:
        t = self.peek()
        if t is not None and t.kind in ("number", "string", "date"):
            self.i += 1
            return t.value
        self._fail("expected a literal")

    def measure(self) -> tuple[str, Optional[str]]:
        name = self.take_name()
        t = self.peek()
        if t is not None and t.kind == "punct" and t.value == "(":
            self.i += 1
            inner = self.take_name()
            self.take("punct", ")")
            return (inner, name.lower())  # (measure, required aggregator)
        return (name, None)

    def pivot_spec(self) -> PivotSpec:
        rows: list[GroupEntry] = []
        cols: list[GroupEntry] = []
        seen = set()
        while self.at_keyword("rows") or self.at_keyword("cols"):
            side = self.peek().value.lower()
            if side in seen:
                self._fail(f"duplicate pivot clause {side!r}")
            seen.add(side)
            self.i += 1
            self.take("op", "=")
            target = rows if side == "rows" else cols
            while True:
                t = self.peek()
                if t is None or t.kind != "ident" or t.value.lower() in ("rows", "cols"):
                    break
                target.append(self.ref())
                if not self.at_comma():
                    break
        if not seen:
            self._fail("expected rows= or cols=")
        return PivotSpec(rows=tuple(rows), cols=tuple(cols))


def compile_query(text: str, schema: Optional[ConstellationSchema] = None) -> Query:
    """Parse query text; with a schema, also bind and normalise it."""
    parser = _Parser(text)
    query = parser.parse()
    raw_measures = query.measures
    names = tuple(dict.fromkeys(m for m, _ in raw_measures))
    query = replace(query, measures=names)
    if schema is not None:
        query = bind_query(query, schema, measure_aggs=raw_measures)
    return query


def bind_query(
    query: Query,
    schema: ConstellationSchema,
    measure_aggs=None,
) -> Query:
    """Validate a query against a schema and normalise selectors/order."""
    fact = schema.facts.get(query.fact)
    if fact is None:
        raise SemanticError(f"unknown fact {query.fact!r}")
    dim_order = {d: i for i, d in enumerate(fact.dimensions)}
    entries = []
    for e in query.group_by:
        if e.dimension not in dim_order:
            raise SemanticError(f"{query.fact} has no dimension {e.dimension!r}")
        sel = resolve_selector(schema.dimensions[e.dimension], e.selector)
        entries.append(GroupEntry(e.dimension, sel))
    if len({e.dimension for e in entries}) != len(entries):
        raise SemanticError("group by lists a dimension twice")
    entries.sort(key=lambda e: dim_order[e.dimension])
    for f in query.filters:
        if f.dimension not in dim_order:
            raise SemanticError(f"{query.fact} has no dimension {f.dimension!r}")
        dim = schema.dimensions[f.dimension]
        attr = dim.attribute(f.attribute)
        if attr is None:
            raise SemanticError(f"{f.dimension} has no attribute {f.attribute!r}")
        if f.op not in OPS:
            raise SemanticError(f"unknown operator {f.op!r}")
        values = f.literal if f.op == "in" else (f.literal,)
        for v in values:
            _check_literal(attr.kind, v, f)
    if not query.measures:
        raise SemanticError("at least one measure required")
    aggs = dict(measure_aggs or ())
    for name in query.measures:
        m = fact.measure(name)
        if m is None:
            raise SemanticError(f"{query.fact} has no measure {name!r}")
        agg = aggs.get(name)
        if agg == "sum" and m.kind != "additive":
            raise SemanticError(f"sum() needs an additive measure, {name} is {m.kind}")
        if agg == "count" and m.kind != "count":
            raise SemanticError(f"count() needs a count measure, {name} is {m.kind}")
        if agg not in (None, "sum", "count"):
            raise SemanticError(f"unknown aggregator {agg!r}")
    pivot = query.pivot
    if pivot is not None:
        normalized = []
        for axis in (pivot.rows, pivot.cols):
            fixed = []
            for e in axis:
                if e.dimension not in schema.dimensions:
                    raise SemanticError(f"unknown dimension {e.dimension!r} in pivot")
                fixed.append(
                    GroupEntry(e.dimension, resolve_selector(schema.dimensions[e.dimension], e.selector))
                )
            normalized.append(tuple(fixed))
        pivot = PivotSpec(rows=normalized[0], cols=normalized[1])
        spread = list(pivot.rows) + list(pivot.cols)
        if sorted(map(str, spread)) != sorted(map(str, entries)):
            raise SemanticError("pivot axes must cover the group-by entries exactly")
    return replace(query, group_by=tuple(entries), pivot=pivot)


def _check_literal(kind: str, value: Any, f: Filter):
    ok = {
        "identifier": lambda v: isinstance(v, int) and not isinstance(v, bool),
        "integer": lambda v: isinstance(v, (int, float)) and not isinstance(v, bool),
        "decimal": lambda v: isinstance(v, (int, float)) and not isinstance(v, bool),
        "date": lambda v: isinstance(v, date),
        "text": lambda v: isinstance(v, str),
        "enumeration": lambda v: isinstance(v, str),
    }[kind]
    if not ok(value):
        raise SemanticError(
            f"literal {value!r} does not match {f.dimension}.{f.attribute} ({kind})"
        )


def make_predicate(op: str, literal: Any):
    """Scalar predicate with SQL-style null semantics (null never matches)."""
    if op == "in":
        members = set(literal)
        return lambda v: v is not None and v in members
    table = {
        "=": lambda v: v == literal,
        "!=": lambda v: v != literal,
        "<": lambda v: v < literal,
        "<=": lambda v: v <= literal,
        ">": lambda v: v > literal,
        ">=": lambda v: v >= literal,
    }
    base = table[op]
    return lambda v: v is not None and base(v)


# -- algebra -----------------------------------------------------------------


def _insert_canonical(
    entries: tuple[GroupEntry, ...], entry: GroupEntry, fact_dims: list[str]
) -> tuple[GroupEntry, ...]:
    order = {d: i for i, d in enumerate(fact_dims)}
    merged = list(entries) + [entry]
    merged.sort(key=lambda e: order[e.dimension])
    return tuple(merged)


def _require_dim(query: Query, dimension: str, schema: ConstellationSchema):
    fact = schema.facts.get(query.fact)
    if fact is None:
        raise SemanticError(f"unknown fact {query.fact!r}")
    if dimension not in fact.dimensions:
        raise SemanticError(f"{query.fact} has no dimension {dimension!r}")
    return fact


def roll_up(query: Query, dimension: str, schema: ConstellationSchema) -> Query:
    """One step coarser along the dimension's drill path.

    At the coarsest level (or on an attribute outside the path) the
    dimension leaves the group-by entirely. Filters are untouched.
    """
    _require_dim(query, dimension, schema)
    entry = next((e for e in query.group_by if e.dimension == dimension), None)
    if entry is None:
        raise NotGrouped(f"{dimension} is not in the group-by")
    path = drill_path(schema.dimensions[dimension])
    remaining = tuple(e for e in query.group_by if e.dimension != dimension)
    if entry.selector in path:
        i = path.index(entry.selector)
        if i + 1 < len(path):
            coarser = GroupEntry(dimension, path[i + 1])
            new_entries = tuple(coarser if e.dimension == dimension else e for e in query.group_by)
            return replace(query, group_by=new_entries, pivot=_repoint(query.pivot, entry, coarser))
    return replace(query, group_by=remaining, pivot=_drop(query.pivot, entry))


def drill_down(query: Query, dimension: str, schema: ConstellationSchema) -> Query:
    """Exact inverse of roll_up: one step finer, or re-introduce the
    dimension at its coarsest granularity (its canonical group-by slot)."""
    fact = _require_dim(query, dimension, schema)
    path = drill_path(schema.dimensions[dimension])
    entry = next((e for e in query.group_by if e.dimension == dimension), None)
    if entry is None:
        added = GroupEntry(dimension, path[-1])
        entries = _insert_canonical(query.group_by, added, fact.dimensions)
        return replace(query, group_by=entries, pivot=_add(query.pivot, added))
    if entry.selector not in path or entry.selector == KEY_LEVEL:
        raise AlreadyFinest(f"{dimension} is already at its finest granularity")
    finer = GroupEntry(dimension, path[path.index(entry.selector) - 1])
    entries = tuple(finer if e.dimension == dimension else e for e in query.group_by)
    return replace(query, group_by=entries, pivot=_repoint(query.pivot, entry, finer))


def _repoint(pivot, old: GroupEntry, new: GroupEntry):
    if pivot is None:
        return None
    swap = lambda axis: tuple(new if e == old else e for e in axis)
    return PivotSpec(rows=swap(pivot.rows), cols=swap(pivot.cols))


def _drop(pivot, old: GroupEntry):
    if pivot is None:
        return None
    keep = lambda axis: tuple(e for e in axis if e != old)
    return PivotSpec(rows=keep(pivot.rows), cols=keep(pivot.cols))


def _add(pivot, entry: GroupEntry):
    if pivot is None:
        return None
    return PivotSpec(rows=pivot.rows + (entry,), cols=pivot.cols)


def slice(query: Query, ref: Union[str, tuple[str, str]], value: Any,
          schema: ConstellationSchema) -> Query:
    """Add one equality filter; group-by unchanged."""
    if isinstance(ref, str):
        if "." not in ref:
            raise SemanticError(f"slice needs Dimension.attribute, got {ref!r}")
        dimension, attribute = ref.split(".", 1)
    else:
        dimension, attribute = ref
    candidate = Filter(dimension, attribute, "=", value)
    out = replace(query, filters=query.filters + (candidate,))
    return bind_query(out, schema, measure_aggs=None)


def dice(query: Query, predicates, schema: ConstellationSchema) -> Query:
    """Conjoin predicates: each a Filter or (``Dim.attr``, op, literal)."""
    new = []
    for p in predicates:
        if isinstance(p, Filter):
            new.append(p)
            continue
        ref, op, literal = p
        if isinstance(ref, str):
            dimension, attribute = ref.split(".", 1)
        else:
            dimension, attribute = ref
        if op == "in" and not isinstance(literal, tuple):
            literal = tuple(literal)
        new.append(Filter(dimension, attribute, op, literal))
    out = replace(query, filters=query.filters + tuple(new))
    return bind_query(out, schema, measure_aggs=None)


__all__ = [
    "Filter",
    "GroupEntry",
    "OPS",
    "PivotSpec",
    "Query",
    "bind_query",
    "compile_query",
    "dice",
    "drill_down",
    "make_predicate",
    "roll_up",
    "slice",
]
