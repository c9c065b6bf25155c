"""Constellation schema model: dimensions, facts, hierarchies, measures.

Schema objects are plain frozen-ish dataclasses; nothing mutates them after
construction, so they are safe to share across threads. Validation is a
separate pass that reports findings instead of raising, so callers can show
all problems at once.
"""

import re
from dataclasses import dataclass, field
from typing import Optional

ATTR_KINDS = ("identifier", "text", "integer", "decimal", "date", "enumeration")
MEASURE_KINDS = ("additive", "count", "ratio")

_NAME_RE = re.compile(r"[a-z][a-z0-9_]*\Z")
# Synthesized date-part levels, e.g. month(order_date) / year(order_date).
_DATE_PART_RE = re.compile(r"(year|month)\(([a-z][a-z0-9_]*)\)\Z")


@dataclass
class AttributeDef:
    name: str
    kind: str
    nullable: bool = True


@dataclass
class HierarchyDef:
    """Ordered drill levels of one dimension, finest first."""
    name: str
    levels: list[str]


@dataclass
class LinkDef:
    """Dimension-to-dimension reference: a local attribute holding target keys."""
    attribute: str
    target: str


@dataclass
class MeasureDef:
    name: str
    kind: str
    numerator: Optional[str] = None
    denominator: Optional[str] = None
    unit: str = ""


@dataclass
class DimensionDef:
    name: str
    key: str
    attributes: list[AttributeDef]
    links: list[LinkDef] = field(default_factory=list)
    hierarchies: list[HierarchyDef] = field(default_factory=list)

    def attribute(self, name: str) -> Optional[AttributeDef]:
        for a in self.attributes:
            if a.name == name:
                return a
        return None

    def attribute_names(self) -> list[str]:
        return [a.name for a in self.attributes]


@dataclass
class FactDef:
    name: str
    dimensions: list[str]
    measures: list[MeasureDef]

    def measure(self, name: str) -> Optional[MeasureDef]:
        for m in self.measures:
            if m.name == name:
                return m
        return None

    def additive_measures(self) -> list[MeasureDef]:
        return [m for m in self.measures if m.kind == "additive"]


@dataclass
class ConstellationSchema:
    name: str
    dimensions: dict[str, DimensionDef]
    facts: dict[str, FactDef]


@dataclass
class Finding:
    severity: str  # "error" or "warning"
    table: str
    attribute: str
    rule_id: str
    message: str


@dataclass
class ValidationReport:
    findings: list[Finding]

    @property
    def ok(self) -> bool:
        return not self.findings


def parse_date_part(level: str) -> Optional[tuple[str, str]]:
    """Split a synthesized level like 'month(order_date)' into (part, attribute)."""
    m = _DATE_PART_RE.match(level)
    if m is None:
        return None
    return m.group(1), m.group(2)


def validate_schema(schema: ConstellationSchema) -> ValidationReport:
    """Check every structural invariant; findings are data, not failures."""
    findings: list[Finding] = []

    def err(table, attribute, rule_id, message):
        findings.append(Finding("error", table, attribute, rule_id, message))

    for dname, dim in schema.dimensions.items():
        if dname != dim.name:
            err(dname, "", "name-mismatch", "map key differs from dimension name")
        seen = set()
        for attr in dim.attributes:
            if not attr.name or not _NAME_RE.match(attr.name):
                err(dname, attr.name, "attr-name-invalid",
                    f"attribute name {attr.name!r} must match [a-z][a-z0-9_]*")
            if attr.name in seen:
                err(dname, attr.name, "attr-name-duplicate",
                    f"attribute {attr.name!r} defined twice")
            seen.add(attr.name)
            if attr.kind not in ATTR_KINDS:
                err(dname, attr.name, "attr-kind-unknown", f"unknown kind {attr.kind!r}")
        key = dim.attribute(dim.key)
        if key is None:
            err(dname, dim.key, "key-missing", f"key attribute {dim.key!r} not defined")
        else:
            if key.kind != "identifier":
                err(dname, dim.key, "key-not-identifier", "key attribute must be an identifier")
            if key.nullable:
                err(dname, dim.key, "key-nullable", "key attribute must not be nullable")
        for link in dim.links:
            if dim.attribute(link.attribute) is None:
                err(dname, link.attribute, "link-local-missing",
                    f"link attribute {link.attribute!r} not defined on {dname}")
            if link.target not in schema.dimensions:
                err(dname, link.attribute, "link-target-missing",
                    f"link target dimension {link.target!r} not in schema")
        for hier in dim.hierarchies:
            if len(hier.levels) < 2:
                err(dname, hier.name, "hierarchy-too-short",
                    f"hierarchy {hier.name!r} needs at least two levels")
            if len(set(hier.levels)) != len(hier.levels):
                err(dname, hier.name, "hierarchy-duplicate-level",
                    f"hierarchy {hier.name!r} repeats a level")
            for level in hier.levels:
                part = parse_date_part(level)
                if part is not None:
                    base = dim.attribute(part[1])
                    if base is None or base.kind != "date":
                        err(dname, level, "hierarchy-unknown-level",
                            f"date part {level!r} needs a date attribute {part[1]!r}")
                elif dim.attribute(level) is None:
                    err(dname, level, "hierarchy-unknown-level",
                        f"level {level!r} is not an attribute of {dname}")

    for fname, fact in schema.facts.items():
        if fname != fact.name:
            err(fname, "", "name-mismatch", "map key differs from fact name")
        if fname in schema.dimensions:
            err(fname, "", "name-collision", f"{fname!r} is both a fact and a dimension")
        if not fact.dimensions:
            err(fname, "", "fact-no-dimensions", "fact needs at least one dimension")
        if len(set(fact.dimensions)) != len(fact.dimensions):
            err(fname, "", "fact-duplicate-dimension", "dimension list repeats a name")
        for dref in fact.dimensions:
            if dref not in schema.dimensions:
                err(fname, dref, "unresolved-dimension",
                    f"fact references unknown dimension {dref!r}")
        mseen = set()
        for m in fact.measures:
            if not _NAME_RE.match(m.name or ""):
                err(fname, m.name, "measure-name-invalid",
                    f"measure name {m.name!r} must match [a-z][a-z0-9_]*")
            if m.name in mseen:
                err(fname, m.name, "measure-name-duplicate", f"measure {m.name!r} defined twice")
            mseen.add(m.name)
            if m.kind not in MEASURE_KINDS:
                err(fname, m.name, "measure-kind-unknown", f"unknown kind {m.kind!r}")
            if m.kind == "ratio":
                for ref in (m.numerator, m.denominator):
                    operand = fact.measure(ref) if ref else None
                    if operand is None:
                        err(fname, m.name, "ratio-operand-missing",
                            f"ratio operand {ref!r} not defined on {fname}")
                    elif operand.kind not in ("additive", "count"):
                        err(fname, m.name, "ratio-operand-kind",
                            f"ratio operand {ref!r} must be additive or count")
            elif m.numerator or m.denominator:
                err(fname, m.name, "measure-operands-unexpected",
                    "only ratio measures take numerator/denominator")

    return ValidationReport(findings)
