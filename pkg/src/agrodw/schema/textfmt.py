"""Line-oriented schema-definition format: parser and canonical serializer.

Sections start with `dimension <name>` or `fact <name>`; entries are
`attr <name> <kind> [nullable]`, `key <attr>`, `link <attr> -> <dimension>`,
`hierarchy <name>: a > b > c`, `dim <name>`, and
`measure <name> <kind> [<num>/<den>] [unit]`. `#` starts a comment, blank
lines are ignored, documents are UTF-8.
"""

from ..errors import ParseError, SchemaInvalid
from .model import (
    ATTR_KINDS,
    MEASURE_KINDS,
    AttributeDef,
    ConstellationSchema,
    DimensionDef,
    FactDef,
    HierarchyDef,
    LinkDef,
    MeasureDef,
    validate_schema,
)


def serialize_schema(schema: ConstellationSchema) -> str:
    """Canonical text form; load_schema(serialize_schema(s)) == s."""
    out = [f"# schema {schema.name}", f"schema {schema.name}", ""]
    for dim in schema.dimensions.values():
        out.append(f"dimension {dim.name}")
        for a in dim.attributes:
            flag = " nullable" if a.nullable else ""
            out.append(f"  attr {a.name} {a.kind}{flag}")
        out.append(f"  key {dim.key}")
        for link in dim.links:
            out.append(f"  link {link.attribute} -> {link.target}")
        for h in dim.hierarchies:
            out.append(f"  hierarchy {h.name}: " + " > ".join(h.levels))
        out.append("")
    for fact in schema.facts.values():
        out.append(f"fact {fact.name}")
        for d in fact.dimensions:
            out.append(f"  dim {d}")
        for m in fact.measures:
            line = f"  measure {m.name} {m.kind}"
            if m.kind == "ratio":
                line += f" {m.numerator}/{m.denominator}"
            if m.unit:
                line += f" {m.unit}"
            out.append(line)
        out.append("")
    return "\n".join(out)


def load_schema(text: str) -> ConstellationSchema:
    """Parse a schema document and validate it.

    Raises ParseError (with position) for malformed documents and
    SchemaInvalid (with the validation report) for well-formed but
    inconsistent ones.
    """
    name = "schema"
    dimensions: dict[str, DimensionDef] = {}
    facts: dict[str, FactDef] = {}
    current: object = None  # DimensionDef | FactDef under construction

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        col = len(line) - len(line.lstrip()) + 1
        tokens = line.split()
        head = tokens[0]

        def fail(msg, column=col):
            raise ParseError(msg, lineno, column)

        if head == "schema":
            if len(tokens) != 2:
                fail("expected: schema <name>")
            name = tokens[1]
        elif head == "dimension":
            if len(tokens) != 2:
                fail("expected: dimension <name>")
            if tokens[1] in dimensions:
                fail(f"duplicate dimension {tokens[1]!r}")
            current = DimensionDef(tokens[1], key="", attributes=[])
            dimensions[tokens[1]] = current
        elif head == "fact":
            if len(tokens) != 2:
                fail("expected: fact <name>")
            if tokens[1] in facts:
                fail(f"duplicate fact {tokens[1]!r}")
            current = FactDef(tokens[1], dimensions=[], measures=[])
            facts[tokens[1]] = current
        elif head == "attr":
            if not isinstance(current, DimensionDef):
                fail("attr entry outside a dimension section")
            if len(tokens) not in (3, 4) or (len(tokens) == 4 and tokens[3] != "nullable"):
                fail("expected: attr <name> <kind> [nullable]")
            if tokens[2] not in ATTR_KINDS:
                fail(f"unknown attribute kind {tokens[2]!r}")
            current.attributes.append(
                AttributeDef(tokens[1], tokens[2], nullable=len(tokens) == 4))
        elif head == "key":
            if not isinstance(current, DimensionDef):
                fail("key entry outside a dimension section")
            if len(tokens) != 2:
                fail("expected: key <attr>")
            current.key = tokens[1]
        elif head == "link":
            if not isinstance(current, DimensionDef):
                fail("link entry outside a dimension section")
            if len(tokens) != 4 or tokens[2] != "->":
                fail("expected: link <attr> -> <dimension>")
            current.links.append(LinkDef(tokens[1], tokens[3]))
        elif head == "hierarchy":
            if not isinstance(current, DimensionDef):
                fail("hierarchy entry outside a dimension section")
            rest = line.strip()[len("hierarchy"):].strip()
            if ":" not in rest:
                fail("expected: hierarchy <name>: a > b > c")
            hname, _, levels_part = rest.partition(":")
            levels = [lv.strip() for lv in levels_part.split(">")]
            if not hname.strip() or any(not lv for lv in levels):
                fail("expected: hierarchy <name>: a > b > c")
            current.hierarchies.append(HierarchyDef(hname.strip(), levels))
        elif head == "dim":
            if not isinstance(current, FactDef):
                fail("dim entry outside a fact section")
            if len(tokens) != 2:
                fail("expected: dim <name>")
            current.dimensions.append(tokens[1])
        elif head == "measure":
            if not isinstance(current, FactDef):
                fail("measure entry outside a fact section")
            if len(tokens) < 3 or tokens[2] not in MEASURE_KINDS:
                fail("expected: measure <name> <kind> [<num>/<den>] [unit]")
            mname, kind = tokens[1], tokens[2]
            rest = tokens[3:]
            num = den = None
            if kind == "ratio":
                if not rest or "/" not in rest[0]:
                    fail("ratio measure needs <numerator>/<denominator>")
                num, _, den = rest[0].partition("/")
                rest = rest[1:]
            unit = " ".join(rest)
            current.measures.append(MeasureDef(mname, kind, num, den, unit))
        else:
            fail(f"unknown directive {head!r}")

    schema = ConstellationSchema(name, dimensions, facts)
    report = validate_schema(schema)
    if not report.ok:
        raise SchemaInvalid(report)
    return schema
