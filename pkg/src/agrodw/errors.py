"""Exception hierarchy shared by every warehouse layer."""


class AgrodwError(Exception):
    """Base class for all warehouse errors."""


class ParseError(AgrodwError):
    """Malformed input document; carries a 1-based line/column position."""

    def __init__(self, message: str, line: int, column: int = 1):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


class SchemaInvalid(AgrodwError):
    """A schema failed validation; the findings travel with the error."""

    def __init__(self, report):
        findings = ", ".join(f.rule_id for f in report.findings)
        super().__init__(f"schema invalid: {findings}")
        self.report = report


class UnknownTable(AgrodwError):
    """Referenced fact or dimension table does not exist."""


class DuplicateKey(AgrodwError):
    """Dimension key already present."""


class DuplicateFactKey(AgrodwError):
    """Composite dimension-key tuple already present in base or delta."""


class KindMismatch(AgrodwError):
    """A value does not match the declared attribute or measure kind."""


class ReferentialViolation(AgrodwError):
    """A fact row references a dimension key that does not resolve."""

    def __init__(self, dimension: str, value):
        super().__init__(f"unresolved reference {dimension}/{value}")
        self.dimension = dimension
        self.value = value


class EmptySource(AgrodwError):
    """CSV source has no header row."""


class HeaderMismatch(AgrodwError):
    """A required attribute has no matching source column."""


class SemanticError(AgrodwError):
    """Query names an unknown fact, dimension, attribute or measure."""


class NotGrouped(AgrodwError):
    """Roll-up target dimension is absent from the query group-by."""


class AlreadyFinest(AgrodwError):
    """Drill-down target is already at its finest granularity."""


class AxisMismatch(AgrodwError):
    """Pivot axes are not a repartition of the grid's axes."""


class BindError(AgrodwError):
    """Server could not bind the requested address/port."""
