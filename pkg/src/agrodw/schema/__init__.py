"""Constellation schema definitions, validation and text format."""

from .builtin import builtin_schema
from .model import (
    ATTR_KINDS,
    MEASURE_KINDS,
    AttributeDef,
    ConstellationSchema,
    DimensionDef,
    FactDef,
    Finding,
    HierarchyDef,
    LinkDef,
    MeasureDef,
    ValidationReport,
    parse_date_part,
    validate_schema,
)
from .textfmt import load_schema, serialize_schema

__all__ = [
    "ATTR_KINDS",
    "MEASURE_KINDS",
    "AttributeDef",
    "ConstellationSchema",
    "DimensionDef",
    "FactDef",
    "Finding",
    "HierarchyDef",
    "LinkDef",
    "MeasureDef",
    "ValidationReport",
    "builtin_schema",
    "load_schema",
    "parse_date_part",
    "serialize_schema",
    "validate_schema",
]
