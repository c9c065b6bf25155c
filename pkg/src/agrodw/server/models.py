"""Request/response bodies for the HTTP facade.

Error responses always carry an ApiError body; its code is drawn from a
closed set, each mapped to one HTTP status. Query responses bypass model
re-serialization on purpose: the bytes come straight from the library's
canonical grid serializer so every client sees one representation.
"""

from typing import Any, Optional, Union

from pydantic import BaseModel, Field

from ..levels import dimension_levels, drill_path
from ..schema import ConstellationSchema

ERROR_STATUS = {
    "parse_error": 400,
    "semantic_error": 400,
    "not_found": 404,
    "conflict": 409,
    "internal": 500,
}


class ApiError(BaseModel):
    code: str
    message: str
    detail: Optional[dict[str, Any]] = None


class QueryRequest(BaseModel):
    q: str


class BuildCubesRequest(BaseModel):
    fact: str
    policy: Union[str, dict[str, int]] = "full"


class MergeDeltaRequest(BaseModel):
    fact: str


class CubeInfo(BaseModel):
    fact: str
    policy: str
    cuboids: int
    entries: int
    skipped: int
    built_epoch: int
    stale: bool


class LoadBlock(BaseModel):
    input: int
    inserted: int
    rejected: int
    quarantined: int
    merged_duplicates: int
    reasons: dict[str, int]


class IngestResponse(BaseModel):
    table: str
    partition: Optional[str] = None
    load: LoadBlock
    quality: dict[str, float]
    quality_delta: dict[str, dict[str, float]]


class MergeDeltaResponse(BaseModel):
    absorbed: int


class TableMetrics(BaseModel):
    completeness: float
    referential_integrity: float
    duplicates: int
    consistency: float
    timeliness: float


class QualityResponse(BaseModel):
    tables: dict[str, TableMetrics]
    load_counts: dict[str, int]


class AttributeInfo(BaseModel):
    name: str
    kind: str
    nullable: bool


class HierarchyInfo(BaseModel):
    name: str
    levels: list[str]


class LinkInfo(BaseModel):
    attribute: str
    target: str


class DimensionInfo(BaseModel):
    name: str
    key: str
    attributes: list[AttributeInfo]
    hierarchies: list[HierarchyInfo]
    links: list[LinkInfo]
    levels: list[str]
    drill_path: list[str]


class MeasureInfo(BaseModel):
    name: str
    kind: str
    unit: str = ""
    numerator: Optional[str] = None
    denominator: Optional[str] = None


class FactInfo(BaseModel):
    name: str
    dimensions: list[str]
    measures: list[MeasureInfo]


class SchemaResponse(BaseModel):
    name: str
    dimensions: list[DimensionInfo]
    facts: list[FactInfo]


def schema_response(schema: ConstellationSchema) -> SchemaResponse:
    dims = [
        DimensionInfo(
            name=d.name,
            key=d.key,
            attributes=[
                AttributeInfo(name=a.name, kind=a.kind, nullable=a.nullable)
                for a in d.attributes
            ],
            hierarchies=[
                HierarchyInfo(name=h.name, levels=list(h.levels)) for h in d.hierarchies
            ],
            links=[LinkInfo(attribute=l.attribute, target=l.target) for l in d.links],
            levels=dimension_levels(d),
            drill_path=drill_path(d),
        )
        for d in schema.dimensions.values()
    ]
    facts = [
        FactInfo(
            name=f.name,
            dimensions=list(f.dimensions),
            measures=[
                MeasureInfo(
                    name=m.name, kind=m.kind, unit=m.unit,
                    numerator=m.numerator, denominator=m.denominator,
                )
                for m in f.measures
            ],
        )
        for f in schema.facts.values()
    ]
    return SchemaResponse(name=schema.name, dimensions=dims, facts=facts)
