"""One-process warehouse facade: storage, ETL, cubes and queries together.

The Engine owns a Store plus the published cube indexes. Reads (query,
quality, cubes_info) run on immutable snapshots and never block. Mutations
(ingest, build_cubes, merge_delta, save) serialize on one lock, keeping the
single-writer contract even when callers are concurrent HTTP handlers.
"""

import threading
from collections import Counter
from dataclasses import dataclass, field
from typing import Optional, Union

from .cube import CubeIndex, build_cube, export_cube, merge_delta, parse_policy, plan_lattice
from .errors import UnknownTable
from .etl import (
    QuarantineRow,
    QualityReport,
    TransformPolicy,
    extract_csv,
    load,
    quality_report,
    transform,
)
from .olap import ResultGrid, Query, compile_query, execute
from .schema import ConstellationSchema, builtin_schema
from .storage import Store, create_store, load_store, save_store

_METRICS = ("completeness", "referential_integrity", "duplicates", "consistency", "timeliness")


@dataclass
class IngestOutcome:
    """Everything one CSV ingestion produced, JSON-ready via to_json_dict."""

    table: str
    partition: Optional[str]
    input_count: int
    inserted: int
    rejected: int
    merged_duplicates: int
    reasons: dict[str, int]
    quality: dict
    quality_delta: dict
    quarantine: list[QuarantineRow] = field(default_factory=list, repr=False)
    header: list[str] = field(default_factory=list, repr=False)

    @property
    def quarantined(self) -> int:
        return len(self.quarantine)

    @property
    def clean(self) -> bool:
        return self.rejected == 0 and not self.quarantine

    def to_json_dict(self) -> dict:
        return {
            "table": self.table,
            "partition": self.partition,
            "load": {
                "input": self.input_count,
                "inserted": self.inserted,
                "rejected": self.rejected,
                "quarantined": self.quarantined,
                "merged_duplicates": self.merged_duplicates,
                "reasons": dict(sorted(self.reasons.items())),
            },
            "quality": self.quality,
            "quality_delta": self.quality_delta,
        }


class Engine:
    def __init__(self, store: Store):
        self.store = store
        self.cubes: dict[str, CubeIndex] = {}
        self._mutate = threading.Lock()

    # -- construction --------------------------------------------------

    @classmethod
    def create(cls, schema: Optional[ConstellationSchema] = None) -> "Engine":
        return cls(create_store(schema or builtin_schema()))

    @classmethod
    def open(cls, root) -> "Engine":
        return cls(load_store(root))

    def save(self, root) -> None:
        with self._mutate:
            save_store(self.store, root)

    @property
    def schema(self) -> ConstellationSchema:
        return self.store.schema

    # -- reads -----------------------------------------------------------

    def query(self, q: Union[str, Query]) -> ResultGrid:
        if isinstance(q, str):
            q = compile_query(q, self.schema)
        return execute(q, self.store.snapshot(), self.cubes)

    def quality(self) -> QualityReport:
        return quality_report(self.store.snapshot())

    def cubes_info(self) -> list[dict]:
        snapshot = self.store.snapshot()
        out = []
        for fact in sorted(self.cubes):
            cube = self.cubes[fact]
            kind, cap = parse_policy(cube.policy)
            out.append({
                "fact": fact,
                "policy": kind if cap is None else f"cap:{cap}",
                "cuboids": len(cube.tables),
                "entries": sum(t.entry_count for t in cube.tables.values()),
                "skipped": len(cube.skipped),
                "built_epoch": cube.built_epoch,
                "stale": cube.is_stale(snapshot),
            })
        return out

    # -- mutations -------------------------------------------------------

    def ingest(
        self,
        table: str,
        source: Union[bytes, str],
        partition: Optional[str] = None,
        policy: TransformPolicy = TransformPolicy(),
    ) -> IngestOutcome:
        """Run one CSV through extract → transform → load and report.

        The response carries conservation counts (input = inserted +
        rejected + quarantined + merged duplicates), the target table's
        post-load quality, and per-metric deltas for every table whose
        quality moved (dimension loads can repair other tables' links).
        """
        schema = self.schema
        target = schema.dimensions.get(table) or schema.facts.get(table)
        if target is None:
            raise UnknownTable(f"no table named {table!r}")
        with self._mutate:
            before = quality_report(self.store.snapshot())
            batch = extract_csv(source, source_id=table)
            is_fact = table in schema.facts
            result = transform(
                batch, target, self.store.snapshot() if is_fact else None, policy
            )
            report = load(self.store, table, result.rows, partition if is_fact else None)
            after = quality_report(self.store.snapshot())
        reasons = Counter(row.reason for row in batch.quarantine)
        reasons.update(row.reason for row in result.quarantine)
        reasons.update(reason for _, reason in report.reasons)
        return IngestOutcome(
            table=table,
            partition=partition if is_fact else None,
            input_count=batch.input_count,
            inserted=report.inserted,
            rejected=report.rejected,
            merged_duplicates=result.merged_duplicates,
            reasons=dict(reasons),
            quality=after.to_json_dict()["tables"][table],
            quality_delta=_quality_delta(before, after),
            quarantine=list(batch.quarantine) + list(result.quarantine),
            header=list(batch.header),
        )

    def build_cubes(self, fact: str, policy="full", parallel: bool = True) -> CubeIndex:
        """Materialize the lattice for one fact and publish it atomically."""
        parse_policy(policy)
        with self._mutate:
            snapshot = self.store.snapshot()
            plan = plan_lattice(fact, self.schema, snapshot, policy)
            cube = build_cube(snapshot, plan, parallel=parallel)
            self.cubes[fact] = cube
        return cube

    def merge_delta(self, fact: str) -> int:
        with self._mutate:
            return merge_delta(self.store, fact)

    def export_cube(self, fact: str, directory) -> list:
        cube = self.cubes.get(fact)
        if cube is None:
            raise UnknownTable(f"no cube built for {fact!r}")
        return export_cube(cube, self.schema, directory)


def _quality_delta(before: QualityReport, after: QualityReport) -> dict:
    delta: dict[str, dict[str, float]] = {}
    for name, post in after.tables.items():
        pre = before.tables.get(name)
        if pre is None:
            continue
        moved = {
            metric: getattr(post, metric) - getattr(pre, metric)
            for metric in _METRICS
            if getattr(post, metric) != getattr(pre, metric)
        }
        if moved:
            delta[name] = moved
    return delta


__all__ = ["Engine", "IngestOutcome"]
