"""Seeded synthetic dataset generator for the builtin schema.

Output is a pure function of GenConfig: one SplitMix64 stream consumed in a
fixed table/row/attribute order, fixed value formatting, and fixed file
order, so identical configs produce byte-identical directory trees.

Defect injection is opt-in via the two rates. ``unknown_ref_rate`` replaces,
per fact row (and per dimension link cell), a reference with a fresh key
that exists nowhere (1_000_000 + counter), so injected dangling references
are countable exactly. ``null_rate`` blanks non-key, non-link dimension
attribute cells. At rate zero the dataset is referentially intact and
null-free in required cells.
"""

import json
import math
from dataclasses import asdict, dataclass
from datetime import date, timedelta
from pathlib import Path

from .rng import SplitMix64
from .schema import builtin_schema
from .schema.textfmt import serialize_schema

DANGLING_BASE = 1_000_000

# pooled values for hierarchy attributes, so roll-ups have real fan-in
_POOLS = {
    ("Crop", "variety_name"): ["vintara", "norin", "apex", "kolos", "duna"],
    ("Field", "block"): ["north", "south", "east", "west"],
    ("Product", "group_name"): [
        "seed", "fertiliser", "pesticide", "machinery", "feed", "packaging", "fuel", "parts",
    ],
    ("Product", "type_name"): ["input", "equipment", "service"],
    ("Disease", "type"): ["fungal", "bacterial", "viral", "deficiency"],
    ("Pest", "type"): ["insect", "rodent", "mite", "nematode"],
    ("Farmer", "sex"): ["female", "male"],
    ("Water_Utilization", "source"): ["well", "river", "canal", "rain"],
    ("Plow", "tillage_method"): ["mouldboard", "chisel", "disc", "none"],
    ("Drilling", "method"): ["direct", "broadcast", "precision"],
    ("Inspection", "problem_type"): ["weed", "lodging", "moisture", "nutrient", "pest"],
}


@dataclass(frozen=True)
class GenConfig:
    seed: int = 42
    farmers: int = 50
    fields_per_farmer: tuple[int, int] = (1, 5)
    crops: int = 12
    products: int = 40
    years: int = 3
    rows_per_fact: int = 10_000
    unknown_ref_rate: float = 0.0
    null_rate: float = 0.0
    start_year: int = 2019

    def validate(self):
        counts = (self.farmers, self.crops, self.products, self.years, self.rows_per_fact)
        if any(c < 0 for c in counts):
            raise ValueError("counts must be non-negative")
        lo, hi = self.fields_per_farmer
        if lo < 0 or hi < lo:
            raise ValueError("bad fields_per_farmer range")
        for rate in (self.unknown_ref_rate, self.null_rate):
            if not 0.0 <= rate <= 1.0:
                raise ValueError("rates must lie in [0, 1]")


def default_config() -> GenConfig:
    return GenConfig()


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, date):
        return value.isoformat()
    return str(value)


class _Maker:
    """Value construction routines sharing one RNG stream."""

    def __init__(self, config: GenConfig, rng: SplitMix64):
        self.config = config
        self.rng = rng
        first = date(config.start_year, 1, 1)
        last = date(config.start_year + max(config.years, 1) - 1, 12, 31)
        self.day_span = (last - first).days
        self.first_day = first

    def rand_date(self) -> date:
        return self.first_day + timedelta(days=self.rng.randrange(self.day_span + 1))

    def rand_log(self, lo: float, hi: float) -> float:
        # exp of a uniform draw: skewed like field sizes and order volumes
        return round(math.exp(self.rng.uniform(math.log(lo), math.log(hi))), 3)

    def rand_area(self) -> float:
        return self.rand_log(0.5, 200.0)

    def value(self, table: str, attr_name: str, kind: str, index: int):
        pool = _POOLS.get((table, attr_name))
        if pool is not None:
            return pool[self.rng.randrange(len(pool))]
        if kind == "text":
            return f"{attr_name.replace('_', ' ')} {index}"
        if kind == "enumeration":
            return ("a", "b", "c")[self.rng.randrange(3)]
        if kind == "integer":
            return self.rng.randint(1, 100)
        if kind == "decimal":
            return round(self.rng.uniform(0.0, 1000.0), 3)
        if kind == "date":
            return self.rand_date()
        raise AssertionError(f"unexpected kind {kind}")


def _dim_counts(config: GenConfig, fields: int) -> dict[str, int]:
    return {
        "Business": 10,
        "Crop": config.crops,
        "Disease": 12,
        "Drilling": 8,
        "Farmer": config.farmers,
        "Fertiliser": 20,
        "Field": fields,
        "Inspection": 25,
        "Maintenance": 10,
        "Order": config.rows_per_fact,
        "Pest": 15,
        "Planning": 30,
        "Plow": 8,
        "Product": config.products,
        "Purchaser": 25,
        "Soil": fields,
        "Supplier": 15,
        "Water_Utilization": 12,
        "Weather_Station": max(2, fields // 6),
    }


def generate(config: GenConfig, directory) -> Path:
    """Emit the full dataset under ``directory`` (storage CSV layout plus
    manifest.json); returns the directory path."""
    config.validate()
    schema = builtin_schema()
    rng = SplitMix64(config.seed)
    maker = _Maker(config, rng)
    root = Path(directory)
    (root / "dim").mkdir(parents=True, exist_ok=True)
    (root / "fact").mkdir(parents=True, exist_ok=True)
    (root / "schema.txt").write_text(serialize_schema(schema), encoding="utf-8")

    # field count is itself seeded: one draw per farmer
    lo, hi = config.fields_per_farmer
    fields_of_farmer = [rng.randint(lo, hi) if hi > 0 else 0 for _ in range(config.farmers)]
    counts = _dim_counts(config, sum(fields_of_farmer))
    link_target = {"farmer_id": "Farmer", "station_id": "Weather_Station",
                   "business_id": "Business", "field_id": "Field"}

    tables = list(counts) + list(schema.facts)
    dangling = {name: 0 for name in tables}
    nulls = {name: 0 for name in counts}
    next_dangling = DANGLING_BASE
    field_farmers = []  # Field.farmer_id follows fields_of_farmer exactly
    for farmer, k in enumerate(fields_of_farmer, start=1):
        field_farmers.extend([farmer] * k)

    dim_rows: dict[str, list[list]] = {}
    for name, defn in schema.dimensions.items():
        n = counts[name]
        links = {l.attribute for l in defn.links}
        rows = []
        for i in range(1, n + 1):
            row = []
            for attr in defn.attributes:
                if attr.name == defn.key:
                    row.append(i)
                elif attr.name in links:
                    if name == "Field" and attr.name == "farmer_id":
                        row.append(field_farmers[i - 1])
                    elif name == "Soil" and attr.name == "field_id":
                        row.append(i)  # one soil profile per field
                    else:
                        row.append(1 + rng.randrange(counts[link_target[attr.name]]))
                elif name == "Field" and attr.name == "area":
                    row.append(maker.rand_area())
                elif name == "Field" and attr.name == "working_area":
                    row.append(round(row[-1] * rng.uniform(0.5, 1.0), 3))
                else:
                    row.append(maker.value(name, attr.name, attr.kind, i))
            rows.append(row)
        # defect injection over link and plain attribute cells
        attr_names = [a.name for a in defn.attributes]
        for row in rows:
            for j, attr in enumerate(defn.attributes):
                if attr.name == defn.key:
                    continue
                if attr.name in links:
                    if config.unknown_ref_rate and rng.random() < config.unknown_ref_rate:
                        row[j] = next_dangling
                        next_dangling += 1
                        dangling[name] += 1
                elif config.null_rate and rng.random() < config.null_rate:
                    if row[j] is not None:
                        row[j] = None
                        nulls[name] += 1
        dim_rows[name] = rows
        _write_csv(root / "dim" / f"{name}.csv", attr_names, rows)

    fact_counts = {}
    for name, defn in schema.facts.items():
        rows = _fact_rows(name, defn, counts, config, rng, maker)
        for row in rows:
            if config.unknown_ref_rate and rng.random() < config.unknown_ref_rate:
                j = rng.randrange(len(defn.dimensions))
                row[j] = next_dangling
                next_dangling += 1
                dangling[name] += 1
        header = list(defn.dimensions) + [m.name for m in defn.additive_measures()]
        _write_csv(root / "fact" / f"{name}.base.csv", header, rows)
        _write_csv(root / "fact" / f"{name}.delta.csv", header, [])
        fact_counts[name] = len(rows)

    manifest = {
        "config": _config_dict(config),
        "tables": {**{k: len(v) for k, v in dim_rows.items()}, **fact_counts},
        "injected": {"dangling": dangling, "nulls": nulls},
    }
    (root / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return root


def _config_dict(config: GenConfig) -> dict:
    d = asdict(config)
    d["fields_per_farmer"] = list(config.fields_per_farmer)
    return d


def _fact_rows(name, defn, counts, config, rng, maker) -> list[list]:
    rows = []
    seen = set()
    sizes = [counts[d] for d in defn.dimensions]
    if any(s == 0 for s in sizes):
        return rows
    for _ in range(config.rows_per_fact):
        keys = tuple(1 + rng.randrange(s) for s in sizes)
        measures = _measures(name, rng, maker)
        if keys in seen:
            continue  # composite keys must stay unique; targets are upper bounds
        seen.add(keys)
        rows.append(list(keys) + measures)
    return rows


def _measures(fact: str, rng: SplitMix64, maker: _Maker) -> list[float]:
    if fact == "Trading":
        quantity = maker.rand_log(0.5, 50.0)
        return [quantity, round(quantity * rng.uniform(80.0, 420.0), 3)]
    if fact == "Operation":
        return [maker.rand_log(10.0, 2000.0), maker.rand_log(1.0, 500.0)]
    if fact == "Treatment":
        return [maker.rand_log(0.1, 50.0), maker.rand_log(5.0, 800.0)]
    # Yield
    area = maker.rand_area()
    return [round(area * rng.uniform(1.0, 12.0), 3), area]


def _write_csv(path: Path, header: list[str], rows) -> None:
    import csv

    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


__all__ = ["DANGLING_BASE", "GenConfig", "default_config", "generate"]
