"""Shared fixtures: a hand-checked miniature warehouse and a generated one.

The miniature store is small enough that every aggregate in TINY below can
be re-derived with pencil and paper; tests assert those numbers exactly.
The generated store exercises realistic row counts without slowing the
suite down.
"""

import random
from datetime import date

import pytest

from agrodw.datagen import GenConfig, generate
from agrodw.levels import dimension_levels
from agrodw.olap.query import Filter, GroupEntry, PivotSpec, Query, bind_query
from agrodw.schema import builtin_schema
from agrodw.storage import create_store, load_store


def build_tiny_store():
    """Three crops, three fields, two farmers; 6 base + 2 delta Yield rows.

    Crop names collide on purpose (wheat appears under two keys) so that
    grouping at the name level genuinely merges keys, and one base row has
    area 0.0 so the derived ratio is absent for that cell.
    """
    store = create_store(builtin_schema())
    store.insert_dimension_rows(
        "Weather_Station",
        [{"station_id": 1, "station_name": "north", "station_batch": "b1",
          "measure_date": date(2021, 3, 1), "air_temperature": 9.5,
          "soil_temperature": 6.25}],
    )
    store.insert_dimension_rows(
        "Farmer",
        [
            {"farmer_id": 1, "name": "Ann", "sex": "female", "birth_year": 1975,
             "field_area": 10.0},
            {"farmer_id": 2, "name": "Bo", "sex": None, "birth_year": 1988,
             "field_area": 5.0},
        ],
    )
    store.insert_dimension_rows(
        "Field",
        [
            {"field_id": 1, "station_id": 1, "farmer_id": 1, "name": "east",
             "block": "A", "area": 4.0, "working_area": 3.5},
            {"field_id": 2, "station_id": 1, "farmer_id": 1, "name": "west",
             "block": "A", "area": 6.0, "working_area": 5.25},
            {"field_id": 3, "station_id": None, "farmer_id": 2, "name": "south",
             "block": "B", "area": 5.0, "working_area": None},
        ],
    )
    store.insert_dimension_rows(
        "Crop",
        [
            {"crop_id": 1, "name": "wheat", "code": "W1", "variety_name": "norin",
             "standard_moisture_percentage": 14.5, "estimated_yield": 7.0},
            {"crop_id": 2, "name": "barley", "code": "B1", "variety_name": "norin",
             "standard_moisture_percentage": 13.0, "estimated_yield": 6.0},
            {"crop_id": 3, "name": "wheat", "code": "W2", "variety_name": "apex",
             "standard_moisture_percentage": 14.0, "estimated_yield": 8.5},
        ],
    )
    # (crop, field, farmer) -> (quantity_t, area_ha)
    store.insert_fact_rows(
        "Yield", "base",
        [
            ((1, 1, 1), (10.0, 2.0)),
            ((1, 2, 1), (6.0, 3.0)),
            ((2, 1, 1), (4.5, 1.5)),
            ((2, 3, 2), (9.0, 4.0)),
            ((3, 3, 2), (7.5, 2.5)),
            ((1, 3, 2), (3.0, 0.0)),
        ],
    )
    store.insert_fact_rows(
        "Yield", "delta",
        [
            ((2, 2, 1), (2.0, 1.0)),
            ((3, 1, 2), (1.0, 0.5)),
        ],
    )
    return store


# Every number below is derivable by hand from the eight rows above.
TINY = {
    "total": {"quantity_t": 43.0, "area_ha": 14.5, "row_count": 8},
    "base_total": {"quantity_t": 40.0, "area_ha": 13.0, "row_count": 6},
    "by_crop_key": {1: (19.0, 5.0, 3), 2: (15.5, 6.5, 3), 3: (8.5, 3.0, 2)},
    "by_crop_name": {"barley": 15.5, "wheat": 27.5},
    "by_variety": {"apex": 8.5, "norin": 34.5},
    "by_farmer": {1: (22.5, 4), 2: (20.5, 4)},
    "by_block": {"A": 23.5, "B": 19.5},
    "ratio_by_crop": {1: 19.0 / 5.0, 2: 15.5 / 6.5, 3: 8.5 / 3.0},
}


_TEXT_OPS = ("=", "!=", "in")
_ORDERED_OPS = ("=", "!=", "<", "<=", ">", ">=", "in")


def random_queries(snapshot, fact_name, n, seed, allow_pivot=True):
    """Bound random queries whose filter literals occur in the snapshot."""
    schema = snapshot.schema
    fact = schema.facts[fact_name]
    dims = list(fact.dimensions)
    rng = random.Random(seed)
    out = []
    while len(out) < n:
        chosen = rng.sample(dims, rng.randrange(0, min(3, len(dims)) + 1))
        group = tuple(
            GroupEntry(d, rng.choice(dimension_levels(schema.dimensions[d])))
            for d in chosen
        )
        filters = []
        for d in rng.sample(dims, rng.randrange(0, 3)):
            dim = schema.dimensions[d]
            attr = rng.choice(dim.attributes)
            pool = [v for v in snapshot.dim_attr_values(d, attr.name) if v is not None]
            if not pool:
                continue
            ops = _TEXT_OPS if attr.kind in ("text", "enumeration") else _ORDERED_OPS
            op = rng.choice(ops)
            if op == "in":
                literal = tuple(sorted({rng.choice(pool) for _ in range(rng.randrange(1, 4))}, key=str))
            else:
                literal = rng.choice(pool)
            filters.append(Filter(d, attr.name, op, literal))
        measures = tuple(m.name for m in fact.measures if rng.random() < 0.7)
        if not measures:
            measures = (fact.measures[0].name,)
        pivot = None
        if allow_pivot and group and rng.random() < 0.25:
            shuffled = list(group)
            rng.shuffle(shuffled)
            cut = rng.randrange(0, len(group) + 1)
            pivot = PivotSpec(rows=tuple(shuffled[:cut]), cols=tuple(shuffled[cut:]))
        query = Query(fact_name, group, tuple(filters), measures, pivot)
        out.append(bind_query(query, schema))
    return out


def store_with_placement(root, placement):
    """Load a generated dataset routing fact rows to base/delta/mixed."""
    src = load_store(root)
    if placement == "base":
        return src
    snap = src.snapshot()
    dst = create_store(src.schema)
    for name, dim in src.schema.dimensions.items():
        rows = [dict(r) for r in snap.dimension_rows(name) if r[dim.key] != 0]
        dst.insert_dimension_rows(name, rows)
    for name, fact in src.schema.facts.items():
        key_cols = [snap.fact_keys(name, "base", d) for d in fact.dimensions]
        measure_cols = [
            snap.fact_measure(name, "base", m.name) for m in fact.additive_measures()
        ]
        rows = [
            (tuple(int(c[i]) for c in key_cols), tuple(float(c[i]) for c in measure_cols))
            for i in range(snap.fact_size(name, "base"))
        ]
        if placement == "delta":
            dst.insert_fact_rows(name, "delta", rows)
        else:
            dst.insert_fact_rows(name, "base", rows[0::2])
            dst.insert_fact_rows(name, "delta", rows[1::2])
    return dst


@pytest.fixture
def schema():
    return builtin_schema()


@pytest.fixture
def tiny_store():
    return build_tiny_store()


@pytest.fixture
def tiny_snapshot(tiny_store):
    return tiny_store.snapshot()


@pytest.fixture
def tiny():
    return TINY


@pytest.fixture(scope="session")
def gen_config():
    return GenConfig(seed=7, farmers=12, fields_per_farmer=(1, 3), crops=6,
                     products=10, years=2, rows_per_fact=700)


@pytest.fixture(scope="session")
def gen_root(tmp_path_factory, gen_config):
    root = tmp_path_factory.mktemp("gen-small")
    generate(gen_config, root)
    return root


@pytest.fixture(scope="session")
def gen_store(gen_root):
    # shared across tests: treat as read-only
    return load_store(gen_root)


@pytest.fixture(scope="session")
def gen_snapshot(gen_store):
    return gen_store.snapshot()


@pytest.fixture(scope="session")
def corpus():
    return random_queries


@pytest.fixture
def place():
    return store_with_placement
