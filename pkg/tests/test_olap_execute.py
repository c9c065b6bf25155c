"""Execution engine: hand-checked cells, dual-route filters, oracle parity."""

import random

import numpy as np
import pytest

from agrodw.cube import build_cube, plan_lattice
from agrodw.errors import AxisMismatch
from agrodw.olap.execute import execute, filter_mask
from agrodw.olap.grid import grids_equal, pivot
from agrodw.olap.oracle import oracle_execute
from agrodw.olap.query import Filter, GroupEntry, PivotSpec, Query, make_predicate
from agrodw.schema import builtin_schema
from agrodw.storage import create_store

Q = Query


def cell_by_row(grid, header):
    assert grid.cols == [()]
    return grid.cells[(grid.rows.index(header), 0)]


def test_apex_covers_base_and_delta(tiny_snapshot, tiny):
    grid = execute(Q("Yield", (), (), ("quantity_t", "area_ha", "row_count", "yield_t_per_ha")), tiny_snapshot)
    assert grid.rows == [()] and grid.cols == [()]
    t = tiny["total"]
    assert grid.cells[(0, 0)] == {
        "quantity_t": t["quantity_t"],
        "area_ha": t["area_ha"],
        "row_count": t["row_count"],
        "yield_t_per_ha": t["quantity_t"] / t["area_ha"],
    }
    assert grid.provenance == {"source": "scan", "delta_rows_scanned": 2, "base_rows_covered": 6}


def test_group_by_key_cells(tiny_snapshot, tiny):
    grid = execute(Q("Yield", (GroupEntry("Crop", "key"),), (), ("quantity_t", "area_ha", "row_count")), tiny_snapshot)
    assert grid.rows == [(1,), (2,), (3,)]
    for key, (q, a, n) in tiny["by_crop_key"].items():
        assert cell_by_row(grid, (key,)) == {"quantity_t": q, "area_ha": a, "row_count": n}


def test_group_at_name_level_merges_keys(tiny_snapshot, tiny):
    # crop keys 1 and 3 are both named wheat
    grid = execute(Q("Yield", (GroupEntry("Crop", "name"),), (), ("quantity_t",)), tiny_snapshot)
    assert grid.rows == [("barley",), ("wheat",)]
    for name, q in tiny["by_crop_name"].items():
        assert cell_by_row(grid, (name,)) == {"quantity_t": q}


@pytest.mark.parametrize(
    "dim,selector,expected",
    [
        ("Crop", "variety_name", "by_variety"),
        ("Field", "block", "by_block"),
    ],
)
def test_group_at_other_levels(tiny_snapshot, tiny, dim, selector, expected):
    grid = execute(Q("Yield", (GroupEntry(dim, selector),), (), ("quantity_t",)), tiny_snapshot)
    got = {h[0]: grid.cells[(i, 0)]["quantity_t"] for i, h in enumerate(grid.rows)}
    assert got == tiny[expected]


def test_null_group_value_sorts_first(tiny_snapshot):
    # farmer 2 has sex null; its rows land under a leading None header
    grid = execute(Q("Yield", (GroupEntry("Farmer", "sex"),), (), ("quantity_t", "row_count")), tiny_snapshot)
    assert grid.rows == [(None,), ("female",)]
    assert cell_by_row(grid, (None,)) == {"quantity_t": 20.5, "row_count": 4}
    assert cell_by_row(grid, ("female",)) == {"quantity_t": 22.5, "row_count": 4}


def test_zero_denominator_leaves_ratio_out(tiny_snapshot):
    group = tuple(GroupEntry(d, "key") for d in ("Crop", "Field", "Farmer"))
    grid = execute(Q("Yield", group, (), ("quantity_t", "yield_t_per_ha")), tiny_snapshot)
    flat = cell_by_row(grid, (1, 3, 2))
    assert flat == {"quantity_t": 3.0}  # area 0.0: no ratio key at all
    assert cell_by_row(grid, (1, 1, 1)) == {"quantity_t": 10.0, "yield_t_per_ha": 5.0}


def test_ratio_uses_merged_partitions(tiny_snapshot, tiny):
    # crop 2 has base rows and a delta row; ratio must come from the union
    grid = execute(Q("Yield", (GroupEntry("Crop", "key"),), (), ("yield_t_per_ha",)), tiny_snapshot)
    for key, ratio in tiny["ratio_by_crop"].items():
        assert cell_by_row(grid, (key,))["yield_t_per_ha"] == pytest.approx(ratio, rel=1e-12)


def test_count_is_int_and_sums_are_floats(tiny_snapshot):
    grid = execute(Q("Yield", (), (), ("quantity_t", "row_count")), tiny_snapshot)
    cell = grid.cells[(0, 0)]
    assert type(cell["row_count"]) is int
    assert type(cell["quantity_t"]) is float


@pytest.mark.parametrize(
    "filters,quantity,count",
    [
        ((Filter("Crop", "name", "=", "wheat"),), 27.5, 5),
        ((Filter("Crop", "name", "!=", "wheat"),), 15.5, 3),
        ((Filter("Field", "area", ">", 4.0),), 27.5, 5),
        ((Filter("Field", "area", ">=", 5.0),), 27.5, 5),
        ((Filter("Field", "area", "<", 5.0),), 15.5, 3),
        ((Filter("Field", "area", "<=", 4.0),), 15.5, 3),
        ((Filter("Farmer", "birth_year", "in", (1975,)),), 22.5, 4),
        ((Filter("Crop", "variety_name", "=", "norin"), Filter("Field", "block", "=", "A")), 22.5, 4),
        ((Filter("Crop", "name", "=", "oats"),), 0.0, 0),
    ],
)
def test_filtered_totals(tiny_snapshot, filters, quantity, count):
    grid = execute(Q("Yield", (), filters, ("quantity_t", "row_count")), tiny_snapshot)
    assert grid.cells[(0, 0)] == {"quantity_t": quantity, "row_count": count}


def test_null_attribute_never_matches(tiny_snapshot):
    # farmer 2 has sex null, so != excludes it rather than matching it
    grid = execute(Q("Yield", (), (Filter("Farmer", "sex", "!=", "male"),), ("row_count",)), tiny_snapshot)
    assert grid.cells[(0, 0)] == {"row_count": 4}
    grid = execute(Q("Yield", (), (Filter("Field", "working_area", ">=", 0.0),), ("row_count",)), tiny_snapshot)
    assert grid.cells[(0, 0)] == {"row_count": 5}  # field 3 working_area null


def test_filter_on_group_level_attribute(tiny_snapshot, tiny):
    grid = execute(
        Q("Yield", (GroupEntry("Crop", "name"),), (Filter("Crop", "name", "=", "wheat"),), ("quantity_t",)),
        tiny_snapshot,
    )
    assert grid.rows == [("wheat",)]
    assert grid.cells[(0, 0)] == {"quantity_t": tiny["by_crop_name"]["wheat"]}


def test_empty_group_on_empty_store():
    snap = create_store(builtin_schema()).snapshot()
    grid = execute(Q("Yield", (), (), ("quantity_t", "row_count", "yield_t_per_ha")), snap)
    assert grid.rows == [()] and grid.cols == [()]
    assert grid.cells[(0, 0)] == {"quantity_t": 0.0, "row_count": 0}


def test_group_on_empty_store_has_no_cells():
    snap = create_store(builtin_schema()).snapshot()
    grid = execute(Q("Yield", (GroupEntry("Crop", "key"),), (), ("quantity_t",)), snap)
    assert grid.rows == [] and grid.cells == {}


# Ordering filters run on level codes via bisect; make_predicate evaluates
# python values directly. The two must agree on every member row.
@pytest.mark.parametrize(
    "dim,attr,ops",
    [
        ("Crop", "name", ("=", "!=", "in")),
        ("Farmer", "sex", ("=", "!=", "in")),
        ("Field", "working_area", ("=", "!=", "<", "<=", ">", ">=", "in")),
        ("Farmer", "birth_year", ("=", "!=", "<", "<=", ">", ">=", "in")),
        ("Weather_Station", "measure_date", ("=", "!=", "<", "<=", ">", ">=", "in")),
        ("Order", "order_date", ("=", "!=", "<", "<=", ">", ">=", "in")),
        ("Product", "type_name", ("=", "!=", "in")),
    ],
)
def test_filter_mask_matches_predicate(gen_snapshot, dim, attr, ops):
    rng = random.Random(f"{dim}.{attr}")
    rows = list(gen_snapshot.dimension_rows(dim))
    pool = sorted({r[attr] for r in rows if r[attr] is not None}, key=str)
    assert pool, "generated data must populate the attribute"
    for op in ops:
        for _ in range(6):
            if op == "in":
                literal = tuple(sorted({rng.choice(pool) for _ in range(rng.randrange(1, 4))}, key=str))
            else:
                literal = rng.choice(pool)
            f = Filter(dim, attr, op, literal)
            mask = filter_mask(gen_snapshot, f)
            pred = make_predicate(op, literal)
            brute = np.array([pred(r[attr]) for r in rows], dtype=bool)
            assert np.array_equal(mask, brute), (op, literal)


def test_filter_mask_literal_absent_from_members(tiny_snapshot):
    assert not filter_mask(tiny_snapshot, Filter("Crop", "name", "=", "rye")).any()
    # 4.5 falls between member areas 4.0 and 5.0
    mask = filter_mask(tiny_snapshot, Filter("Field", "area", ">", 4.5))
    rows = list(tiny_snapshot.dimension_rows("Field"))
    assert [bool(b) for b in mask] == [r["area"] is not None and r["area"] > 4.5 for r in rows]


def test_cuboid_and_scan_agree_with_provenance(tiny_store):
    snap = tiny_store.snapshot()
    cube = build_cube(snap, plan_lattice("Yield", snap.schema, snap, "full"))
    q = Q("Yield", (GroupEntry("Crop", "key"),), (), ("quantity_t", "row_count"))
    from_cube = execute(q, snap, cube)
    from_scan = execute(q, snap)
    # on a cuboid hit the base figure is that cuboid's entry count
    assert from_cube.provenance == {"source": "Yield[Crop]", "delta_rows_scanned": 2, "base_rows_covered": 3}
    assert from_scan.provenance["source"] == "scan"
    assert grids_equal(from_cube, from_scan)


def test_level_cuboid_serves_level_query(tiny_store):
    snap = tiny_store.snapshot()
    cube = build_cube(snap, plan_lattice("Yield", snap.schema, snap, "full"))
    q = Q("Yield", (GroupEntry("Crop", "name"),), (Filter("Crop", "name", "!=", "barley"),), ("quantity_t",))
    grid = execute(q, snap, cube)
    assert grid.provenance["source"] == "Yield[Crop@name]"
    assert grids_equal(grid, execute(q, snap))


def test_filter_below_group_level_forces_finer_cuboid(tiny_store):
    # grouping by name but filtering on variety_name needs key granularity
    snap = tiny_store.snapshot()
    cube = build_cube(snap, plan_lattice("Yield", snap.schema, snap, "full"))
    q = Q("Yield", (GroupEntry("Crop", "name"),), (Filter("Crop", "variety_name", "=", "apex"),), ("quantity_t",))
    grid = execute(q, snap, cube)
    assert grid.provenance["source"] == "Yield[Crop]"
    assert grid.rows == [("wheat",)]
    assert grid.cells[(0, 0)] == {"quantity_t": 8.5}


def test_base_insert_stales_cube_but_delta_does_not(tiny_store):
    snap = tiny_store.snapshot()
    cube = build_cube(snap, plan_lattice("Yield", snap.schema, snap, "full"))
    q = Q("Yield", (GroupEntry("Farmer", "key"),), (), ("quantity_t", "row_count"))

    tiny_store.insert_fact_rows("Yield", "delta", [((3, 2, 1), (5.0, 1.0))])
    after_delta = execute(q, tiny_store.snapshot(), cube)
    assert after_delta.provenance == {"source": "Yield[Farmer]", "delta_rows_scanned": 3, "base_rows_covered": 2}
    assert cell_by_row(after_delta, (1,)) == {"quantity_t": 27.5, "row_count": 5}

    tiny_store.insert_fact_rows("Yield", "base", [((2, 2, 2), (1.5, 1.0))])
    after_base = execute(q, tiny_store.snapshot(), cube)
    assert after_base.provenance == {"source": "scan", "delta_rows_scanned": 3, "base_rows_covered": 7}
    assert cell_by_row(after_base, (2,)) == {"quantity_t": 22.0, "row_count": 5}


def test_cube_for_other_fact_is_ignored(tiny_snapshot):
    cube = build_cube(tiny_snapshot, plan_lattice("Yield", tiny_snapshot.schema, tiny_snapshot, "full"))
    grid = execute(Q("Trading", (), (), ("total_value_eur",)), tiny_snapshot, cube)
    assert grid.provenance["source"] == "scan"


def test_pivot_relayout_preserves_values(tiny_snapshot):
    group = (GroupEntry("Crop", "name"), GroupEntry("Farmer", "key"))
    flat = execute(Q("Yield", group, (), ("quantity_t",)), tiny_snapshot)
    crossed = execute(
        Q("Yield", group, (), ("quantity_t",), PivotSpec((group[0],), (group[1],))),
        tiny_snapshot,
    )
    assert crossed.rows == [("barley",), ("wheat",)]
    assert crossed.cols == [(1,), (2,)]
    total = sum(v["quantity_t"] for v in crossed.cells.values())
    assert total == sum(v["quantity_t"] for v in flat.cells.values()) == 43.0
    # wheat row: farmer 1 has 10+6, farmer 2 has 7.5+3+1
    r = crossed.rows.index(("wheat",))
    assert crossed.cells[(r, crossed.cols.index((1,)))] == {"quantity_t": 16.0}
    assert crossed.cells[(r, crossed.cols.index((2,)))] == {"quantity_t": 11.5}


def test_pivot_roundtrip_and_mismatch(tiny_snapshot):
    group = (GroupEntry("Crop", "key"), GroupEntry("Field", "block"))
    grid = execute(Q("Yield", group, (), ("quantity_t",)), tiny_snapshot)
    crossed = pivot(grid, (group[1],), (group[0],))
    back = pivot(crossed, group, ())
    assert grids_equal(back, grid) and back.rows == grid.rows
    with pytest.raises(AxisMismatch):
        pivot(grid, (group[0],), (group[0],))
    with pytest.raises(AxisMismatch):
        pivot(grid, (group[0],), (GroupEntry("Farmer", "key"),))


def test_grids_equal_tolerance_and_reporting(tiny_snapshot):
    q = Q("Yield", (GroupEntry("Crop", "key"),), (), ("quantity_t", "row_count"))
    a = execute(q, tiny_snapshot)
    b = execute(q, tiny_snapshot)
    assert grids_equal(a, b)
    cell = b.cells[(0, 0)]
    cell["quantity_t"] *= 1.0 + 1e-12  # inside rel_tol
    assert grids_equal(a, b)
    cell["quantity_t"] *= 1.0 + 1e-6  # outside
    report = []
    assert not grids_equal(a, b, report=report)
    assert report and "quantity_t" in report[0]
    cell["quantity_t"] = a.cells[(0, 0)]["quantity_t"]
    cell["row_count"] += 1  # ints never get tolerance
    assert not grids_equal(a, b)


def test_rollup_totals_are_consistent(tiny_snapshot, tiny):
    fine = execute(Q("Yield", (GroupEntry("Crop", "key"), GroupEntry("Farmer", "key")), (), ("quantity_t",)), tiny_snapshot)
    coarse = execute(Q("Yield", (GroupEntry("Farmer", "key"),), (), ("quantity_t",)), tiny_snapshot)
    regrouped: dict = {}
    for (r, _c), values in fine.cells.items():
        farmer = fine.rows[r][1]
        regrouped[farmer] = regrouped.get(farmer, 0.0) + values["quantity_t"]
    assert regrouped == {h[0]: coarse.cells[(i, 0)]["quantity_t"] for i, h in enumerate(coarse.rows)}
    assert regrouped == {k: v[0] for k, v in tiny["by_farmer"].items()}


def test_matches_oracle_on_generated_data(gen_snapshot, corpus):
    for fact in gen_snapshot.schema.facts:
        for q in corpus(gen_snapshot, fact, 12, seed=f"exec-{fact}"):
            got = execute(q, gen_snapshot)
            want = oracle_execute(gen_snapshot, q)
            report: list = []
            assert grids_equal(got, want, report=report), (str(q), report)


@pytest.mark.parametrize("placement", ["base", "delta", "mixed"])
@pytest.mark.parametrize("policy", [None, "full", "cap:40"])
def test_matches_oracle_under_policy_and_placement(gen_root, corpus, place, placement, policy):
    store = place(gen_root, placement)
    snap = store.snapshot()
    cube = None
    if policy is not None:
        cube = build_cube(snap, plan_lattice("Yield", snap.schema, snap, policy))
    hits = 0
    for q in corpus(snap, "Yield", 15, seed=f"pp-{placement}-{policy}"):
        got = execute(q, snap, cube)
        want = oracle_execute(snap, q)
        report: list = []
        assert grids_equal(got, want, report=report), (str(q), report)
        hits += got.provenance["source"] != "scan"
    if policy is not None and placement != "delta":
        assert hits > 0  # the cube must actually answer some of these
