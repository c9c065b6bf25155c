"""Engine facade: ingest accounting, cube lifecycle, persistence, threads."""

import threading

import pytest

from agrodw.engine import Engine
from agrodw.errors import AgrodwError, UnknownTable
from agrodw.etl import TransformPolicy
from agrodw.olap.grid import grids_equal
from agrodw.olap.query import GroupEntry, Query

from conftest import build_tiny_store

CROP_CSV = (
    "crop_id,name,code,variety_name,standard_moisture_percentage,estimated_yield\n"
    "1,wheat,W1,norin,14.5,7.0\n"
    "2,barley,B1,norin,13.0,6.0\n"
)
FIELD_HEADER = "field_id,station_id,farmer_id,name,block,area,working_area\n"
YIELD_HEADER = "Crop,Field,Farmer,quantity_t,area_ha\n"


def tiny_engine() -> Engine:
    return Engine(build_tiny_store())


def conservation_holds(outcome) -> bool:
    load = outcome.to_json_dict()["load"]
    return load["input"] == (
        load["inserted"] + load["rejected"] + load["quarantined"] + load["merged_duplicates"]
    )


def test_ingest_dimension_roundtrip():
    engine = Engine.create()
    outcome = engine.ingest("Crop", CROP_CSV)
    assert (outcome.table, outcome.partition) == ("Crop", None)
    assert outcome.inserted == 2 and outcome.clean
    assert conservation_holds(outcome)
    assert set(outcome.quality) == {
        "completeness", "referential_integrity", "duplicates", "consistency", "timeliness",
    }
    names = engine.store.snapshot().dim_attr_values("Crop", "name")
    assert set(names) == {None, "wheat", "barley"}  # None is the unknown member


def test_ingest_fact_into_partition():
    engine = Engine.create()
    engine.ingest("Crop", CROP_CSV)
    engine.ingest("Farmer", "farmer_id,name,sex,birth_year,field_area\n1,Ann,female,1975,10.0\n")
    engine.ingest("Field", FIELD_HEADER + "1,0,1,east,A,4.0,3.5\n")
    outcome = engine.ingest("Yield", YIELD_HEADER + "1,1,1,10.0,2.0\n2,1,1,4.0,2.0\n", partition="delta")
    assert outcome.partition == "delta" and outcome.inserted == 2
    snap = engine.store.snapshot()
    assert snap.fact_size("Yield", "delta") == 2 and snap.fact_size("Yield", "base") == 0
    grid = engine.query("from Yield measure quantity_t, row_count")
    assert grid.cells[(0, 0)] == {"quantity_t": 14.0, "row_count": 2}


def test_ingest_reports_defects_and_conserves_rows():
    engine = Engine.create()
    engine.ingest("Crop", CROP_CSV)
    engine.ingest("Farmer", "farmer_id,name,sex,birth_year,field_area\n1,Ann,female,1975,10.0\n")
    engine.ingest("Field", FIELD_HEADER + "1,0,1,east,A,4.0,3.5\n")
    csv = YIELD_HEADER + (
        "1,1,1,10.0,2.0\n"
        "1,1,1,5.0,1.0\n"      # duplicate composite key: aggregated in
        "9,1,1,2.0,1.0\n"      # unknown crop: mapped to the unknown member
        "2,1,1,bad,1.0\n"      # uncoercible measure
        "2,1\n"                # arity
    )
    outcome = engine.ingest("Yield", csv, partition="base")
    assert outcome.input_count == 5
    assert outcome.merged_duplicates == 1
    assert outcome.quarantined == 2
    assert outcome.inserted == 2
    assert conservation_holds(outcome)
    assert outcome.reasons == {"arity": 1, "coerce:quantity_t": 1}
    grid = engine.query("from Yield where Crop.name = \"wheat\" measure quantity_t")
    assert grid.cells[(0, 0)] == {"quantity_t": 15.0}
    # one of six key cells points at the unknown member
    assert outcome.quality["referential_integrity"] == pytest.approx(5 / 6)


def test_quality_delta_tracks_other_tables():
    engine = Engine.create()
    engine.ingest("Farmer", "farmer_id,name,sex,birth_year,field_area\n1,Ann,female,1975,10.0\n")
    first = engine.ingest("Field", FIELD_HEADER + "1,5,1,east,A,4.0,3.5\n")
    assert first.quality["referential_integrity"] == 0.5  # station 5 dangles
    second = engine.ingest(
        "Weather_Station",
        "station_id,station_name,station_batch,measure_date,air_temperature,soil_temperature\n"
        "5,north,b1,2021-03-01,9.5,6.25\n",
    )
    assert second.quality_delta["Field"]["referential_integrity"] == pytest.approx(0.5)


def test_query_accepts_text_and_objects():
    engine = tiny_engine()
    from_text = engine.query("from Yield group by Crop.key measure quantity_t")
    from_object = engine.query(Query("Yield", (GroupEntry("Crop", "key"),), (), ("quantity_t",)))
    assert grids_equal(from_text, from_object)
    assert from_text.rows == [(1,), (2,), (3,)]


def test_cubes_info_lifecycle():
    engine = tiny_engine()
    assert engine.cubes_info() == []
    engine.build_cubes("Yield", "cap:3")
    engine.build_cubes("Trading", "full")
    by_fact = {info["fact"]: info for info in engine.cubes_info()}
    assert list(by_fact) == ["Trading", "Yield"]  # sorted
    assert by_fact["Yield"]["policy"] == "cap:3"
    assert by_fact["Yield"]["cuboids"] == 5 and by_fact["Yield"]["skipped"] == 19
    assert by_fact["Trading"]["policy"] == "full"
    assert not by_fact["Yield"]["stale"]
    engine.store.insert_fact_rows("Yield", "base", [((3, 2, 1), (1.0, 1.0))])
    by_fact = {info["fact"]: info for info in engine.cubes_info()}
    assert by_fact["Yield"]["stale"] and not by_fact["Trading"]["stale"]
    engine.build_cubes("Yield", "cap:3")
    assert not {i["fact"]: i for i in engine.cubes_info()}["Yield"]["stale"]


def test_query_uses_cube_until_merge_then_rebuild():
    engine = tiny_engine()
    engine.build_cubes("Yield")
    text = "from Yield group by Farmer.key measure quantity_t, row_count"
    hit = engine.query(text)
    assert hit.provenance["source"] == "Yield[Farmer]"
    moved = engine.merge_delta("Yield")
    assert moved == 2
    snap = engine.store.snapshot()
    assert snap.fact_size("Yield", "base") == 8 and snap.fact_size("Yield", "delta") == 0
    fallback = engine.query(text)
    assert fallback.provenance["source"] == "scan"
    assert grids_equal(hit, fallback)
    engine.build_cubes("Yield")
    again = engine.query(text)
    assert again.provenance == {"source": "Yield[Farmer]", "delta_rows_scanned": 0, "base_rows_covered": 2}
    assert grids_equal(hit, again)


def test_unknown_names_raise():
    engine = tiny_engine()
    with pytest.raises(UnknownTable):
        engine.ingest("Nope", "a,b\n1,2\n")
    with pytest.raises(UnknownTable):
        engine.build_cubes("Nope")
    with pytest.raises(UnknownTable):
        engine.export_cube("Yield", "/tmp")  # built nothing yet
    with pytest.raises(AgrodwError):
        engine.query("from Nope measure quantity_t")


def test_bad_policy_rejected_before_building():
    engine = tiny_engine()
    with pytest.raises(AgrodwError):
        engine.build_cubes("Yield", "cap:many")
    assert engine.cubes_info() == []


def test_unresolved_quarantine_policy():
    engine = Engine.create()
    engine.ingest("Crop", CROP_CSV)
    engine.ingest("Farmer", "farmer_id,name,sex,birth_year,field_area\n1,Ann,female,1975,10.0\n")
    engine.ingest("Field", FIELD_HEADER + "1,0,1,east,A,4.0,3.5\n")
    outcome = engine.ingest(
        "Yield",
        YIELD_HEADER + "9,1,1,2.0,1.0\n",
        partition="base",
        policy=TransformPolicy(unresolved="quarantine"),
    )
    assert outcome.inserted == 0 and outcome.quarantined == 1
    assert outcome.reasons == {"unresolved:Crop": 1}
    assert conservation_holds(outcome)


def test_export_cube_writes_one_file_per_cuboid(tmp_path):
    engine = tiny_engine()
    cube = engine.build_cubes("Yield", "cap:3")
    paths = engine.export_cube("Yield", tmp_path)
    assert len(paths) == len(cube.tables) == 5
    names = sorted(p.name for p in paths)
    assert names[0] == "Yield..cuboid.csv"
    assert all(n.endswith(".cuboid.csv") for n in names)


def test_save_and_open_round_trip(tmp_path):
    engine = tiny_engine()
    engine.build_cubes("Yield")
    engine.save(tmp_path / "wh")
    reopened = Engine.open(tmp_path / "wh")
    assert reopened.cubes == {}  # cubes are rebuilt, not persisted
    text = "from Yield group by Crop.name measure quantity_t, yield_t_per_ha"
    assert grids_equal(reopened.query(text), engine.query(text))
    assert reopened.quality().to_json_dict() == engine.quality().to_json_dict()


def test_concurrent_readers_during_ingest():
    engine = tiny_engine()
    errors = []

    def reader():
        try:
            for _ in range(40):
                grid = engine.query("from Yield measure quantity_t, row_count")
                cell = grid.cells[(0, 0)]
                # every read sees some consistent point in time
                assert 8 <= cell["row_count"] <= 38
                assert cell["quantity_t"] >= 43.0
        except Exception as exc:  # noqa: BLE001 - surfaced via the main thread
            errors.append(exc)

    crops = "".join(f"{k},oats {k},O{k},apex,12.0,5.0\n" for k in range(10, 40))
    engine.ingest("Crop", CROP_CSV.split("\n")[0] + "\n" + crops)
    threads = [threading.Thread(target=reader) for _ in range(4)]
    for t in threads:
        t.start()
    for k in range(10, 40):
        engine.ingest("Yield", YIELD_HEADER + f"{k},1,2,1.0,0.5\n", partition="delta")
    for t in threads:
        t.join()
    assert errors == []
    final = engine.query("from Yield measure row_count")
    assert final.cells[(0, 0)] == {"row_count": 38}
