"""Dataset generator: determinism, exact defect accounting, plausibility."""

import csv
import json
from datetime import date
from pathlib import Path

import pytest

from agrodw.datagen import DANGLING_BASE, GenConfig, default_config, generate
from agrodw.schema import builtin_schema
from agrodw.storage import load_store


def read_csv(path: Path):
    with open(path, newline="", encoding="utf-8") as f:
        rows = list(csv.reader(f))
    return rows[0], rows[1:]


def tree_bytes(root: Path) -> dict[str, bytes]:
    return {
        str(p.relative_to(root)): p.read_bytes()
        for p in sorted(root.rglob("*"))
        if p.is_file()
    }


def test_same_config_same_bytes(gen_config, gen_root, tmp_path):
    again = generate(gen_config, tmp_path / "again")
    assert tree_bytes(again) == tree_bytes(gen_root)


def test_different_seed_different_facts(gen_config, gen_root, tmp_path):
    other = generate(GenConfig(**{**vars(gen_config), "seed": gen_config.seed + 1}), tmp_path / "other")
    a, b = tree_bytes(gen_root), tree_bytes(other)
    assert set(a) == set(b)
    assert a["fact/Yield.base.csv"] != b["fact/Yield.base.csv"]
    assert a["dim/Farmer.csv"] != b["dim/Farmer.csv"]


def test_clean_dataset_matches_manifest(gen_root, gen_store):
    manifest = json.loads((gen_root / "manifest.json").read_text())
    assert all(v == 0 for v in manifest["injected"]["dangling"].values())
    assert all(v == 0 for v in manifest["injected"]["nulls"].values())
    snap = gen_store.snapshot()
    for name in gen_store.schema.dimensions:
        # +1: the store seeds the unknown member, the generator does not emit it
        assert snap.dimension_size(name) == manifest["tables"][name] + 1
    for name in gen_store.schema.facts:
        assert snap.fact_size(name, "base") == manifest["tables"][name]
        assert snap.fact_size(name, "delta") == 0


def test_manifest_echoes_config(gen_root, gen_config):
    manifest = json.loads((gen_root / "manifest.json").read_text())
    expected = dict(vars(gen_config))
    expected["fields_per_farmer"] = list(gen_config.fields_per_farmer)
    assert manifest["config"] == expected


def test_injected_defects_recount_exactly(tmp_path):
    config = GenConfig(seed=99, farmers=8, fields_per_farmer=(1, 2), crops=5,
                       products=8, years=1, rows_per_fact=300,
                       unknown_ref_rate=0.15, null_rate=0.12)
    root = generate(config, tmp_path / "dirty")
    manifest = json.loads((root / "manifest.json").read_text())
    schema = builtin_schema()

    dangling_keys = []
    dangling = {}
    nulls = {}
    for name, defn in schema.dimensions.items():
        header, rows = read_csv(root / "dim" / f"{name}.csv")
        links = {l.attribute for l in defn.links}
        bad = empty = 0
        for row in rows:
            for attr, cell in zip(header, row):
                if attr == defn.key:
                    assert cell != ""
                elif attr in links:
                    if int(cell) >= DANGLING_BASE:
                        bad += 1
                        dangling_keys.append(int(cell))
                elif cell == "":
                    empty += 1
        dangling[name], nulls[name] = bad, empty
    for name, defn in schema.facts.items():
        header, rows = read_csv(root / "fact" / f"{name}.base.csv")
        bad = 0
        for row in rows:
            hits = [c for c in row[: len(defn.dimensions)] if int(c) >= DANGLING_BASE]
            bad += len(hits)
            assert len(hits) <= 1  # injection picks one reference per row
            dangling_keys.extend(int(c) for c in hits)
        dangling[name] = bad

    assert manifest["injected"]["dangling"] == dangling
    assert manifest["injected"]["nulls"] == nulls
    assert sum(dangling.values()) > 0 and sum(nulls.values()) > 0
    # injected keys are fresh: allocated upward from the base, never reused
    assert len(set(dangling_keys)) == len(dangling_keys)
    assert min(dangling_keys) == DANGLING_BASE
    assert max(dangling_keys) == DANGLING_BASE + len(dangling_keys) - 1


def test_composite_fact_keys_unique(gen_root, gen_config):
    schema = builtin_schema()
    for name, defn in schema.facts.items():
        _, rows = read_csv(gen_root / "fact" / f"{name}.base.csv")
        keys = [tuple(row[: len(defn.dimensions)]) for row in rows]
        assert len(set(keys)) == len(keys)
        assert 0 < len(keys) <= gen_config.rows_per_fact


def test_measure_plausibility(gen_root):
    header, rows = read_csv(gen_root / "fact" / "Yield.base.csv")
    qi, ai = header.index("quantity_t"), header.index("area_ha")
    for row in rows:
        q, a = float(row[qi]), float(row[ai])
        assert 0.5 <= a <= 200.0
        assert 1.0 - 1e-2 <= q / a <= 12.0 + 1e-2
    header, rows = read_csv(gen_root / "fact" / "Trading.base.csv")
    qi, vi = header.index("quantity_t"), header.index("total_value_eur")
    for row in rows:
        q, v = float(row[qi]), float(row[vi])
        assert 0.5 <= q <= 50.0
        assert 80.0 - 1e-2 <= v / q <= 420.0 + 1e-2


def test_dates_stay_inside_configured_years(gen_root, gen_config, tmp_path):
    schema = builtin_schema()

    def check(root, first, last):
        for name, defn in schema.dimensions.items():
            header, rows = read_csv(root / "dim" / f"{name}.csv")
            date_cols = [header.index(a.name) for a in defn.attributes if a.kind == "date"]
            for row in rows:
                for j in date_cols:
                    if row[j]:
                        assert first <= date.fromisoformat(row[j]) <= last

    check(gen_root, date(gen_config.start_year, 1, 1),
          date(gen_config.start_year + gen_config.years - 1, 12, 31))
    later = generate(GenConfig(seed=3, farmers=4, crops=3, products=5, years=1,
                               rows_per_fact=50, start_year=2031), tmp_path / "später")
    check(later, date(2031, 1, 1), date(2031, 12, 31))


def test_pooled_attributes_draw_from_pools(gen_snapshot):
    sexes = set(gen_snapshot.dim_attr_values("Farmer", "sex"))
    assert sexes <= {None, "female", "male"}
    blocks = set(gen_snapshot.dim_attr_values("Field", "block"))
    assert blocks <= {None, "north", "south", "east", "west"}


def test_zero_rows_per_fact_loads_empty(tmp_path):
    root = generate(GenConfig(seed=1, farmers=3, crops=2, products=4, years=1,
                              rows_per_fact=0), tmp_path / "empty")
    store = load_store(root)
    snap = store.snapshot()
    for name in store.schema.facts:
        assert snap.fact_size(name, "base") == 0
    assert snap.dimension_size("Order") == 1  # only the unknown member


@pytest.mark.parametrize(
    "overrides",
    [
        {"farmers": -1},
        {"rows_per_fact": -5},
        {"fields_per_farmer": (3, 1)},
        {"fields_per_farmer": (-1, 2)},
        {"null_rate": 1.5},
        {"unknown_ref_rate": -0.1},
    ],
)
def test_config_validation_rejects(overrides):
    with pytest.raises(ValueError):
        generate(GenConfig(**{**vars(GenConfig()), **overrides}), "/nonexistent")


def test_default_config_is_the_documented_one():
    config = default_config()
    assert config == GenConfig()
    assert (config.seed, config.rows_per_fact) == (42, 10_000)
    assert DANGLING_BASE == 1_000_000
