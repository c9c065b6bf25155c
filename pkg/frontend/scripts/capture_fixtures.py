"""Capture golden HTTP fixtures for the explorer test suite.

Generates the deterministic sample dataset, serves it with the real server
process, performs the drill-down/roll-up/slice interactions over live HTTP
while asserting the invariants the browser tests re-verify (down-then-up
returns byte-identical grids, slice order commutes, cuboid answers match
scans, merging the delta preserves query content), then freezes every
response under tests/fixtures/.

Run from the frontend directory: python3 scripts/capture_fixtures.py
"""

import csv
import io
import json
import socket
import subprocess
import sys
import tempfile
import time
import urllib.error
import urllib.request
from pathlib import Path

from agrodw.datagen import GenConfig, generate

FIXTURES = Path(__file__).resolve().parent.parent / "tests" / "fixtures"

CONFIG = dict(seed=7, farmers=12, fields_per_farmer=(1, 3), crops=6,
              products=10, years=2, rows_per_fact=700)

QUERIES = {
    "q_yield_apex": "from Yield measure quantity_t, area_ha, row_count, yield_t_per_ha",
    # the exact texts the explorer emits while a test walks the controls
    "q_trading_apex": "from Trading measure quantity_t",
    "q_yield_qt": "from Yield measure quantity_t",
    "q_yield_qt_count": "from Yield measure quantity_t, row_count",
    "q_crop_name_qt": "from Yield group by Crop.name measure quantity_t",
    "q_pair_pivot_allrows": ("from Yield group by Crop.name, Farmer.key measure quantity_t"
                             " pivot rows=Crop.name, Farmer.key cols="),
    "q_crop_name": "from Yield group by Crop.name measure quantity_t, row_count",
    "q_crop_variety": "from Yield group by Crop.variety_name measure quantity_t, row_count",
    "q_crop_key": "from Yield group by Crop.key measure quantity_t, row_count",
    "q_pair": "from Yield group by Crop.name, Farmer.key measure quantity_t",
    "q_pair_pivot": ("from Yield group by Crop.name, Farmer.key measure quantity_t"
                     " pivot rows=Crop.name cols=Farmer.key"),
    "q_pair_sliced": ('from Yield group by Crop.name, Farmer.key'
                      ' where Farmer.sex = "female" measure quantity_t'),
    "q_variety_pair": "from Yield group by Crop.variety_name, Farmer.key measure quantity_t",
    "q_variety_pair_sliced": ('from Yield group by Crop.variety_name, Farmer.key'
                              ' where Farmer.sex = "female" measure quantity_t'),
    "q_order_month": ("from Trading group by Order.month(order_date)"
                      " measure total_value_eur, row_count"),
    "q_order_year": ("from Trading group by Order.year(order_date)"
                     " measure total_value_eur, row_count"),
}

ERRORS = {
    "err_parse": "from Yield measure",
    "err_semantic": "from Nope measure x",
}


def free_port() -> int:
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


class Api:
    def __init__(self, base: str):
        self.base = base

    def call(self, method: str, path: str, body=None, content_type="application/json"):
        data = None
        headers = {}
        if body is not None:
            data = body if isinstance(body, bytes) else json.dumps(body).encode()
            headers["content-type"] = content_type
        req = urllib.request.Request(self.base + path, data=data, headers=headers,
                                     method=method)
        try:
            with urllib.request.urlopen(req) as resp:
                return resp.status, resp.read()
        except urllib.error.HTTPError as err:
            return err.code, err.read()

    def ok(self, method: str, path: str, body=None, **kw) -> bytes:
        status, raw = self.call(method, path, body, **kw)
        assert status == 200, f"{method} {path} -> {status}: {raw[:200]!r}"
        return raw

    def query_bytes(self, text: str) -> bytes:
        return self.ok("POST", "/query", {"q": text})


def grids_close(a: dict, b: dict, rel_tol=1e-9) -> bool:
    if a["rows"] != b["rows"] or a["cols"] != b["cols"]:
        return False
    index = {(c["r"], c["c"]): c["values"] for c in b["cells"]}
    if len(a["cells"]) != len(index):
        return False
    for cell in a["cells"]:
        values = index.get((cell["r"], cell["c"]))
        if values is None or values.keys() != cell["values"].keys():
            return False
        for name, x in cell["values"].items():
            y = values[name]
            if x != y and abs(x - y) > rel_tol * max(abs(x), abs(y)):
                return False
    return True


def unused_yield_rows(root: Path, schema: dict) -> str:
    """Three Yield delta rows whose member keys exist and whose mapped
    key tuples collide with nothing already stored."""
    members = {}
    for dim in ("Crop", "Field", "Farmer"):
        info = next(d for d in schema["dimensions"] if d["name"] == dim)
        with open(root / "dim" / f"{dim}.csv", newline="") as fh:
            reader = csv.DictReader(fh)
            members[dim] = {int(r[info["key"]]) for r in reader if r[info["key"]]}
    used = set()
    for part in ("base", "delta"):
        with open(root / "fact" / f"Yield.{part}.csv", newline="") as fh:
            reader = csv.DictReader(fh)
            for row in reader:
                used.add(tuple(
                    int(row[d]) if int(row[d]) in members[d] else 0
                    for d in ("Crop", "Field", "Farmer")
                ))
    picked = []
    for crop in sorted(members["Crop"]):
        for field in sorted(members["Field"]):
            for farmer in sorted(members["Farmer"]):
                combo = (crop, field, farmer)
                if combo not in used and combo not in picked:
                    picked.append(combo)
                    if len(picked) == 3:
                        out = io.StringIO()
                        writer = csv.writer(out)
                        writer.writerow(["Crop", "Field", "Farmer", "quantity_t", "area_ha"])
                        for i, (ck, fk, mk) in enumerate(picked):
                            writer.writerow([ck, fk, mk, f"{2.5 + i}", f"{1.0 + i}"])
                        return out.getvalue()
    raise AssertionError("no unused key combinations found")


def main() -> int:
    FIXTURES.mkdir(parents=True, exist_ok=True)
    root = Path(tempfile.mkdtemp(prefix="agrodw-fixtures-"))
    generate(GenConfig(**CONFIG), root)

    port = free_port()
    server = subprocess.Popen(
        [sys.executable, "-m", "agrodw.cli", "--store", str(root),
         "serve", "--port", str(port)],
        stdout=subprocess.DEVNULL, stderr=subprocess.DEVNULL,
    )
    api = Api(f"http://127.0.0.1:{port}")
    try:
        for _ in range(120):
            try:
                api.ok("GET", "/schema")
                break
            except OSError:
                time.sleep(0.25)
        else:
            raise RuntimeError("server did not come up")

        written = {}

        def save(name: str, payload) -> None:
            path = FIXTURES / f"{name}.json"
            path.write_text(json.dumps(payload, indent=1) + "\n")
            written[name] = path.name

        schema = json.loads(api.ok("GET", "/schema"))
        save("schema", schema)

        grids = {}
        for name, text in QUERIES.items():
            raw = api.query_bytes(text)
            grids[name] = json.loads(raw)
            save(name, grids[name])

        # adjoint, live: drill down then roll up reproduces the exact bytes
        for before, after in (("q_crop_name", "q_crop_variety"),
                              ("q_pair", "q_variety_pair"),
                              ("q_order_year", "q_order_month")):
            first = api.query_bytes(QUERIES[before])
            api.query_bytes(QUERIES[after])
            again = api.query_bytes(QUERIES[before])
            assert first == again, f"down-then-up changed {before}"

        # slice commutes with drill-down: both orders land on the same text,
        # and served content for the common refinement is stable
        sliced_first = api.query_bytes(QUERIES["q_variety_pair_sliced"])
        api.query_bytes(QUERIES["q_pair_sliced"])
        sliced_again = api.query_bytes(QUERIES["q_variety_pair_sliced"])
        assert sliced_first == sliced_again, "slice/drill order changed the grid"

        for name, text in ERRORS.items():
            status, raw = api.call("POST", "/query", {"q": text})
            assert status == 400, f"{name}: expected 400, got {status}"
            save(name, {"status": status, "body": json.loads(raw)})

        save("cubes_initial", json.loads(api.ok("GET", "/cubes")))
        built = json.loads(api.ok("POST", "/cubes/build",
                                  {"fact": "Yield", "policy": "full"}))
        save("cube_build", built)
        save("cubes_built", json.loads(api.ok("GET", "/cubes")))

        cubed = json.loads(api.query_bytes(QUERIES["q_crop_name"]))
        save("q_crop_name_cubed", cubed)
        assert cubed["provenance"]["source"] != "scan", "cube was not used"
        assert grids_close(grids["q_crop_name"], cubed), "cuboid answer differs from scan"

        delta_csv = unused_yield_rows(root, schema)
        status, raw = api.call("POST", "/ingest?table=Yield&partition=delta",
                               delta_csv.encode(), content_type="text/csv")
        assert status == 200, raw[:200]
        outcome = json.loads(raw)
        save("ingest_delta", outcome)
        assert outcome["load"]["inserted"] == 3, outcome["load"]

        with_delta = json.loads(api.query_bytes(QUERIES["q_crop_name"]))
        save("q_crop_name_delta", with_delta)
        assert with_delta["provenance"]["delta_rows_scanned"] == 3
        assert not grids_close(grids["q_crop_name"], with_delta), \
            "delta rows did not change the grid"

        merged = json.loads(api.ok("POST", "/cubes/merge-delta", {"fact": "Yield"}))
        save("merge_delta", merged)
        assert merged["absorbed"] == 3, merged

        after_merge = json.loads(api.query_bytes(QUERIES["q_crop_name"]))
        save("q_crop_name_merged", after_merge)
        assert after_merge["provenance"]["delta_rows_scanned"] == 0
        assert grids_close(with_delta, after_merge), "merge changed query content"

        save("quality", json.loads(api.ok("GET", "/quality")))

        # a concrete slice value for the row-header click test
        slice_value = grids["q_crop_name"]["rows"][2][0]
        sliced_q = (f'from Yield group by Crop.name where Crop.name = "{slice_value}"'
                    " measure quantity_t, row_count")
        save("q_crop_name_row_sliced", json.loads(api.query_bytes(sliced_q)))

        manifest = {
            "dataset": CONFIG,
            "queries": {text: f"{name}.json" for name, text in QUERIES.items()},
            "extra_queries": {sliced_q: "q_crop_name_row_sliced.json"},
            "errors": {ERRORS[name]: f"{name}.json" for name in ERRORS},
            "slice_value": slice_value,
            "post_ingest": {
                QUERIES["q_crop_name"]: ["q_crop_name_cubed.json",
                                         "q_crop_name_delta.json",
                                         "q_crop_name_merged.json"],
            },
            "files": written,
        }
        (FIXTURES / "manifest.json").write_text(json.dumps(manifest, indent=1) + "\n")
        print(f"captured {len(written) + 1} fixtures into {FIXTURES}")
        return 0
    finally:
        server.terminate()
        server.wait(timeout=10)


if __name__ == "__main__":
    sys.exit(main())
