"""Command-line entry point.

Exit codes: 0 success, 1 user error (bad arguments, parse failures, missing
files), 2 data errors (a load rejected or quarantined rows under --strict).
Results go to stdout, diagnostics to stderr. The default output format is
an aligned table on a terminal and CSV when piped; ``--format json`` emits
machine form, and for ``query`` those bytes equal the HTTP /query body for
the same store state.
"""

import csv
import json
import sys
from dataclasses import dataclass
from datetime import date
from pathlib import Path
from typing import Optional

import click

from .datagen import GenConfig, generate
from .engine import Engine, IngestOutcome
from .errors import AgrodwError
from .etl import write_quarantine
from .levels import csv_value
from .olap import Query, compile_query, drill_down, grid_to_json_bytes, roll_up
from .olap import slice as slice_query
from .schema import builtin_schema, load_schema, validate_schema

EXIT_OK, EXIT_USER, EXIT_DATA = 0, 1, 2


class DataError(Exception):
    """Load produced rejects/quarantine while --strict is active."""


@dataclass
class CliConfig:
    store: Optional[Path]
    schema_src: str
    fmt: Optional[str]
    strict: bool

    def format(self) -> str:
        if self.fmt:
            return self.fmt
        return "table" if sys.stdout.isatty() else "csv"


def _schema_of(cfg: CliConfig):
    if cfg.schema_src == "builtin":
        return builtin_schema()
    return load_schema(Path(cfg.schema_src).read_text(encoding="utf-8"))


def _engine_of(cfg: CliConfig) -> Engine:
    """Open the store directory when it holds a warehouse, else start empty."""
    if cfg.store and (cfg.store / "schema.txt").is_file():
        return Engine.open(cfg.store)
    return Engine.create(_schema_of(cfg))


def _persist(cfg: CliConfig, engine: Engine) -> None:
    if cfg.store:
        engine.save(cfg.store)


# -- output helpers ----------------------------------------------------------


def _align(headers: list[str], rows: list[list[str]]) -> str:
    widths = [len(h) for h in headers]
    for row in rows:
        for i, cell in enumerate(row):
            widths[i] = max(widths[i], len(cell))
    def line(cells):
        return "  ".join(c.ljust(w) for c, w in zip(cells, widths)).rstrip()
    out = [line(headers), line(["-" * w for w in widths])]
    out.extend(line(r) for r in rows)
    return "\n".join(out)


def _emit_rows(headers: list[str], rows: list[list[str]], fmt: str) -> None:
    if fmt == "csv":
        writer = csv.writer(sys.stdout, lineterminator="\n")
        writer.writerow(headers)
        writer.writerows(rows)
    else:
        click.echo(_align(headers, rows))


def _grid_rows(grid) -> tuple[list[str], list[list[str]]]:
    """Long form: one line per populated cell, axes then measures."""
    headers = [str(e) for e in grid.row_axes] + [str(e) for e in grid.col_axes]
    headers += list(grid.measures)
    rows = []
    for (r, c), values in sorted(grid.cells.items()):
        cells = [csv_value(v) for v in grid.rows[r] + grid.cols[c]]
        cells += [csv_value(values.get(m)) for m in grid.measures]
        rows.append(cells)
    return headers, rows


def _grid_crosstab(grid) -> tuple[list[str], list[list[str]]]:
    """Wide form: one line per row header, one column per (col, measure)."""
    left = [str(e) for e in grid.row_axes]
    cols = []
    for ci, ch in enumerate(grid.cols):
        prefix = "/".join(csv_value(v) for v in ch)
        for m in grid.measures:
            cols.append((ci, m, f"{prefix}:{m}" if prefix else m))
    rows = []
    for ri, rh in enumerate(grid.rows):
        line = [csv_value(v) for v in rh]
        for ci, m, _ in cols:
            values = grid.cell(ri, ci)
            line.append("" if values is None else csv_value(values.get(m)))
        rows.append(line)
    return left + [label for _, _, label in cols], rows


def _print_grid(grid, fmt: str) -> None:
    if fmt == "json":
        sys.stdout.buffer.write(grid_to_json_bytes(grid))
        sys.stdout.buffer.flush()
        if sys.stdout.isatty():
            sys.stderr.write("\n")
        return
    if fmt == "table":
        headers, rows = _grid_crosstab(grid)
    else:
        headers, rows = _grid_rows(grid)
    _emit_rows(headers, rows, fmt)


def _print_json(payload) -> None:
    click.echo(json.dumps(payload, indent=2, sort_keys=True))


# -- command tree ------------------------------------------------------------


@click.group(name="agrodw")
@click.option("--store", type=click.Path(path_type=Path), default=None,
              help="Warehouse directory (created by gen/load/save).")
@click.option("--schema", "schema_src", default="builtin", show_default=True,
              help="Schema source: 'builtin' or a schema text file.")
@click.option("--format", "fmt", type=click.Choice(["table", "csv", "json"]),
              default=None, help="Output format (default: table on tty, else csv).")
@click.option("--strict", is_flag=True, help="Exit 2 when a load rejects rows.")
@click.pass_context
def cli(ctx, store, schema_src, fmt, strict):
    """Embedded hybrid-OLAP warehouse for farm production data."""
    ctx.obj = CliConfig(store=store, schema_src=schema_src, fmt=fmt, strict=strict)


@cli.group()
def schema():
    """Inspect or validate the active schema."""


@schema.command("show")
@click.pass_obj
def schema_show(cfg: CliConfig):
    """Print fact and dimension tables of the schema."""
    sch = _engine_of(cfg).schema
    fmt = cfg.format()
    if fmt == "json":
        from .server.models import schema_response
        _print_json(schema_response(sch).model_dump(exclude_none=True))
        return
    rows = []
    for f in sch.facts.values():
        measures = ", ".join(m.name for m in f.measures)
        rows.append(["fact", f.name, ", ".join(f.dimensions), measures])
    for d in sch.dimensions.values():
        levels = "; ".join(f"{h.name}: {' > '.join(h.levels)}" for h in d.hierarchies)
        rows.append(["dimension", d.name, f"key={d.key}, {len(d.attributes)} attrs", levels])
    click.echo(f"schema {sch.name}: {len(sch.facts)} facts, {len(sch.dimensions)} dimensions")
    _emit_rows(["kind", "name", "structure", "detail"], rows, fmt)


@schema.command("validate")
@click.pass_obj
def schema_validate(cfg: CliConfig):
    """Check structural invariants; nonzero findings exit 1."""
    sch = _engine_of(cfg).schema
    report = validate_schema(sch)
    fmt = cfg.format()
    if fmt == "json":
        _print_json({
            "findings": [
                {"severity": f.severity, "table": f.table, "attribute": f.attribute,
                 "rule": f.rule_id, "message": f.message}
                for f in report.findings
            ]
        })
    else:
        rows = [[f.severity, f.table, f.attribute, f.rule_id, f.message]
                for f in report.findings]
        click.echo(f"{len(report.findings)} findings")
        if rows:
            _emit_rows(["severity", "table", "attribute", "rule", "message"], rows, fmt)
    if report.findings:
        raise click.exceptions.Exit(EXIT_USER)


@cli.command("load")
@click.option("--table", required=True, help="Target fact or dimension table.")
@click.option("--input", "input_path", required=True, type=click.Path(path_type=Path),
              help="CSV file to ingest.")
@click.option("--partition", type=click.Choice(["base", "delta"]), default="base",
              show_default=True, help="Fact partition (ignored for dimensions).")
@click.pass_obj
def load_cmd(cfg: CliConfig, table, input_path, partition):
    """Ingest one CSV through extract, transform and load."""
    engine = _engine_of(cfg)
    text = input_path.read_text(encoding="utf-8")
    outcome = engine.ingest(table, text, partition=partition)
    _persist(cfg, engine)
    if outcome.quarantine:
        qpath = write_quarantine(input_path.parent, table, outcome.header, outcome.quarantine)
        click.echo(f"quarantined {len(outcome.quarantine)} rows -> {qpath}", err=True)
    _report_outcome(outcome, cfg.format())
    if cfg.strict and not outcome.clean:
        raise DataError(f"{outcome.rejected + outcome.quarantined} rows failed")


def _report_outcome(outcome: IngestOutcome, fmt: str) -> None:
    payload = outcome.to_json_dict()
    if fmt == "json":
        _print_json(payload)
        return
    block = payload["load"]
    rows = [[k, str(block[k])] for k in
            ("input", "inserted", "rejected", "quarantined", "merged_duplicates")]
    rows += [[f"reason {k}", str(v)] for k, v in block["reasons"].items()]
    _emit_rows(["metric", "value"], rows, fmt)


@cli.command("quality")
@click.pass_obj
def quality_cmd(cfg: CliConfig):
    """Score completeness, referential integrity, duplicates, consistency, timeliness."""
    report = _engine_of(cfg).quality()
    fmt = cfg.format()
    if fmt == "json":
        _print_json(report.to_json_dict())
        return
    rows = []
    for name, t in report.tables.items():
        rows.append([name, f"{t.completeness:.6g}", f"{t.referential_integrity:.6g}",
                     str(t.duplicates), f"{t.consistency:.6g}", f"{t.timeliness:.6g}"])
    _emit_rows(
        ["table", "completeness", "referential_integrity", "duplicates",
         "consistency", "timeliness"], rows, fmt)


@cli.group()
def cube():
    """Build, inspect, merge and export pre-aggregated cuboids."""


@cube.command("build")
@click.option("--fact", required=True)
@click.option("--policy", default="full", show_default=True,
              help="Materialization policy: full or cap:N.")
@click.pass_obj
def cube_build(cfg: CliConfig, fact, policy):
    """Materialize the cuboid lattice for one fact."""
    engine = _engine_of(cfg)
    engine.build_cubes(fact, policy=policy)
    info = next(c for c in engine.cubes_info() if c["fact"] == fact)
    fmt = cfg.format()
    if fmt == "json":
        _print_json(info)
    else:
        _emit_rows(["field", "value"], [[k, str(v)] for k, v in info.items()], fmt)


@cube.command("list")
@click.option("--fact", required=True)
@click.option("--policy", default="full", show_default=True)
@click.pass_obj
def cube_list(cfg: CliConfig, fact, policy):
    """Show the cuboid lattice plan for a fact under a policy."""
    from .cube import plan_lattice

    engine = _engine_of(cfg)
    plan = plan_lattice(fact, engine.schema, engine.store.snapshot(), policy)
    fmt = cfg.format()
    if fmt == "json":
        _print_json({
            "fact": fact, "policy": policy,
            "candidates": [str(c) for c in plan.candidates],
            "skipped": [{"cuboid": str(c), "estimate": est} for c, est in plan.skipped],
        })
        return
    rows = [[str(c), "build", ""] for c in plan.candidates]
    rows += [[str(c), "skipped", str(est)] for c, est in plan.skipped]
    _emit_rows(["cuboid", "status", "estimate"], rows, fmt)


@cube.command("merge-delta")
@click.option("--fact", required=True)
@click.pass_obj
def cube_merge(cfg: CliConfig, fact):
    """Absorb a fact's delta partition into base."""
    engine = _engine_of(cfg)
    absorbed = engine.merge_delta(fact)
    _persist(cfg, engine)
    if cfg.format() == "json":
        _print_json({"fact": fact, "absorbed": absorbed})
    else:
        click.echo(f"absorbed {absorbed} delta rows into {fact} base")


@cube.command("export")
@click.option("--fact", required=True)
@click.option("--policy", default="full", show_default=True)
@click.option("--out", "out_dir", required=True, type=click.Path(path_type=Path),
              help="Directory for cuboid CSV files.")
@click.pass_obj
def cube_export(cfg: CliConfig, fact, policy, out_dir):
    """Build the lattice and write one canonical CSV per cuboid."""
    engine = _engine_of(cfg)
    engine.build_cubes(fact, policy=policy)
    paths = engine.export_cube(fact, out_dir)
    for p in paths:
        click.echo(str(p))


@cli.command("query")
@click.argument("text")
@click.pass_obj
def query_cmd(cfg: CliConfig, text):
    """Execute one query; see README for the grammar."""
    engine = _engine_of(cfg)
    _print_grid(engine.query(text), cfg.format())


@cli.command("gen")
@click.option("--seed", type=click.IntRange(0, 2**64 - 1), default=None,
              help="PRNG seed (default 42).")
@click.option("--out", "out_dir", type=click.Path(path_type=Path), default=None,
              help="Output directory (defaults to --store).")
@click.pass_obj
def gen_cmd(cfg: CliConfig, seed, out_dir):
    """Generate a seeded synthetic dataset in store layout."""
    target = out_dir or cfg.store
    if target is None:
        raise click.UsageError("gen needs --out or --store")
    config = GenConfig() if seed is None else GenConfig(seed=seed)
    root = generate(config, target)
    manifest = json.loads((root / "manifest.json").read_text(encoding="utf-8"))
    if cfg.format() == "json":
        _print_json(manifest)
    else:
        rows = [[k, str(v)] for k, v in sorted(manifest["tables"].items())]
        _emit_rows(["table", "rows"], rows, cfg.format())


@cli.command("serve")
@click.option("--port", type=int, default=8765, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.pass_obj
def serve_cmd(cfg: CliConfig, port, host):
    """Serve the HTTP API until interrupted; persists the store on exit."""
    from .server import serve

    engine = _engine_of(cfg)
    try:
        serve(engine, host=host, port=port)
    finally:
        _persist(cfg, engine)


# -- repl --------------------------------------------------------------------


def _parse_literal(text: str):
    text = text.strip()
    if len(text) >= 2 and text[0] == '"' and text[-1] == '"':
        return text[1:-1]
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        pass
    try:
        return date.fromisoformat(text)
    except ValueError:
        return text


_REPL_HELP = """\
enter a query, or:
  :up <Dim>             roll up one level (or remove the dimension)
  :down <Dim>           drill down one level (or add the dimension)
  :slice <Dim.attr> <v> add an equality filter
  :show                 reprint the current query and grid
  :help                 this text
  :quit                 leave"""


@cli.command("repl")
@click.pass_obj
def repl_cmd(cfg: CliConfig):
    """Interactive query loop with roll-up/drill-down shortcuts."""
    engine = _engine_of(cfg)
    fmt = "table" if cfg.fmt is None else cfg.fmt
    current: Optional[Query] = None
    interactive = sys.stdin.isatty()
    if interactive:
        click.echo(_REPL_HELP, err=True)
    while True:
        try:
            line = input("agrodw> " if interactive else "").strip()
        except EOFError:
            return
        except KeyboardInterrupt:
            return
        if not line:
            continue
        try:
            if line in (":quit", ":q", ":exit"):
                return
            if line == ":help":
                click.echo(_REPL_HELP, err=True)
                continue
            current = _repl_step(engine, current, line, fmt)
        except AgrodwError as exc:
            click.echo(f"error: {exc}", err=True)
        except (click.UsageError, ValueError) as exc:
            click.echo(f"error: {exc}", err=True)


def _repl_step(engine: Engine, current: Optional[Query], line: str, fmt: str):
    schema = engine.schema
    if line.startswith(":"):
        parts = line.split(None, 2)
        op = parts[0]
        if op in (":up", ":down"):
            if current is None:
                raise click.UsageError("no active query; enter one first")
            if len(parts) != 2:
                raise click.UsageError(f"usage: {op} <Dimension>")
            fn = roll_up if op == ":up" else drill_down
            current = fn(current, parts[1], schema)
        elif op == ":slice":
            if current is None:
                raise click.UsageError("no active query; enter one first")
            if len(parts) != 3:
                raise click.UsageError('usage: :slice <Dim.attr> <value>')
            current = slice_query(current, parts[1], _parse_literal(parts[2]), schema)
        elif op == ":show":
            if current is None:
                raise click.UsageError("no active query; enter one first")
        else:
            raise click.UsageError(f"unknown command {op}; :help lists commands")
    else:
        current = compile_query(line, schema)
    click.echo(current.text(), err=True)
    _print_grid(engine.query(current), fmt)
    return current


def main(argv=None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
        return EXIT_OK
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.ClickException as exc:
        exc.show(file=sys.stderr)
        return EXIT_USER
    except click.Abort:
        click.echo("aborted", err=True)
        return EXIT_USER
    except DataError as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_DATA
    except AgrodwError as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_USER
    except OSError as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_USER


if __name__ == "__main__":
    sys.exit(main())
