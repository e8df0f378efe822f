"""Command-line front end: ``aplus [--vertices v.csv --edges e.csv] [--script f]``.

Without ``--script`` an interactive prompt reads commands; a command ends at
``;`` or at the end of a line that parses completely.  Exit codes: 0 ok, 1 user
error (bad command, unknown name, invalid index ...), 2 internal error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time

from . import __version__
from .ddl import parse_script
from .errors import APlusError, InvalidConfig, ParseError, UnknownIndex
from .fixtures import financial_fixture
from .graph import PropertyCatalog, PropertyGraph, load_csv
from .maintenance import Database
from .optimizer import Optimizer
from .query import PreparedQuery, run_plan, Stats


class Session:
    """One in-memory database and the commands run against it."""

    def __init__(self, db: Database | None = None, output="json", out=None, timings=True):
        self.db = db or Database(PropertyGraph(PropertyCatalog()))
        self.output = output
        self.out = out if out is not None else sys.stdout
        self.timings = timings

    def emit(self, obj):
        if isinstance(obj, str):
            self.out.write(obj + "\n")
        else:
            self.out.write(json.dumps(obj, sort_keys=False) + "\n")

    def _seconds(self, payload, key, value):
        if self.timings:
            payload[key] = round(value, 6)
        return payload

    def run_text(self, text: str):
        for cmd in parse_script(text):
            self.run(cmd)

    def run(self, cmd):
        handler = getattr(self, "_do_" + cmd.kind.value.lower())
        handler(cmd)

    # -- handlers --------------------------------------------------------------------
    def _plan(self, cmd):
        prepared = PreparedQuery(cmd.query, self.db.graph, self.db.params)
        return Optimizer(prepared, self.db.store).optimize()

    def _do_match_query(self, cmd):
        started = time.perf_counter()
        plan = self._plan(cmd)
        stats = Stats()
        graph = self.db.graph
        names = list(cmd.query.vertices) + [e for e in cmd.query.edges if not e.startswith("_")]
        writer = None
        if self.output == "csv":
            buf = io.StringIO()
            writer = csv.writer(buf, lineterminator="\n")
            writer.writerow(names)
            self.out.write(buf.getvalue())
        for m in run_plan(plan, stats):
            row = {}
            for n in names:
                if n in cmd.query.vertices:
                    label = graph.vertex_name(m[n])
                else:
                    label = graph.edge_name(m[n])
                row[n] = label if label is not None else m[n]
            if writer is not None:
                buf = io.StringIO()
                csv.writer(buf, lineterminator="\n").writerow([row[n] for n in names])
                self.out.write(buf.getvalue())
            else:
                self.emit(row)
        block = stats.as_dict()
        block["icost"] = round(plan.cost, 6)
        self.emit({"stats": self._seconds(block, "seconds", time.perf_counter() - started)})

    def _do_explain(self, cmd):
        self.emit(self._plan(cmd).explain())

    def _do_create_1hop_view(self, cmd):
        self._create(cmd)

    def _do_create_2hop_view(self, cmd):
        self._create(cmd)

    def _create(self, cmd):
        started = time.perf_counter()
        view = self.db.create_view(cmd.config, cmd.name)
        payload = {"created": view.name, "indexes": [i.name for i in view.indexes]}
        self.emit(self._seconds(payload, "IC_seconds", time.perf_counter() - started))

    def _do_reconfigure_primary(self, cmd):
        seconds = self.db.reconfigure_primary(cmd.config)
        payload = {"reconfigured": [p.name for p in self.db.primaries.values()]}
        self.emit(self._seconds(payload, "IR_seconds", seconds))

    def _do_drop_index(self, cmd):
        db = self.db
        if cmd.name in db.views:
            db.drop_view(cmd.name)
        elif cmd.name in db.store:
            raise InvalidConfig(f"{cmd.name} is a primary index; use RECONFIGURE PRIMARY INDEXES")
        else:
            raise UnknownIndex(f"no view named {cmd.name!r}")
        self.emit({"dropped": cmd.name})

    def _do_stats(self, cmd):
        self.emit(self.db.stats())

    def _do_show_indexes(self, cmd):
        for d in self.db.store.descriptors():
            self.emit(d.as_dict())

    def _do_flush(self, cmd):
        report = self.db.flush(cmd.name, cmd.page)
        out = report.as_dict()
        if not self.timings:
            out.pop("seconds")
        self.emit({"flush": out})

    def _do_set(self, cmd):
        self.db.set_param(cmd.name, cmd.value)
        self.emit({"set": cmd.name, "value": cmd.value})

    def _do_export(self, cmd):
        vfile, efile = cmd.paths
        self.db.graph.export_csv(vfile, efile)
        self.emit({"exported": [vfile, efile]})

    def _do_load(self, cmd):
        schema = cmd.paths[2] if len(cmd.paths) > 2 else None
        graph, report = load_csv(cmd.paths[0], cmd.paths[1], schema)
        self.db.close()
        self.db = Database(graph)
        self.emit({"loaded": report.as_dict()})


def _report_error(exc, err):
    err.write(f"error: {type(exc).__name__}: {exc}\n")


def _run_chunk(session, text, err) -> int:
    try:
        commands = parse_script(text)
    except ParseError as exc:
        _report_error(exc, err)
        return 1
    status = 0
    for cmd in commands:
        try:
            session.run(cmd)
        except APlusError as exc:
            _report_error(exc, err)
            status = 1
    return status


def repl(session: Session, stdin, err) -> int:
    """Read commands until EOF; a command ends at ``;`` or a blank line.
    Errors are reported and the loop continues."""
    interactive = stdin.isatty()
    if not interactive:
        return _run_chunk(session, stdin.read(), err)
    pending = ""
    status = 0
    while True:
        err.write("aplus> " if not pending else "  ...> ")
        err.flush()
        line = stdin.readline()
        if not line:
            break
        if line.strip().lower() in ("quit", "exit", "\\q") and not pending:
            break
        pending += line
        if line.strip() and not line.rstrip().endswith(";"):
            continue
        if pending.strip():
            status = max(status, _run_chunk(session, pending, err))
        pending = ""
    if pending.strip():
        status = max(status, _run_chunk(session, pending, err))
    return status


def build_parser():
    ap = argparse.ArgumentParser(prog="aplus", description="In-memory property graph engine with A+ indexes")
    ap.add_argument("--vertices", help="vertex CSV file")
    ap.add_argument("--edges", help="edge CSV file")
    ap.add_argument("--schema", help="JSON property schema")
    ap.add_argument("--fixture", choices=["financial"], help="start from a built-in example graph")
    ap.add_argument("--script", help="run the commands in this file and exit")
    ap.add_argument("--output", choices=["json", "csv"], default="json", help="match output format")
    ap.add_argument("--no-timings", action="store_true", help="omit timings (for reproducible transcripts)")
    ap.add_argument("--version", action="version", version=f"aplus {__version__}")
    return ap


def main(argv=None, stdin=None, stdout=None, stderr=None) -> int:
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    args = build_parser().parse_args(argv)
    try:
        if args.vertices or args.edges:
            if not (args.vertices and args.edges):
                raise APlusError("--vertices and --edges go together")
            graph, report = load_csv(args.vertices, args.edges, args.schema)
            if report.rejected:
                stderr.write(f"warning: {len(report.rejected)} rejected rows\n")
        elif args.fixture:
            graph = financial_fixture(with_owns=True)
        else:
            catalog = PropertyCatalog.from_json(args.schema) if args.schema else PropertyCatalog()
            graph = PropertyGraph(catalog)
        session = Session(Database(graph), args.output, stdout, timings=not args.no_timings)
        if args.script:
            with open(args.script, encoding="utf-8") as fh:
                text = fh.read()
            session.run_text(text)
            return 0
        return repl(session, stdin, stderr)
    except (APlusError, OSError) as exc:
        _report_error(exc, stderr)
        return 1
    except Exception as exc:  # pragma: no cover - internal failure
        stderr.write(f"internal error: {type(exc).__name__}: {exc}\n")
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
