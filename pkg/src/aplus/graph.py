"""In-memory property graph: vertex/edge records, label catalogs, typed
properties and CSV import/export.

Vertex and edge IDs are dense integers handed out in insertion order.
Deleted edges keep their record (and ID) so index maintenance can still read
their endpoints and properties; IDs are never reused.
"""
from __future__ import annotations

import csv
import datetime as _dt
import json
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from .errors import (
    ParseError,
    PropertyKindMismatch,
    SchemaMismatch,
    UnknownEdge,
    UnknownId,
    UnknownLabel,
    UnknownProperty,
    UnknownVertex,
    UnsupportedOperation,
)

MAX_VERTICES = 2**32  # neighbour IDs are stored as 4-byte integers
_EPOCH = _dt.date(1970, 1, 1)


class PropertyKind(str, Enum):
    CATEGORICAL = "categorical"
    INT64 = "int64"
    FLOAT64 = "float64"


class Attachment(str, Enum):
    VERTEX = "vertex"
    EDGE = "edge"


@dataclass
class PropertyDef:
    """One catalog entry. Categorical properties carry their code table."""

    name: str
    kind: PropertyKind
    on: Attachment
    is_date: bool = False
    codes: list = field(default_factory=list)
    _lookup: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def keyspace(self) -> int:
        return len(self.codes)

    def intern(self, symbol) -> int:
        symbol = str(symbol)
        code = self._lookup.get(symbol)
        if code is None:
            code = len(self.codes)
            self.codes.append(symbol)
            self._lookup[symbol] = code
        return code

    def code(self, symbol):
        """Code of ``symbol`` or None when it was never interned."""
        return self._lookup.get(str(symbol))

    def symbol(self, code) -> str:
        return self.codes[code]

    def to_json(self) -> dict:
        out = {"kind": "date" if self.is_date else self.kind.value, "on": self.on.value}
        if self.kind is PropertyKind.CATEGORICAL and self.codes:
            out["values"] = list(self.codes)
        return out


RESERVED = frozenset({"ID", "eID", "label"})


class PropertyCatalog:
    """Names, kinds and attachments of all properties plus both label tables.

    Property names are global: one name has exactly one kind and attachment.
    """

    def __init__(self):
        self.vertex_labels = PropertyDef("label", PropertyKind.CATEGORICAL, Attachment.VERTEX)
        self.edge_labels = PropertyDef("label", PropertyKind.CATEGORICAL, Attachment.EDGE)
        self.properties: dict[str, PropertyDef] = {}

    def define(self, name, kind, on, values=()):
        if name in RESERVED:
            raise SchemaMismatch(f"property name {name!r} is reserved")
        on = Attachment(on)
        is_date = kind == "date"
        kind = PropertyKind.INT64 if is_date else PropertyKind(kind)
        existing = self.properties.get(name)
        if existing is not None:
            if existing.kind is not kind or existing.on is not on:
                raise SchemaMismatch(
                    f"property {name!r} already defined as {existing.kind.value} on {existing.on.value}"
                )
            defn = existing
        else:
            defn = PropertyDef(name, kind, on, is_date=is_date)
            self.properties[name] = defn
        for v in values:
            defn.intern(v)
        return defn

    def add_label(self, on, name) -> int:
        return self.labels(on).intern(name)

    def labels(self, on) -> PropertyDef:
        return self.vertex_labels if Attachment(on) is Attachment.VERTEX else self.edge_labels

    def lookup(self, name, on) -> PropertyDef:
        """Definition of ``name`` on the given entity kind (``label`` included)."""
        on = Attachment(on)
        if name == "label":
            return self.labels(on)
        defn = self.properties.get(name)
        if defn is None or defn.on is not on:
            raise UnknownProperty(f"no {on.value} property named {name!r}")
        return defn

    def has(self, name, on) -> bool:
        try:
            self.lookup(name, on)
        except UnknownProperty:
            return False
        return True

    def names(self, on):
        on = Attachment(on)
        return [n for n, d in self.properties.items() if d.on is on]

    # -- (de)serialisation -------------------------------------------------
    def to_json(self) -> dict:
        return {
            "vertex_labels": list(self.vertex_labels.codes),
            "edge_labels": list(self.edge_labels.codes),
            "properties": {n: d.to_json() for n, d in self.properties.items()},
        }

    @classmethod
    def from_json(cls, data) -> "PropertyCatalog":
        if isinstance(data, (str, Path)):
            data = json.loads(Path(data).read_text())
        cat = cls()
        for name in data.get("vertex_labels", ()):
            cat.vertex_labels.intern(name)
        for name in data.get("edge_labels", ()):
            cat.edge_labels.intern(name)
        for name, entry in data.get("properties", {}).items():
            if isinstance(entry, str):
                raise SchemaMismatch(f"property {name!r}: expected an object with 'kind' and 'on'")
            try:
                cat.define(name, entry["kind"], entry["on"], entry.get("values", ()))
            except (KeyError, ValueError) as exc:
                raise SchemaMismatch(f"bad definition for property {name!r}: {exc}") from None
        return cat


@dataclass(frozen=True)
class EdgeRecord:
    id: int
    src: int
    dst: int
    label: int
    properties: dict


@dataclass
class LoadReport:
    vertices: int = 0
    edges: int = 0
    rejected: list = field(default_factory=list)

    def as_dict(self):
        return {"vertices": self.vertices, "edges": self.edges, "rejected": list(self.rejected)}


def date_to_days(value) -> int:
    if isinstance(value, _dt.datetime):
        value = value.date()
    return (value - _EPOCH).days


def days_to_date(days: int) -> _dt.date:
    return _EPOCH + _dt.timedelta(days=int(days))


def _coerce(defn: PropertyDef, value):
    if value is None:
        return None
    if isinstance(value, np.generic):
        value = value.item()
    kind = defn.kind
    if kind is PropertyKind.CATEGORICAL:
        if isinstance(value, str):
            return defn.intern(value)
        if isinstance(value, int) and not isinstance(value, bool) and value >= 0:
            while defn.keyspace <= value:
                defn.intern(str(defn.keyspace))
            return value
    elif kind is PropertyKind.INT64:
        if defn.is_date and isinstance(value, _dt.date):
            return date_to_days(value)
        if isinstance(value, int) and not isinstance(value, bool):
            return value
    else:
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            value = float(value)
            return None if math.isnan(value) else value
    raise PropertyKindMismatch(
        f"property {defn.name!r} is {kind.value}; got {type(value).__name__} {value!r}"
    )


class PropertyGraph:
    """Columnar property graph.

    Mutations notify registered listeners (index maintenance hooks) after the
    record is stored. Reads are safe from many threads; mutations need
    exclusive access to the whole store.
    """

    def __init__(self, catalog: PropertyCatalog | None = None):
        self.catalog = catalog if catalog is not None else PropertyCatalog()
        self._v_label: list[int] = []
        self._v_props: dict[str, list] = {}
        self._v_names: list = []
        self._v_by_name: dict = {}
        self._e_src: list[int] = []
        self._e_dst: list[int] = []
        self._e_label: list[int] = []
        self._e_props: dict[str, list] = {}
        self._e_alive: list[bool] = []
        self._e_names: list = []
        self._e_by_name: dict = {}
        self._out: list[list[int]] = []
        self._in: list[list[int]] = []
        self._live_edges = 0
        self.version = 0
        self._cache: dict = {}
        self.listeners: list = []

    # -- sizes --------------------------------------------------------------
    @property
    def num_vertices(self) -> int:
        return len(self._v_label)

    @property
    def num_edges(self) -> int:
        """Number of live (non-deleted) edges."""
        return self._live_edges

    @property
    def edge_capacity(self) -> int:
        """Number of edge IDs handed out so far, deleted ones included."""
        return len(self._e_src)

    # -- mutation -------------------------------------------------------------
    def _label_code(self, on, label) -> int:
        table = self.catalog.labels(on)
        if isinstance(label, str):
            code = table.code(label)
        elif isinstance(label, (int, np.integer)) and not isinstance(label, bool):
            code = int(label) if 0 <= label < table.keyspace else None
        else:
            code = None
        if code is None:
            raise UnknownLabel(f"{Attachment(on).value} label {label!r} is not registered")
        return code

    def _props(self, on, properties):
        out = {}
        for name, value in (properties or {}).items():
            defn = self.catalog.lookup(name, on)
            if name == "label":
                raise PropertyKindMismatch("label is set through the label argument")
            out[name] = _coerce(defn, value)
        return out

    def add_vertex(self, label, properties=None, name=None) -> int:
        code = self._label_code(Attachment.VERTEX, label)
        props = self._props(Attachment.VERTEX, properties)
        if self.num_vertices >= MAX_VERTICES:
            raise UnsupportedOperation("vertex IDs are limited to 4 bytes")
        if name is not None and name in self._v_by_name:
            raise SchemaMismatch(f"duplicate vertex name {name!r}")
        vid = len(self._v_label)
        self._v_label.append(code)
        for pname in self.catalog.names(Attachment.VERTEX):
            col = self._v_props.get(pname)
            if col is None:
                col = self._v_props[pname] = [None] * vid
            col.append(props.get(pname))
        self._v_names.append(name)
        if name is not None:
            self._v_by_name[name] = vid
        self._out.append([])
        self._in.append([])
        self._touch()
        for listener in self.listeners:
            listener.on_vertex_added(vid)
        return vid

    def add_edge(self, src, dst, label, properties=None, name=None) -> int:
        for v in (src, dst):
            if not (isinstance(v, (int, np.integer)) and 0 <= v < self.num_vertices):
                raise UnknownVertex(f"vertex {v!r} does not exist")
        code = self._label_code(Attachment.EDGE, label)
        props = self._props(Attachment.EDGE, properties)
        if name is not None and name in self._e_by_name:
            raise SchemaMismatch(f"duplicate edge name {name!r}")
        eid = len(self._e_src)
        src, dst = int(src), int(dst)
        self._e_src.append(src)
        self._e_dst.append(dst)
        self._e_label.append(code)
        for pname in self.catalog.names(Attachment.EDGE):
            col = self._e_props.get(pname)
            if col is None:
                col = self._e_props[pname] = [None] * eid
            col.append(props.get(pname))
        self._e_alive.append(True)
        self._e_names.append(name)
        if name is not None:
            self._e_by_name[name] = eid
        self._out[src].append(eid)
        self._in[dst].append(eid)
        self._live_edges += 1
        self._touch()
        for listener in self.listeners:
            listener.on_edge_added(eid)
        return eid

    def delete_edge(self, eid) -> None:
        if not self.has_edge(eid):
            raise UnknownEdge(f"edge {eid!r} does not exist or is already deleted")
        self._e_alive[eid] = False
        self._out[self._e_src[eid]].remove(eid)
        self._in[self._e_dst[eid]].remove(eid)
        self._live_edges -= 1
        self._touch()
        for listener in self.listeners:
            listener.on_edge_deleted(eid)

    def delete_vertex(self, vid):
        raise UnsupportedOperation("vertex deletion is not supported")

    def _touch(self):
        self.version += 1

    # -- record access ------------------------------------------------------
    def has_vertex(self, vid) -> bool:
        return isinstance(vid, (int, np.integer)) and 0 <= vid < self.num_vertices

    def has_edge(self, eid) -> bool:
        return isinstance(eid, (int, np.integer)) and 0 <= eid < len(self._e_src) and self._e_alive[eid]

    def is_deleted(self, eid) -> bool:
        return not self._e_alive[eid]

    def src(self, eid) -> int:
        return self._e_src[eid]

    def dst(self, eid) -> int:
        return self._e_dst[eid]

    def edge_label(self, eid) -> int:
        return self._e_label[eid]

    def vertex_label(self, vid) -> int:
        return self._v_label[vid]

    def edge(self, eid) -> EdgeRecord:
        if not (isinstance(eid, (int, np.integer)) and 0 <= eid < len(self._e_src)):
            raise UnknownEdge(f"edge {eid!r} does not exist")
        props = {n: col[eid] for n, col in self._e_props.items() if col[eid] is not None}
        return EdgeRecord(int(eid), self._e_src[eid], self._e_dst[eid], self._e_label[eid], props)

    def vertex_properties(self, vid) -> dict:
        return {n: col[vid] for n, col in self._v_props.items() if col[vid] is not None}

    def out_edges(self, vid) -> list[int]:
        return self._out[vid]

    def in_edges(self, vid) -> list[int]:
        return self._in[vid]

    def edges(self):
        """Live edge IDs in ascending order."""
        return [e for e, alive in enumerate(self._e_alive) if alive]

    def vertex_value(self, vid, prop):
        if prop == "ID":
            return vid
        if prop == "label":
            return self._v_label[vid]
        col = self._v_props.get(prop)
        return None if col is None else col[vid]

    def edge_value(self, eid, prop):
        if prop == "eID":
            return eid
        if prop == "label":
            return self._e_label[eid]
        col = self._e_props.get(prop)
        return None if col is None else col[eid]

    def get_property(self, kind, id, name):
        """Typed read; unset properties read as None (Null)."""
        kind = Attachment(kind)
        if kind is Attachment.VERTEX:
            if not self.has_vertex(id):
                raise UnknownId(f"vertex {id!r} does not exist")
            if name != "ID":
                self.catalog.lookup(name, kind)
            return self.vertex_value(id, name)
        if not (isinstance(id, (int, np.integer)) and 0 <= id < len(self._e_src)):
            raise UnknownId(f"edge {id!r} does not exist")
        if name != "eID":
            self.catalog.lookup(name, kind)
        return self.edge_value(id, name)

    # -- names ----------------------------------------------------------------
    def vertex_name(self, vid):
        return self._v_names[vid]

    def edge_name(self, eid):
        return self._e_names[eid]

    def vertex_id(self, name) -> int:
        if name in self._v_by_name:
            return self._v_by_name[name]
        raise UnknownVertex(f"no vertex named {name!r}")

    def edge_id(self, name) -> int:
        if name in self._e_by_name:
            return self._e_by_name[name]
        raise UnknownEdge(f"no edge named {name!r}")

    # -- columnar views (cached per version) ----------------------------------
    def vertex_column(self, prop):
        """``(values: float64[N], null: bool[N])`` for a vertex property."""
        return self._column("v", prop)

    def edge_column(self, prop):
        """``(values: float64[M], null: bool[M])`` over all edge IDs."""
        return self._column("e", prop)

    def _column(self, which, prop):
        key = (which, prop)
        hit = self._cache.get(key)
        if hit is not None and hit[0] == self.version:
            return hit[1], hit[2]
        if which == "v":
            n = self.num_vertices
            if prop == "ID":
                raw = range(n)
            elif prop == "label":
                raw = self._v_label
            else:
                raw = self._v_props.get(prop, [None] * n)
        else:
            n = len(self._e_src)
            if prop == "eID":
                raw = range(n)
            elif prop == "label":
                raw = self._e_label
            else:
                raw = self._e_props.get(prop, [None] * n)
        null = np.fromiter((x is None for x in raw), dtype=bool, count=n)
        values = np.fromiter((0.0 if x is None else x for x in raw), dtype=np.float64, count=n)
        self._cache[key] = (self.version, values, null)
        return values, null

    def edge_arrays(self):
        """``(src, dst, alive)`` numpy views over all edge IDs."""
        hit = self._cache.get("edges")
        if hit is not None and hit[0] == self.version:
            return hit[1]
        arrays = (
            np.asarray(self._e_src, dtype=np.int64),
            np.asarray(self._e_dst, dtype=np.int64),
            np.asarray(self._e_alive, dtype=bool),
        )
        self._cache["edges"] = (self.version, arrays)
        return arrays

    # -- CSV ------------------------------------------------------------------
    def load_csv(self, vertex_file, edge_file, schema=None) -> LoadReport:
        """Bulk-load vertices then edges.

        Rows with a wrong column count or unparsable values raise ParseError
        carrying the 1-based line number. Edges that reference unknown
        vertices are skipped and listed in ``report.rejected``.
        """
        if schema is not None:
            if not isinstance(schema, PropertyCatalog):
                schema = PropertyCatalog.from_json(schema)
            self._merge_catalog(schema)
        report = LoadReport()
        with open(vertex_file, newline="") as fh:
            rows = csv.reader(fh)
            header = next(rows, None)
            if header is not None:
                header = [h.strip() for h in header]
                if header[:2] != ["id", "label"]:
                    raise SchemaMismatch("vertex file header must start with id,label")
                defs = [self._column_def(h, Attachment.VERTEX) for h in header[2:]]
                for lineno, row in enumerate(rows, start=2):
                    if not row:
                        continue
                    if len(row) != len(header):
                        raise ParseError(f"expected {len(header)} columns, got {len(row)}", line=lineno)
                    name, label = row[0], row[1]
                    if label == "":
                        raise ParseError("missing vertex label", line=lineno)
                    self.catalog.add_label(Attachment.VERTEX, label)
                    props = {d.name: _parse_cell(d, c, lineno) for d, c in zip(defs, row[2:])}
                    if name in self._v_by_name:
                        raise ParseError(f"duplicate vertex id {name!r}", line=lineno)
                    self.add_vertex(label, props, name=name)
                    report.vertices += 1
        with open(edge_file, newline="") as fh:
            rows = csv.reader(fh)
            header = next(rows, None)
            if header is not None:
                header = [h.strip() for h in header]
                named = header[:1] == ["id"]
                fixed = ["id", "src", "dst", "label"] if named else ["src", "dst", "label"]
                if header[: len(fixed)] != fixed:
                    raise SchemaMismatch("edge file header must start with src,dst,label")
                defs = [self._column_def(h, Attachment.EDGE) for h in header[len(fixed):]]
                for lineno, row in enumerate(rows, start=2):
                    if not row:
                        continue
                    if len(row) != len(header):
                        raise ParseError(f"expected {len(header)} columns, got {len(row)}", line=lineno)
                    if named:
                        name, row = row[0] or None, row[1:]
                    else:
                        name = None
                    src_name, dst_name, label = row[0], row[1], row[2]
                    if label == "":
                        raise ParseError("missing edge label", line=lineno)
                    src = self._v_by_name.get(src_name)
                    dst = self._v_by_name.get(dst_name)
                    if src is None or dst is None:
                        report.rejected.append(lineno)
                        continue
                    self.catalog.add_label(Attachment.EDGE, label)
                    props = {d.name: _parse_cell(d, c, lineno) for d, c in zip(defs, row[3:])}
                    self.add_edge(src, dst, label, props, name=name)
                    report.edges += 1
        return report

    def _merge_catalog(self, other: PropertyCatalog):
        for name in other.vertex_labels.codes:
            self.catalog.vertex_labels.intern(name)
        for name in other.edge_labels.codes:
            self.catalog.edge_labels.intern(name)
        for name, d in other.properties.items():
            self.catalog.define(name, "date" if d.is_date else d.kind.value, d.on, d.codes)

    def _column_def(self, header, on) -> PropertyDef:
        try:
            return self.catalog.lookup(header, on)
        except UnknownProperty:
            raise SchemaMismatch(f"column {header!r} is not a {on.value} property in the schema") from None

    def export_csv(self, vertex_file, edge_file) -> None:
        """Write the live graph in the same CSV format ``load_csv`` reads."""
        vnames = self.catalog.names(Attachment.VERTEX)
        enames = self.catalog.names(Attachment.EDGE)

        def vkey(v):
            name = self._v_names[v]
            return str(v) if name is None else name

        with open(vertex_file, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["id", "label", *vnames])
            for v in range(self.num_vertices):
                w.writerow([
                    vkey(v),
                    self.catalog.vertex_labels.symbol(self._v_label[v]),
                    *(_format_cell(self.catalog.properties[n], self._v_props[n][v]) for n in vnames),
                ])
        named = any(self._e_names[e] is not None for e in self.edges())
        with open(edge_file, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow((["id"] if named else []) + ["src", "dst", "label", *enames])
            for e in self.edges():
                row = [
                    vkey(self._e_src[e]),
                    vkey(self._e_dst[e]),
                    self.catalog.edge_labels.symbol(self._e_label[e]),
                    *(_format_cell(self.catalog.properties[n], self._e_props[n][e]) for n in enames),
                ]
                if named:
                    row.insert(0, self._e_names[e] or "")
                w.writerow(row)


def _parse_cell(defn: PropertyDef, cell: str, lineno: int):
    if cell == "":
        return None
    try:
        if defn.kind is PropertyKind.CATEGORICAL:
            return defn.intern(cell)
        if defn.kind is PropertyKind.INT64:
            if defn.is_date and "-" in cell[1:]:
                return date_to_days(_dt.date.fromisoformat(cell))
            return int(cell)
        return float(cell)
    except ValueError:
        raise ParseError(f"cannot parse {cell!r} as {defn.kind.value} for {defn.name!r}", line=lineno) from None


def _format_cell(defn: PropertyDef, value) -> str:
    if value is None:
        return ""
    if defn.kind is PropertyKind.CATEGORICAL:
        return defn.symbol(value)
    if defn.is_date:
        return days_to_date(value).isoformat()
    return repr(value) if isinstance(value, float) else str(value)


def load_csv(vertex_file, edge_file, schema=None):
    """Create a graph from CSV files; returns ``(graph, report)``."""
    graph = PropertyGraph()
    report = graph.load_csv(vertex_file, edge_file, schema)
    return graph, report
