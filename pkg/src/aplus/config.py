"""Declarative index shapes and the conjunctive predicate language.

An :class:`IndexConfig` fixes the kind of an index, its direction, the nested
partitioning criteria below the vertex/edge-ID level, the leaf sort order and
(for secondary indexes) the view predicate.

Predicates are flat conjunctions of :class:`Atom`.  Atoms are written against
variable names (``e_adj``, ``v_nbr``, ``e_b`` ... for indexes, arbitrary query
variables for queries).  Constants stay symbolic (``'USD'``, ``'t13'``,
``alpha``) until :func:`resolve_predicate` turns them into numbers against a
concrete graph; subsumption and evaluation only ever see resolved atoms.
"""
from __future__ import annotations

import datetime as _dt
import operator
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .errors import (
    InvalidConfig,
    NonCategoricalPartitionKey,
    QueryError,
    SingleEdgePredicate,
    UnknownEdge,
    UnknownProperty,
    UnknownVertex,
)
from .graph import Attachment, PropertyCatalog, PropertyKind, date_to_days

MAX_PARTITION_LEVELS = 3


class Direction(str, Enum):
    FW = "FW"
    BW = "BW"
    FW_BW = "FW-BW"

    def expand(self):
        return (Direction.FW, Direction.BW) if self is Direction.FW_BW else (self,)

    @property
    def opposite(self) -> "Direction":
        return {Direction.FW: Direction.BW, Direction.BW: Direction.FW}[self]


class Subject(str, Enum):
    ADJ_EDGE = "e_adj"
    NBR_VERTEX = "v_nbr"

    @property
    def attachment(self) -> Attachment:
        return Attachment.EDGE if self is Subject.ADJ_EDGE else Attachment.VERTEX


@dataclass(frozen=True)
class PartitionKey:
    subject: Subject
    prop: str

    def __str__(self):
        return f"{self.subject.value}.{self.prop}"


@dataclass(frozen=True)
class SortKey:
    subject: Subject
    prop: str

    @property
    def is_nbr_id(self) -> bool:
        return self.subject is Subject.NBR_VERTEX and self.prop == "ID"

    def __str__(self):
        return f"{self.subject.value}.{self.prop}"


NBR_ID = SortKey(Subject.NBR_VERTEX, "ID")


class IndexKind(str, Enum):
    PRIMARY = "primary"
    VERTEX = "vertex"
    EDGE = "edge"


class EdgeAdjacencyKind(str, Enum):
    """Which neighbourhood of a bound edge ``e_b = (v_s, v_d)`` is indexed."""

    DEST_FW = "dest-fw"      # v_s-[e_b]->v_d-[e_adj]->v_nbr
    DEST_BW = "dest-bw"      # v_s-[e_b]->v_d<-[e_adj]-v_nbr
    SOURCE_FW = "source-fw"  # v_nbr-[e_adj]->v_s-[e_b]->v_d
    SOURCE_BW = "source-bw"  # v_nbr<-[e_adj]-v_s-[e_b]->v_d

    @property
    def pivot_is_dst(self) -> bool:
        """True when the shared vertex is e_b's destination."""
        return self in (EdgeAdjacencyKind.DEST_FW, EdgeAdjacencyKind.DEST_BW)

    @property
    def direction(self) -> Direction:
        """Direction of the primary list (owned by the pivot) the lists point into."""
        if self in (EdgeAdjacencyKind.DEST_FW, EdgeAdjacencyKind.SOURCE_BW):
            return Direction.FW
        return Direction.BW


# -- predicates -------------------------------------------------------------

OPS = {
    "=": operator.eq,
    "!=": operator.ne,
    "<": operator.lt,
    "<=": operator.le,
    ">": operator.gt,
    ">=": operator.ge,
}
_FLIP = {"=": "=", "!=": "!=", "<": ">", "<=": ">=", ">": "<", ">=": "<="}
_NP_OPS = {
    "=": np.equal,
    "!=": np.not_equal,
    "<": np.less,
    "<=": np.less_equal,
    ">": np.greater,
    ">=": np.greater_equal,
}


@dataclass(frozen=True, order=True)
class PropRef:
    var: str
    prop: str

    def __str__(self):
        return f"{self.var}.{self.prop}"


@dataclass(frozen=True)
class Param:
    """Named numeric parameter, optionally negated (``-alpha``)."""

    name: str
    negated: bool = False

    def __neg__(self):
        return Param(self.name, not self.negated)

    def __str__(self):
        return ("-" if self.negated else "") + self.name


@dataclass(frozen=True)
class Atom:
    """``lhs op rhs + offset``; ``rhs`` is a PropRef or a constant."""

    lhs: PropRef
    op: str
    rhs: object
    offset: object = 0

    def __post_init__(self):
        if self.op not in OPS:
            raise QueryError(f"unknown comparison {self.op!r}")

    @property
    def is_cross(self) -> bool:
        return isinstance(self.rhs, PropRef)

    def refs(self):
        return (self.lhs, self.rhs) if self.is_cross else (self.lhs,)

    def variables(self) -> frozenset:
        return frozenset(r.var for r in self.refs())

    def rename(self, mapping) -> "Atom":
        def ren(r):
            return PropRef(mapping.get(r.var, r.var), r.prop) if isinstance(r, PropRef) else r

        return replace(self, lhs=ren(self.lhs), rhs=ren(self.rhs))

    def canonical(self) -> "Atom":
        """Orders the two sides of a resolved cross atom deterministically."""
        if self.is_cross and self.rhs < self.lhs:
            off = self.offset
            return Atom(self.rhs, _FLIP[self.op], self.lhs, -off if off else 0)
        return self

    def __str__(self):
        rhs = _const_str(self.rhs)
        if self.offset:
            off = self.offset
            if isinstance(off, Param):
                rhs += f" - {off.name}" if off.negated else f" + {off.name}"
            elif off < 0:
                rhs += f" - {_const_str(-off)}"
            else:
                rhs += f" + {_const_str(off)}"
        return f"{self.lhs}{self.op}{rhs}"


def _const_str(value) -> str:
    if isinstance(value, PropRef):
        return str(value)
    if value is None:
        return "NULL"
    if isinstance(value, str):
        return value if value.isidentifier() else "'" + value.replace("'", "\\'") + "'"
    if isinstance(value, float) and value.is_integer():
        return str(int(value))
    return str(value)


@dataclass(frozen=True)
class Predicate:
    atoms: tuple = ()

    @staticmethod
    def of(*atoms) -> "Predicate":
        return Predicate(tuple(atoms))

    @property
    def is_true(self) -> bool:
        return not self.atoms

    def variables(self) -> frozenset:
        out = frozenset()
        for a in self.atoms:
            out |= a.variables()
        return out

    def and_(self, other: "Predicate") -> "Predicate":
        return Predicate(self.atoms + tuple(a for a in other.atoms if a not in self.atoms))

    def rename(self, mapping) -> "Predicate":
        return Predicate(tuple(a.rename(mapping) for a in self.atoms))

    def canonical(self) -> "Predicate":
        seen = []
        for a in self.atoms:
            c = a.canonical()
            if c not in seen:
                seen.append(c)
        return Predicate(tuple(seen))

    def __str__(self):
        return ", ".join(str(a) for a in self.atoms) if self.atoms else "true"

    def __iter__(self):
        return iter(self.atoms)

    def __len__(self):
        return len(self.atoms)


TRUE = Predicate()


def compare(lhs, op, rhs) -> bool:
    """Comparison with Null semantics: anything involving Null is false."""
    if lhs is None or rhs is None:
        return False
    return OPS[op](lhs, rhs)


# -- resolution -------------------------------------------------------------

def resolve_constant(graph, on: Attachment, prop: str, value):
    """Turn a symbolic constant into the number stored for ``prop``.

    Unknown categorical symbols map to -1, a code no value ever has.
    """
    if value is None or isinstance(value, PropRef):
        return value
    if isinstance(value, bool):
        raise QueryError(f"boolean constant for {prop!r}")
    if prop in ("ID", "eID"):
        if isinstance(value, str):
            try:
                return graph.vertex_id(value) if prop == "ID" else graph.edge_id(value)
            except (UnknownVertex, UnknownEdge):
                raise QueryError(f"{prop} constant {value!r} names no {on.value}") from None
        return value
    defn = graph.catalog.lookup(prop, on)
    if defn.kind is PropertyKind.CATEGORICAL:
        if isinstance(value, str):
            code = defn.code(value)
            return -1 if code is None else code
        return value
    if isinstance(value, str):
        if defn.is_date:
            try:
                return date_to_days(_dt.date.fromisoformat(value))
            except ValueError:
                pass
        raise QueryError(f"property {prop!r} is {defn.kind.value}; cannot compare with {value!r}")
    return value


def resolve_predicate(pred: Predicate, graph, var_kinds: dict, params=None) -> Predicate:
    """Resolve constants and parameters; result atoms are canonical.

    ``var_kinds`` maps every variable to an :class:`Attachment`.
    """
    params = params or {}
    out = []
    for a in pred.atoms:
        for r in a.refs():
            if r.var not in var_kinds:
                raise QueryError(f"unknown variable {r.var!r} in {a}")
            _check_prop(graph.catalog, var_kinds[r.var], r.prop)
        rhs = resolve_constant(graph, var_kinds[a.lhs.var], a.lhs.prop, a.rhs)
        off = a.offset
        if isinstance(off, Param):
            if off.name not in params:
                raise QueryError(f"parameter {off.name!r} is not set")
            off = -params[off.name] if off.negated else params[off.name]
        if not a.is_cross and off:
            rhs = None if rhs is None else rhs + off
            off = 0
        out.append(Atom(a.lhs, a.op, rhs, off).canonical())
    return Predicate(tuple(out))


def _check_prop(catalog: PropertyCatalog, on: Attachment, prop: str):
    if (on is Attachment.VERTEX and prop == "ID") or (on is Attachment.EDGE and prop == "eID"):
        return
    catalog.lookup(prop, on)


class BoundPredicate:
    """A resolved predicate ready for evaluation against one graph."""

    def __init__(self, pred: Predicate, graph, var_kinds: dict):
        self.predicate = pred
        self.graph = graph
        self.var_kinds = dict(var_kinds)

    def _value(self, ref: PropRef, env):
        ident = env[ref.var]
        if self.var_kinds[ref.var] is Attachment.VERTEX:
            return self.graph.vertex_value(ident, ref.prop)
        return self.graph.edge_value(ident, ref.prop)

    def test(self, env) -> bool:
        """Scalar check; ``env`` maps variable -> vertex/edge ID."""
        for a in self.predicate.atoms:
            lv = self._value(a.lhs, env)
            if a.is_cross:
                rv = self._value(a.rhs, env)
                if rv is not None and a.offset:
                    rv = rv + a.offset
            else:
                rv = a.rhs
            if not compare(lv, a.op, rv):
                return False
        return True

    def _column(self, ref: PropRef, ids):
        if self.var_kinds[ref.var] is Attachment.VERTEX:
            values, null = self.graph.vertex_column(ref.prop)
        else:
            values, null = self.graph.edge_column(ref.prop)
        return values[ids], null[ids]

    def mask(self, env, size: int) -> np.ndarray:
        """Vectorised check; ``env`` maps variable -> int array of IDs."""
        out = np.ones(size, dtype=bool)
        for a in self.predicate.atoms:
            lv, ln = self._column(a.lhs, env[a.lhs.var])
            if a.is_cross:
                rv, rn = self._column(a.rhs, env[a.rhs.var])
                if a.offset:
                    rv = rv + a.offset
                out &= ~ln & ~rn & _NP_OPS[a.op](lv, rv)
            elif a.rhs is None:
                out[:] = False
            else:
                out &= ~ln & _NP_OPS[a.op](lv, a.rhs)
        return out


# -- index configuration ------------------------------------------------------

VP_VARS = {"e_adj": Attachment.EDGE, "v_s": Attachment.VERTEX, "v_d": Attachment.VERTEX, "v_nbr": Attachment.VERTEX}
EP_VARS = {"e_b": Attachment.EDGE, **VP_VARS}


@dataclass(frozen=True)
class IndexConfig:
    kind: IndexKind
    direction: Direction
    partitioning: tuple = ()
    sorting: tuple = (NBR_ID,)
    predicate: Predicate = TRUE
    edge_kind: EdgeAdjacencyKind | None = None
    # match pattern text of a 2-hop view, kept for round-tripping the DDL
    pattern: str | None = field(default=None, compare=False)

    @property
    def levels(self) -> int:
        """CSR depth: the vertex/edge level plus one per partition key."""
        return 1 + len(self.partitioning)

    @property
    def sorted_by_nbr_id(self) -> bool:
        return bool(self.sorting) and self.sorting[0].is_nbr_id

    def with_direction(self, direction) -> "IndexConfig":
        return replace(self, direction=Direction(direction))


def default_primary_config(direction=Direction.FW) -> IndexConfig:
    """Partitioned by adjacent-edge label, leaves sorted by neighbour ID."""
    return IndexConfig(
        kind=IndexKind.PRIMARY,
        direction=Direction(direction),
        partitioning=(PartitionKey(Subject.ADJ_EDGE, "label"),),
        sorting=(NBR_ID,),
    )


def validate(config: IndexConfig, catalog: PropertyCatalog) -> None:
    """Raise the first configuration error found; return None when valid."""
    if len(config.partitioning) > MAX_PARTITION_LEVELS:
        raise InvalidConfig(f"at most {MAX_PARTITION_LEVELS} partitioning levels are supported")
    for key in config.partitioning:
        defn = catalog.lookup(key.prop, key.subject.attachment)
        if defn.kind is not PropertyKind.CATEGORICAL:
            raise NonCategoricalPartitionKey(f"cannot partition by {key}: {defn.kind.value} is not categorical")
    if len(set(config.partitioning)) != len(config.partitioning):
        raise InvalidConfig("duplicate partitioning key")
    for i, key in enumerate(config.sorting):
        if key.is_nbr_id:
            if i != len(config.sorting) - 1:
                raise InvalidConfig("v_nbr.ID must be the last sort key")
            continue
        if key.subject is Subject.ADJ_EDGE and key.prop == "eID":
            continue
        catalog.lookup(key.prop, key.subject.attachment)
    if config.kind is IndexKind.PRIMARY:
        if not config.predicate.is_true:
            raise InvalidConfig("primary indexes take no predicate")
        if config.direction is Direction.FW_BW:
            raise InvalidConfig("a primary index has a single direction")
        return
    if config.kind is IndexKind.VERTEX:
        allowed = VP_VARS
    else:
        allowed = EP_VARS
        if config.edge_kind is None:
            raise InvalidConfig("edge-partitioned index without adjacency kind")
    for atom in config.predicate:
        for ref in atom.refs():
            if ref.var not in allowed:
                raise InvalidConfig(f"variable {ref.var!r} is not available in this view")
            _check_prop(catalog, allowed[ref.var], ref.prop)
    if config.kind is IndexKind.EDGE and not any(
        {"e_b", "e_adj"} <= a.variables() for a in config.predicate
    ):
        raise SingleEdgePredicate(
            "a 2-hop view needs a predicate comparing e_b with e_adj; "
            "a predicate on one edge only duplicates a 1-hop view"
        )


# -- DDL rendering --------------------------------------------------------------

_EP_PATTERNS = {
    EdgeAdjacencyKind.DEST_FW: "v_s-[e_b]->v_d-[e_adj]->v_nbr",
    EdgeAdjacencyKind.DEST_BW: "v_s-[e_b]->v_d<-[e_adj]-v_nbr",
    EdgeAdjacencyKind.SOURCE_FW: "v_nbr-[e_adj]->v_s-[e_b]->v_d",
    EdgeAdjacencyKind.SOURCE_BW: "v_nbr<-[e_adj]-v_s-[e_b]->v_d",
}


def ep_pattern(kind: EdgeAdjacencyKind) -> str:
    return _EP_PATTERNS[kind]


def _layout_ddl(config: IndexConfig) -> str:
    parts = []
    if config.partitioning:
        parts.append("PARTITION BY " + ", ".join(str(k) for k in config.partitioning))
    parts.append("SORT BY " + ", ".join(str(k) for k in config.sorting))
    return " ".join(parts)


def to_ddl(config: IndexConfig, name: str | None = None) -> str:
    """Canonical DDL text; parsing it yields an equal config."""
    if config.kind is IndexKind.PRIMARY:
        return "RECONFIGURE PRIMARY INDEXES " + _layout_ddl(config)
    where = f" WHERE {config.predicate}" if not config.predicate.is_true else ""
    if config.kind is IndexKind.VERTEX:
        return (
            f"CREATE 1-HOP VIEW {name} MATCH v_s-[e_adj]->v_d{where} "
            f"INDEX AS {config.direction.value} {_layout_ddl(config)}"
        )
    return (
        f"CREATE 2-HOP VIEW {name} MATCH {ep_pattern(config.edge_kind)}{where} "
        f"INDEX AS {_layout_ddl(config)}"
    )
