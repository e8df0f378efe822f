"""Index registry and predicate subsumption.

Every registered index is described in a common vocabulary: ``e_adj`` is the
adjacent edge, ``v_nbr`` the vertex reached through it, ``v_s``/``v_d`` the
endpoints of the bound element (the owner vertex of a vertex-partitioned
list, or the bound edge ``e_b`` of an edge-partitioned one).  Queries are
translated into the same vocabulary before matching.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import csr
from .config import (
    Atom,
    Direction,
    EdgeAdjacencyKind,
    IndexKind,
    Predicate,
    PropRef,
    SortKey,
    TRUE,
)
from .errors import DuplicateName, UnknownIndex

MAX_COMBINATIONS = 16


@dataclass
class IndexDescriptor:
    name: str
    kind: IndexKind
    direction: Direction
    partitioning: tuple
    sorting: tuple
    predicate: Predicate  # resolved, in the common vocabulary
    handle: object
    edge_kind: EdgeAdjacencyKind | None = None
    view: str | None = None  # DDL name shared by FW/BW halves

    @classmethod
    def for_index(cls, index, kind: IndexKind, view=None) -> "IndexDescriptor":
        cfg = index.config
        pred = getattr(index, "predicate", TRUE)
        if kind is IndexKind.VERTEX:
            # the neighbour is v_d for forward lists and v_s for backward ones
            far = "v_d" if cfg.direction is Direction.FW else "v_s"
            pred = pred.rename({far: "v_nbr"}).canonical()
        return cls(
            name=index.name,
            kind=kind,
            direction=index.direction,
            partitioning=tuple(cfg.partitioning),
            sorting=tuple(cfg.sorting),
            predicate=pred,
            handle=index,
            edge_kind=cfg.edge_kind if kind is IndexKind.EDGE else None,
            view=view or index.name,
        )

    def as_dict(self) -> dict:
        out = {
            "name": self.name,
            "kind": self.kind.value,
            "direction": self.direction.value,
            "partitioning": [str(k) for k in self.partitioning],
            "sorting": [str(k) for k in self.sorting],
            "predicate": str(getattr(getattr(self.handle, "config", None), "predicate", self.predicate)),
        }
        if self.edge_kind is not None:
            out["adjacency"] = self.edge_kind.value
        return out


@dataclass(frozen=True)
class ExtensionDescriptor:
    """What an extension needs from an index.

    ``edge_kind`` None asks for vertex-partitioned lists in ``direction``;
    otherwise lists bound to an edge with that adjacency kind.
    ``predicate`` is the query's condition in the common vocabulary.
    """

    direction: Direction | None
    edge_kind: EdgeAdjacencyKind | None
    predicate: Predicate
    required_sort: SortKey | None = None


@dataclass
class IndexMatch:
    descriptor: IndexDescriptor
    key_path: tuple
    residual: Predicate
    guaranteed: Predicate

    @property
    def full_key_path(self) -> bool:
        return len(self.key_path) == len(self.descriptor.partitioning)


# -- subsumption ------------------------------------------------------------

def _implies(q: Atom, i: Atom) -> bool:
    """Does query atom ``q`` imply index atom ``i``? (same lhs, constants)"""
    if q == i:
        return True
    if q.is_cross or i.is_cross or q.lhs != i.lhs or q.rhs is None or i.rhs is None:
        return False
    qo, qc, io, ic = q.op, q.rhs, i.op, i.rhs
    if io == ">":
        return (qo == ">" and qc >= ic) or (qo in (">=", "=") and qc > ic)
    if io == ">=":
        return qo in (">", ">=", "=") and qc >= ic
    if io == "<":
        return (qo == "<" and qc <= ic) or (qo in ("<=", "=") and qc < ic)
    if io == "<=":
        return qo in ("<", "<=", "=") and qc <= ic
    if io == "!=":
        return (
            (qo == "=" and qc != ic)
            or (qo == ">" and qc >= ic)
            or (qo == ">=" and qc > ic)
            or (qo == "<" and qc <= ic)
            or (qo == "<=" and qc < ic)
        )
    return False  # equality is only implied by itself


def subsumes(index_pred: Predicate, query_pred: Predicate):
    """``(ok, residual)``: ok when every index atom is implied by some query
    atom; residual holds the query atoms the index does not guarantee."""
    q_atoms = [a.canonical() for a in query_pred]
    i_atoms = [a.canonical() for a in index_pred]
    for ia in i_atoms:
        if not any(_implies(qa, ia) for qa in q_atoms):
            return False, query_pred
    residual = tuple(qa for qa in q_atoms if qa not in i_atoms)
    return True, Predicate(residual)


def key_path_for(partitioning, query_pred: Predicate):
    """Longest key-path prefix fixed by equality atoms; returns (keys, atoms used)."""
    keys, used = [], []
    for key in partitioning:
        ref = PropRef(key.subject.value, key.prop)
        hit = None
        for a in query_pred:
            if (not a.is_cross and a.lhs == ref and a.op == "=" and isinstance(a.rhs, (int, np.integer))
                    and not isinstance(a.rhs, bool)):
                hit = a
                break
            if (not a.is_cross and a.lhs == ref and a.op == "=" and isinstance(a.rhs, float)
                    and a.rhs.is_integer()):
                hit = a
                break
        if hit is None:
            break
        keys.append(int(hit.rhs))
        used.append(hit)
    return tuple(keys), used


class IndexStore:
    def __init__(self):
        self._descriptors: dict[str, IndexDescriptor] = {}
        self._stats: dict = {}

    def register(self, descriptor: IndexDescriptor):
        if descriptor.name in self._descriptors:
            raise DuplicateName(f"an index named {descriptor.name!r} already exists")
        self._descriptors[descriptor.name] = descriptor

    def unregister(self, name: str) -> IndexDescriptor:
        if name not in self._descriptors:
            raise UnknownIndex(f"no index named {name!r}")
        self._stats = {k: v for k, v in self._stats.items() if k[0] != name}
        return self._descriptors.pop(name)

    def replace(self, descriptor: IndexDescriptor):
        self._descriptors[descriptor.name] = descriptor
        self._stats = {k: v for k, v in self._stats.items() if k[0] != descriptor.name}

    def get(self, name: str) -> IndexDescriptor:
        if name not in self._descriptors:
            raise UnknownIndex(f"no index named {name!r}")
        return self._descriptors[name]

    def __contains__(self, name):
        return name in self._descriptors

    def __iter__(self):
        return iter(self.descriptors())

    def descriptors(self):
        order = {IndexKind.PRIMARY: 0, IndexKind.VERTEX: 1, IndexKind.EDGE: 2}
        return sorted(self._descriptors.values(), key=lambda d: (order[d.kind], d.name))

    def find_indexes(self, ext: ExtensionDescriptor) -> list[IndexMatch]:
        matches = []
        for d in self.descriptors():
            if ext.edge_kind is None:
                if d.kind is IndexKind.EDGE or d.direction is not ext.direction:
                    continue
            elif d.kind is not IndexKind.EDGE or d.edge_kind is not ext.edge_kind:
                continue
            if ext.required_sort is not None and (not d.sorting or d.sorting[0] != ext.required_sort):
                continue
            keys, used = key_path_for(d.partitioning, ext.predicate)
            ok, residual = subsumes(d.predicate, ext.predicate)
            if not ok:
                continue
            residual = Predicate(tuple(a for a in residual if a not in used))
            guaranteed = Predicate(tuple(a for a in ext.predicate.canonical() if a not in residual))
            matches.append(IndexMatch(d, keys, residual, guaranteed))
        return matches

    # -- statistics ----------------------------------------------------------------
    def estimated_length(self, match: IndexMatch, version) -> float:
        """Average list length at the match's key path (entries / owners)."""
        d = match.descriptor
        key = (d.name, match.key_path, version)
        hit = self._stats.get(key)
        if hit is None:
            totals, owners = leaf_totals(d.handle, d.kind)
            keyspaces = d.handle.keyspaces
            slots = csr.resolve_slots(match.key_path, keyspaces)
            if slots is None:
                entries = 0
            else:
                rest = csr.leaves_per_owner(keyspaces[len(slots):])
                start = 0
                for s, k in zip(slots, keyspaces):
                    start = start * k + s
                start *= rest
                entries = int(totals[start : start + rest].sum())
            hit = entries / max(1, owners)
            self._stats[key] = hit
        return hit


def leaf_totals(index, kind: IndexKind):
    """Entries per leaf slot summed over owners, and the owner count."""
    per_owner = csr.leaves_per_owner(index.keyspaces)
    totals = np.zeros(per_owner, dtype=np.int64)
    for g in range(len(index.pages)):
        levels = index.view(g).levels
        finest = levels[-1].astype(np.int64)
        counts = np.diff(finest)
        totals += counts.reshape(-1, per_owner).sum(axis=0) if len(counts) else 0
    if kind is IndexKind.EDGE:
        owners = index.graph.num_edges
    else:
        owners = index.graph.num_vertices
    return totals, owners
