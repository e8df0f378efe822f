"""Query graphs and the physical operators that evaluate them.

Matches are homomorphisms on vertices: two query vertices may map to the same
data vertex.  Distinct query edges always map to distinct data edges.

Operators are pulled as a pipeline of generators over partial matches, each
a dict from query variable to vertex or edge ID.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .config import Atom, BoundPredicate, Predicate, PropRef, TRUE, resolve_predicate
from .errors import QueryError, SortMismatch, UnboundVariable
from .graph import Attachment


@dataclass
class QueryVertex:
    name: str
    label: str | None = None


@dataclass
class QueryEdge:
    name: str
    src: str
    dst: str
    label: str | None = None

    def other(self, v):
        return self.dst if v == self.src else self.src


class QueryGraph:
    """Vertices, directed edges and a conjunctive predicate over both."""

    def __init__(self):
        self.vertices: dict[str, QueryVertex] = {}
        self.edges: dict[str, QueryEdge] = {}
        self.predicate: Predicate = TRUE
        self._anon = 0

    def add_vertex(self, name, label=None) -> str:
        v = self.vertices.get(name)
        if v is None:
            if name in self.edges:
                raise QueryError(f"{name!r} is already an edge variable")
            self.vertices[name] = QueryVertex(name, label)
        elif label is not None:
            if v.label is not None and v.label != label:
                raise QueryError(f"vertex {name!r} has two labels")
            v.label = label
        return name

    def add_edge(self, src, dst, label=None, name=None) -> str:
        if name is None:
            while f"_e{self._anon}" in self.edges:
                self._anon += 1
            name = f"_e{self._anon}"
            self._anon += 1
        if name in self.edges or name in self.vertices:
            raise QueryError(f"variable {name!r} is bound twice")
        self.add_vertex(src)
        self.add_vertex(dst)
        self.edges[name] = QueryEdge(name, src, dst, label)
        return name

    def where(self, *atoms) -> "QueryGraph":
        self.predicate = self.predicate.and_(Predicate(tuple(atoms)))
        return self

    def var_kinds(self) -> dict:
        kinds = {v: Attachment.VERTEX for v in self.vertices}
        kinds.update({e: Attachment.EDGE for e in self.edges})
        return kinds

    def full_predicate(self) -> Predicate:
        """The WHERE predicate plus label constraints written in the pattern."""
        atoms = []
        for v in self.vertices.values():
            if v.label is not None:
                atoms.append(Atom(PropRef(v.name, "label"), "=", v.label))
        for e in self.edges.values():
            if e.label is not None:
                atoms.append(Atom(PropRef(e.name, "label"), "=", e.label))
        return Predicate(tuple(atoms)).and_(self.predicate)

    def edges_between(self, a, b):
        return [e for e in self.edges.values() if {e.src, e.dst} == {a, b} and a != b]

    def incident(self, v):
        return [e for e in self.edges.values() if v in (e.src, e.dst)]

    def validate(self):
        if not self.vertices:
            raise QueryError("a query needs at least one vertex")
        for e in self.edges.values():
            if e.src == e.dst:
                raise QueryError(f"self-loop query edge {e.name!r} is not supported")
        kinds = self.var_kinds()
        for a in self.predicate:
            for r in a.refs():
                if r.var not in kinds:
                    raise UnboundVariable(f"variable {r.var!r} does not appear in the pattern")
        seen = {next(iter(self.vertices))}
        frontier = list(seen)
        while frontier:
            v = frontier.pop()
            for e in self.incident(v):
                w = e.other(v)
                if w not in seen:
                    seen.add(w)
                    frontier.append(w)
        if len(seen) != len(self.vertices):
            raise QueryError("the query graph must be connected")

    def __repr__(self):
        edges = ", ".join(f"{e.src}-[{e.name}:{e.label or ''}]->{e.dst}" for e in self.edges.values())
        return f"QueryGraph({edges or ', '.join(self.vertices)} WHERE {self.predicate})"


class PreparedQuery:
    """A query whose constants were resolved against one graph."""

    def __init__(self, query: QueryGraph, graph, params=None):
        query.validate()
        self.query = query
        self.graph = graph
        self.var_kinds = query.var_kinds()
        self.predicate = resolve_predicate(query.full_predicate(), graph, self.var_kinds, params)

    def atoms_over(self, variables) -> list:
        variables = set(variables)
        return [a for a in self.predicate if a.variables() <= variables]

    def bind(self, pred: Predicate) -> BoundPredicate:
        return BoundPredicate(pred, self.graph, self.var_kinds)


# -- physical operators --------------------------------------------------------------

@dataclass
class Stats:
    matches: int = 0
    edges_scanned: int = 0

    def as_dict(self):
        return {"matches": self.matches, "edges_scanned": self.edges_scanned}


@dataclass
class Scan:
    """Emit one match per qualifying vertex (or per fixed edge)."""

    vertex: str | None = None
    predicate: Predicate = TRUE
    edge: str | None = None
    src: str | None = None
    dst: str | None = None
    edge_id: int | None = None

    @property
    def binds(self):
        if self.edge is not None:
            return [self.src, self.dst]
        return [self.vertex]

    def run(self, prepared: PreparedQuery, stats: Stats):
        graph = prepared.graph
        bound = prepared.bind(self.predicate)
        if self.edge is not None:
            e = self.edge_id
            if not graph.has_edge(e):
                return
            m = {self.edge: e, self.src: graph.src(e), self.dst: graph.dst(e)}
            if bound.test(m):
                yield m
            return
        fixed = _fixed_id(self.predicate, self.vertex)
        if fixed is not None:
            candidates = np.array([fixed], dtype=np.int64) if graph.has_vertex(fixed) else np.zeros(0, np.int64)
        else:
            candidates = np.arange(graph.num_vertices, dtype=np.int64)
        if len(self.predicate):
            candidates = candidates[bound.mask({self.vertex: candidates}, len(candidates))]
        for v in candidates.tolist():
            yield {self.vertex: v}

    def explain(self):
        if self.edge is not None:
            return {"op": "Scan", "edge": self.edge, "edge_id": self.edge_id,
                    "binds": [self.src, self.dst], "predicate": str(self.predicate)}
        return {"op": "Scan", "vertex": self.vertex, "predicate": str(self.predicate)}

    def signature(self):
        if self.edge is not None:
            return f"Scan({self.edge}={self.edge_id})"
        return f"Scan({self.vertex}|{self.predicate})"


def _fixed_id(pred, var):
    for a in pred:
        if not a.is_cross and a.lhs == PropRef(var, "ID") and a.op == "=" and a.rhs is not None:
            return int(a.rhs)
    return None


@dataclass
class Accessor:
    """One adjacency list source feeding an extension.

    ``bound`` is the bound query vertex (vertex-partitioned or primary lists)
    or bound query edge (edge-partitioned lists); ``edge`` is the query edge
    the list entries bind and ``target`` the query vertex they reach.
    """

    index: str
    kind: str
    handle: object
    bound: str
    edge: str
    target: str
    key_path: tuple
    residual: Predicate
    est_len: float
    sorting: tuple = ()
    resort: bool = False
    _bound_residual: object = field(default=None, repr=False, compare=False)

    def fetch(self, prepared, match, stats, used_edges):
        """Entries of the list for ``match`` that survive residual and edge-distinctness checks."""
        lst = self.handle.get_list(match[self.bound], self.key_path)
        stats.edges_scanned += len(lst)
        eids = np.asarray(lst.edge_ids, dtype=np.int64)
        nbrs = np.asarray(lst.nbr_ids, dtype=np.int64)
        if not len(eids):
            return eids, nbrs
        keep = np.ones(len(eids), dtype=bool)
        if len(self.residual):
            if self._bound_residual is None:
                self._bound_residual = prepared.bind(self.residual)
            env = {}
            for var in self._bound_residual.predicate.variables():
                if var == self.edge:
                    env[var] = eids
                elif var == self.target:
                    env[var] = nbrs
                elif var in match:
                    env[var] = np.full(len(eids), match[var], dtype=np.int64)
                else:
                    raise UnboundVariable(f"residual of {self.index} references unbound {var!r}")
            keep &= self._bound_residual.mask(env, len(eids))
        if used_edges:
            used = set(used_edges)
            keep &= np.fromiter((e not in used for e in eids.tolist()), dtype=bool, count=len(eids))
        return eids[keep], nbrs[keep]

    def sorted_on(self, prop) -> bool:
        """True when the fetched list is ordered by ``v_nbr.prop``: the leading
        sort key matches and the key path reaches a leaf."""
        if not self.sorting or self.sorting[0].subject.value != "v_nbr" or self.sorting[0].prop != prop:
            return False
        return len(self.key_path) == len(self.handle.keyspaces)

    def explain(self):
        return {
            "index": self.index,
            "kind": self.kind,
            "bound": self.bound,
            "edge": self.edge,
            "target": self.target,
            "key_path": [None if k is None else int(k) for k in self.key_path],
            "residual": str(self.residual),
            "est_len": round(self.est_len, 6),
        }

    def signature(self):
        return f"{self.bound}:{self.index}[{','.join(map(str, self.key_path))}]->{self.edge}"


def _used_edges(match, edge_vars):
    return [match[e] for e in edge_vars if e in match]


def _distinct(eids):
    return len(set(eids)) == len(eids)


@dataclass
class ExtendIntersect:
    """Extend by one vertex: intersect z neighbour-ID-sorted lists."""

    target: str
    accessors: list

    @property
    def binds(self):
        return [self.target]

    def run(self, upstream, prepared: PreparedQuery, stats: Stats):
        edge_vars = list(prepared.query.edges)
        z = len(self.accessors)
        for acc in self.accessors:
            if z > 1 and not acc.resort and not acc.sorted_on("ID"):
                raise SortMismatch(f"accessor {acc.index} is not sorted by neighbour ID")
        for m in upstream:
            used = _used_edges(m, edge_vars)
            lists = [acc.fetch(prepared, m, stats, used) for acc in self.accessors]
            if z == 1:
                acc = self.accessors[0]
                eids, nbrs = lists[0]
                for e, n in zip(eids.tolist(), nbrs.tolist()):
                    out = dict(m)
                    out[acc.edge] = e
                    out[self.target] = n
                    yield out
                continue
            sorted_lists = []
            for acc, (eids, nbrs) in zip(self.accessors, lists):
                if acc.resort:
                    order = np.argsort(nbrs, kind="stable")
                    eids, nbrs = eids[order], nbrs[order]
                sorted_lists.append((eids, nbrs))
            common = _intersect([nbrs for _, nbrs in sorted_lists])
            for n in common.tolist():
                groups = []
                for eids, nbrs in sorted_lists:
                    lo, hi = np.searchsorted(nbrs, [n, n + 1])
                    groups.append(eids[lo:hi].tolist())
                for combo in product(*groups):
                    if z > 1 and not _distinct(combo):
                        continue
                    out = dict(m)
                    for acc, e in zip(self.accessors, combo):
                        out[acc.edge] = e
                    out[self.target] = n
                    yield out

    def explain(self):
        return {"op": "ExtendIntersect", "target": self.target,
                "accessors": [a.explain() for a in self.accessors]}

    def signature(self):
        return f"EI({self.target}<-" + "&".join(a.signature() for a in self.accessors) + ")"


def _intersect(arrays):
    """Sorted common values of several sorted arrays (linear merges)."""
    if not arrays:
        return np.zeros(0, dtype=np.int64)
    common = np.unique(arrays[0])
    for arr in arrays[1:]:
        common = np.intersect1d(common, arr, assume_unique=False)
        if not len(common):
            break
    return common


@dataclass
class MultiExtend:
    """Extend by several vertices at once, equality-joining lists on a
    neighbour property they are all sorted by."""

    targets: list
    prop: str
    accessors: list

    @property
    def binds(self):
        return list(self.targets)

    def run(self, upstream, prepared: PreparedQuery, stats: Stats):
        graph = prepared.graph
        edge_vars = list(prepared.query.edges)
        values, null = graph.vertex_column(self.prop)
        for acc in self.accessors:
            if not acc.resort and not acc.sorted_on(self.prop):
                raise SortMismatch(f"accessor {acc.index} is not sorted by v_nbr.{self.prop}")
        for m in upstream:
            used = _used_edges(m, edge_vars)
            lists = []
            for acc in self.accessors:
                eids, nbrs = acc.fetch(prepared, m, stats, used)
                keep = ~null[nbrs]
                eids, nbrs = eids[keep], nbrs[keep]
                p = values[nbrs]
                if acc.resort:
                    order = np.lexsort((eids, nbrs, p))
                    eids, nbrs, p = eids[order], nbrs[order], p[order]
                lists.append((eids, nbrs, p))
            common = _intersect([p for _, _, p in lists])
            for pv in common.tolist():
                per_target = []
                for t in self.targets:
                    feeding = [(acc, lst) for acc, lst in zip(self.accessors, lists) if acc.target == t]
                    per_target.append(self._candidates(t, feeding, pv))
                for choice in product(*per_target):
                    out = dict(m)
                    new_edges = []
                    for t, (n, edges) in zip(self.targets, choice):
                        out[t] = n
                        for ev, e in edges:
                            out[ev] = e
                            new_edges.append(e)
                    if _distinct(new_edges):
                        yield out

    @staticmethod
    def _candidates(target, feeding, pv):
        """``[(nbr, [(edge var, edge id), ...]), ...]`` for one target at one value."""
        per_acc = []
        for acc, (eids, nbrs, p) in feeding:
            lo, hi = np.searchsorted(p, [pv, np.nextafter(pv, np.inf)])
            by_nbr = {}
            for e, n in zip(eids[lo:hi].tolist(), nbrs[lo:hi].tolist()):
                by_nbr.setdefault(n, []).append((acc.edge, e))
            per_acc.append(by_nbr)
        shared = set(per_acc[0])
        for d in per_acc[1:]:
            shared &= set(d)
        out = []
        for n in sorted(shared):
            for combo in product(*(d[n] for d in per_acc)):
                out.append((n, list(combo)))
        return out

    def explain(self):
        return {"op": "MultiExtend", "targets": list(self.targets), "property": self.prop,
                "accessors": [a.explain() for a in self.accessors]}

    def signature(self):
        return f"ME({','.join(self.targets)}.{self.prop}<-" + "&".join(a.signature() for a in self.accessors) + ")"


@dataclass
class Filter:
    predicate: Predicate

    binds = ()

    def run(self, upstream, prepared: PreparedQuery, stats: Stats):
        bound = prepared.bind(self.predicate)
        needed = self.predicate.variables()
        for m in upstream:
            missing = needed - m.keys()
            if missing:
                raise UnboundVariable(f"filter needs unbound {sorted(missing)}")
            if bound.test(m):
                yield m

    def explain(self):
        return {"op": "Filter", "predicate": str(self.predicate)}

    def signature(self):
        return f"F({self.predicate})"


def filter_matches(matches, prepared, predicate):
    """Stand-alone Filter over an iterable of matches."""
    return Filter(predicate).run(iter(matches), prepared, Stats())


def run_plan(plan, stats: Stats | None = None):
    """Generator over the complete matches of ``plan``."""
    stats = stats if stats is not None else Stats()
    prepared = plan.prepared
    ops = plan.operators
    if not ops:
        return
    stream = ops[0].run(prepared, stats)
    for op in ops[1:]:
        stream = op.run(stream, prepared, stats)
    for m in stream:
        stats.matches += 1
        yield m


def execute(plan, limit=None):
    """``(matches, stats)`` for a plan; matches are dicts variable -> ID."""
    stats = Stats()
    out = []
    for m in run_plan(plan, stats):
        out.append(m)
        if limit is not None and len(out) >= limit:
            break
    return out, stats
