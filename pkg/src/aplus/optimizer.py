"""Bottom-up dynamic-programming optimizer minimising i-cost.

The i-cost of a plan is the sum, over every ExtendIntersect and MultiExtend
operator, of the estimated number of input matches times the estimated
lengths of the lists it reads.  Scans and Filters cost nothing.

Cardinalities depend only on the set of bound query vertices, never on the
plan that bound them, so the per-operator costs are additive and the DP over
vertex subsets returns a true minimum among the enumerated plans.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations, product

import numpy as np

from .config import Direction, EdgeAdjacencyKind, NBR_ID, Predicate, SortKey, Subject
from .errors import NoPlan
from .graph import Attachment
from .query import Accessor, ExtendIntersect, Filter, MultiExtend, PreparedQuery, Scan
from .store import ExtensionDescriptor, MAX_COMBINATIONS

DAMPING = 0.1
FULL_DP_LIMIT = 10


@dataclass
class Step:
    op: object
    icost: float
    card: float  # estimated matches after this step


@dataclass
class Plan:
    prepared: PreparedQuery
    steps: list = field(default_factory=list)

    @property
    def operators(self):
        return [s.op for s in self.steps]

    @property
    def cost(self) -> float:
        return sum(s.icost for s in self.steps)

    def signature(self) -> str:
        return " | ".join(op.signature() for op in self.operators)

    def explain(self) -> dict:
        ops = []
        for s in self.steps:
            entry = s.op.explain()
            entry["icost"] = _round(s.icost)
            entry["est_card"] = _round(s.card)
            ops.append(entry)
        return {"icost": _round(self.cost), "operators": ops}


def _round(x):
    return float(f"{x:.6g}") if math.isfinite(x) else x


def explain(plan: Plan) -> dict:
    return plan.explain()


class Optimizer:
    def __init__(self, prepared: PreparedQuery, store, version=None):
        self.prepared = prepared
        self.query = prepared.query
        self.graph = prepared.graph
        self.store = store
        self.version = self.graph.version if version is None else version
        self._card: dict = {}
        self._qlen: dict = {}
        self._scan_count: dict = {}
        self._ext: dict = {}
        self.vertices = list(self.query.vertices)

    # -- helpers ----------------------------------------------------------------------
    def vars_of(self, S) -> frozenset:
        edges = [e.name for e in self.query.edges.values() if e.src in S and e.dst in S]
        return frozenset(S) | frozenset(edges)

    def connected(self, S) -> bool:
        S = set(S)
        if not S:
            return False
        start = next(iter(S))
        seen, stack = {start}, [start]
        while stack:
            v = stack.pop()
            for e in self.query.incident(v):
                w = e.other(v)
                if w in S and w not in seen:
                    seen.add(w)
                    stack.append(w)
        return seen == S

    def const_atoms(self, var):
        return Predicate(tuple(a for a in self.prepared.predicate if a.variables() == {var}))

    def edge_scan_candidates(self):
        """Query edges fixed by an eID equality and alone between their endpoints."""
        out = []
        for e in self.query.edges.values():
            fixed = [a for a in self.prepared.predicate
                     if not a.is_cross and a.lhs.var == e.name and a.lhs.prop == "eID" and a.op == "="]
            if fixed and len(self.query.edges_between(e.src, e.dst)) == 1:
                out.append((e, int(fixed[0].rhs) if fixed[0].rhs is not None else -1))
        return out

    # -- cardinality ------------------------------------------------------------------
    def scan_count(self, v) -> float:
        hit = self._scan_count.get(v)
        if hit is None:
            pred = self.const_atoms(v)
            n = self.graph.num_vertices
            ids = np.arange(n, dtype=np.int64)
            hit = float(self.prepared.bind(pred).mask({v: ids}, n).sum()) if len(pred) else float(n)
            self._scan_count[v] = hit
        return hit

    def edge_scan_count(self, e, eid) -> float:
        if not self.graph.has_edge(eid):
            return 0.0
        pred = Predicate(tuple(a for a in self.prepared.predicate if a.variables() <= {e.name, e.src, e.dst}))
        m = {e.name: eid, e.src: self.graph.src(eid), e.dst: self.graph.dst(eid)}
        return 1.0 if self.prepared.bind(pred).test(m) else 0.0

    def qlen(self, q, t) -> float:
        """Fraction-per-vertex of edges usable for query edge ``q`` reaching ``t``."""
        key = (q.name, t)
        hit = self._qlen.get(key)
        if hit is None:
            src, dst, alive = self.graph.edge_arrays()
            eids = np.flatnonzero(alive)
            keep = np.ones(len(eids), dtype=bool)
            epred = self.const_atoms(q.name)
            if len(epred):
                keep &= self.prepared.bind(epred).mask({q.name: eids}, len(eids))
            vpred = self.const_atoms(t)
            if len(vpred):
                far = dst[eids] if q.dst == t else src[eids]
                keep &= self.prepared.bind(vpred).mask({t: far}, len(eids))
            hit = float(keep.sum()) / max(1, self.graph.num_vertices)
            self._qlen[key] = hit
        return hit

    def cardinality(self, S) -> float:
        S = frozenset(S)
        hit = self._card.get(S)
        if hit is not None:
            return hit
        if len(S) == 1:
            hit = self.scan_count(next(iter(S)))
        else:
            hit = math.inf
            if len(S) == 2:
                for e, eid in self.edge_scan_candidates():
                    if {e.src, e.dst} == S:
                        hit = self.edge_scan_count(e, eid)
            if hit == math.inf:
                for t in sorted(S):
                    rest = S - {t}
                    qs = [e for e in self.query.incident(t) if e.other(t) in rest]
                    if not qs or not self.connected(rest):
                        continue
                    est = self.cardinality(rest) * min(self.qlen(q, t) for q in qs) * DAMPING ** (len(qs) - 1)
                    hit = min(hit, est)
        self._card[S] = hit
        return hit

    # -- accessors ----------------------------------------------------------------------
    def _pq(self, mapping, touching):
        atoms = []
        for a in self.prepared.predicate:
            vs = a.variables()
            if vs <= mapping.keys() and vs & touching:
                atoms.append(a)
        return Predicate(tuple(atoms)), Predicate(tuple(atoms)).rename(mapping).canonical()

    def accessor_options(self, S, t, q, required_sort=None):
        """Every index list that can bind query edge ``q`` while extending to ``t``."""
        key = (frozenset(S), t, q.name, required_sort)
        hit = self._ext.get(key)
        if hit is not None:
            return hit
        u = q.other(t)
        specs = []
        direction = Direction.FW if q.src == u else Direction.BW
        specs.append((u, None, direction, {q.name: "e_adj", t: "v_nbr", u: "v_s" if direction is Direction.FW else "v_d"}))
        for b in self.query.edges.values():
            if b.name == q.name or b.src not in S or b.dst not in S or u not in (b.src, b.dst):
                continue
            pivot_is_dst = b.dst == u
            kind = {
                (True, Direction.FW): EdgeAdjacencyKind.DEST_FW,
                (True, Direction.BW): EdgeAdjacencyKind.DEST_BW,
                (False, Direction.BW): EdgeAdjacencyKind.SOURCE_FW,
                (False, Direction.FW): EdgeAdjacencyKind.SOURCE_BW,
            }[(pivot_is_dst, direction)]
            specs.append((b.name, kind, None, {b.name: "e_b", q.name: "e_adj", t: "v_nbr", b.src: "v_s", b.dst: "v_d"}))
        options = []
        for bound, kind, dirn, mapping in specs:
            _, pq = self._pq(mapping, {q.name, t})
            inverse = {v: k for k, v in mapping.items()}
            for sort_req in ((required_sort, False), (None, True)) if required_sort else ((None, False),):
                req, fallback = sort_req
                ext = ExtensionDescriptor(dirn, kind, pq, req)
                found = []
                for m in self.store.find_indexes(ext):
                    partial = not m.full_key_path
                    resort = fallback or (required_sort is not None and partial)
                    found.append(Accessor(
                        index=m.descriptor.name,
                        kind=m.descriptor.kind.value,
                        handle=m.descriptor.handle,
                        bound=bound,
                        edge=q.name,
                        target=t,
                        key_path=m.key_path,
                        residual=m.residual.rename(inverse),
                        est_len=self.store.estimated_length(m, self.version),
                        sorting=m.descriptor.sorting,
                        resort=resort,
                    ))
                if found:
                    options.extend(found)
                    break
        options.sort(key=lambda a: (a.est_len, a.signature()))
        self._ext[key] = options
        return options

    def _combos(self, per_edge):
        """Accessor combinations, cheapest first, at most MAX_COMBINATIONS."""
        if any(not opts for opts in per_edge):
            return []
        combos = sorted(product(*per_edge), key=lambda c: (sum(a.est_len for a in c), "&".join(a.signature() for a in c)))
        return combos[:MAX_COMBINATIONS]

    # -- transitions ---------------------------------------------------------------------
    def base_steps(self):
        """``(S, [Step])`` for every scan."""
        out = []
        for v in self.vertices:
            op = Scan(vertex=v, predicate=self.const_atoms(v))
            out.append((frozenset([v]), [Step(op, 0.0, self.cardinality([v]))]))
        for e, eid in self.edge_scan_candidates():
            pred = Predicate(tuple(a for a in self.prepared.predicate if a.variables() <= {e.name, e.src, e.dst}))
            op = Scan(edge=e.name, src=e.src, dst=e.dst, edge_id=eid, predicate=pred)
            S = frozenset([e.src, e.dst])
            out.append((S, [Step(op, 0.0, self.cardinality(S))]))
        return out

    def _filter_step(self, S_prev, S_new, covered, card):
        before = self.vars_of(S_prev)
        after = self.vars_of(S_new)
        leftover = [a for a in self.prepared.predicate
                    if a.variables() <= after and not a.variables() <= before and a not in covered]
        if leftover:
            return [Step(Filter(Predicate(tuple(leftover))), 0.0, card)]
        return []

    def transitions(self, S):
        """``(S_new, [Step])`` for every extension of the bound set ``S``."""
        S = frozenset(S)
        out = []
        card_in = self.cardinality(S)
        frontier = sorted({e.other(v) for v in S for e in self.query.incident(v)} - S)
        for t in frontier:
            qs = [e for e in self.query.incident(t) if e.other(t) in S]
            req = NBR_ID if len(qs) > 1 else None
            per_edge = [self.accessor_options(S, t, q, req) for q in qs]
            S_new = S | {t}
            card_out = self.cardinality(S_new)
            for combo in self._combos(per_edge):
                icost = card_in * sum(a.est_len for a in combo)
                covered = set()
                for a, q in zip(combo, qs):
                    covered |= set(self._pq(self._mapping_for(a, q, t), {q.name, t})[0])
                steps = [Step(ExtendIntersect(t, list(combo)), icost, card_out)]
                steps += self._filter_step(S, S_new, covered, card_out)
                out.append((S_new, steps))
        out.extend(self.multi_extend_transitions(S, frontier, card_in))
        return out

    def _mapping_for(self, acc, q, t):
        if acc.kind == "edge":
            b = self.query.edges[acc.bound]
            return {b.name: "e_b", q.name: "e_adj", t: "v_nbr", b.src: "v_s", b.dst: "v_d"}
        u = acc.bound
        return {q.name: "e_adj", t: "v_nbr", u: "v_s" if q.src == u else "v_d"}

    def _equality_props(self):
        """``prop -> set of frozenset({x, y})`` vertex pairs joined by equality."""
        out = {}
        for a in self.prepared.predicate:
            if (a.is_cross and a.op == "=" and not a.offset and a.lhs.prop == a.rhs.prop
                    and self.prepared.var_kinds.get(a.lhs.var) is Attachment.VERTEX
                    and self.prepared.var_kinds.get(a.rhs.var) is Attachment.VERTEX
                    and a.lhs.var != a.rhs.var and a.lhs.prop not in ("ID", "label")):
                out.setdefault(a.lhs.prop, set()).add(frozenset([a.lhs.var, a.rhs.var]))
        return out

    def multi_extend_transitions(self, S, frontier, card_in):
        out = []
        eq = self._equality_props()
        for prop, pairs in sorted(eq.items()):
            for size in range(2, len(frontier) + 1):
                for T in combinations(frontier, size):
                    Tset = set(T)
                    if any(self.query.edges_between(x, y) for x, y in combinations(T, 2)):
                        continue
                    if not _connected_by(Tset, pairs):
                        continue
                    sort_key = SortKey(Subject.NBR_VERTEX, prop)
                    qs, per_edge = [], []
                    for t in T:
                        for q in self.query.incident(t):
                            if q.other(t) in S:
                                qs.append((q, t))
                                per_edge.append(self.accessor_options(S, t, q, sort_key))
                    per_edge = [[a for a in opts if not a.resort] for opts in per_edge]
                    S_new = S | Tset
                    if not self.connected(S_new):
                        continue
                    card_out = self.cardinality(S_new)
                    join_atoms = {a for a in self.prepared.predicate
                                  if a.is_cross and a.op == "=" and not a.offset and a.lhs.prop == prop
                                  and a.rhs.prop == prop and {a.lhs.var, a.rhs.var} <= Tset}
                    for combo in self._combos(per_edge):
                        icost = card_in * sum(a.est_len for a in combo)
                        covered = set(join_atoms)
                        for a, (q, t) in zip(combo, qs):
                            covered |= set(self._pq(self._mapping_for(a, q, t), {q.name, t})[0])
                        op = MultiExtend(list(T), prop, list(combo))
                        steps = [Step(op, icost, card_out)]
                        steps += self._filter_step(S, S_new, covered, card_out)
                        out.append((S_new, steps))
        return out

    # -- search ----------------------------------------------------------------------
    @staticmethod
    def _rank(steps):
        cost = sum(s.icost for s in steps)
        return (cost, len(steps), " | ".join(s.op.signature() for s in steps))

    def optimize(self) -> Plan:
        full = frozenset(self.vertices)
        if len(full) > FULL_DP_LIMIT:
            return self.greedy()
        best: dict = {}
        for S, steps in self.base_steps():
            if S not in best or self._rank(steps) < self._rank(best[S]):
                best[S] = steps
        for size in range(1, len(full)):
            for S in sorted((s for s in best if len(s) == size), key=lambda s: sorted(s)):
                for S_new, steps in self.transitions(S):
                    cand = best[S] + steps
                    if S_new not in best or self._rank(cand) < self._rank(best[S_new]):
                        best[S_new] = cand
        if full not in best:
            raise NoPlan("no plan binds every query vertex")
        return Plan(self.prepared, best[full])

    def greedy(self) -> Plan:
        full = frozenset(self.vertices)
        start = min(self.base_steps(), key=lambda b: (b[1][-1].card, self._rank(b[1])))
        S, steps = start
        while S != full:
            options = self.transitions(S)
            if not options:
                raise NoPlan("no extension available")
            S, more = min(options, key=lambda o: self._rank(o[1]))
            steps = steps + more
        return Plan(self.prepared, steps)

    def enumerate_plans(self):
        """Every complete plan, by exhaustive search (small queries only)."""
        full = frozenset(self.vertices)
        plans = []

        def walk(S, steps):
            if S == full:
                plans.append(Plan(self.prepared, steps))
                return
            for S_new, more in self.transitions(S):
                walk(S_new, steps + more)

        for S, steps in self.base_steps():
            walk(S, steps)
        return plans


def _connected_by(T, pairs) -> bool:
    T = set(T)
    start = next(iter(T))
    seen, stack = {start}, [start]
    while stack:
        x = stack.pop()
        for p in pairs:
            if x in p:
                (y,) = p - {x}
                if y in T and y not in seen:
                    seen.add(y)
                    stack.append(y)
    return seen == T


def optimize(query, store, graph, params=None) -> Plan:
    """Plan ``query`` (a QueryGraph or PreparedQuery) against ``store``."""
    prepared = query if isinstance(query, PreparedQuery) else PreparedQuery(query, graph, params)
    return Optimizer(prepared, store).optimize()


def estimate_cardinality(prepared: PreparedQuery, store, vertices) -> float:
    return Optimizer(prepared, store).cardinality(vertices)
