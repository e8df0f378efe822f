"""Secondary edge-partitioned indexes (2-hop views).

For every bound edge ``e_b = (v_s, v_d)`` the index keeps the adjacent edges
``e_adj`` of one shared vertex (the pivot) that pass a predicate relating the
two edges.  Lists are offsets into the pivot's primary list, so an edge may
appear in many lists at the cost of one small offset each.  Pages group 64
consecutive bound-edge IDs.
"""
from __future__ import annotations

import time

import numpy as np

from . import csr
from .config import (
    EP_VARS,
    BoundPredicate,
    Direction,
    EdgeAdjacencyKind,
    IndexConfig,
    IndexKind,
    resolve_predicate,
    validate,
)
from .errors import IndexTooLarge, InvalidConfig, MissingPrimaryDirection
from .secondary import OffsetListIndex

DEFAULT_CAP_FACTOR = 10


class EdgePartitionedIndex(OffsetListIndex):
    def __init__(self, graph, config, primary, name, predicate, cap=None):
        super().__init__(graph, config, primary, name, predicate)
        self.kind: EdgeAdjacencyKind = config.edge_kind
        self.bound = BoundPredicate(predicate, graph, EP_VARS)
        self.cap = cap

    @property
    def direction(self) -> Direction:
        return self.kind.direction

    def owner_count(self) -> int:
        return self.graph.edge_capacity

    def pivots(self, owners):
        src, dst, _ = self.graph.edge_arrays()
        return dst[owners] if self.kind.pivot_is_dst else src[owners]

    def pivot_of(self, eid: int) -> int:
        return self.graph.dst(eid) if self.kind.pivot_is_dst else self.graph.src(eid)

    def neighbours(self, eids):
        src, dst, _ = self.graph.edge_arrays()
        return dst[eids] if self.direction is Direction.FW else src[eids]

    def adjacent_owner(self, eid: int) -> int:
        """Vertex whose list (in this index's direction) holds ``eid``."""
        return self.graph.src(eid) if self.direction is Direction.FW else self.graph.dst(eid)

    def bound_edges_at(self, vertex: int):
        """Live bound edges whose pivot is ``vertex``."""
        g = self.graph
        return g.in_edges(vertex) if self.kind.pivot_is_dst else g.out_edges(vertex)

    def page_width(self, g) -> int:
        lo = g * csr.GROUP_SIZE
        owners = np.arange(lo, lo + self.n_owners(g))
        alive = self.graph.edge_arrays()[2]
        owners = owners[alive[owners]]
        if not len(owners):
            return 1
        longest = 0
        for p in np.unique(self.pivots(owners)).tolist():
            h, local = divmod(p, csr.GROUP_SIZE)
            if h < len(self.primary.pages):
                s, e = self.primary.pages[h].owner_bounds(local)
                longest = max(longest, e - s)
        return csr.offset_width(longest)

    def qualifies(self, bound: int, adj: int) -> bool:
        g = self.graph
        nbr = g.dst(adj) if self.direction is Direction.FW else g.src(adj)
        return self.bound.test({"e_b": bound, "e_adj": adj, "v_s": g.src(bound), "v_d": g.dst(bound), "v_nbr": nbr})

    def candidate_pairs(self, bound_eids=None):
        """All ``(bound, adj)`` pairs passing the predicate, read from the
        pivots' logical primary lists."""
        graph = self.graph
        src, dst, alive = graph.edge_arrays()
        if bound_eids is None:
            bound_eids = np.flatnonzero(alive)
        bound_eids = np.asarray(bound_eids, dtype=np.int64)
        pivots = self.pivots(bound_eids)
        lists = {}
        for p in np.unique(pivots).tolist():
            lists[p] = self.primary.get_list(p).edge_ids
        lengths = np.array([len(lists[p]) for p in pivots.tolist()], dtype=np.int64)
        owners = np.repeat(bound_eids, lengths)
        adj = np.concatenate([lists[p] for p in pivots.tolist()]) if len(pivots) else np.zeros(0, np.int64)
        adj = adj.astype(np.int64)
        nbr = dst[adj] if self.direction is Direction.FW else src[adj]
        env = {"e_b": owners, "e_adj": adj, "v_s": src[owners], "v_d": dst[owners], "v_nbr": nbr}
        keep = self.bound.mask(env, len(adj))
        return owners[keep], adj[keep]

    def rebuild(self):
        started = time.perf_counter()
        owners, adj = self.candidate_pairs()
        if self.cap is not None and len(adj) > self.cap:
            raise IndexTooLarge(
                f"view {self.name} would index {len(adj)} edges, above the cap of {self.cap}"
            )
        self.load(owners, adj)
        self.build_seconds = time.perf_counter() - started

    def stale(self, params=None) -> bool:
        if csr.keyspaces_for(self.graph, self.config.partitioning) != self.keyspaces:
            return True
        return resolve_predicate(self.config.predicate, self.graph, EP_VARS, params) != self.predicate

    def total_indexed_edges(self) -> int:
        return self.total_entries()

    def memory_usage(self) -> dict:
        return {
            "index": self.name,
            "kind": self.kind.value,
            "indexed_edges": self.total_indexed_edges(),
            "offset_bytes": self.offset_bytes(),
            "level_bytes": self.level_bytes(),
        }


def create_edge_index(graph, primaries, config: IndexConfig, name=None, params=None,
                      cap="default") -> EdgePartitionedIndex:
    """Build a 2-hop view index.

    ``primaries`` maps Direction -> PrimaryIndex.  ``cap`` bounds the total
    number of indexed entries: ``"default"`` is ten times the live edge
    count, None disables the check.
    """
    if config.kind is not IndexKind.EDGE:
        raise InvalidConfig("create_edge_index() takes an edge-partitioned configuration")
    validate(config, graph.catalog)
    primary = primaries.get(config.edge_kind.direction)
    if primary is None:
        raise MissingPrimaryDirection(f"no {config.edge_kind.direction.value} primary index")
    if cap == "default":
        cap = DEFAULT_CAP_FACTOR * graph.num_edges
    predicate = resolve_predicate(config.predicate, graph, EP_VARS, params)
    index = EdgePartitionedIndex(graph, config, primary, name or "ep", predicate, cap)
    index.rebuild()
    return index


def lookup_edge(index, e, key_path=()):
    """``(edge_id, nbr_id)`` pairs of ``e``'s list in index order."""
    return [(eid, nbr) for eid, nbr, _ in index.lookup(e, key_path)]


def total_indexed_edges(index) -> int:
    return index.total_indexed_edges()
