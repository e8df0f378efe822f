"""Secondary vertex-partitioned indexes (1-hop views).

The view is every edge passing the index predicate, partitioned by its owner
vertex (source for FW, destination for BW) and then by the index's own
partitioning criteria.  Entries are offsets into the owner's primary list.

When the predicate is empty and the partitioning equals the primary's, the
index borrows the primary page's levels ("shared" mode) and stores only one
offset per edge.  Otherwise it keeps its own levels ("own" mode).
"""
from __future__ import annotations

import time

import numpy as np

from . import csr
from .config import (
    VP_VARS,
    BoundPredicate,
    Direction,
    IndexConfig,
    IndexKind,
    resolve_predicate,
    validate,
)
from .errors import InvalidConfig, MissingPrimaryDirection
from .primary import endpoints
from .secondary import OffsetListIndex

SHARED = "shared"
OWN = "own"


def offset_width(longest_list: int) -> int:
    """Bytes per offset in a group whose longest primary list has this length."""
    return csr.offset_width(longest_list)


def vp_env(graph, direction, eids):
    src, dst, _ = graph.edge_arrays()
    owner, nbr = endpoints(graph, direction, eids)
    return {"e_adj": eids, "v_s": src[eids], "v_d": dst[eids], "v_nbr": nbr}, owner


class VertexPartitionedIndex(OffsetListIndex):
    def __init__(self, graph, config, primary, name, predicate):
        super().__init__(graph, config, primary, name, predicate)
        self.shared = config.predicate.is_true and tuple(config.partitioning) == tuple(primary.config.partitioning)
        self.bound = BoundPredicate(predicate, graph, VP_VARS)

    @property
    def mode(self) -> str:
        return SHARED if self.shared else OWN

    @property
    def direction(self) -> Direction:
        return self.config.direction

    def owner_count(self) -> int:
        return self.primary.n_vertices

    def pivots(self, owners):
        return owners

    def neighbours(self, eids):
        return endpoints(self.graph, self.direction, eids)[1]

    def page_width(self, g) -> int:
        if g >= len(self.primary.pages):
            return 1
        return offset_width(self.primary.pages[g].longest_list())

    def qualifies(self, eid: int) -> bool:
        graph = self.graph
        src, dst = graph.src(eid), graph.dst(eid)
        nbr = dst if self.direction is Direction.FW else src
        return self.bound.test({"e_adj": eid, "v_s": src, "v_d": dst, "v_nbr": nbr})

    def owner_of(self, eid: int) -> int:
        return self.graph.src(eid) if self.direction is Direction.FW else self.graph.dst(eid)

    def rebuild(self):
        started = time.perf_counter()
        graph = self.graph
        eids = np.flatnonzero(graph.edge_arrays()[2])
        env, owner = vp_env(graph, self.direction, eids)
        keep = self.bound.mask(env, len(eids))
        self.load(owner[keep], eids[keep])
        self.build_seconds = time.perf_counter() - started

    def stale(self, params=None) -> bool:
        """True when catalog growth invalidated the keyspaces or constants."""
        if csr.keyspaces_for(self.graph, self.config.partitioning) != self.keyspaces:
            return True
        return resolve_predicate(self.config.predicate, self.graph, VP_VARS, params) != self.predicate

    def memory_usage(self) -> dict:
        return {
            "index": self.name,
            "mode": self.mode,
            "offset_bytes": self.offset_bytes(),
            "level_bytes": self.level_bytes(),
        }

    def group_widths(self):
        return [p.width for p in self.pages]


def create_vertex_index(graph, primary, config: IndexConfig, name=None, params=None) -> VertexPartitionedIndex:
    """Build one direction of a 1-hop view index over ``primary``.

    ``config.direction`` must be FW or BW; callers expand FW-BW themselves.
    """
    if config.kind is not IndexKind.VERTEX:
        raise InvalidConfig("create_vertex_index() takes a vertex-partitioned configuration")
    validate(config, graph.catalog)
    if config.direction is Direction.FW_BW:
        raise InvalidConfig("expand FW-BW into two single-direction indexes")
    if primary is None or primary.direction is not config.direction:
        raise MissingPrimaryDirection(f"no {config.direction.value} primary index")
    predicate = resolve_predicate(config.predicate, graph, VP_VARS, params)
    index = VertexPartitionedIndex(graph, config, primary, name or "vp", predicate)
    index.rebuild()
    return index


def lookup(index, v, key_path=()):
    return index.lookup(v, key_path)


def memory_usage(index) -> dict:
    return index.memory_usage()
