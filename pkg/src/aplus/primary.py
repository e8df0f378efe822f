"""Primary forward/backward adjacency indexes stored as nested CSR pages.

Each page covers 64 consecutive vertices and holds the group's offset levels
plus its ID list: 8-byte edge IDs and 4-byte neighbour IDs, laid out owner by
owner, leaf by leaf, sorted inside every leaf.

Pages can carry an update buffer (pending inserts and tombstones).  Reads go
through :meth:`PrimaryIndex.view`, which returns the physical page when the
buffer is empty and a merged copy otherwise.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import csr
from .config import Direction, IndexConfig, IndexKind, default_primary_config, validate
from .errors import IndexRetired, InvalidConfig


@dataclass
class AdjList:
    """A slice of an ID list: parallel edge and neighbour ID arrays."""

    edge_ids: np.ndarray
    nbr_ids: np.ndarray

    def __len__(self):
        return len(self.edge_ids)

    def __iter__(self):
        return zip(self.edge_ids.tolist(), self.nbr_ids.tolist())

    def pairs(self):
        return list(self)


EMPTY = AdjList(np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int32))


@dataclass
class PrimaryPage:
    n_owners: int
    levels: list
    edge_ids: np.ndarray
    nbr_ids: np.ndarray

    def owner_bounds(self, local):
        return int(self.levels[0][local]), int(self.levels[0][local + 1])

    def longest_list(self) -> int:
        return int(np.diff(self.levels[0].astype(np.int64)).max(initial=0))


@dataclass
class UpdateBuffer:
    """Pending changes of one page. Inserts are edge IDs; tombstones too,
    since edge IDs are never reused."""

    inserts: list = field(default_factory=list)
    tombstones: set = field(default_factory=set)

    def __len__(self):
        return len(self.inserts) + len(self.tombstones)

    def clear(self):
        self.inserts.clear()
        self.tombstones.clear()


def endpoints(graph, direction: Direction, eids: np.ndarray):
    """``(owner, neighbour)`` arrays of edges for one direction."""
    src, dst, _ = graph.edge_arrays()
    if direction is Direction.FW:
        return src[eids], dst[eids]
    return dst[eids], src[eids]


def encode_pages(graph, config, keyspaces, eids, n_owners_of):
    """Lay out the given edges into pages.

    ``n_owners_of(g)`` gives the owner count of group ``g``; returns a dict
    ``g -> PrimaryPage`` for every group that owns at least one edge, plus
    empty pages for groups listed by the caller separately.
    """
    eids = np.asarray(eids, dtype=np.int64)
    owner, nbr = endpoints(graph, config.direction, eids)
    leaf = csr.leaf_slots(graph, config.partitioning, keyspaces, eids, nbr)
    order = csr.entry_order([owner, leaf], graph, config.sorting, eids, nbr)
    eids, owner, nbr, leaf = eids[order], owner[order], nbr[order], leaf[order]
    group = owner // csr.GROUP_SIZE
    pages = {}
    for g in np.unique(group).tolist():
        lo, hi = np.searchsorted(group, [g, g + 1])
        local = owner[lo:hi] - g * csr.GROUP_SIZE
        n_owners = n_owners_of(g)
        pages[g] = PrimaryPage(
            n_owners,
            csr.encode_group(n_owners, local, leaf[lo:hi], keyspaces),
            np.ascontiguousarray(eids[lo:hi]),
            np.ascontiguousarray(nbr[lo:hi].astype(np.int32)),
        )
    return pages


def empty_page(n_owners, keyspaces) -> PrimaryPage:
    levels = csr.build_levels(np.zeros(n_owners * csr.leaves_per_owner(keyspaces), dtype=np.int64), keyspaces)
    return PrimaryPage(n_owners, levels, np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int32))


class PrimaryIndex:
    """One direction of the primary adjacency index."""

    def __init__(self, graph, config: IndexConfig, name=None):
        self.graph = graph
        self.config = config
        self.name = name or f"primary-{config.direction.value.lower()}"
        self.keyspaces = csr.keyspaces_for(graph, config.partitioning)
        self.n_vertices = 0
        self.pages: list[PrimaryPage] = []
        self.buffers: dict[int, UpdateBuffer] = {}
        self._views: dict[int, PrimaryPage] = {}
        self.indirections = [0]
        self.retired = False
        self.build_seconds = 0.0

    @property
    def direction(self) -> Direction:
        return self.config.direction

    @property
    def levels(self) -> int:
        return self.config.levels

    def _n_owners(self, g):
        return min(csr.GROUP_SIZE, self.n_vertices - g * csr.GROUP_SIZE)

    def _check(self):
        if self.retired:
            raise IndexRetired(f"index {self.name} was replaced by a reconfiguration")

    # -- construction ---------------------------------------------------------
    def load(self, eids=None):
        """(Re)build every page from the graph's live edges."""
        graph = self.graph
        self.keyspaces = csr.keyspaces_for(graph, self.config.partitioning)
        self.n_vertices = graph.num_vertices
        if eids is None:
            eids = np.flatnonzero(graph.edge_arrays()[2])
        n_groups = -(-self.n_vertices // csr.GROUP_SIZE)
        built = encode_pages(graph, self.config, self.keyspaces, eids, self._n_owners)
        self.pages = [built.get(g) or empty_page(self._n_owners(g), self.keyspaces) for g in range(n_groups)]
        self.buffers.clear()
        self._views.clear()

    # -- reads ------------------------------------------------------------------
    def view(self, g) -> PrimaryPage:
        """Logical content of page ``g`` (physical page merged with its buffer)."""
        buf = self.buffers.get(g)
        if not buf:
            return self.pages[g]
        cached = self._views.get(g)
        if cached is None:
            cached = self._merged(g)
            self._views[g] = cached
        return cached

    def _merged(self, g) -> PrimaryPage:
        page, buf = self.pages[g], self.buffers[g]
        eids = np.concatenate([page.edge_ids, np.asarray(buf.inserts, dtype=np.int64)])
        if buf.tombstones:
            eids = eids[~np.isin(eids, np.fromiter(buf.tombstones, dtype=np.int64))]
        built = encode_pages(self.graph, self.config, self.keyspaces, eids, lambda _g: page.n_owners)
        return built.get(g) or empty_page(page.n_owners, self.keyspaces)

    def bounds(self, v, key_path=(), physical=False):
        """``(page, start, end)`` of the slice for ``v`` at ``key_path``,
        or None when some key lies outside the keyspace."""
        self._check()
        if len(key_path) > len(self.keyspaces):
            raise InvalidConfig(f"key path longer than the {len(self.keyspaces)} partition levels")
        if not 0 <= v < self.n_vertices:
            return None
        slots = csr.resolve_slots(key_path, self.keyspaces)
        if slots is None:
            return None
        g, local = divmod(int(v), csr.GROUP_SIZE)
        page = self.pages[g] if physical else self.view(g)
        start, end = csr.level_bounds(page.levels, local, slots, self.keyspaces, self.indirections)
        return page, start, end

    def get_list(self, v, key_path=()) -> AdjList:
        """Slice of ``v``'s list at ``key_path``; shorter paths give coarser slices."""
        hit = self.bounds(v, key_path)
        if hit is None:
            return EMPTY
        page, start, end = hit
        self.indirections[0] += 1
        return AdjList(page.edge_ids[start:end], page.nbr_ids[start:end])

    def leaf_lists(self, v):
        """Yield ``(slots, AdjList)`` for every leaf of ``v`` (diagnostics/tests)."""
        g, local = divmod(int(v), csr.GROUP_SIZE)
        page = self.view(g)
        per_owner = csr.leaves_per_owner(self.keyspaces)
        finest = page.levels[-1]
        for leaf in range(per_owner):
            idx = local * per_owner + leaf
            s, e = int(finest[idx]), int(finest[idx + 1])
            slots = []
            rest = leaf
            for k in reversed(self.keyspaces):
                rest, s_ = divmod(rest, k)
                slots.append(s_)
            yield tuple(reversed(slots)), AdjList(page.edge_ids[s:e], page.nbr_ids[s:e])

    def total_edges(self) -> int:
        return sum(len(self.view(g).edge_ids) for g in range(len(self.pages)))

    # -- maintenance hooks ------------------------------------------------------
    def buffer(self, g) -> UpdateBuffer:
        self._views.pop(g, None)
        return self.buffers.setdefault(g, UpdateBuffer())

    def add_vertex(self, v):
        self.n_vertices = max(self.n_vertices, v + 1)
        g = v // csr.GROUP_SIZE
        while len(self.pages) <= g:
            self.pages.append(empty_page(0, self.keyspaces))
        for h in range(len(self.pages)):
            page = self.pages[h]
            want = self._n_owners(h)
            if page.n_owners < want:
                page.levels = csr.grow_levels(page.levels, want, self.keyspaces)
                page.n_owners = want
                self._views.pop(h, None)

    def merge(self, g):
        """Fold page ``g``'s buffer into its physical page."""
        if self.buffers.get(g):
            self.pages[g] = self.view(g)
        self.buffers.pop(g, None)
        self._views.pop(g, None)

    def dirty_groups(self):
        return sorted(g for g, b in self.buffers.items() if b)

    # -- accounting ---------------------------------------------------------------
    def memory_usage(self) -> dict:
        n_levels = len(self.keyspaces) + 1
        level_bytes = [0] * n_levels
        idlist = 0
        for page in self.pages:
            for j, b in enumerate(csr.level_bytes(page.levels)):
                level_bytes[j] += b
            idlist += page.edge_ids.nbytes + page.nbr_ids.nbytes
        return {
            "index": self.name,
            "idlist_bytes": idlist,
            "level_bytes": level_bytes,
            "total": idlist + sum(level_bytes),
        }


def build(graph, config: IndexConfig | None = None, name=None) -> PrimaryIndex:
    config = config or default_primary_config()
    if config.kind is not IndexKind.PRIMARY:
        raise InvalidConfig("build() takes a primary index configuration")
    validate(config, graph.catalog)
    started = time.perf_counter()
    index = PrimaryIndex(graph, config, name)
    index.load()
    index.build_seconds = time.perf_counter() - started
    return index


def reconfigure(graph, index: PrimaryIndex, new_config: IndexConfig) -> PrimaryIndex:
    """Build a replacement index and retire the old one.

    The replacement's ``build_seconds`` is the reconfiguration time.
    """
    new_config = new_config.with_direction(index.direction)
    fresh = build(graph, new_config, index.name)
    index.retired = True
    return fresh


def memory_usage(index) -> dict:
    return index.memory_usage()
