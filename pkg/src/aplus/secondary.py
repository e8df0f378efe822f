"""Offset-list storage shared by vertex- and edge-partitioned secondary indexes.

A secondary index stores, per owner, fixed-width offsets into one primary
list (the owner's own list for vertex-partitioned indexes, the pivot
vertex's list for edge-partitioned ones).  Offsets are relative to the start
of that full primary list, so they stay small and never depend on where the
list sits inside its page.

Like primary pages, secondary pages can carry buffered inserts (stored as
edge IDs, since primary positions move on merges), tombstones and, for
edge-partitioned indexes, dropped owners whose bound edge was deleted.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import csr
from .primary import AdjList, EMPTY
from .errors import IndexRetired, InvalidConfig


@dataclass
class OffsetPage:
    n_owners: int
    levels: list | None  # None: the page borrows the primary page's levels
    offsets: np.ndarray  # packed little-endian, ``width`` bytes per entry
    width: int

    @property
    def n_entries(self) -> int:
        return len(self.offsets) // self.width


@dataclass
class ResolvedPage:
    """Logical page content with offsets already turned into IDs."""

    levels: list
    owner_local: np.ndarray
    edge_ids: np.ndarray
    nbr_ids: np.ndarray
    offsets: np.ndarray  # -1 for entries still sitting in the buffer


@dataclass
class SecondaryBuffer:
    inserts: list = field(default_factory=list)  # (owner, edge id)
    tombstones: set = field(default_factory=set)  # deleted edge ids
    dropped: set = field(default_factory=set)  # owners whose list is gone

    def __len__(self):
        return len(self.inserts) + len(self.tombstones) + len(self.dropped)


def _page_positions(page):
    """Sorted edge IDs of a primary page with their owner-relative positions."""
    cached = getattr(page, "_positions", None)
    if cached is None:
        owner = csr.owner_of_positions(page.levels, len(page.edge_ids))
        rel = np.arange(len(page.edge_ids)) - page.levels[0].astype(np.int64)[owner]
        order = np.argsort(page.edge_ids, kind="stable")
        cached = (page.edge_ids[order], rel[order], owner[order])
        page._positions = cached
    return cached


class OffsetListIndex:
    """Base class; subclasses define owners, pivots and the predicate env."""

    shared = False

    def __init__(self, graph, config, primary, name, predicate):
        self.graph = graph
        self.config = config
        self.primary = primary
        self.name = name
        self.predicate = predicate  # resolved, canonical
        self.keyspaces = csr.keyspaces_for(graph, config.partitioning)
        self.pages: list[OffsetPage] = []
        self.buffers: dict[int, SecondaryBuffer] = {}
        self._views: dict[int, ResolvedPage] = {}
        self.indirections = [0]
        self.build_seconds = 0.0
        self.retired = False

    # -- subclass hooks -----------------------------------------------------------
    def owner_count(self) -> int:
        raise NotImplementedError

    def pivots(self, owners: np.ndarray) -> np.ndarray:
        """Vertex whose primary list the owner's offsets point into."""
        raise NotImplementedError

    def neighbours(self, eids: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def page_width(self, g) -> int:
        raise NotImplementedError

    # -- geometry -------------------------------------------------------------------
    def n_owners(self, g) -> int:
        return max(0, min(csr.GROUP_SIZE, self.owner_count() - g * csr.GROUP_SIZE))

    def _page_levels(self, g):
        page = self.pages[g]
        if page.levels is not None:
            return page.levels
        return self.primary.pages[g].levels

    def _check(self):
        if self.retired:
            raise IndexRetired(f"index {self.name} was dropped")

    # -- encoding -------------------------------------------------------------------
    def encode(self, g, owners: np.ndarray, eids: np.ndarray):
        """Re-encode page ``g`` from logical entries.

        Entries whose edge is not yet in the pivot's physical primary list
        are returned (as ``(owner, eid)`` pairs) for the caller to keep
        buffered.
        """
        owners = np.asarray(owners, dtype=np.int64)
        eids = np.asarray(eids, dtype=np.int64)
        rel = self._relative_positions(self.pivots(owners), eids)
        ok = rel >= 0
        leftover = list(zip(owners[~ok].tolist(), eids[~ok].tolist()))
        owners, eids, rel = owners[ok], eids[ok], rel[ok]
        nbrs = self.neighbours(eids)
        local = owners - g * csr.GROUP_SIZE
        leaf = csr.leaf_slots(self.graph, self.config.partitioning, self.keyspaces, eids, nbrs)
        order = csr.entry_order([local, leaf], self.graph, self.config.sorting, eids, nbrs)
        n_owners = self.n_owners(g)
        levels = None if self.shared else csr.encode_group(n_owners, local[order], leaf[order], self.keyspaces)
        width = self.page_width(g)
        page = OffsetPage(n_owners, levels, csr.pack_offsets(rel[order], width), width)
        while len(self.pages) <= g:
            self.pages.append(OffsetPage(0, None if self.shared else [np.zeros(1, np.uint32)] * (len(self.keyspaces) + 1), np.zeros(0, np.uint8), 1))
        self.pages[g] = page
        self._views.pop(g, None)
        return leftover

    def _relative_positions(self, pivots, eids) -> np.ndarray:
        rel = np.full(len(eids), -1, dtype=np.int64)
        if not len(eids):
            return rel
        groups = pivots // csr.GROUP_SIZE
        for h in np.unique(groups).tolist():
            if h >= len(self.primary.pages):
                continue
            sel = np.flatnonzero(groups == h)
            sorted_eids, sorted_rel, sorted_owner = _page_positions(self.primary.pages[h])
            if not len(sorted_eids):
                continue
            at = np.searchsorted(sorted_eids, eids[sel])
            at = np.minimum(at, len(sorted_eids) - 1)
            hit = (sorted_eids[at] == eids[sel]) & (sorted_owner[at] == pivots[sel] - h * csr.GROUP_SIZE)
            rel[sel[hit]] = sorted_rel[at[hit]]
        return rel

    def load(self, entries_owner, entries_eid):
        """Encode every page from scratch; unresolvable entries are buffered."""
        self.keyspaces = csr.keyspaces_for(self.graph, self.config.partitioning)
        self.pages = []
        self.buffers = {}
        self._views = {}
        n_pages = -(-self.owner_count() // csr.GROUP_SIZE)
        order = np.argsort(entries_owner, kind="stable")
        entries_owner = np.asarray(entries_owner, dtype=np.int64)[order]
        entries_eid = np.asarray(entries_eid, dtype=np.int64)[order]
        page_of = entries_owner // csr.GROUP_SIZE
        bounds = np.searchsorted(page_of, np.arange(n_pages + 1))
        for g in range(n_pages):
            lo, hi = bounds[g], bounds[g + 1]
            leftover = self.encode(g, entries_owner[lo:hi], entries_eid[lo:hi])
            if leftover:
                self.buffer(g).inserts.extend(leftover)

    # -- reads ------------------------------------------------------------------------
    def resolve_physical(self, g) -> ResolvedPage:
        page = self.pages[g]
        levels = self._page_levels(g)
        n = page.n_entries
        rel = csr.unpack_offsets(page.offsets, page.width)
        local = csr.owner_of_positions(levels, n)
        owners = local + g * csr.GROUP_SIZE
        pivots = self.pivots(owners)
        eids = np.zeros(n, dtype=np.int64)
        nbrs = np.zeros(n, dtype=np.int32)
        groups = pivots // csr.GROUP_SIZE
        for h in np.unique(groups).tolist():
            sel = groups == h
            ppage = self.primary.pages[h]
            pos = ppage.levels[0].astype(np.int64)[pivots[sel] - h * csr.GROUP_SIZE] + rel[sel]
            eids[sel] = ppage.edge_ids[pos]
            nbrs[sel] = ppage.nbr_ids[pos]
        return ResolvedPage(levels, local, eids, nbrs, rel)

    def view(self, g) -> ResolvedPage:
        cached = self._views.get(g)
        if cached is not None:
            return cached
        phys = self.resolve_physical(g)
        buf = self.buffers.get(g)
        if not buf:
            result = phys
        else:
            owners, eids, rel = self._logical_entries(g, phys, buf)
            nbrs = self.neighbours(eids)
            local = owners - g * csr.GROUP_SIZE
            leaf = csr.leaf_slots(self.graph, self.config.partitioning, self.keyspaces, eids, nbrs)
            order = csr.entry_order([local, leaf], self.graph, self.config.sorting, eids, nbrs)
            levels = csr.encode_group(self.n_owners(g), local[order], leaf[order], self.keyspaces)
            result = ResolvedPage(levels, local[order], eids[order], nbrs[order].astype(np.int32), rel[order])
        self._views[g] = result
        return result

    def _logical_entries(self, g, phys, buf):
        owners = phys.owner_local + g * csr.GROUP_SIZE
        eids, rel = phys.edge_ids, phys.offsets
        if buf.inserts:
            ins = np.asarray(buf.inserts, dtype=np.int64).reshape(-1, 2)
            owners = np.concatenate([owners, ins[:, 0]])
            eids = np.concatenate([eids, ins[:, 1]])
            rel = np.concatenate([rel, np.full(len(ins), -1, dtype=np.int64)])
        keep = np.ones(len(eids), dtype=bool)
        if buf.tombstones:
            keep &= ~np.isin(eids, np.fromiter(buf.tombstones, dtype=np.int64))
        if buf.dropped:
            keep &= ~np.isin(owners, np.fromiter(buf.dropped, dtype=np.int64))
        return owners[keep], eids[keep], rel[keep]

    def bounds(self, owner, key_path=()):
        self._check()
        if len(key_path) > len(self.keyspaces):
            raise InvalidConfig(f"key path longer than the {len(self.keyspaces)} partition levels")
        if not 0 <= owner < self.owner_count():
            return None
        slots = csr.resolve_slots(key_path, self.keyspaces)
        if slots is None:
            return None
        g, local = divmod(int(owner), csr.GROUP_SIZE)
        if g >= len(self.pages):
            return None
        view = self.view(g)
        start, end = csr.level_bounds(view.levels, local, slots, self.keyspaces, self.indirections)
        return view, start, end

    def get_list(self, owner, key_path=()) -> AdjList:
        hit = self.bounds(owner, key_path)
        if hit is None:
            return EMPTY
        view, start, end = hit
        self.indirections[0] += 1
        return AdjList(view.edge_ids[start:end], view.nbr_ids[start:end])

    def lookup(self, owner, key_path=()):
        """Yield ``(edge_id, nbr_id, offset)`` in index order; offset is None
        for entries not merged yet."""
        hit = self.bounds(owner, key_path)
        if hit is None:
            return
        view, start, end = hit
        for i in range(start, end):
            self.indirections[0] += 1
            off = int(view.offsets[i])
            yield int(view.edge_ids[i]), int(view.nbr_ids[i]), (None if off < 0 else off)

    def snapshot(self, g):
        """Logical ``(owners, eids)`` of page ``g``, taken before a primary merge."""
        view = self.view(g)
        return view.owner_local + g * csr.GROUP_SIZE, view.edge_ids.copy()

    # -- maintenance ----------------------------------------------------------------
    def buffer(self, g) -> SecondaryBuffer:
        self._views.pop(g, None)
        return self.buffers.setdefault(g, SecondaryBuffer())

    def invalidate(self, g=None):
        if g is None:
            self._views.clear()
        else:
            self._views.pop(g, None)

    def grow(self):
        """Extend pages after new owners appeared (their lists are empty)."""
        n_pages = -(-self.owner_count() // csr.GROUP_SIZE)
        for g in range(n_pages):
            want = self.n_owners(g)
            if g >= len(self.pages):
                levels = None if self.shared else csr.build_levels(
                    np.zeros(want * csr.leaves_per_owner(self.keyspaces), dtype=np.int64), self.keyspaces)
                self.pages.append(OffsetPage(want, levels, np.zeros(0, np.uint8), 1))
            elif self.pages[g].n_owners < want:
                page = self.pages[g]
                if page.levels is not None:
                    page.levels = csr.grow_levels(page.levels, want, self.keyspaces)
                page.n_owners = want
            else:
                continue
            self._views.pop(g, None)

    def dirty_pages(self):
        return sorted(g for g, b in self.buffers.items() if b)

    def reencode(self, g, snapshot):
        """Rewrite page ``g`` from a snapshot; entries still unresolvable stay buffered."""
        owners, eids = snapshot
        leftover = self.encode(g, owners, eids)
        self.buffers.pop(g, None)
        if leftover:
            self.buffer(g).inserts.extend(leftover)

    # -- accounting ----------------------------------------------------------------------
    def offset_bytes(self) -> int:
        return sum(len(p.offsets) for p in self.pages)

    def level_bytes(self) -> int:
        if self.shared:
            return 0
        return sum(sum(csr.level_bytes(p.levels)) for p in self.pages if p.levels is not None)

    def total_entries(self) -> int:
        return sum(len(self.view(g).edge_ids) for g in range(len(self.pages)))
