"""The database facade: one graph, its primary indexes and every secondary view,
kept consistent under edge inserts and deletes.

Updates land in per-page buffers and are visible to reads immediately through
each index's logical view.  A primary page merge re-points every secondary
page whose offsets reference it: the dependants are snapshotted (logical
content, as edge IDs) before the merge and re-encoded against the new
physical layout afterwards.  Entries that still cannot be resolved (their
primary edge sits in another unmerged page) stay buffered.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import csr
from .config import Direction, IndexKind, default_primary_config
from .edge_index import EdgePartitionedIndex, create_edge_index
from .errors import DuplicateName, InvalidConfig, UnknownIndex
from .primary import PrimaryIndex, build, reconfigure
from .store import IndexDescriptor, IndexStore
from .vertex_index import VertexPartitionedIndex, create_vertex_index

BUFFER_CAPACITY = 32


@dataclass
class View:
    """A named secondary view: one index per direction (VP) or a single EP index."""

    name: str
    config: object
    indexes: list = field(default_factory=list)


@dataclass
class MergeReport:
    primary_pages: int = 0
    secondary_pages: int = 0
    entries: int = 0
    seconds: float = 0.0

    def as_dict(self):
        return {
            "primary_pages_merged": self.primary_pages,
            "secondary_pages_reencoded": self.secondary_pages,
            "buffered_entries_applied": self.entries,
            "seconds": round(self.seconds, 6),
        }


class Database:
    def __init__(self, graph, primary_config=None, buffer_capacity=BUFFER_CAPACITY, ep_cap="default"):
        self.graph = graph
        self.buffer_capacity = buffer_capacity
        self.ep_cap = ep_cap
        self.params: dict = {}
        self.store = IndexStore()
        self.views: dict[str, View] = {}
        self.primaries: dict[Direction, PrimaryIndex] = {}
        base = primary_config or default_primary_config()
        for d in (Direction.FW, Direction.BW):
            idx = build(graph, base.with_direction(d))
            self.primaries[d] = idx
            self.store.register(IndexDescriptor.for_index(idx, IndexKind.PRIMARY))
        graph.listeners.append(self)

    def close(self):
        if self in self.graph.listeners:
            self.graph.listeners.remove(self)

    # -- index access ------------------------------------------------------------
    @property
    def primary_config(self):
        return self.primaries[Direction.FW].config

    def secondary_indexes(self):
        return [idx for view in self.views.values() for idx in view.indexes]

    def vertex_indexes(self):
        return [i for i in self.secondary_indexes() if isinstance(i, VertexPartitionedIndex)]

    def edge_indexes(self):
        return [i for i in self.secondary_indexes() if isinstance(i, EdgePartitionedIndex)]

    def all_indexes(self):
        return list(self.primaries.values()) + self.secondary_indexes()

    def index(self, name):
        return self.store.get(name).handle

    # -- DDL ---------------------------------------------------------------------------
    def reconfigure_primary(self, config) -> float:
        """Rebuild both primary indexes under ``config`` and every view over them."""
        started = time.perf_counter()
        self.flush()
        for d in (Direction.FW, Direction.BW):
            fresh = reconfigure(self.graph, self.primaries[d], config.with_direction(d))
            self.primaries[d] = fresh
            self.store.replace(IndexDescriptor.for_index(fresh, IndexKind.PRIMARY))
        for view in list(self.views.values()):
            self._build_view(view, replace=True)
        return time.perf_counter() - started

    def create_view(self, config, name) -> View:
        if name in self.views:
            raise DuplicateName(f"a view named {name!r} already exists")
        self.flush()
        view = View(name, config)
        self._build_view(view)
        self.views[name] = view
        return view

    def _build_view(self, view, replace=False):
        """(Re)create the indexes of ``view`` over the current primaries."""
        config = view.config
        old = list(view.indexes)
        for p in self.primaries.values():
            for g in p.dirty_groups():
                self.merge_primary(p, g)
        fresh = []
        if config.kind is IndexKind.VERTEX:
            dirs = config.direction.expand()
            for d in dirs:
                iname = view.name if len(dirs) == 1 else f"{view.name}.{d.value}"
                fresh.append(create_vertex_index(self.graph, self.primaries[d], config.with_direction(d), iname, self.params))
        elif config.kind is IndexKind.EDGE:
            fresh.append(create_edge_index(self.graph, self.primaries, config, view.name, self.params, self.ep_cap))
        else:
            raise InvalidConfig("views are vertex- or edge-partitioned")
        for idx in old:
            idx.retired = True
            if idx.name in self.store:
                self.store.unregister(idx.name)
        for idx in fresh:
            kind = IndexKind.EDGE if isinstance(idx, EdgePartitionedIndex) else IndexKind.VERTEX
            self.store.register(IndexDescriptor.for_index(idx, kind, view=view.name))
        view.indexes = fresh

    def drop_view(self, name):
        view = self.views.pop(name, None)
        if view is None:
            raise UnknownIndex(f"no view named {name!r}")
        for idx in view.indexes:
            idx.retired = True
            self.store.unregister(idx.name)

    def set_param(self, name, value):
        self.params[name] = value
        self._refresh()

    # -- staleness -------------------------------------------------------------------
    def _refresh(self) -> set:
        """Rebuild anything whose keyspaces or resolved constants changed;
        returns the names of the rebuilt indexes."""
        rebuilt = set()
        for p in self.primaries.values():
            if csr.keyspaces_for(self.graph, p.config.partitioning) != p.keyspaces:
                p.load()
                self.store.replace(IndexDescriptor.for_index(p, IndexKind.PRIMARY))
                rebuilt.add(p.name)
        for view in self.views.values():
            if rebuilt & {p.name for p in self.primaries.values()} or any(
                    idx.stale(self.params) for idx in view.indexes):
                self._build_view(view, replace=True)
                rebuilt.update(idx.name for idx in view.indexes)
        return rebuilt

    # -- graph listener hooks -----------------------------------------------------------
    def on_vertex_added(self, v):
        for p in self.primaries.values():
            p.add_vertex(v)
        for idx in self.vertex_indexes():
            idx.grow()
        self._refresh()

    def on_edge_added(self, e):
        fresh = self._refresh()  # rebuilt indexes already hold e
        graph = self.graph
        touched = []
        for d, p in self.primaries.items():
            if p.name in fresh:
                continue
            owner = graph.src(e) if d is Direction.FW else graph.dst(e)
            p.buffer(owner // csr.GROUP_SIZE).inserts.append(e)
            touched.append((p, owner // csr.GROUP_SIZE))
        for idx in self.vertex_indexes():
            if idx.name in fresh:
                continue
            if idx.qualifies(e):
                owner = idx.owner_of(e)
                idx.buffer(owner // csr.GROUP_SIZE).inserts.append((owner, e))
                touched.append((idx, owner // csr.GROUP_SIZE))
        for idx in self.edge_indexes():
            if idx.name in fresh:
                continue
            idx.grow()
            # e as the adjacent edge of existing bound edges
            for b in idx.bound_edges_at(idx.adjacent_owner(e)):
                if b != e and idx.qualifies(b, e):
                    idx.buffer(b // csr.GROUP_SIZE).inserts.append((b, e))
                    touched.append((idx, b // csr.GROUP_SIZE))
            # e's own list, read from the pivot's logical primary list
            adj = idx.primary.get_list(idx.pivot_of(e)).edge_ids.tolist()
            for a in adj:
                if idx.qualifies(e, a):
                    idx.buffer(e // csr.GROUP_SIZE).inserts.append((e, a))
            touched.append((idx, e // csr.GROUP_SIZE))
        self._merge_full(touched)

    def on_edge_deleted(self, e):
        graph = self.graph
        touched = []
        for d, p in self.primaries.items():
            owner = graph.src(e) if d is Direction.FW else graph.dst(e)
            g = owner // csr.GROUP_SIZE
            p.buffer(g).tombstones.add(e)
            touched.append((p, g))
        for idx in self.vertex_indexes():
            g = idx.owner_of(e) // csr.GROUP_SIZE
            idx.buffer(g).tombstones.add(e)
            touched.append((idx, g))
        for idx in self.edge_indexes():
            pages = {b // csr.GROUP_SIZE for b in idx.bound_edges_at(idx.adjacent_owner(e))}
            for g in sorted(pages):
                idx.buffer(g).tombstones.add(e)
                touched.append((idx, g))
            g = e // csr.GROUP_SIZE
            idx.buffer(g).dropped.add(e)
            touched.append((idx, g))
        self._merge_full(touched)

    def _merge_full(self, touched):
        seen = set()
        for idx, g in touched:
            if (id(idx), g) in seen:
                continue
            seen.add((id(idx), g))
            buf = idx.buffers.get(g)
            if buf is not None and len(buf) >= self.buffer_capacity:
                if isinstance(idx, PrimaryIndex):
                    self.merge_primary(idx, g)
                else:
                    self.merge_secondary(idx, g)

    # -- merging -----------------------------------------------------------------------
    def _dependants(self, primary, g):
        """``(index, page)`` pairs whose offsets point into primary page ``g``."""
        out = []
        for idx in self.vertex_indexes():
            if idx.primary is primary and g < len(idx.pages):
                out.append((idx, g))
        for idx in self.edge_indexes():
            if idx.primary is not primary:
                continue
            owners = np.arange(idx.owner_count(), dtype=np.int64)
            if not len(owners):
                continue
            hit = owners[idx.pivots(owners) // csr.GROUP_SIZE == g]
            for page in np.unique(hit // csr.GROUP_SIZE).tolist():
                if page < len(idx.pages):
                    out.append((idx, page))
        return out

    def merge_primary(self, primary, g, report=None) -> MergeReport:
        report = report or MergeReport()
        started = time.perf_counter()
        deps = self._dependants(primary, g)
        snaps = [(idx, page, idx.snapshot(page), len(idx.buffers.get(page) or ())) for idx, page in deps]
        report.entries += len(primary.buffers.get(g) or ())
        primary.merge(g)
        report.primary_pages += 1
        for idx, page, snap, pending in snaps:
            idx.reencode(page, snap)
            report.secondary_pages += 1
            report.entries += pending
        report.seconds += time.perf_counter() - started
        return report

    def merge_secondary(self, idx, g, report=None) -> MergeReport:
        """Merge a secondary page, first merging the primary pages it points into."""
        report = report or MergeReport()
        started = time.perf_counter()
        if g >= len(idx.pages):
            return report
        lo = g * csr.GROUP_SIZE
        owners = np.arange(lo, lo + idx.n_owners(g), dtype=np.int64)
        groups = set((idx.pivots(owners) // csr.GROUP_SIZE).tolist()) if len(owners) else set()
        for h in sorted(groups):
            if idx.primary.buffers.get(h):
                self.merge_primary(idx.primary, h, report)
        buf = idx.buffers.get(g)
        if buf:
            report.entries += len(buf)
            idx.reencode(g, idx.snapshot(g))
            report.secondary_pages += 1
        report.seconds += time.perf_counter() - started
        return report

    def flush(self, index=None, page=None) -> MergeReport:
        """Merge buffers: everything, one index, or one page of one index."""
        report = MergeReport()
        if index is None:
            targets = self.all_indexes()
        else:
            targets = [self.index(index) if isinstance(index, str) else index]
        for idx in targets:
            if isinstance(idx, PrimaryIndex):
                groups = idx.dirty_groups() if page is None else [page]
                for g in groups:
                    if idx.buffers.get(g):
                        self.merge_primary(idx, g, report)
        for idx in targets:
            if not isinstance(idx, PrimaryIndex):
                pages = idx.dirty_pages() if page is None else [page]
                for g in pages:
                    if idx.buffers.get(g):
                        self.merge_secondary(idx, g, report)
        return report

    def pending(self) -> int:
        """Number of buffered changes across all indexes."""
        return sum(len(b) for idx in self.all_indexes() for b in idx.buffers.values())

    # -- statistics ----------------------------------------------------------------------
    def stats(self) -> dict:
        out = {
            "graph": {"vertices": self.graph.num_vertices, "edges": self.graph.num_edges},
            "indexes": [],
        }
        for d in self.store.descriptors():
            entry = d.as_dict()
            entry["memory"] = d.handle.memory_usage()
            entry["build_seconds"] = round(d.handle.build_seconds, 6)
            out["indexes"].append(entry)
        return out


# -- rebuild equivalence -----------------------------------------------------------------

def logical_lists(index) -> dict:
    """``owner -> [(edge id, neighbour id), ...]`` for every non-empty list."""
    if isinstance(index, PrimaryIndex):
        owners = range(index.n_vertices)
    else:
        owners = range(index.owner_count())
    out = {}
    for o in owners:
        pairs = index.get_list(o).pairs()
        if pairs:
            out[o] = pairs
    return out


def rebuilt_copy(db: Database, index):
    """A from-scratch build of ``index`` on the database's current graph."""
    graph = db.graph
    if isinstance(index, PrimaryIndex):
        return build(graph, index.config, index.name)
    primary = build(graph, index.primary.config, index.primary.name)
    if isinstance(index, VertexPartitionedIndex):
        return create_vertex_index(graph, primary, index.config, index.name, db.params)
    primaries = {index.config.edge_kind.direction: primary}
    return create_edge_index(graph, primaries, index.config, index.name, db.params, cap=None)


def equals_rebuild(db: Database, index, physical=False) -> bool:
    """Logical content (and, when ``physical``, page layouts) match a rebuild."""
    fresh = rebuilt_copy(db, index)
    if logical_lists(index) != logical_lists(fresh):
        return False
    if not physical:
        return True
    if len(index.pages) != len(fresh.pages):
        return False
    if isinstance(index, PrimaryIndex):
        for a, b in zip(index.pages, fresh.pages):
            if not (np.array_equal(a.edge_ids, b.edge_ids) and np.array_equal(a.nbr_ids, b.nbr_ids)):
                return False
            if any(not np.array_equal(x, y) for x, y in zip(a.levels, b.levels)):
                return False
        return True
    for a, b in zip(index.pages, fresh.pages):
        if a.width != b.width or not np.array_equal(a.offsets, b.offsets):
            return False
        if (a.levels is None) != (b.levels is None):
            return False
        if a.levels is not None and any(not np.array_equal(x, y) for x, y in zip(a.levels, b.levels)):
            return False
    return True

