"""Nested CSR machinery shared by primary and secondary indexes.

Owners (vertices, or bound edges for edge-partitioned indexes) are grouped 64
at a time.  Inside a group each owner's entries are laid out leaf by leaf, a
leaf being one combination of partition-key slots.  Every partition criterion
uses the full keyspace of its property plus one trailing Null slot, so the
leaf of ``(owner, k1..kj)`` is found with arithmetic alone.

One offset array is kept per level.  The finest level has one entry per leaf;
level ``j`` samples it with stride ``prod(keyspaces[j:])``.  All offsets are
group relative and stored as 4-byte integers.
"""
from __future__ import annotations

import math

import numpy as np

from .config import Subject

GROUP_SIZE = 64
OFFSET_BYTES = 4


def leaves_per_owner(keyspaces) -> int:
    return math.prod(keyspaces)


def build_levels(leaf_counts: np.ndarray, keyspaces) -> list:
    """Offset arrays, coarsest first, from per-leaf entry counts of one group."""
    finest = np.zeros(len(leaf_counts) + 1, dtype=np.uint32)
    np.cumsum(leaf_counts, out=finest[1:])
    levels = []
    for j in range(len(keyspaces) + 1):
        levels.append(np.ascontiguousarray(finest[:: math.prod(keyspaces[j:])]))
    return levels


def grow_levels(levels: list, n_owners: int, keyspaces) -> list:
    """Pad offsets for owners appended to the end of a group (empty lists)."""
    out = []
    for j, lv in enumerate(levels):
        want = n_owners * math.prod(keyspaces[:j]) + 1
        if len(lv) < want:
            lv = np.concatenate([lv, np.full(want - len(lv), lv[-1], dtype=lv.dtype)])
        out.append(lv)
    return out


def resolve_slots(key_path, keyspaces):
    """Partition slots for a key path; None when some key is outside the keyspace."""
    slots = []
    for key, k in zip(key_path, keyspaces):
        if key is None:
            slots.append(k - 1)
        elif isinstance(key, (int, np.integer)) and 0 <= key < k - 1:
            slots.append(int(key))
        else:
            return None
    return slots


def level_bounds(levels: list, local: int, slots, keyspaces, counter=None):
    """``(start, end)`` of a key-path slice inside one group.

    Reads one offset pair per level walked; ``counter`` (a one-element list)
    is bumped once per level.
    """
    idx = local
    start, end = int(levels[0][idx]), int(levels[0][idx + 1])
    if counter is not None:
        counter[0] += 1
    for j, s in enumerate(slots, start=1):
        idx = idx * keyspaces[j - 1] + s
        lv = levels[j]
        start, end = int(lv[idx]), int(lv[idx + 1])
        if counter is not None:
            counter[0] += 1
    return start, end


def owner_of_positions(levels: list, n_entries: int) -> np.ndarray:
    """Group-local owner index of every entry position."""
    counts = np.diff(levels[0].astype(np.int64))
    return np.repeat(np.arange(len(counts)), counts)[:n_entries]


def leaf_of_positions(levels: list) -> np.ndarray:
    """Group-local leaf index of every entry position."""
    counts = np.diff(levels[-1].astype(np.int64))
    return np.repeat(np.arange(len(counts)), counts)


# -- per-entry keys ---------------------------------------------------------

def _subject_column(graph, subject: Subject, prop: str, eids, nbrs):
    if subject is Subject.ADJ_EDGE:
        if prop == "eID":
            return eids.astype(np.float64), np.zeros(len(eids), dtype=bool)
        values, null = graph.edge_column(prop)
        return values[eids], null[eids]
    if prop == "ID":
        return nbrs.astype(np.float64), np.zeros(len(nbrs), dtype=bool)
    values, null = graph.vertex_column(prop)
    return values[nbrs], null[nbrs]


def keyspaces_for(graph, partitioning) -> list:
    return [graph.catalog.lookup(k.prop, k.subject.attachment).keyspace + 1 for k in partitioning]


def leaf_slots(graph, partitioning, keyspaces, eids, nbrs) -> np.ndarray:
    """Owner-relative leaf index for each (edge, neighbour) entry."""
    leaf = np.zeros(len(eids), dtype=np.int64)
    for key, k in zip(partitioning, keyspaces):
        values, null = _subject_column(graph, key.subject, key.prop, eids, nbrs)
        slot = np.where(null, k - 1, values).astype(np.int64)
        if np.any(slot > k - 1):
            raise KeyspaceOverflow(key)
        leaf = leaf * k + slot
    return leaf


class KeyspaceOverflow(Exception):
    """A categorical code outgrew the keyspace an index was built with."""


def sort_columns(graph, sorting, eids, nbrs) -> list:
    """Lexsort keys, most significant first: (null flag, value) per sort key,
    then neighbour ID and edge ID as deterministic tie-breaks."""
    cols = []
    for key in sorting:
        values, null = _subject_column(graph, key.subject, key.prop, eids, nbrs)
        cols.append(null)
        cols.append(np.where(null, 0.0, values))
    cols.append(nbrs)
    cols.append(eids)
    return cols


def entry_order(major: list, graph, sorting, eids, nbrs) -> np.ndarray:
    """Permutation ordering entries by ``major`` arrays then the leaf sort."""
    keys = list(major) + sort_columns(graph, sorting, eids, nbrs)
    if not len(eids):
        return np.zeros(0, dtype=np.int64)
    return np.lexsort(keys[::-1])


def sort_value(graph, key, eid: int, nbr: int):
    """Scalar sort value of one entry for one sort key (None for Null)."""
    if key.subject is Subject.ADJ_EDGE:
        return graph.edge_value(eid, key.prop)
    return graph.vertex_value(nbr, key.prop)


def encode_group(n_owners, owner_local, leaf, keyspaces):
    """Offsets for one group from entry owners/leaves already in layout order."""
    per_owner = leaves_per_owner(keyspaces)
    counts = np.bincount(owner_local * per_owner + leaf, minlength=n_owners * per_owner)
    return build_levels(counts, keyspaces)


def level_bytes(levels: list) -> list:
    return [OFFSET_BYTES * len(lv) for lv in levels]


# -- offset lists -----------------------------------------------------------

def offset_width(longest_list: int) -> int:
    """Bytes per offset for a group whose longest primary list has this length."""
    return max(1, (int(longest_list).bit_length() + 7) // 8)


def pack_offsets(offsets: np.ndarray, width: int) -> np.ndarray:
    """Little-endian fixed-width packing into a flat uint8 array."""
    raw = np.asarray(offsets, dtype="<u8").view(np.uint8).reshape(-1, 8)
    return np.ascontiguousarray(raw[:, :width]).reshape(-1)


def unpack_offsets(packed: np.ndarray, width: int, start: int = 0, end: int | None = None) -> np.ndarray:
    n = len(packed) // width
    end = n if end is None else end
    chunk = packed[start * width : end * width].reshape(-1, width)
    if width in (1, 2, 4, 8):
        return chunk.view(f"<u{width}").reshape(-1).astype(np.int64)
    wide = np.zeros((len(chunk), 8), dtype=np.uint8)
    wide[:, :width] = chunk
    return wide.view("<u8").reshape(-1).astype(np.int64)

