import numpy as np
import pytest

from aplus import csr, primary
from aplus.config import (NBR_ID, Direction, IndexConfig, IndexKind, PartitionKey, SortKey, Subject,
                          default_primary_config)
from aplus.errors import IndexRetired, InvalidConfig
from aplus.fixtures import random_graph, sparse_graph

from conftest import names

W, DD = 0, 1
LABEL_CURRENCY = IndexConfig(
    IndexKind.PRIMARY, Direction.FW,
    (PartitionKey(Subject.ADJ_EDGE, "label"), PartitionKey(Subject.ADJ_EDGE, "currency")),
    (SortKey(Subject.NBR_VERTEX, "city"), NBR_ID),
)


def test_fixture_forward_list_of_v2(fin):
    fw = primary.build(fin)
    lst = fw.get_list(2)
    assert names(fin, lst.edge_ids) == {"t7", "t8", "t13"}
    assert lst.nbr_ids.tolist() == [3, 5, 6]
    assert names(fin, fw.get_list(2, (W,)).edge_ids) == {"t7", "t8", "t13"}
    assert len(fw.get_list(2, (DD,))) == 0


def test_backward_list_of_v2(fin):
    bw = primary.build(fin, default_primary_config(Direction.BW))
    assert names(fin, bw.get_list(2).edge_ids) == {"t5", "t6", "t15", "t17"}
    assert names(fin, bw.get_list(2, (DD,)).edge_ids) == {"t6", "t15"}


def test_label_then_currency_partitions(fin):
    fw = primary.build(fin, LABEL_CURRENCY)
    usd = fin.catalog.lookup("currency", "edge").code("USD")
    eur = fin.catalog.lookup("currency", "edge").code("EUR")
    assert names(fin, fw.get_list(5, (W, usd)).edge_ids) == {"t2", "t10", "t16"}
    assert names(fin, fw.get_list(5, (W, eur)).edge_ids) == {"t3"}
    assert names(fin, fw.get_list(5, (DD,)).edge_ids) == {"t4", "t9", "t11", "t18", "t19"}
    # nested slices nest
    whole = fw.get_list(5).edge_ids.tolist()
    assert set(fw.get_list(5, (W,)).edge_ids.tolist()) <= set(whole)


def test_sorted_by_city_then_id(fin):
    fw = primary.build(fin, LABEL_CURRENCY)
    for v in range(fin.num_vertices):
        for slots, leaf in fw.leaf_lists(v):
            keys = [(fin.vertex_value(n, "city"), n) for n in leaf.nbr_ids.tolist()]
            assert keys == sorted(keys)


def test_out_of_range_keys_give_empty_lists(fin):
    fw = primary.build(fin)
    assert len(fw.get_list(2, (99,))) == 0
    assert len(fw.get_list(500)) == 0
    with pytest.raises(InvalidConfig):
        fw.get_list(2, (0, 0))


def test_null_partition(rng):
    g = random_graph(rng, 30, 200, null_rate=0.3)
    cfg = IndexConfig(IndexKind.PRIMARY, Direction.FW, (PartitionKey(Subject.ADJ_EDGE, "currency"),))
    fw = primary.build(g, cfg)
    for v in range(g.num_vertices):
        nulls = fw.get_list(v, (None,)).edge_ids.tolist()
        assert sorted(nulls) == sorted(e for e in g.out_edges(v) if g.edge_value(e, "currency") is None)


def test_every_edge_once_per_direction(rng):
    g = random_graph(rng, 100, 700)
    for d in (Direction.FW, Direction.BW):
        idx = primary.build(g, default_primary_config(d))
        seen = np.concatenate([idx.get_list(v).edge_ids for v in range(g.num_vertices)])
        assert sorted(seen.tolist()) == g.edges()


def test_idlist_costs_twelve_bytes_per_edge(rng):
    g = sparse_graph(rng, 300, 5)
    fw = primary.build(g)
    mem = fw.memory_usage()
    assert mem["idlist_bytes"] == 12 * g.num_edges
    groups = -(-g.num_vertices // csr.GROUP_SIZE)
    # one uint32 per offset slot: per group owners+1 on the vertex level, owners*k+1 on the label level
    k = fw.keyspaces[0]
    expected = [4 * (g.num_vertices + groups), 4 * (g.num_vertices * k + groups)]
    assert mem["level_bytes"] == expected


@pytest.mark.parametrize("levels_cfg", [
    default_primary_config(),
    IndexConfig(IndexKind.PRIMARY, Direction.FW, ()),
    LABEL_CURRENCY,
])
def test_lookup_walks_levels_plus_one_offsets(fin, levels_cfg):
    idx = primary.build(fin, levels_cfg)
    full = tuple(0 for _ in levels_cfg.partitioning)
    before = idx.indirections[0]
    idx.get_list(5, full)
    assert idx.indirections[0] - before == levels_cfg.levels + 1


def test_reconfigure_retires_old_index(fin):
    old = primary.build(fin)
    new = primary.reconfigure(fin, old, LABEL_CURRENCY)
    assert new.config.partitioning == LABEL_CURRENCY.partitioning
    assert new.build_seconds >= 0
    with pytest.raises(IndexRetired):
        old.get_list(2)
    assert names(fin, new.get_list(2).edge_ids) == {"t7", "t8", "t13"}


def test_build_rejects_secondary_config(fin):
    with pytest.raises(InvalidConfig):
        primary.build(fin, IndexConfig(IndexKind.VERTEX, Direction.FW))
