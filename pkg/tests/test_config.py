import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from aplus.config import (NBR_ID, Atom, BoundPredicate, Direction, EdgeAdjacencyKind, IndexConfig,
                          IndexKind, Param, PartitionKey, Predicate, PropRef, SortKey, Subject,
                          default_primary_config, resolve_predicate, to_ddl, validate)
from aplus.ddl import parse
from aplus.errors import (InvalidConfig, NonCategoricalPartitionKey, QueryError, SingleEdgePredicate,
                          UnknownProperty)
from aplus.graph import Attachment

E_ADJ, V_NBR = Subject.ADJ_EDGE, Subject.NBR_VERTEX


def vp(pred=(), part=(), sort=(NBR_ID,), direction=Direction.FW_BW):
    return IndexConfig(IndexKind.VERTEX, direction, tuple(part), tuple(sort), Predicate(tuple(pred)))


def ep(pred, kind=EdgeAdjacencyKind.DEST_FW, part=(), sort=(NBR_ID,)):
    return IndexConfig(IndexKind.EDGE, kind.direction, tuple(part), tuple(sort), Predicate(tuple(pred)), kind)


def ref(var, prop):
    return PropRef(var, prop)


def test_default_primary_layout(fin):
    cfg = default_primary_config()
    assert cfg.levels == 2 and cfg.sorted_by_nbr_id
    validate(cfg, fin.catalog)


def test_partition_key_must_be_categorical(fin):
    with pytest.raises(NonCategoricalPartitionKey):
        validate(vp(part=[PartitionKey(E_ADJ, "amt")]), fin.catalog)


def test_unknown_property_rejected(fin):
    with pytest.raises(UnknownProperty):
        validate(vp(sort=[SortKey(V_NBR, "colour")]), fin.catalog)


def test_nbr_id_sort_key_goes_last(fin):
    with pytest.raises(InvalidConfig):
        validate(vp(sort=[NBR_ID, SortKey(V_NBR, "city")]), fin.catalog)


def test_too_many_levels(fin):
    keys = [PartitionKey(E_ADJ, "label"), PartitionKey(E_ADJ, "currency"),
            PartitionKey(V_NBR, "city"), PartitionKey(V_NBR, "acc")]
    with pytest.raises(InvalidConfig):
        validate(vp(part=keys), fin.catalog)


def test_view_variables_are_checked(fin):
    with pytest.raises(InvalidConfig):
        validate(vp([Atom(ref("e_b", "amt"), "<", 3)]), fin.catalog)


def test_two_hop_needs_cross_edge_atom(fin):
    with pytest.raises(SingleEdgePredicate):
        validate(ep([Atom(ref("e_adj", "amt"), "<", 10000)]), fin.catalog)
    validate(ep([Atom(ref("e_b", "date"), "<", ref("e_adj", "date"))]), fin.catalog)


def test_primary_takes_no_predicate(fin):
    cfg = IndexConfig(IndexKind.PRIMARY, Direction.FW, predicate=Predicate.of(Atom(ref("e_adj", "amt"), ">", 1)))
    with pytest.raises(InvalidConfig):
        validate(cfg, fin.catalog)


@pytest.mark.parametrize("cfg,name", [
    (default_primary_config(), None),
    (IndexConfig(IndexKind.PRIMARY, Direction.FW,
                 (PartitionKey(E_ADJ, "label"), PartitionKey(E_ADJ, "currency")),
                 (SortKey(V_NBR, "city"), NBR_ID)), None),
    (vp([Atom(ref("e_adj", "currency"), "=", "USD"), Atom(ref("e_adj", "amt"), ">", 10000)],
        [PartitionKey(E_ADJ, "label")]), "LargeUSDTrnx"),
    (vp([Atom(ref("v_nbr", "city"), "!=", "Toronto")], direction=Direction.BW), "NotToronto"),
    (ep([Atom(ref("e_b", "date"), "<", ref("e_adj", "date")),
         Atom(ref("e_adj", "amt"), "<", ref("e_b", "amt"))],
        part=[PartitionKey(E_ADJ, "label")], sort=[SortKey(V_NBR, "city")]), "MoneyFlow"),
    (ep([Atom(ref("e_adj", "amt"), "<", ref("e_b", "amt"), Param("alpha"))],
        kind=EdgeAdjacencyKind.SOURCE_BW), "Cut"),
])
def test_ddl_round_trip(cfg, name):
    text = to_ddl(cfg, name)
    cmd = parse(text)
    assert cmd.config == cfg
    assert cmd.name == name


def test_resolution_maps_symbols_to_codes(fin):
    kinds = {"r": Attachment.EDGE, "a": Attachment.VERTEX}
    pred = Predicate.of(Atom(ref("r", "currency"), "=", "USD"),
                        Atom(ref("r", "eID"), "=", "t13"),
                        Atom(ref("a", "city"), "=", "Atlantis"))
    out = resolve_predicate(pred, fin, kinds)
    usd = fin.catalog.lookup("currency", "edge").code("USD")
    assert [a.rhs for a in out] == [usd, fin.edge_id("t13"), -1]


def test_parameters_fold_into_offsets(fin):
    kinds = {"r1": Attachment.EDGE, "r2": Attachment.EDGE}
    pred = Predicate.of(Atom(ref("r1", "amt"), "<", ref("r2", "amt"), Param("alpha")))
    with pytest.raises(QueryError):
        resolve_predicate(pred, fin, kinds)
    (atom,) = resolve_predicate(pred, fin, kinds, {"alpha": 50})
    assert atom.offset == 50


def test_canonical_flips_sides():
    a = Atom(ref("z", "amt"), "<", ref("a", "amt"), 5)
    c = a.canonical()
    assert c.lhs == ref("a", "amt") and c.op == ">" and c.offset == -5


amounts = st.lists(st.one_of(st.none(), st.integers(-5, 5)), min_size=1, max_size=12)


@settings(max_examples=60, deadline=None)
@given(amounts, st.sampled_from(["=", "!=", "<", "<=", ">", ">="]), st.integers(-5, 5), st.integers(-3, 3))
def test_mask_agrees_with_scalar_test(values, op, const, offset):
    from aplus.graph import PropertyCatalog, PropertyGraph
    cat = PropertyCatalog()
    cat.add_label("vertex", "V")
    cat.add_label("edge", "E")
    cat.define("amt", "int64", "edge")
    g = PropertyGraph(cat)
    g.add_vertex("V")
    for x in values:
        g.add_edge(0, 0, "E", {"amt": x})
    kinds = {"e": Attachment.EDGE, "f": Attachment.EDGE}
    pred = resolve_predicate(Predicate.of(Atom(ref("e", "amt"), op, const),
                                          Atom(ref("e", "amt"), op, ref("f", "amt"), offset)), g, kinds)
    bound = BoundPredicate(pred, g, kinds)
    eids = np.arange(len(values))
    partner = eids[::-1].copy()
    mask = bound.mask({"e": eids, "f": partner}, len(values))
    scalar = [bound.test({"e": int(e), "f": int(f)}) for e, f in zip(eids, partner)]
    assert mask.tolist() == scalar
    for i, x in enumerate(values):
        y = values[len(values) - 1 - i]
        if x is None or y is None:
            assert not scalar[i]
