import numpy as np
import pytest

from aplus.config import NBR_ID, Atom, Predicate, PropRef, SortKey, Subject
from aplus.ddl import parse, parse_query
from aplus.errors import QueryError, SortMismatch, UnboundVariable
from aplus.fixtures import random_graph
from aplus.maintenance import Database
from aplus.optimizer import Plan, Step
from aplus.query import (Accessor, ExtendIntersect, Filter, MultiExtend, PreparedQuery, QueryGraph, Scan,
                         Stats, execute)

from oracles import as_match_set, brute_force_matches

CITY = SortKey(Subject.NBR_VERTEX, "city")


def acc(db, index, bound, edge, target, key_path=(), residual=Predicate(), resort=False):
    d = db.store.get(index)
    return Accessor(index, d.kind.value, d.handle, bound, edge, target, tuple(key_path), residual, 1.0,
                    d.sorting, resort)


def run(prepared, *ops):
    plan = Plan(prepared, [Step(op, 0.0, 0.0) for op in ops])
    return execute(plan)


def triangle_query():
    q = QueryGraph()
    q.add_edge("a", "b", name="r1")
    q.add_edge("b", "c", name="r2")
    q.add_edge("a", "c", name="r3")
    return q


def test_triangle_by_intersection_matches_oracle(rng):
    g = random_graph(rng, 25, 150)
    db = Database(g)
    q = triangle_query()
    prepared = PreparedQuery(q, g)
    got, stats = run(
        prepared,
        Scan("a"),
        ExtendIntersect("b", [acc(db, "primary-fw", "a", "r1", "b")]),
        ExtendIntersect("c", [acc(db, "primary-fw", "b", "r2", "c", resort=True),
                              acc(db, "primary-fw", "a", "r3", "c", resort=True)]),
    )
    assert as_match_set(got) == brute_force_matches(g, q)
    assert stats.matches == len(got)


def test_partial_key_path_is_not_id_sorted(rng):
    # whole-vertex slices of a label-partitioned primary are sorted per label only
    g = random_graph(rng, 25, 150)
    db = Database(g)
    prepared = PreparedQuery(triangle_query(), g)
    op = ExtendIntersect("c", [acc(db, "primary-fw", "b", "r2", "c"), acc(db, "primary-fw", "a", "r3", "c")])
    with pytest.raises(SortMismatch):
        run(prepared, Scan("a"), ExtendIntersect("b", [acc(db, "primary-fw", "a", "r1", "b")]), op)


def test_intersection_needs_id_sorted_lists(fin):
    db = Database(fin)
    db.create_view(parse("CREATE 1-HOP VIEW C MATCH v_s-[e_adj]->v_d INDEX AS FW SORT BY v_nbr.city").config, "C")
    prepared = PreparedQuery(triangle_query(), fin)
    op = ExtendIntersect("c", [acc(db, "C", "b", "r2", "c"), acc(db, "primary-fw", "a", "r3", "c", resort=True)])
    with pytest.raises(SortMismatch):
        list(op.run(iter([{"a": 1, "b": 2, "r1": 4}]), prepared, Stats()))
    op.accessors[0].resort = True
    out = list(op.run(iter([{"a": 1, "b": 2, "r1": 4}]), prepared, Stats()))
    assert {(m["c"], m["r2"], m["r3"]) for m in out} == set()


def test_parallel_query_edges_bind_distinct_edges(fin):
    # v5 -> v8 has two DD transfers (t9, t18); two query edges must take both, in either order
    q = parse_query("MATCH a-[x]->b, a-[y]->b WHERE a.ID = 5, b.ID = 8")
    db = Database(fin)
    dd = fin.catalog.edge_labels.code("DD")
    prepared = PreparedQuery(q, fin)
    got, _ = run(
        prepared,
        Scan("a", Predicate.of(*prepared.atoms_over({"a"}))),
        ExtendIntersect("b", [acc(db, "primary-fw", "a", "x", "b", key_path=(dd,)),
                              acc(db, "primary-fw", "a", "y", "b", key_path=(dd,))]),
        Filter(Predicate.of(*prepared.atoms_over({"b"}))),
    )
    pairs = {(fin.edge_name(m["x"]), fin.edge_name(m["y"])) for m in got}
    assert pairs == {("t9", "t18"), ("t18", "t9")}
    assert as_match_set(got) == brute_force_matches(fin, q)


def test_residual_applied_to_list(fin):
    db = Database(fin)
    q = parse_query("MATCH a-[r]->b WHERE a.ID = 5, r.amt > 5000")
    prepared = PreparedQuery(q, fin)
    residual = Predicate.of(*[a for a in prepared.predicate if a.lhs.var == "r"])
    got, stats = run(prepared, Scan("a", Predicate.of(*prepared.atoms_over({"a"}))),
                     ExtendIntersect("b", [acc(db, "primary-fw", "a", "r", "b", residual=residual)]))
    assert {fin.edge_name(m["r"]) for m in got} == {"t2", "t3", "t4", "t16", "t18"}
    assert stats.edges_scanned == 9


def test_key_path_restricts_list(fin):
    db = Database(fin)
    q = parse_query("MATCH a-[r:DD]->b WHERE a.ID = 5")
    prepared = PreparedQuery(q, fin)
    dd = fin.catalog.edge_labels.code("DD")
    got, stats = run(prepared, Scan("a", Predicate.of(*prepared.atoms_over({"a"}))),
                     ExtendIntersect("b", [acc(db, "primary-fw", "a", "r", "b", key_path=(dd,))]))
    assert len(got) == 5 and stats.edges_scanned == 5


def test_edge_scan(fin):
    q = parse_query("MATCH a-[r]->b WHERE r.eID = t13")
    prepared = PreparedQuery(q, fin)
    got, _ = run(prepared, Scan(edge="r", src="a", dst="b", edge_id=fin.edge_id("t13"),
                                predicate=prepared.predicate))
    assert got == [{"r": 12, "a": 2, "b": 5}]


def test_multi_extend_equijoins_on_city(fin):
    db = Database(fin)
    db.create_view(parse("CREATE 1-HOP VIEW C MATCH v_s-[e_adj]->v_d INDEX AS FW-BW SORT BY v_nbr.city").config,
                   "C")
    q = parse_query("MATCH a-[x]->b, a-[y]->c WHERE a.ID = 5, b.city = c.city")
    prepared = PreparedQuery(q, fin)
    op = MultiExtend(["b", "c"], "city", [acc(db, "C.FW", "a", "x", "b"), acc(db, "C.FW", "a", "y", "c")])
    got, _ = run(prepared, Scan("a", Predicate.of(*prepared.atoms_over({"a"}))), op)
    assert as_match_set(got) == brute_force_matches(fin, q)
    # the same join over lists sorted by neighbour ID needs a resort
    bad = MultiExtend(["b", "c"], "city", [acc(db, "primary-fw", "a", "x", "b"),
                                           acc(db, "primary-fw", "a", "y", "c")])
    with pytest.raises(SortMismatch):
        run(prepared, Scan("a", Predicate.of(*prepared.atoms_over({"a"}))), bad)
    for a in bad.accessors:
        a.resort = True
    got2, _ = run(prepared, Scan("a", Predicate.of(*prepared.atoms_over({"a"}))), bad)
    assert as_match_set(got2) == as_match_set(got)


def test_filter_reports_unbound_variables(fin):
    q = parse_query("MATCH a-[r]->b WHERE a.city = b.city")
    prepared = PreparedQuery(q, fin)
    with pytest.raises(UnboundVariable):
        run(prepared, Scan("a"), Filter(prepared.predicate))


def test_query_validation():
    q = QueryGraph()
    q.add_vertex("a")
    q.add_vertex("b")
    with pytest.raises(QueryError):
        q.validate()
    q2 = QueryGraph()
    q2.add_edge("a", "a")
    with pytest.raises(QueryError):
        q2.validate()
    q3 = QueryGraph()
    q3.add_edge("a", "b", name="r")
    q3.where(Atom(PropRef("z", "city"), "=", 1))
    with pytest.raises(UnboundVariable):
        q3.validate()


def test_vertices_may_coincide(fin):
    # v2 -> v5 -> v2 closes through t13 and t... ; the path a->b->c may end where it started
    db = Database(fin)
    q = parse_query("MATCH a-[r1]->b-[r2]->c WHERE a.ID = 2")
    from aplus.optimizer import optimize
    got, _ = execute(optimize(q, db.store, fin))
    assert any(m["c"] == 2 for m in got)
    assert as_match_set(got) == brute_force_matches(fin, q)
