"""End-to-end acceptance checks, one test per criterion.

Each test records a one-line verdict; the lines are printed at the end of the
pytest run and when this file is executed directly.
"""
from __future__ import annotations

import itertools
import time

import numpy as np

from aplus import primary
from aplus.config import Direction, default_primary_config
from aplus.ddl import parse, parse_query
from aplus.edge_index import create_edge_index, lookup_edge
from aplus.fixtures import financial_fixture, random_graph, sparse_graph
from aplus.maintenance import Database, equals_rebuild
from aplus.optimizer import Optimizer, optimize
from aplus.query import PreparedQuery, execute
from aplus.vertex_index import SHARED, create_vertex_index

import listings
from oracles import as_match_set, brute_force_matches
from workloads import (CONFIGS, EP_CITY, TREE3_LABELLED, QUERIES, SMALL_QUERIES, VP_CITY, apply, random_pair,
                       random_sequence, subsumption_case, suite_graph)

REPORT: dict = {}


def record(number, title, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'}  {number}. {title}: {detail}"
    REPORT[number] = line
    print(line)
    assert ok, line


def add_views(db, *texts):
    for text in texts:
        cmd = parse(text)
        db.create_view(cmd.config, cmd.name)


def primaries(graph, config=None):
    base = config or default_primary_config()
    return {d: primary.build(graph, base.with_direction(d)) for d in (Direction.FW, Direction.BW)}


def test_criterion_1_plans_match_brute_force():
    rng = np.random.default_rng(101)
    started = time.perf_counter()
    runs = mismatches = secondary_plans = multi_extends = 0
    for _ in range(200):
        g = suite_graph(rng)
        db = Database(g, ep_cap=None)
        expected = {n: brute_force_matches(g, parse_query(t)) for n, t in QUERIES.items()}
        layered = []
        for config in ("D", "D+VP", "D+VP+EP"):
            add_views(db, *[t for t in CONFIGS[config] if t not in layered])
            layered = list(CONFIGS[config])
            for name, text in QUERIES.items():
                plan = optimize(parse_query(text), db.store, g)
                got, _ = execute(plan)
                runs += 1
                mismatches += as_match_set(got) != expected[name]
                ops = plan.explain()["operators"]
                kinds = {a["kind"] for op in ops for a in op.get("accessors", [])}
                secondary_plans += bool(kinds - {"primary"})
                multi_extends += any(op["op"] == "MultiExtend" for op in ops)
    seconds = time.perf_counter() - started
    record(1, "oracle equivalence",
           mismatches == 0 and seconds < 300,
           f"{runs} plan runs on 200 graphs, {mismatches} mismatches, {secondary_plans} plans used views, "
           f"{multi_extends} used MultiExtend, {seconds:.0f}s")


def test_criterion_2_money_flow_example():
    g = financial_fixture()
    mf = create_edge_index(g, primaries(g), parse(listings.MONEY_FLOW).config, "MoneyFlow")
    t13 = g.edge_id("t13")
    lookup = {g.edge_name(e) for e, _ in lookup_edge(mf, t13)}
    holders = {g.edge_name(b) for b in g.edges() if g.edge_id("t17") in mf.get_list(b).edge_ids.tolist()}

    scanned = {}
    for with_view in (False, True):
        db = Database(financial_fixture())
        db.set_param("alpha", 100000)
        if with_view:
            add_views(db, listings.MONEY_FLOW)
        plan = optimize(parse_query(listings.MONEY_FLOW_PATH), db.store, db.graph, db.params)
        _, stats = execute(plan)
        scanned[with_view] = stats.edges_scanned
    ok = lookup == {"t19"} and scanned == {False: 9, True: 1} and holders == {"t1", "t16"}
    record(2, "money-flow example", ok,
           f"t13 -> {sorted(lookup)}, edges scanned {scanned[True]} with view vs {scanned[False]} without, "
           f"t17 held by {sorted(holders)}")


def test_criterion_3_offset_list_bytes():
    rng = np.random.default_rng(303)
    g = sparse_graph(rng, 5000, 4)
    prims = primaries(g)
    cfg = parse("CREATE 1-HOP VIEW s MATCH v_s-[e_adj]->v_d INDEX AS FW PARTITION BY e_adj.label "
                "SORT BY v_nbr.city").config.with_direction(Direction.FW)
    longest = max(len(g.out_edges(v)) for v in range(g.num_vertices))
    idx = create_vertex_index(g, prims[Direction.FW], cfg, "s")
    mem = idx.memory_usage()
    edges = g.num_edges
    plain = idx.mode == SHARED and longest <= 255 and mem["offset_bytes"] == g.num_edges and mem["level_bytes"] == 0

    hub = 70
    for _ in range(256 - len(g.out_edges(hub))):
        g.add_edge(hub, int(rng.integers(0, g.num_vertices)), 0, {"amt": 1, "date": 1})
    prims = primaries(g)
    idx = create_vertex_index(g, prims[Direction.FW], cfg, "s")
    widths = idx.group_widths()
    group = hub // 64
    wide_entries = sum(len(g.out_edges(v)) for v in range(64 * group, 64 * group + 64))
    forced = (widths[group] == 2 and set(widths[:group] + widths[group + 1:]) == {1}
              and idx.memory_usage()["offset_bytes"] == g.num_edges + wide_entries)
    record(3, "offset-list space", plain and forced,
           f"{mem['offset_bytes']} offset bytes for {edges} edges (longest list {longest}); "
           f"group {group} width {widths[group]} after forcing a 256-edge list")


def test_criterion_4_rebuild_equivalence():
    rng = np.random.default_rng(404)
    names = sorted(CONFIGS)
    started = time.perf_counter()
    failures = checked = ops = 0
    for i in range(1000):
        n = int(rng.integers(5, 61))
        g = random_graph(rng, n, int(rng.integers(n, 4 * n + 1)), n_labels=int(rng.integers(2, 5)))
        db = Database(g, ep_cap=None, buffer_capacity=int(rng.integers(2, 33)))
        add_views(db, *CONFIGS[names[i % 3]])
        for op in random_sequence(rng, g, int(rng.integers(10, 61))):
            apply(db, rng, op)
            ops += 1
        physical = i % 10 == 0
        if physical:
            db.flush()
        for idx in db.all_indexes():
            checked += 1
            failures += not equals_rebuild(db, idx, physical=physical)
    seconds = time.perf_counter() - started
    record(4, "rebuild equivalence", failures == 0 and seconds < 600,
           f"1000 sequences, {ops} updates, {checked} index comparisons, {failures} differ, {seconds:.0f}s")


def test_criterion_5_subsumption_soundness():
    rng = np.random.default_rng(505)
    matched = unsound = 0
    for i in range(500):
        if i % 25 == 0:
            g = random_graph(rng, 30, 150)
            prims = primaries(g)
        hit, equal = subsumption_case(g, prims, random_pair(rng))
        matched += hit
        unsound += not equal
    record(5, "subsumption soundness", unsound == 0 and matched >= 100,
           f"500 pairs, {matched} matched, {unsound} unsound")


def test_criterion_6_tree_plan_shape():
    shapes = []
    for seed in (1, 2, 3):
        g = random_graph(np.random.default_rng(seed), 400, 4000, n_labels=2)
        db = Database(g, ep_cap=None)
        add_views(db, VP_CITY, EP_CITY)
        plan = Optimizer(PreparedQuery(parse_query(TREE3_LABELLED), g), db.store).optimize()
        multi = [op for op in plan.explain()["operators"] if op["op"] == "MultiExtend"]
        shapes.append([sorted(a["kind"] for a in op["accessors"]) for op in multi])
    ok = all(s == [["edge", "vertex", "vertex"]] for s in shapes)
    record(6, "three-branch tree plan shape", ok, f"MultiExtend accessor kinds per graph: {shapes}")


def test_criterion_7_dp_is_optimal():
    rng = np.random.default_rng(707)
    checked = worse = 0
    for _ in range(20):
        g = suite_graph(rng)
        db = Database(g, ep_cap=None)
        layered = []
        for config in ("D", "D+VP", "D+VP+EP"):
            add_views(db, *[t for t in CONFIGS[config] if t not in layered])
            layered = list(CONFIGS[config])
            for text in SMALL_QUERIES.values():
                opt = Optimizer(PreparedQuery(parse_query(text), g), db.store)
                best = min(p.cost for p in opt.enumerate_plans())
                checked += 1
                worse += not np.isclose(opt.optimize().cost, best)
    record(7, "DP optimality", worse == 0, f"{checked} query/graph/config cases, {worse} above the exhaustive minimum")


def _sort_key(graph, sorting, e, n):
    key = []
    for k in sorting:
        if k.prop == "ID":
            v = n
        elif k.subject.value == "e_adj":
            v = graph.edge_value(e, k.prop)
        else:
            v = graph.vertex_value(n, k.prop)
        key += [v is None, 0 if v is None else v]
    return tuple(key) + (n, e)


def _leaves_sorted(graph, idx, owners):
    paths = list(itertools.product(*[list(range(k - 1)) + [None] for k in idx.keyspaces]))
    leaves = 0
    for o in owners:
        for path in paths:
            keys = [_sort_key(graph, idx.config.sorting, e, n) for e, n in idx.get_list(o, path)]
            if keys != sorted(keys):
                return False, leaves
            leaves += 1
    return True, leaves


def test_criterion_8_sorted_leaves_and_constant_depth():
    rng = np.random.default_rng(808)
    g = random_graph(rng, 120, 900, n_labels=3)
    db = Database(g, primary_config=parse(listings.RECONFIGURE_CURRENCY).config, ep_cap=None)
    add_views(db, VP_CITY, EP_CITY,
              "CREATE 1-HOP VIEW ByDate MATCH v_s-[e_adj]->v_d WHERE e_adj.amt > 100 "
              "INDEX AS FW-BW PARTITION BY e_adj.currency SORT BY e_adj.date")
    sorted_ok, leaves = True, 0
    for idx in db.all_indexes():
        owners = range(idx.n_vertices) if hasattr(idx, "n_vertices") else range(idx.owner_count())
        ok, n = _leaves_sorted(g, idx, owners)
        sorted_ok &= ok
        leaves += n

    depth = {}
    cfg = parse(listings.RECONFIGURE_CURRENCY).config
    for size in (1_000, 100_000):
        big = sparse_graph(np.random.default_rng(size), size, 2)
        prims = primaries(big, cfg)
        vp = create_vertex_index(big, prims[Direction.FW], parse(
            "CREATE 1-HOP VIEW v MATCH v_s-[e_adj]->v_d INDEX AS FW PARTITION BY e_adj.label, e_adj.currency "
            "SORT BY v_nbr.city").config.with_direction(Direction.FW))
        counts = set()
        for idx in (prims[Direction.FW], vp):
            for v in np.random.default_rng(1).integers(0, size, 50).tolist():
                before = idx.indirections[0]
                idx.get_list(v, (0, 1))
                counts.add(idx.indirections[0] - before)
        depth[size] = counts
    levels = cfg.levels
    depth_ok = all(c == {levels + 1} for c in depth.values())
    record(8, "sortedness and constant depth", sorted_ok and depth_ok,
           f"{leaves} leaves sorted; indirections per lookup {sorted(depth[1_000])} at N=1e3, "
           f"{sorted(depth[100_000])} at N=1e5 (levels={levels})")


def test_criterion_9_listings_run():
    import io

    from aplus.cli import Session
    from aplus.errors import ParseError, SingleEdgePredicate

    s = Session(Database(financial_fixture(with_owns=True)), out=io.StringIO(), timings=False)
    s.run_text("SET alpha = 100000")
    ran = []
    for name, text in listings.RUNNABLE.items():
        s.run_text(text)
        ran.append(name)
    rejected = []
    for text, error in ((listings.RECONFIGURE_TYPO, ParseError), (listings.REDUNDANT, SingleEdgePredicate)):
        try:
            s.run_text(text)
        except error:
            rejected.append(error.__name__)
    ok = len(ran) == len(listings.RUNNABLE) and rejected == ["ParseError", "SingleEdgePredicate"]
    record(9, "command listings", ok, f"{len(ran)} listings ran; misspelled keyword and one-edge 2-hop view "
                                      f"rejected with {', '.join(rejected)}")


if __name__ == "__main__":
    import sys
    failed = 0
    for name, fn in sorted(globals().items()):
        if name.startswith("test_criterion_"):
            try:
                fn()
            except AssertionError:
                failed += 1
    sys.exit(1 if failed else 0)
