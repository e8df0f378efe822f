"""Give the primary lists a second partition level on currency and watch a
currency filter turn into a direct slice lookup.

    python demos/retune_primary.py
"""
from aplus.ddl import parse, parse_query
from aplus.fixtures import financial_fixture
from aplus.maintenance import Database
from aplus.optimizer import optimize
from aplus.query import execute

USD_WIRES = "MATCH c1-[r1:O]->a1-[r2:W]->a2 WHERE c1.name = 'Alice', r2.currency = USD"


def show(db):
    plan = optimize(parse_query(USD_WIRES), db.store, db.graph)
    matches, stats = execute(plan)
    last = plan.explain()["operators"][-1]
    acc = last["accessors"][0]
    print(f"   {acc['index']} key path {acc['key_path']} residual {acc['residual']!r}")
    print(f"   {len(matches)} matches, {stats.edges_scanned} edges scanned")
    for index in db.primaries.values():
        mem = index.memory_usage()
        print(f"   {index.name}: id lists {mem['idlist_bytes']} B, offset levels {mem['level_bytes']}")


db = Database(financial_fixture(with_owns=True))
print("-- partitioned by label")
show(db)

seconds = db.reconfigure_primary(parse(
    "RECONFIGURE PRIMARY INDEXES PARTITION BY e_adj.label, e_adj.currency SORT BY v_nbr.city").config)
print(f"\n-- partitioned by label, then currency (rebuilt in {seconds * 1000:.1f} ms)")
show(db)
