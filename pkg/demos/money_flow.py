"""Follow money out of transfer t13, first over plain adjacency lists, then over
a 2-hop view that stores, for every transfer, the later and smaller transfers
leaving its destination.

    python demos/money_flow.py
"""
import json

from aplus.ddl import parse, parse_query
from aplus.edge_index import lookup_edge
from aplus.fixtures import financial_fixture
from aplus.maintenance import Database
from aplus.optimizer import optimize
from aplus.query import execute

FLOW = ("MATCH a1-[r1]->a2-[r2]->a3-[r3]->a4 WHERE r1.eID = t13, "
        "r1.date < r2.date, r2.amt < r1.amt, r1.amt < r2.amt + alpha, "
        "r2.date < r3.date, r3.amt < r2.amt, r2.amt < r3.amt + alpha")

VIEW = """CREATE 2-HOP VIEW MoneyFlow
MATCH v_s-[e_b]->v_d-[e_adj]->v_nbr
WHERE e_b.date < e_adj.date, e_adj.amt < e_b.amt
INDEX AS PARTITION BY e_adj.label SORT BY v_nbr.city"""


def run(db, title):
    plan = optimize(parse_query(FLOW), db.store, db.graph, db.params)
    matches, stats = execute(plan)
    print(f"-- {title}")
    for op in plan.explain()["operators"]:
        used = [a["index"] for a in op.get("accessors", [])]
        print(f"   {op['op']:<16} {op.get('target', op.get('edge', '')):<4} {', '.join(used)}")
    print(f"   matches={len(matches)} edges scanned={stats.edges_scanned}\n")


db = Database(financial_fixture())
db.set_param("alpha", 100000)
run(db, "primary indexes only")

cmd = parse(VIEW)
db.create_view(cmd.config, cmd.name)
g = db.graph
flow = db.index("MoneyFlow")
t13 = g.edge_id("t13")
print("MoneyFlow list of t13:", [g.edge_name(e) for e, _ in lookup_edge(flow, t13)])
print("transfers whose list holds t17:",
      [g.edge_name(b) for b in g.edges() if g.edge_id("t17") in flow.get_list(b).edge_ids.tolist()])
print("view memory:", json.dumps(flow.memory_usage()), "\n")
run(db, "with the MoneyFlow view")
