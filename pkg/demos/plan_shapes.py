"""Plan a three-branch transfer tree on a random graph as views are added;
with both views the three leaf branches are matched in one sort-merge step.

    python demos/plan_shapes.py
"""
import numpy as np

from aplus.ddl import parse, parse_query
from aplus.fixtures import random_graph
from aplus.maintenance import Database
from aplus.optimizer import optimize
from aplus.query import execute

TREE = ("MATCH a1-[e1:R0]->a2, a1-[e2:R0]->a3-[e3:R0]->a4, a1-[e4:R0]->a5 "
        "WHERE a2.city = a4.city, a4.city = a5.city, e2.date < e3.date, e3.amt < e2.amt")
VIEWS = {
    "VPc": "CREATE 1-HOP VIEW VPc MATCH v_s-[e_adj]->v_d INDEX AS FW-BW "
           "PARTITION BY e_adj.label SORT BY v_nbr.city",
    "EPc": "CREATE 2-HOP VIEW EPc MATCH v_s-[e_b]->v_d-[e_adj]->v_nbr "
           "WHERE e_b.date < e_adj.date, e_adj.amt < e_b.amt "
           "INDEX AS PARTITION BY e_adj.label SORT BY v_nbr.city",
}

graph = random_graph(np.random.default_rng(5), 400, 4000, n_labels=2)
db = Database(graph, ep_cap=None)
for stage in [None, "VPc", "EPc"]:
    if stage:
        cmd = parse(VIEWS[stage])
        db.create_view(cmd.config, cmd.name)
    plan = optimize(parse_query(TREE), db.store, graph)
    matches, stats = execute(plan)
    print(f"-- views: {sorted(db.views) or 'none'}  i-cost {plan.cost:,.0f}  "
          f"matches {len(matches)}  edges scanned {stats.edges_scanned:,}")
    for op in plan.explain()["operators"]:
        targets = op.get("targets") or op.get("target") or op.get("vertex") or ""
        print(f"   {op['op']:<16} {str(targets):<22} {[a['index'] for a in op.get('accessors', [])]}")
