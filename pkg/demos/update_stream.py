"""Stream random inserts and deletes into a graph with views of both kinds,
merging buffers as they fill, and compare every index with a fresh build.

    python demos/update_stream.py [n_updates]
"""
import sys
import time

import numpy as np

from aplus.ddl import parse
from aplus.fixtures import add_random_edge, random_graph
from aplus.maintenance import Database, equals_rebuild

VIEWS = [
    "CREATE 1-HOP VIEW Big MATCH v_s-[e_adj]->v_d WHERE e_adj.amt > 500 "
    "INDEX AS FW-BW PARTITION BY e_adj.label SORT BY e_adj.date",
    "CREATE 2-HOP VIEW Chain MATCH v_s-[e_b]->v_d-[e_adj]->v_nbr "
    "WHERE e_b.date < e_adj.date, e_adj.amt < e_b.amt INDEX AS PARTITION BY e_adj.label",
]

n_updates = int(sys.argv[1]) if len(sys.argv) > 1 else 2000
rng = np.random.default_rng(7)
graph = random_graph(rng, 300, 1500)
db = Database(graph, buffer_capacity=16, ep_cap=None)
for text in VIEWS:
    cmd = parse(text)
    db.create_view(cmd.config, cmd.name)

started = time.perf_counter()
for i in range(n_updates):
    live = graph.edges()
    if rng.random() < 0.55 or not live:
        add_random_edge(graph, rng)
    else:
        graph.delete_edge(live[int(rng.integers(0, len(live)))])
    if (i + 1) % (n_updates // 4) == 0:
        print(f"{i + 1:>6} updates, {db.pending():>4} buffered changes, "
              f"{time.perf_counter() - started:.2f}s")

report = db.flush()
print("final flush:", report.as_dict())
for index in db.all_indexes():
    print(f"   {index.name:<12} matches rebuild: {equals_rebuild(db, index, physical=True)}")
