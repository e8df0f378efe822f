"""Example graphs: the small financial network and random property graphs."""
from __future__ import annotations

import numpy as np

from .graph import PropertyCatalog, PropertyGraph

BASE_DAY = 18000  # epoch days; transfer t_i happens on BASE_DAY + 3*i

# (source, destination, label, amount, currency) for transfers t1..t19
TRANSFERS = [
    (1, 4, "W", 20000, "USD"),
    (5, 1, "W", 12000, "USD"),
    (5, 3, "W", 15000, "EUR"),
    (5, 6, "DD", 9000, "USD"),
    (1, 2, "W", 11000, "USD"),
    (3, 2, "DD", 7000, "EUR"),
    (2, 3, "W", 2500, "USD"),
    (2, 6, "W", 14000, "USD"),
    (5, 8, "DD", 3000, "EUR"),
    (5, 9, "W", 1000, "USD"),
    (5, 10, "DD", 2000, "USD"),
    (4, 3, "W", 18000, "USD"),
    (2, 5, "W", 5000, "USD"),
    (3, 1, "W", 16000, "EUR"),
    (6, 2, "DD", 6500, "USD"),
    (5, 4, "W", 8000, "USD"),
    (4, 2, "W", 3000, "USD"),
    (5, 8, "DD", 6000, "EUR"),
    (5, 9, "DD", 4000, "USD"),
]

# vertex -> (label, properties)
VERTICES = {
    0: ("Customer", {"name": "Bob"}),
    1: ("Account", {"city": "Waterloo", "acc": "CQ"}),
    2: ("Account", {"city": "Toronto", "acc": "CQ"}),
    3: ("Account", {"city": "Waterloo", "acc": "SV"}),
    4: ("Account", {"city": "Toronto", "acc": "CQ"}),
    5: ("Account", {"city": "Montreal", "acc": "CQ"}),
    6: ("Account", {"city": "Waterloo", "acc": "SV"}),
    7: ("Customer", {"name": "Alice", "city": "Waterloo"}),
    8: ("Account", {"city": "Toronto", "acc": "CQ"}),
    9: ("Account", {"city": "Waterloo", "acc": "SV"}),
    10: ("Account", {"city": "Toronto", "acc": "CQ"}),
    11: ("Customer", {"name": "Carol"}),
}

# ownership edges, only added on request; none touches v2
OWNS = [(7, 1), (7, 3), (0, 4), (0, 5), (11, 6), (11, 8)]


def financial_catalog(with_owns=False) -> PropertyCatalog:
    cat = PropertyCatalog()
    for label in ("Customer", "Account"):
        cat.add_label("vertex", label)
    for label in ("W", "DD") + (("O",) if with_owns else ()):
        cat.add_label("edge", label)
    cat.define("name", "categorical", "vertex")
    cat.define("city", "categorical", "vertex")
    cat.define("acc", "categorical", "vertex")
    cat.define("amt", "int64", "edge")
    cat.define("currency", "categorical", "edge")
    cat.define("date", "date", "edge")
    return cat


def financial_fixture(with_owns=False) -> PropertyGraph:
    """Vertices ``v0..v11`` (IDs 0..11) and transfers ``t1..t19`` (IDs 0..18).

    With ``with_owns`` the ownership edges ``o1..`` follow the transfers.
    """
    graph = PropertyGraph(financial_catalog(with_owns))
    for v in range(len(VERTICES)):
        label, props = VERTICES[v]
        graph.add_vertex(label, props, name=f"v{v}")
    for i, (s, d, label, amt, cur) in enumerate(TRANSFERS, start=1):
        graph.add_edge(s, d, label, {"amt": amt, "currency": cur, "date": BASE_DAY + 3 * i}, name=f"t{i}")
    if with_owns:
        for i, (s, d) in enumerate(OWNS, start=1):
            graph.add_edge(s, d, "O", {"date": BASE_DAY - i}, name=f"o{i}")
    return graph


# -- random graphs ------------------------------------------------------------

CITIES = ("Toronto", "Waterloo", "Montreal", "Ottawa")
CURRENCIES = ("USD", "EUR", "GBP")


def random_catalog(n_labels=3, n_vertex_labels=2) -> PropertyCatalog:
    cat = PropertyCatalog()
    for i in range(n_vertex_labels):
        cat.add_label("vertex", f"L{i}")
    for i in range(n_labels):
        cat.add_label("edge", f"R{i}")
    cat.define("city", "categorical", "vertex", CITIES[:3])
    cat.define("currency", "categorical", "edge", CURRENCIES[:2])
    cat.define("amt", "int64", "edge")
    cat.define("date", "int64", "edge")
    return cat


def random_graph(rng, n_vertices, n_edges, n_labels=3, null_rate=0.1, self_loops=True) -> PropertyGraph:
    """Random multigraph with two categorical and two numeric properties.

    ``rng`` is a ``numpy.random.Generator``; the same seed gives the same graph.
    """
    cat = random_catalog(n_labels)
    graph = PropertyGraph(cat)
    for v in range(n_vertices):
        city = None if rng.random() < null_rate else int(rng.integers(0, 3))
        graph.add_vertex(int(rng.integers(0, 2)), {"city": city}, name=f"v{v}")
    for _ in range(n_edges):
        add_random_edge(graph, rng, n_labels, null_rate, self_loops)
    return graph


def add_random_edge(graph, rng, n_labels=None, null_rate=0.1, self_loops=True):
    n = graph.num_vertices
    n_labels = n_labels or graph.catalog.edge_labels.keyspace
    s = int(rng.integers(0, n))
    d = int(rng.integers(0, n))
    if not self_loops:
        while d == s and n > 1:
            d = int(rng.integers(0, n))
    props = {
        "currency": None if rng.random() < null_rate else int(rng.integers(0, 2)),
        "amt": None if rng.random() < null_rate else int(rng.integers(0, 100)),
        "date": int(rng.integers(0, 50)),
    }
    return graph.add_edge(s, d, int(rng.integers(0, n_labels)), props)


def sparse_graph(rng, n_vertices, avg_degree=4, n_labels=2) -> PropertyGraph:
    """Larger random graph built in bulk, without per-edge Python overhead on reads."""
    graph = PropertyGraph(random_catalog(n_labels))
    for v in range(n_vertices):
        graph.add_vertex(v % 2, {"city": int(v % 3)})
    m = n_vertices * avg_degree
    src = rng.integers(0, n_vertices, m)
    dst = rng.integers(0, n_vertices, m)
    labels = rng.integers(0, n_labels, m)
    amts = rng.integers(0, 1000, m)
    for s, d, lab, amt in zip(src.tolist(), dst.tolist(), labels.tolist(), amts.tolist()):
        graph.add_edge(s, d, lab, {"amt": amt, "date": amt % 97})
    return graph


def as_rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
