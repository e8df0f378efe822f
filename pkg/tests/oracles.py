"""Brute-force reference implementations used to check the engine.

Nothing here touches an index: everything is computed from the graph's raw
adjacency and property values with plain Python loops.
"""
from __future__ import annotations

import operator

from aplus.config import PropRef, resolve_predicate
from aplus.graph import Attachment

_OPS = {
    "=": operator.eq,
    "!=": operator.ne,
    "<": operator.lt,
    "<=": operator.le,
    ">": operator.gt,
    ">=": operator.ge,
}


def value(graph, kind, ident, prop):
    if kind is Attachment.VERTEX:
        return graph.vertex_value(ident, prop)
    return graph.edge_value(ident, prop)


def holds(graph, atom, env, kinds) -> bool:
    """Evaluate one resolved atom; any Null makes it false."""
    lv = value(graph, kinds[atom.lhs.var], env[atom.lhs.var], atom.lhs.prop)
    if isinstance(atom.rhs, PropRef):
        rv = value(graph, kinds[atom.rhs.var], env[atom.rhs.var], atom.rhs.prop)
        if rv is not None:
            rv = rv + (atom.offset or 0)
    else:
        rv = atom.rhs
    if lv is None or rv is None:
        return False
    return _OPS[atom.op](lv, rv)


def holds_all(graph, pred, env, kinds) -> bool:
    return all(holds(graph, a, env, kinds) for a in pred)


# -- subgraph matching ---------------------------------------------------------------

def brute_force_matches(graph, query, params=None) -> set:
    """All homomorphic embeddings with pairwise distinct data edges.

    Returns a set of sorted ``(variable, id)`` tuples.
    """
    kinds = query.var_kinds()
    pred = resolve_predicate(query.full_predicate(), graph, kinds, params)
    names = list(query.vertices)
    # connected visiting order
    order = [names[0]]
    while len(order) < len(names):
        for e in query.edges.values():
            if e.src in order and e.dst not in order:
                order.append(e.dst)
                break
            if e.dst in order and e.src not in order:
                order.append(e.src)
                break
    results = set()
    n = graph.num_vertices

    def edge_choices(e, env):
        s, d = env[e.src], env[e.dst]
        return [x for x in graph.out_edges(s) if graph.dst(x) == d]

    def extend_edges(pending, env, used):
        if not pending:
            if holds_all(graph, pred, env, kinds):
                results.add(tuple(sorted(env.items())))
            return
        e, rest = pending[0], pending[1:]
        for x in edge_choices(e, env):
            if x in used:
                continue
            env[e.name] = x
            extend_edges(rest, env, used | {x})
            del env[e.name]

    def assign(i, env):
        if i == len(order):
            extend_edges(list(query.edges.values()), env, frozenset())
            return
        v = order[i]
        candidates = range(n)
        if i > 0:
            # restrict to neighbours of one already-assigned vertex (plain adjacency scan)
            for e in query.edges.values():
                if e.src == v and e.dst in env:
                    candidates = sorted({graph.src(x) for x in graph.in_edges(env[e.dst])})
                    break
                if e.dst == v and e.src in env:
                    candidates = sorted({graph.dst(x) for x in graph.out_edges(env[e.src])})
                    break
        for c in candidates:
            env[v] = c
            local = [a for a in pred if a.variables() <= set(env) and v in a.variables()]
            if all(holds(graph, a, env, kinds) for a in local):
                assign(i + 1, env)
            del env[v]

    assign(0, {})
    return results


def as_match_set(matches) -> set:
    return {tuple(sorted(m.items())) for m in matches}


# -- list oracles --------------------------------------------------------------------

VP_KINDS = {"e_adj": Attachment.EDGE, "v_s": Attachment.VERTEX, "v_d": Attachment.VERTEX,
            "v_nbr": Attachment.VERTEX}
EP_KINDS = {"e_b": Attachment.EDGE, **VP_KINDS}


def adjacency(graph, v, direction):
    """Edge IDs incident to ``v`` in one direction ("FW" out, "BW" in)."""
    return list(graph.out_edges(v) if direction == "FW" else graph.in_edges(v))


def far_end(graph, e, direction):
    return graph.dst(e) if direction == "FW" else graph.src(e)


def filter_list(graph, v, direction, resolved_pred) -> set:
    """σ_pred over ``v``'s adjacency, predicate in VP vocabulary (resolved)."""
    out = set()
    for e in adjacency(graph, v, direction):
        env = {"e_adj": e, "v_s": graph.src(e), "v_d": graph.dst(e), "v_nbr": far_end(graph, e, direction)}
        if holds_all(graph, resolved_pred, env, VP_KINDS):
            out.add((e, env["v_nbr"]))
    return out


def two_path_list(graph, b, kind, resolved_pred) -> set:
    """Nested-loop join: adjacent edges of bound edge ``b`` for one EP kind."""
    pivot = graph.dst(b) if kind.pivot_is_dst else graph.src(b)
    direction = kind.direction.value
    out = set()
    for e in adjacency(graph, pivot, direction):
        env = {"e_b": b, "e_adj": e, "v_s": graph.src(b), "v_d": graph.dst(b),
               "v_nbr": far_end(graph, e, direction)}
        if holds_all(graph, resolved_pred, env, EP_KINDS):
            out.add((e, env["v_nbr"]))
    return out


def nested_loop_pairs(graph, kind, resolved_pred) -> int:
    """Total qualifying (bound, adjacent) pairs, by a plain double loop over all edges."""
    total = 0
    edges = list(graph.edges())
    direction = kind.direction.value
    for b in edges:
        pivot = graph.dst(b) if kind.pivot_is_dst else graph.src(b)
        for e in edges:
            owner = graph.src(e) if direction == "FW" else graph.dst(e)
            if owner != pivot:
                continue
            env = {"e_b": b, "e_adj": e, "v_s": graph.src(b), "v_d": graph.dst(b),
                   "v_nbr": far_end(graph, e, direction)}
            if holds_all(graph, resolved_pred, env, EP_KINDS):
                total += 1
    return total
