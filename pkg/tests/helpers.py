"""Shared instance builders and invariant checkers for the split tests."""

import random

from groupedtw.decomposition import MAIN, coarsen, make_grouped, validate_grouped, validate_td
from groupedtw.graph import connected_components
from groupedtw.oracle import GeneratorSpec, generate, random_decomposition
from groupedtw.partition import node_table, rebuild_tables
from groupedtw.split import move_to_root


def connected_ktree(n, k, keep, seed):
    g, _ = generate(GeneratorSpec("partial-k-tree", n, k, keep, seed))
    return g.subgraph(max(connected_components(g), key=len))[0]


def rooted_instance(seed, n_range=(8, 14), k=2, max_bag=7, base=4):
    """Connected partial k-tree with a grouped decomposition whose root holds a largest bag."""
    rng = random.Random(seed)
    g = connected_ktree(rng.randint(*n_range), k, 0.8, seed)
    t = coarsen(random_decomposition(g, rng), max_bag)
    t = make_grouped(t)
    rebuild_tables(g, t, base)
    top = max((x for x in t.main_nodes()), key=lambda x: (len(t.nodes[x].bag), -x))
    move_to_root(g, t, top)
    return g, t


def structural_problems(g, t):
    return [str(v) for v in validate_td(g, t) + validate_grouped(t)]


def stale_tables(g, t):
    """Nodes whose stored table differs from a bottom-up rebuild."""
    bad = []
    base = t.nodes[t.root].table.base
    fresh = {}
    for x in t.postorder():
        saved = {c: t.nodes[c].table for c in t.nodes[x].children}
        for c in t.nodes[x].children:
            t.nodes[c].table = fresh[c]
        fresh[x] = node_table(g, t, x, base)
        for c, tab in saved.items():
            t.nodes[c].table = tab
        if not fresh[x].same_as(t.nodes[x].table):
            bad.append(x)
    return bad


def assignment_problems(g, t, s):
    """Violations of the split-assignment invariants for a complete labelling."""
    out = []
    sep = s.base - 1
    if set(s.labels) != set(range(g.n)):
        out.append("labelling does not cover V")
        return out
    for u, v in g.edges():
        a, b = s.labels[u], s.labels[v]
        if a != b and sep not in (a, b):
            out.append(f"edge {u}-{v} joins C{a + 1} and C{b + 1}")
    for x, nd in t.nodes.items():
        parts = s.w_parts(nd.bag)
        if parts and s.a[x] != frozenset(parts):
            out.append(f"a({x}) = {set(s.a[x])} but W-parts are {parts}")
        if not s.a[x]:
            out.append(f"a({x}) empty")
        if nd.parent is not None and not s.a[x] <= s.a[nd.parent]:
            out.append(f"a({x}) not inside a(parent)")
    if len(s.separator) != s.size:
        out.append(f"separator has {len(s.separator)} vertices, root entry says {s.size}")
    return out
