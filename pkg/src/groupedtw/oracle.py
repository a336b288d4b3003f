"""Brute-force ground truth and instance generators.

Nothing here touches the DP tables; these routines exist to check them.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from itertools import combinations, permutations
from typing import Optional, Sequence

from .decomposition import TreeDecomposition, from_bags
from .graph import Graph, connected_components
from .partition import BagPartition, is_legal


class OracleLimitError(ValueError):
    pass


# -- exact treewidth -----------------------------------------------------------

def _q_size(adj: list[int], s: int, v: int) -> int:
    """Vertices outside ``s | {v}`` reachable from ``v`` through ``s``."""
    seen = 1 << v
    frontier = [v]
    reached = 0
    while frontier:
        u = frontier.pop()
        nb = adj[u] & ~seen
        seen |= nb
        reached |= nb & ~s
        inner = nb & s
        while inner:
            low = inner & -inner
            frontier.append(low.bit_length() - 1)
            inner ^= low
    return bin(reached).count("1")


def _tw_connected(g: Graph, vs: list[int]) -> int:
    if len(vs) <= 1:
        return 0
    idx = {v: i for i, v in enumerate(vs)}
    adj = [sum(1 << idx[u] for u in g.adj[v]) for v in vs]
    n = len(vs)
    full = (1 << n) - 1
    best = {0: -1}
    layer = {0}
    for _ in range(n):
        nxt: dict[int, int] = {}
        for s in layer:
            tw_s = best[s]
            rest = full & ~s
            while rest:
                low = rest & -rest
                v = low.bit_length() - 1
                rest ^= low
                val = max(tw_s, _q_size(adj, s, v))
                t = s | low
                if val < nxt.get(t, n):
                    nxt[t] = val
        best.update(nxt)
        layer = set(nxt)
    return best[full]


def exact_treewidth(g: Graph) -> int:
    """Exact treewidth by dynamic programming over vertex subsets.

    ``TW(S ∪ {v}) = min over v of max(TW(S), |Q(S, v)|)`` where ``Q(S, v)``
    is the set of vertices outside ``S ∪ {v}`` reachable from ``v`` through
    ``S``. Runs per connected component; limited to 20 vertices.
    """
    if g.n > 20:
        raise OracleLimitError(f"exact_treewidth supports n <= 20, got {g.n}")
    if g.n == 0:
        return -1
    return max(_tw_connected(g, comp) for comp in connected_components(g))


def treewidth_by_orderings(g: Graph) -> int:
    """Treewidth as the minimum over all elimination orders of the max back-degree."""
    if g.n > 9:
        raise OracleLimitError("permutation search limited to 9 vertices")
    if g.n == 0:
        return -1
    best = g.n - 1
    for order in permutations(range(g.n)):
        nbrs = [set(s) for s in g.adj]
        worst = 0
        for v in order:
            worst = max(worst, len(nbrs[v]))
            if worst >= best:
                break
            for a in nbrs[v]:
                nbrs[a] |= nbrs[v]
                nbrs[a] -= {a, v}
            nbrs[v] = set()
        best = min(best, worst)
    return best


# -- partition sizes ---------------------------------------------------------------

def brute_partition_size(g: Graph, vs, p: BagPartition) -> Optional[int]:
    """Minimum separator size of a legal labelling of ``vs`` extending ``p``.

    Edges are those of ``g`` inside ``vs``. Returns ``None`` when no legal
    extension exists (that is, when ``p`` itself is illegal). Enumerates the
    free separator vertices by increasing count; the rest of the free
    vertices can be labelled iff every component of what remains touches at
    most one W-label of the bag.
    """
    vset = set(vs)
    if len(vset) > 15:
        raise OracleLimitError(f"brute_partition_size supports |vs| <= 15, got {len(vset)}")
    if not set(p.bag) <= vset:
        raise ValueError("bag must lie inside vs")
    if not is_legal(g, p):
        return None
    lab = dict(zip(p.bag, p.labels))
    free = sorted(vset - set(p.bag))
    base_size = sum(1 for v in p.labels if v == "X")
    for size in range(len(free) + 1):
        for sep in combinations(free, size):
            if _extendable(g, vset, lab, set(free) - set(sep)):
                return base_size + size
    raise AssertionError("unreachable: all-separator extension is always legal")


def _extendable(g: Graph, vset: set[int], lab: dict[int, str], rest: set[int]) -> bool:
    seen: set[int] = set()
    for s in rest:
        if s in seen:
            continue
        seen.add(s)
        stack, touched = [s], set()
        while stack:
            u = stack.pop()
            for w in g.adj[u]:
                if w not in vset:
                    continue
                if w in rest and w not in seen:
                    seen.add(w)
                    stack.append(w)
                elif w in lab and lab[w] != "X":
                    touched.add(lab[w])
        if len(touched) > 1:
            return False
    return True


# -- split existence -----------------------------------------------------------------

def exists_split_bruteforce(g: Graph, t: TreeDecomposition, k: int, mode: int = 4
                            ) -> Optional[dict[int, str]]:
    """Exhaustive search for a partition of ``V`` good at the root.

    Tries every separator ``S`` with ``|S| <= k + 1`` and every way of
    packing the components of ``G - S`` into ``mode - 1`` parts that meets
    the root balance condition (``|W_i| + |S| < |B_r|`` for 4 parts,
    ``|W_i| <= 2/3 |B_r|`` for 3 parts). Returns the global labelling
    (``"C1"``, ``"C2"``, ``"C3"``, ``"S"``) of one witness, or ``None``.
    Existence of such a partition is exactly existence of a split.
    """
    if g.n > 12:
        raise OracleLimitError(f"exists_split_bruteforce supports n <= 12, got {g.n}")
    root_bag = set(t.nodes[t.root].bag)
    b = len(root_bag)
    nparts = mode - 1
    for size in range(min(k + 1, g.n) + 1):
        cap = b - size - 1 if mode == 4 else (2 * b) // 3
        if cap < 0:
            continue
        for sep in combinations(range(g.n), size):
            sset = set(sep)
            sub, old = g.subgraph(v for v in range(g.n) if v not in sset)
            comps = [[old[i] for i in c] for c in connected_components(sub)]
            weights = [len(root_bag.intersection(c)) for c in comps]
            assign = _pack(weights, nparts, cap)
            if assign is not None:
                labels = {v: "S" for v in sset}
                for c, part in zip(comps, assign):
                    for v in c:
                        labels[v] = f"C{part + 1}"
                return labels
    return None


def _pack(weights: list[int], nparts: int, cap: int) -> Optional[list[int]]:
    order = sorted(range(len(weights)), key=lambda i: -weights[i])
    load = [0] * nparts
    assign = [0] * len(weights)

    def go(pos: int) -> bool:
        if pos == len(order):
            return True
        i = order[pos]
        tried = set()
        for p in range(nparts):
            if load[p] in tried or load[p] + weights[i] > cap:
                continue
            tried.add(load[p])
            load[p] += weights[i]
            assign[i] = p
            if go(pos + 1):
                return True
            load[p] -= weights[i]
        return False

    return assign if go(0) else None


def random_decomposition(g: Graph, rng: random.Random) -> TreeDecomposition:
    """Valid decomposition from a uniformly random elimination order.

    Each vertex's bag is itself plus its later neighbours in the filled
    graph, hung below the bag of the earliest of those neighbours. Roots of
    separate components are chained together.
    """
    order = list(range(g.n))
    rng.shuffle(order)
    pos = {v: i for i, v in enumerate(order)}
    nbrs = [set(a) for a in g.adj]
    bags, edges, roots = [], [], []
    for i, v in enumerate(order):
        later = {u for u in nbrs[v] if pos[u] > i}
        for a in later:
            nbrs[a] |= later - {a}
        bags.append([v] + sorted(later))
        if later:
            edges.append((i, min(pos[u] for u in later)))
        else:
            roots.append(i)
    edges += [(a, b) for a, b in zip(roots, roots[1:])]
    return from_bags(bags, edges, root=roots[-1] if roots else 0)


# -- generators --------------------------------------------------------------------------

FAMILIES = ("partial-k-tree", "grid", "path", "cycle", "complete", "tree")


@dataclass(frozen=True)
class GeneratorSpec:
    family: str
    n: int
    k: int = 1
    keep: float = 1.0
    seed: int = 0


def generate(spec: GeneratorSpec) -> tuple[Graph, Optional[TreeDecomposition]]:
    """Build a graph for ``spec``; partial k-trees also return a width-k witness.

    ``grid`` uses ``k`` rows and ``n // k`` columns. Partial k-trees are
    random k-trees with each edge kept with probability ``keep`` and vertex
    ids shuffled.
    """
    rng = random.Random(spec.seed)
    n, k = spec.n, spec.k
    if spec.family == "path":
        return Graph.from_edges(n, [(i, i + 1) for i in range(n - 1)]), None
    if spec.family == "cycle":
        if n < 3:
            raise ValueError("cycle needs n >= 3")
        return Graph.from_edges(n, [(i, (i + 1) % n) for i in range(n)]), None
    if spec.family == "complete":
        return Graph.from_edges(n, list(combinations(range(n), 2))), None
    if spec.family == "tree":
        return Graph.from_edges(n, [(rng.randrange(i), i) for i in range(1, n)]), None
    if spec.family == "grid":
        rows = max(1, k)
        cols = n // rows
        edges = []
        for r in range(rows):
            for c in range(cols):
                v = r * cols + c
                if c + 1 < cols:
                    edges.append((v, v + 1))
                if r + 1 < rows:
                    edges.append((v, v + cols))
        return Graph.from_edges(rows * cols, edges), None
    if spec.family == "partial-k-tree":
        return _partial_ktree(n, k, spec.keep, rng)
    raise ValueError(f"unknown family {spec.family!r}")


def _partial_ktree(n: int, k: int, keep: float, rng: random.Random):
    if n < k + 1:
        raise ValueError(f"partial-k-tree needs n >= k + 1 (n={n}, k={k})")
    edges = set(combinations(range(k + 1), 2))
    bags = [list(range(k + 1))]
    tree_edges = []
    cliques = [(c, 0) for c in combinations(range(k + 1), k)] if k > 0 else [((), 0)]
    for v in range(k + 1, n):
        clique, owner = cliques[rng.randrange(len(cliques))]
        bags.append(list(clique) + [v])
        me = len(bags) - 1
        tree_edges.append((owner, me))
        edges.update((u, v) for u in clique)
        if k == 0:
            cliques.append(((), me))
        else:
            cliques.extend((tuple(sorted(c + (v,))), me) for c in combinations(clique, k - 1))
    perm = list(range(n))
    rng.shuffle(perm)
    kept = [(perm[u], perm[v]) for u, v in sorted(edges) if rng.random() < keep]
    g = Graph.from_edges(n, kept)
    witness = from_bags([[perm[v] for v in b] for b in bags], tree_edges)
    return g, witness
