"""Simple undirected graphs over vertex ids ``0..n-1``.

The vertex id doubles as the global vertex order: every bag listing and
every partition encoding in this package sorts vertices by id.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable


class GraphError(ValueError):
    """Raised for malformed graphs or graph input."""


@dataclass(frozen=True)
class Graph:
    n: int
    adj: tuple[frozenset[int], ...] = field(repr=False)

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]]) -> "Graph":
        nbrs: list[set[int]] = [set() for _ in range(n)]
        for u, v in edges:
            if not (0 <= u < n and 0 <= v < n):
                raise GraphError(f"edge ({u}, {v}) out of range for n={n}")
            if u == v:
                raise GraphError(f"self-loop at vertex {u}")
            if v in nbrs[u]:
                raise GraphError(f"duplicate edge ({u}, {v})")
            nbrs[u].add(v)
            nbrs[v].add(u)
        return cls(n, tuple(frozenset(s) for s in nbrs))

    @property
    def m(self) -> int:
        return sum(len(s) for s in self.adj) // 2

    def edges(self) -> list[tuple[int, int]]:
        return [(u, v) for u in range(self.n) for v in sorted(self.adj[u]) if u < v]

    def has_edge(self, u: int, v: int) -> bool:
        return v in self.adj[u]

    def neighbors(self, v: int) -> frozenset[int]:
        return self.adj[v]

    def subgraph(self, vertices: Iterable[int]) -> tuple["Graph", list[int]]:
        """Induced subgraph relabelled to ``0..len-1`` in id order.

        Returns the subgraph and the list mapping new ids to old ids.
        """
        old = sorted(set(vertices))
        new_of = {v: i for i, v in enumerate(old)}
        edges = [
            (new_of[u], new_of[v])
            for u in old
            for v in self.adj[u]
            if v in new_of and u < v
        ]
        return Graph.from_edges(len(old), edges), old


def induced_edges(g: Graph, vs: Iterable[int]) -> set[tuple[int, int]]:
    """Edges of ``g`` with both endpoints in ``vs`` as ``(small, large)`` pairs."""
    vset = set(vs)
    for v in vset:
        if not 0 <= v < g.n:
            raise GraphError(f"vertex {v} out of range for n={g.n}")
    return {(u, v) for u in vset for v in g.adj[u] if v in vset and u < v}


def connected_components(g: Graph) -> list[list[int]]:
    seen = [False] * g.n
    comps = []
    for s in range(g.n):
        if seen[s]:
            continue
        seen[s] = True
        stack, comp = [s], [s]
        while stack:
            u = stack.pop()
            for v in g.adj[u]:
                if not seen[v]:
                    seen[v] = True
                    stack.append(v)
                    comp.append(v)
        comps.append(sorted(comp))
    return comps
