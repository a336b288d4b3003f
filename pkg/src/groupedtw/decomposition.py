"""Rooted tree decompositions and the unique-home / grouped normal forms.

Nodes live in an id-addressed dict. Ids are handed out by a counter and
never reused, so a deleted node id stays meaningful in reports and logs.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from typing import Any, Iterable, Optional

from .graph import Graph

MAIN = "main"
INTERSECTION = "intersection"

UNVISITED, PREVISITED, POSTVISITED = 2, 1, 0


class DecompositionError(ValueError):
    pass


@dataclass
class Node:
    id: int
    bag: tuple[int, ...]
    kind: str = MAIN
    parent: Optional[int] = None
    children: list[int] = field(default_factory=list)
    table: Any = None
    status: int = UNVISITED


@dataclass(frozen=True)
class Violation:
    condition: str
    witness: Any
    message: str

    def __str__(self) -> str:
        return f"{self.condition}: {self.message}"


class TreeDecomposition:
    def __init__(self) -> None:
        self.nodes: dict[int, Node] = {}
        self.root: Optional[int] = None
        self._next_id = 0
        self.tombstones: set[int] = set()
        self.revision = 0
        self.tables_at = -1  # revision at which all tables were last exact

    # -- construction -----------------------------------------------------

    def add_node(self, bag: Iterable[int], kind: str = MAIN, parent: Optional[int] = None,
                 status: int = UNVISITED) -> int:
        nid = self._next_id
        self._next_id += 1
        self.nodes[nid] = Node(nid, tuple(sorted(set(bag))), kind, status=status)
        if parent is not None:
            self.attach(nid, parent)
        elif self.root is None:
            self.root = nid
        self.revision += 1
        return nid

    def attach(self, child: int, parent: int) -> None:
        c = self.nodes[child]
        if c.parent is not None:
            self.detach(child)
        c.parent = parent
        self.nodes[parent].children.append(child)
        self.revision += 1

    def detach(self, child: int) -> None:
        c = self.nodes[child]
        if c.parent is not None:
            self.nodes[c.parent].children.remove(child)
            c.parent = None
            self.revision += 1

    def delete(self, nid: int) -> None:
        """Remove a node; its children must already have been moved away."""
        node = self.nodes[nid]
        if node.children:
            raise DecompositionError(f"node {nid} still has children {node.children}")
        self.detach(nid)
        del self.nodes[nid]
        self.tombstones.add(nid)
        if self.root == nid:
            self.root = None
        self.revision += 1

    def set_root(self, nid: int) -> None:
        self.detach(nid)
        self.root = nid
        self.revision += 1

    def copy(self) -> "TreeDecomposition":
        return copy.deepcopy(self)

    # -- queries ----------------------------------------------------------

    def bag(self, nid: int) -> tuple[int, ...]:
        return self.nodes[nid].bag

    @property
    def width(self) -> int:
        return max((len(nd.bag) for nd in self.nodes.values()), default=0) - 1

    def max_bag_size(self) -> int:
        return max((len(nd.bag) for nd in self.nodes.values()), default=0)

    def preorder(self, start: Optional[int] = None) -> list[int]:
        start = self.root if start is None else start
        if start is None:
            return []
        out, stack = [], [start]
        while stack:
            x = stack.pop()
            out.append(x)
            stack.extend(reversed(self.nodes[x].children))
        return out

    def postorder(self, start: Optional[int] = None) -> list[int]:
        return self.preorder(start)[::-1]

    def main_nodes(self) -> list[int]:
        return [x for x, nd in self.nodes.items() if nd.kind == MAIN]

    def grandchildren(self, x: int) -> list[int]:
        return [y for z in self.nodes[x].children for y in self.nodes[z].children]

    def main_parent(self, y: int) -> Optional[int]:
        z = self.nodes[y].parent
        return None if z is None else self.nodes[z].parent

    def path_from_root(self, x: int) -> list[int]:
        path = [x]
        while self.nodes[path[-1]].parent is not None:
            path.append(self.nodes[path[-1]].parent)
        return path[::-1]

    def subtree_vertices(self, x: int) -> set[int]:
        return {v for y in self.preorder(x) for v in self.nodes[y].bag}

    def homes(self) -> dict[int, int]:
        """Map each vertex to its home: the highest node whose bag holds it."""
        h = {}
        for x in self.preorder():
            nd = self.nodes[x]
            pbag = set(self.nodes[nd.parent].bag) if nd.parent is not None else set()
            for v in nd.bag:
                if v not in pbag:
                    h.setdefault(v, x)
        return h

    def __repr__(self) -> str:
        return f"TreeDecomposition(nodes={len(self.nodes)}, root={self.root}, width={self.width})"


# -- validation -----------------------------------------------------------

def _structure_violations(t: TreeDecomposition) -> list[Violation]:
    out = []
    if not t.nodes:
        return out
    if t.root is None or t.root not in t.nodes:
        return [Violation("structure", t.root, "missing root")]
    if t.nodes[t.root].parent is not None:
        out.append(Violation("structure", t.root, "root has a parent"))
    seen: set[int] = set()
    stack = [t.root]
    while stack:
        x = stack.pop()
        if x in seen:
            out.append(Violation("structure", x, f"node {x} reached twice (cycle)"))
            continue
        seen.add(x)
        for c in t.nodes[x].children:
            if c not in t.nodes:
                out.append(Violation("structure", c, f"child {c} of {x} does not exist"))
            elif t.nodes[c].parent != x:
                out.append(Violation("structure", c, f"child {c} of {x} points to parent {t.nodes[c].parent}"))
            else:
                stack.append(c)
    for x in t.nodes:
        if x not in seen:
            out.append(Violation("structure", x, f"node {x} unreachable from root"))
    return out


def validate_td(g: Graph, t: TreeDecomposition) -> list[Violation]:
    """Every violated decomposition condition, each with a witness.

    An empty list means ``t`` is a tree decomposition of ``g``.
    """
    out = _structure_violations(t)
    if out:
        return out
    where: dict[int, list[int]] = {v: [] for v in range(g.n)}
    for x, nd in t.nodes.items():
        for v in nd.bag:
            if not 0 <= v < g.n:
                out.append(Violation("vertex-range", (x, v), f"bag {x} holds unknown vertex {v}"))
            else:
                where[v].append(x)
    bagsets = {x: set(nd.bag) for x, nd in t.nodes.items()}
    for u, v in g.edges():
        if len(where[u]) > len(where[v]):
            u, v = v, u
        if not any(v in bagsets[x] for x in where[u]):
            a, b = min(u, v), max(u, v)
            out.append(Violation("edge-coverage", (a, b), f"edge {a}-{b} not inside any bag"))
    for v in range(g.n):
        if not where[v]:
            out.append(Violation("vertex-coverage", v, f"vertex {v} in no bag"))
            continue
        # nodes holding v are connected iff exactly one of them has a parent outside the set
        holders = set(where[v])
        tops = [x for x in holders if t.nodes[x].parent not in holders]
        if len(tops) > 1:
            a, b = sorted(tops)[:2]
            out.append(Violation("connectivity", (v, a, b),
                                 f"vertex {v} occurs in disconnected nodes {a} and {b}"))
    return out


def is_unique_home(t: TreeDecomposition) -> bool:
    for x, nd in t.nodes.items():
        if nd.parent is None:
            if not nd.bag:
                return False
        elif len(set(nd.bag) - set(t.nodes[nd.parent].bag)) != 1:
            return False
    return True


def validate_grouped(t: TreeDecomposition) -> list[Violation]:
    out = _structure_violations(t)
    if out:
        return out
    r = t.nodes[t.root]
    for x, nd in t.nodes.items():
        if nd.kind not in (MAIN, INTERSECTION):
            out.append(Violation("property-1", x, f"node {x} has no kind"))
    if r.kind != MAIN or not r.bag:
        out.append(Violation("property-2", t.root, "root must be a Main node with a non-empty bag"))
    for x, nd in t.nodes.items():
        if not nd.children and nd.kind != MAIN:
            out.append(Violation("property-2", x, f"leaf {x} is not a Main node"))
        if nd.parent is not None and t.nodes[nd.parent].kind == nd.kind:
            out.append(Violation("property-3", x, f"{nd.kind} node {x} has a {nd.kind} parent"))
    for x, nd in t.nodes.items():
        if nd.kind == MAIN and nd.parent is not None:
            z = t.nodes[nd.parent]
            if z.parent is None:
                continue
            gp = t.nodes[z.parent]
            bx, by = set(gp.bag), set(nd.bag)
            if len(by - bx) != 1 or not bx or set(z.bag) != bx & by:
                out.append(Violation("property-4", x,
                                     f"main node {x} under {gp.id} is not home to exactly one vertex "
                                     f"or intersection {z.id} is not the bag intersection"))
        if nd.kind == INTERSECTION:
            if nd.parent is not None and not set(nd.bag) <= set(t.nodes[nd.parent].bag):
                out.append(Violation("property-5", x, f"intersection bag {x} not inside its parent"))
        if nd.kind == MAIN:
            sib_bags: dict[tuple, int] = {}
            for c in nd.children:
                b = t.nodes[c].bag
                if b in sib_bags:
                    out.append(Violation("property-5", (sib_bags[b], c),
                                         f"sibling intersection nodes {sib_bags[b]} and {c} share bag {list(b)}"))
                sib_bags[b] = c
            if len(nd.children) > 2 ** len(nd.bag) - 1:
                out.append(Violation("children-bound", x, f"main node {x} has {len(nd.children)} children"))
    return out


# -- normal forms ---------------------------------------------------------

def reroot(t: TreeDecomposition, x: int) -> None:
    """Make ``x`` the root by reversing the parent links on its root path."""
    path = t.path_from_root(x)
    for up, down in zip(path, path[1:]):
        t.detach(down)
    for up, down in zip(path, path[1:]):
        t.attach(up, down)
    t.root = x


def _reroot_empty(t: TreeDecomposition) -> None:
    if t.root is None or t.nodes[t.root].bag:
        return
    for x in t.preorder():
        if t.nodes[x].bag:
            reroot(t, x)
            return


def make_unique_home(t: TreeDecomposition) -> TreeDecomposition:
    """Unique-home form: every non-root node is home to exactly one vertex.

    Subset children are absorbed into their parent; a child introducing
    ``j > 1`` vertices gets a string of ``j - 1`` forget nodes above it,
    introducing the new vertices in global order.
    """
    t = t.copy()
    if t.root is None:
        return t
    _reroot_empty(t)
    stack = [t.root]
    while stack:
        x = stack.pop()
        bx = set(t.nodes[x].bag)
        pending = list(t.nodes[x].children)
        while pending:
            y = pending.pop()
            by = set(t.nodes[y].bag)
            new = sorted(by - bx)
            if not new:
                grand = list(t.nodes[y].children)
                for c in grand:
                    t.attach(c, x)
                t.delete(y)
                pending.extend(grand)
            elif len(new) > 1:
                t.detach(y)
                cur, parent = bx & by, x
                for v in new[:-1]:
                    cur = cur | {v}
                    parent = t.add_node(cur, t.nodes[y].kind, parent=parent)
                t.attach(y, parent)
        stack.extend(t.nodes[x].children)
    return t


class _IntersectionTrie:
    """Binary trie over a parent bag: level ``i`` branches on whether the
    ``i``-th bag vertex (global order) belongs to the intersection."""

    def __init__(self, bag: tuple[int, ...]):
        self.bag = bag
        self.root: list = [None, None, None]  # [excluded, included, leaf payload]

    def lookup(self, members: set[int], create: bool):
        node = self.root
        for v in self.bag:
            bit = 1 if v in members else 0
            if node[bit] is None:
                if not create:
                    return None
                node[bit] = [None, None, None]
            node = node[bit]
        return node

    def get(self, members: set[int]):
        node = self.lookup(members, create=False)
        return None if node is None else node[2]

    def put(self, members: set[int], value) -> None:
        self.lookup(members, create=True)[2] = value


def make_grouped(t: TreeDecomposition) -> TreeDecomposition:
    """Grouped form: Main nodes joined through shared Intersection nodes.

    The input is first brought to unique-home form. The graph must be
    connected; an empty intersection between adjacent bags signals it is not.
    """
    t = make_unique_home(t)
    if t.root is None:
        return t
    for x in t.preorder():
        if t.nodes[x].kind != MAIN:
            continue
        bx = t.nodes[x].bag
        trie = _IntersectionTrie(bx)
        for y in list(t.nodes[x].children):
            if t.nodes[y].kind != MAIN:
                continue
            inter = set(bx) & set(t.nodes[y].bag)
            if not inter:
                raise DecompositionError(
                    f"empty intersection between nodes {x} and {y}: graph is disconnected")
            z = trie.get(inter)
            if z is None:
                z = t.add_node(inter, INTERSECTION, parent=x)
                trie.put(inter, z)
            t.attach(y, z)
    return t


# -- helpers used by the driver -------------------------------------------

def single_bag(vertices: Iterable[int]) -> TreeDecomposition:
    t = TreeDecomposition()
    t.add_node(vertices)
    return t


def from_bags(bags: list[Iterable[int]], edges: list[tuple[int, int]], root: int = 0) -> TreeDecomposition:
    """Build a rooted decomposition from indexed bags and undirected tree edges."""
    t = TreeDecomposition()
    ids = [t.add_node(b) for b in bags]
    t.root = ids[root] if ids else None
    nbr: dict[int, list[int]] = {i: [] for i in range(len(bags))}
    for a, b in edges:
        nbr[a].append(b)
        nbr[b].append(a)
    seen, stack = {root}, [root]
    while stack:
        a = stack.pop()
        for b in nbr[a]:
            if b not in seen:
                seen.add(b)
                t.attach(ids[b], ids[a])
                stack.append(b)
    return t


def heuristic_decomposition(g: Graph) -> TreeDecomposition:
    """Min-degree elimination decomposition (networkx heuristic)."""
    import networkx as nx
    from networkx.algorithms.approximation import treewidth_min_degree

    if g.n == 0:
        return TreeDecomposition()
    G = nx.Graph()
    G.add_nodes_from(range(g.n))
    G.add_edges_from(g.edges())
    _, tree = treewidth_min_degree(G)
    bags = list(tree.nodes)
    index = {b: i for i, b in enumerate(bags)}
    edges = [(index[a], index[b]) for a, b in tree.edges]
    # networkx may leave components of the bag tree unconnected for disconnected graphs
    comp_of = {}
    for ci, comp in enumerate(nx.connected_components(tree)):
        for b in comp:
            comp_of[index[b]] = ci
    reps = {}
    for i in range(len(bags)):
        reps.setdefault(comp_of[i], i)
    rlist = list(reps.values())
    edges += [(rlist[0], r) for r in rlist[1:]]
    return from_bags([sorted(b) for b in bags], edges)


def coarsen(t: TreeDecomposition, max_bag: int) -> TreeDecomposition:
    """Contract parent/child pairs whose bag union fits in ``max_bag``.

    Contracting a tree edge into the union bag keeps the decomposition
    valid; this only ever widens bags, up to ``max_bag``.
    """
    t = t.copy()
    for y in t.postorder():
        nd = t.nodes.get(y)
        if nd is None or nd.parent is None:
            continue
        p = t.nodes[nd.parent]
        union = set(p.bag) | set(nd.bag)
        if len(union) <= max_bag:
            p.bag = tuple(sorted(union))
            for c in list(nd.children):
                t.attach(c, p.id)
            t.delete(y)
    return t


def restrict(t: TreeDecomposition, vertices: Iterable[int], relabel: Optional[dict[int, int]] = None
             ) -> TreeDecomposition:
    """Decomposition of an induced subgraph: intersect every bag with ``vertices``."""
    keep = set(vertices)
    out = t.copy()
    for nd in out.nodes.values():
        bag = [v for v in nd.bag if v in keep]
        if relabel is not None:
            bag = [relabel[v] for v in bag]
        nd.bag = tuple(sorted(bag))
        nd.kind = MAIN
        nd.table = None
    return out


def join(parts: list[TreeDecomposition]) -> TreeDecomposition:
    """Disjoint union of decompositions, linked root to root."""
    out = TreeDecomposition()
    first_root = None
    for part in parts:
        if part.root is None:
            continue
        mapping = {}
        for x in part.preorder():
            nd = part.nodes[x]
            parent = mapping.get(nd.parent) if nd.parent is not None else first_root
            mapping[x] = out.add_node(nd.bag, nd.kind, parent=parent)
        if first_root is None:
            first_root = mapping[part.root]
    return out
