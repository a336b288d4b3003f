"""Split selection and the tree rewrites that keep a grouped decomposition
and its tables consistent: rotate/move, merge, and split application.

Labels of a global split are digits: ``0 .. base-2`` are the components
``C1 ..``, ``base - 1`` is the separator ``S``.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .decomposition import (INTERSECTION, MAIN, POSTVISITED, PREVISITED, UNVISITED,
                            TreeDecomposition)
from .graph import Graph
from .partition import (BOT, BagPartition, LABELS, _digit, add_child, fuse, node_table,
                        subtract_child, update_child)


class SplitError(RuntimeError):
    """A precondition of a tree rewrite was violated."""


class StaleTablesError(SplitError):
    pass


class InvariantError(AssertionError):
    """An internal guarantee failed; treated as a defect, never recovered."""


@dataclass
class EngineCounters:
    rotations: int = 0
    merges: int = 0
    fusions: int = 0
    splits: int = 0
    chain_nodes: int = 0
    status_created: int = 0
    status_deleted: int = 0
    all_separator_parents: int = 0
    created: list[int] = field(default_factory=list)  # Main nodes made since last drained


def _new_main(t: TreeDecomposition, bag, parent: Optional[int], ctr: EngineCounters) -> int:
    x = t.add_node(bag, MAIN, parent=parent, status=UNVISITED)
    ctr.status_created += UNVISITED
    ctr.created.append(x)
    return x


def _delete(t: TreeDecomposition, x: int, ctr: EngineCounters) -> None:
    nd = t.nodes[x]
    if nd.kind == MAIN:
        ctr.status_deleted += nd.status
    t.delete(x)


def mark_tables_fresh(t: TreeDecomposition) -> None:
    t.tables_at = t.revision


def tables_fresh(t: TreeDecomposition) -> bool:
    return getattr(t, "tables_at", None) == t.revision


# -- split selection ------------------------------------------------------------

@dataclass
class SplitAssignment:
    base: int
    root: int
    labels: dict[int, int]
    a: dict[int, frozenset[int]]
    editable: set[int]
    size: int
    revision: int
    flags: list[str] = field(default_factory=list)

    @property
    def separator(self) -> set[int]:
        return {v for v, d in self.labels.items() if d == self.base - 1}

    def component(self, i: int) -> set[int]:
        return {v for v, d in self.labels.items() if d == i - 1}

    def bag_partition(self, bag) -> BagPartition:
        names = LABELS[self.base]
        return BagPartition(tuple(bag), tuple(names[self.labels[v]] for v in bag))

    def w_parts(self, bag) -> set[int]:
        """1-based indices of the non-empty W-parts induced on ``bag``."""
        return {self.labels[v] + 1 for v in bag if self.labels[v] != self.base - 1}


def _root_choice(table, k: int, mode: int) -> Optional[int]:
    b = len(table.bag)
    vals = table.entries.astype(np.int64)
    ok = (vals <= k + 1) & (vals < BOT)
    largest = np.zeros(len(vals), dtype=np.int64)
    for d in range(mode - 1):
        cnt = np.zeros(len(vals), dtype=np.int64)
        for j in range(b):
            cnt += _digit(b, mode, j) == d
        largest = np.maximum(largest, cnt)
        if mode == 4:
            ok &= cnt + vals < b
        else:
            ok &= 3 * cnt <= 2 * b
    if not ok.any():
        return None
    # smallest separator, then most balanced, then smallest index
    key = vals * (b + 1) + largest
    return int(np.where(ok, key, np.iinfo(np.int64).max).argmin())


def find_split(g: Graph, t: TreeDecomposition, k: int, mode: int = 4,
               complete: bool = False) -> Optional[SplitAssignment]:
    """Choose a split top-down from the root's table, or ``None`` if none exists.

    The root partition minimises the separator among those meeting the
    balance condition of ``mode``. Below the root each Main node fixes its
    one new vertex to the cheapest label, preferring ``X`` and then the
    smallest label, restricted to the parts its parent already uses so the
    component sets shrink monotonically down the tree. The walk stops at
    non-editable nodes unless ``complete`` is set.
    """
    if not tables_fresh(t):
        raise StaleTablesError("tables do not match the current decomposition")
    r = t.root
    table = t.nodes[r].table
    if table.base != mode:
        raise SplitError(f"tables built for base {table.base}, split mode {mode}")
    idx = _root_choice(table, k, mode)
    if idx is None:
        return None
    x_digit = mode - 1
    labels: dict[int, int] = {}
    bag = t.nodes[r].bag
    rest = idx
    for v in bag:
        rest, d = divmod(rest, mode)
        labels[v] = d
    s = SplitAssignment(mode, r, labels, {}, set(), int(table.entries[idx]), t.revision)
    s.a[r] = frozenset(s.w_parts(bag))
    s.editable.add(r)

    stack = [r]
    while stack:
        x = stack.pop()
        ax = s.a[x]
        for z in t.nodes[x].children:
            zb = t.nodes[z].bag
            used = s.w_parts(zb)
            s.a[z] = frozenset(used) if used else frozenset({min(ax)})
            if zb and not used:
                s.flags.append(f"all-separator:{z}")
            z_editable = len(used) >= 2
            if z_editable:
                s.editable.add(z)
            elif not complete:
                continue
            allowed = sorted(i - 1 for i in s.a[z]) + [x_digit]
            for y in t.nodes[z].children:
                yb = t.nodes[y].bag
                v = next(u for u in yb if u not in labels)
                tab = t.nodes[y].table
                base_idx, pos = 0, 0
                for j, u in enumerate(yb):
                    if u == v:
                        pos = j
                    else:
                        base_idx += labels[u] * mode ** j
                best = None
                # X first so equal sizes keep the larger separator in the bag
                for d in [x_digit] + allowed[:-1]:
                    val = int(tab.entries[base_idx + d * mode ** pos])
                    if best is None or val < best[0]:
                        best = (val, d)
                labels[v] = best[1]
                yw = s.w_parts(yb)
                if z_editable and len(yw) < 2:
                    raise InvariantError(f"non-editable main node {y} under editable intersection {z}")
                s.a[y] = frozenset(yw) if yw else frozenset({min(s.a[z])})
                if yb and not yw:
                    s.flags.append(f"all-separator:{y}")
                if len(yw) >= 2:
                    s.editable.add(y)
                stack.append(y)
    return s


def is_editable(t: TreeDecomposition, x: int, s: SplitAssignment) -> bool:
    return len(s.w_parts(t.nodes[x].bag)) >= 2


# -- rotations and merges ------------------------------------------------------------

def _sibling_with_bag(t: TreeDecomposition, x: int, bag) -> Optional[int]:
    for c in t.nodes[x].children:
        if t.nodes[c].bag == bag:
            return c
    return None


def _adopt(t: TreeDecomposition, x: int, z: int, ctr: EngineCounters) -> None:
    """Hang intersection node ``z`` (with its table) under Main node ``x``,
    fusing it into an existing sibling with the same bag."""
    nz = t.nodes[z]
    t.detach(z)
    twin = _sibling_with_bag(t, x, nz.bag)
    nx_ = t.nodes[x]
    if twin is None:
        t.attach(z, x)
        nx_.table = add_child(nx_.table, nz.table)
        return
    old = t.nodes[twin].table
    t.nodes[twin].table = fuse(old, nz.table)
    for c in list(nz.children):
        t.attach(c, twin)
    t.delete(z)
    nx_.table = update_child(nx_.table, old, t.nodes[twin].table)
    ctr.fusions += 1


def _absorb(t: TreeDecomposition, x: int, y: int, ctr: EngineCounters) -> None:
    """Move all intersection children of detached ``y`` under ``x``; delete ``y``."""
    for z in list(t.nodes[y].children):
        _adopt(t, x, z, ctr)
    _delete(t, y, ctr)
    ctr.merges += 1


def _detach_main(t: TreeDecomposition, y: int, ctr: EngineCounters) -> int:
    """Detach Main node ``y`` from its intersection parent, fixing tables above.

    Returns the Main grandparent.
    """
    z = t.nodes[y].parent
    x = t.nodes[z].parent
    old = t.nodes[z].table
    t.detach(y)
    if t.nodes[z].children:
        t.nodes[z].table = subtract_child(old, t.nodes[y].table)
        t.nodes[x].table = update_child(t.nodes[x].table, old, t.nodes[z].table)
    else:
        t.nodes[x].table = subtract_child(t.nodes[x].table, old)
        t.delete(z)
    return x


def merge(g: Graph, t: TreeDecomposition, x: int, y: int, ctr: Optional[EngineCounters] = None) -> None:
    """Absorb Main grandchild ``y`` (with ``B_y ⊆ B_x``) into ``x``.

    Intersection children of ``y`` are fused entrywise into equal-bag
    children of ``x`` or re-parented; ``y`` is deleted. Every table on the
    path to the root is kept exact.
    """
    ctr = ctr or EngineCounters()
    if t.main_parent(y) != x or not set(t.nodes[y].bag) <= set(t.nodes[x].bag):
        raise SplitError(f"cannot merge {y} into {x}")
    if x != t.root:
        raise SplitError("merge is only performed at the root")
    _detach_main(t, y, ctr)
    _absorb(t, x, y, ctr)
    mark_tables_fresh(t)


def _hang(g: Graph, t: TreeDecomposition, x: int, y: int, ctr: EngineCounters) -> None:
    """Place detached Main subtree ``y`` below Main node ``x`` (the root),
    through a chain of forget nodes when ``y`` introduces several vertices."""
    bx, by = set(t.nodes[x].bag), set(t.nodes[y].bag)
    if by <= bx:
        _absorb(t, x, y, ctr)
        return
    inter = bx & by
    new = sorted(by - bx)
    base = t.nodes[x].table.base
    cur = y
    for i in range(len(new) - 1, 0, -1):
        bag = inter | set(new[:i])
        m = _new_main(t, bag, None, ctr)
        zi = t.add_node(bag, INTERSECTION, parent=m)
        t.attach(cur, zi)
        t.nodes[zi].table = node_table(g, t, zi, base)
        t.nodes[m].table = node_table(g, t, m, base)
        ctr.chain_nodes += 1
        cur = m
    zx = _sibling_with_bag(t, x, tuple(sorted(inter)))
    if zx is None:
        zx = t.add_node(inter, INTERSECTION, parent=x)
        t.attach(cur, zx)
        t.nodes[zx].table = node_table(g, t, zx, base)
        t.nodes[x].table = add_child(t.nodes[x].table, t.nodes[zx].table)
    else:
        old = t.nodes[zx].table
        t.attach(cur, zx)
        t.nodes[zx].table = add_child(old, t.nodes[cur].table)
        t.nodes[x].table = update_child(t.nodes[x].table, old, t.nodes[zx].table)


def rotate(g: Graph, t: TreeDecomposition, r: int, y: int, ctr: Optional[EngineCounters] = None) -> int:
    """Make Main grandchild ``y`` of root ``r`` the new root.

    Returns the new root id (``y``).
    """
    ctr = ctr or EngineCounters()
    if t.root != r or t.nodes[y].kind != MAIN or t.main_parent(y) != r:
        raise SplitError(f"node {y} is not a Main grandchild of the root {r}")
    _detach_main(t, y, ctr)
    t.set_root(y)
    _hang(g, t, y, r, ctr)
    ctr.rotations += 1
    mark_tables_fresh(t)
    return y


def move_to_root(g: Graph, t: TreeDecomposition, x: int, ctr: Optional[EngineCounters] = None) -> None:
    """Re-root at Main node ``x`` by rotating along the root-to-``x`` path."""
    ctr = ctr or EngineCounters()
    if t.nodes[x].kind != MAIN:
        raise SplitError(f"node {x} is not a Main node")
    path = [p for p in t.path_from_root(x) if t.nodes[p].kind == MAIN]
    for y in path[1:]:
        rotate(g, t, t.root, y, ctr)


# -- split application ---------------------------------------------------------------------

def _region_preorder(t: TreeDecomposition, top: int, members: set[int]) -> list[int]:
    """Preorder of the connected part of ``members`` hanging from ``top``."""
    out, stack = [], [top]
    while stack:
        x = stack.pop()
        out.append(x)
        stack.extend(c for c in reversed(t.nodes[x].children) if c in members)
    return out


@dataclass
class _Copy:
    bag: frozenset
    children: list = field(default_factory=list)
    intact: list = field(default_factory=list)


@dataclass
class SplitResult:
    new_root: int
    new_mains: list[int]
    retained_max: int
    bag_limit: int


def apply_split(g: Graph, t: TreeDecomposition, s: SplitAssignment, k: int,
                ctr: Optional[EngineCounters] = None) -> SplitResult:
    """Replace every editable node by per-component copies under a new root.

    A copy of Main node ``x`` for component ``i`` keeps ``B_x ∩ (C_i ∪ S)``
    plus the separator vertices of its editable descendants in the same
    component, so that each separator vertex reaches the new root, whose
    bag is the union of the separators of all editable nodes. Non-editable
    subtrees move unchanged into their single component. Copies not home
    to any vertex are merged upward while hanging the new tree; the tables
    of new nodes are rebuilt bottom-up, equal-bag intact siblings fused.
    """
    ctr = ctr or EngineCounters()
    if s.revision != t.revision or s.root != t.root:
        raise StaleTablesError("split assignment refers to an older decomposition")
    r = t.root
    base = t.nodes[r].table.base
    sep = s.base - 1
    limit = len(t.nodes[r].bag)
    region = _region_preorder(t, r, s.editable)
    ed_mains = [x for x in region if t.nodes[x].kind == MAIN]
    s_multi = {v for x in ed_mains for v in t.nodes[x].bag if s.labels[v] == sep}

    copies: dict[tuple[int, int], _Copy] = {}
    for x in reversed(ed_mains):
        nx_ = t.nodes[x]
        for i in s.a[x]:
            bag = {v for v in nx_.bag if s.labels[v] in (i - 1, sep)}
            cp = _Copy(frozenset())
            for z in nx_.children:
                if z in s.editable:
                    for y in t.nodes[z].children:
                        if i in s.a[y]:
                            child = copies[(y, i)]
                            cp.children.append(child)
                            bag |= {v for v in child.bag if v in s_multi}
                elif s.a[z] == frozenset({i}):
                    cp.intact.append(z)
            cp.bag = frozenset(bag)
            if len(cp.bag) > len(nx_.bag):
                raise InvariantError(f"copy of node {x} for C{i} grew from {len(nx_.bag)} to {len(cp.bag)}")
            copies[(x, i)] = cp
    for x in ed_mains:
        for z in t.nodes[x].children:
            if z not in s.editable and not any(z in copies[(x, i)].intact for i in s.a[x]):
                raise InvariantError(f"non-editable node {z} assigned outside its parent's components")

    # tear down the editable region, keeping intact subtrees
    for x in ed_mains:
        for z in list(t.nodes[x].children):
            if z not in s.editable:
                t.detach(z)
    for x in reversed(region):
        for c in list(t.nodes[x].children):
            t.detach(c)
        _delete(t, x, ctr)

    new_root = _new_main(t, s_multi, None, ctr)
    t.root = new_root
    dirty = {new_root}
    new_mains = [new_root]

    def intersection_under(p: int, bag: frozenset) -> int:
        key = tuple(sorted(bag))
        z = _sibling_with_bag(t, p, key)
        if z is None:
            z = t.add_node(key, INTERSECTION, parent=p)
            dirty.add(z)
        return z

    def adopt_intact(p: int, z: int) -> None:
        twin = _sibling_with_bag(t, p, t.nodes[z].bag)
        if twin is None:
            t.attach(z, p)
            return
        for c in list(t.nodes[z].children):
            t.attach(c, twin)
        if twin not in dirty:
            t.nodes[twin].table = fuse(t.nodes[twin].table, t.nodes[z].table)
            ctr.fusions += 1
        t.delete(z)

    def place(p: int, cp: _Copy) -> None:
        bp = set(t.nodes[p].bag)
        if cp.bag <= bp:
            for z in cp.intact:
                adopt_intact(p, z)
            for c in cp.children:
                place(p, c)
            ctr.merges += 1
            return
        at = p
        cur = bp & cp.bag
        for v in sorted(cp.bag - bp)[:-1]:
            cur = cur | {v}
            z = intersection_under(at, frozenset(t.nodes[at].bag) & cur)
            at = _new_main(t, cur, z, ctr)
            dirty.add(at)
            new_mains.append(at)
            ctr.chain_nodes += 1
        z = intersection_under(at, frozenset(t.nodes[at].bag) & cp.bag)
        node = _new_main(t, cp.bag, z, ctr)
        dirty.add(node)
        new_mains.append(node)
        for zi in cp.intact:
            adopt_intact(node, zi)
        for c in cp.children:
            place(node, c)

    for i in sorted(s.a[r]):
        place(new_root, copies[(r, i)])

    for x in reversed(_region_preorder(t, new_root, dirty)):
        t.nodes[x].table = node_table(g, t, x, base)
    retained = sum(1 for x in new_mains if len(t.nodes[x].bag) >= limit)
    ctr.splits += 1
    mark_tables_fresh(t)
    return SplitResult(new_root, new_mains, retained, limit)


# -- depth-first search bookkeeping ---------------------------------------------------------------

class DfsState:
    """Round-wide DFS over Main nodes with statuses 2 (unvisited),
    1 (pre-visited) and 0 (post-visited) stored on the nodes.

    Every call to :meth:`advance` lowers exactly one status by one.
    """

    def __init__(self, t: TreeDecomposition):
        self.steps = 0
        self.cursor: Optional[int] = None
        self._pre: set[int] = set()
        self._heap: list[int] = []
        for x in t.main_nodes():
            t.nodes[x].status = UNVISITED
            self._heap.append(x)
        heapq.heapify(self._heap)
        self.cursor = None
        self._pending_root = t.root

    def register(self, xs) -> None:
        for x in xs:
            heapq.heappush(self._heap, x)

    def forget(self, t: TreeDecomposition) -> None:
        self._pre = {x for x in self._pre if x in t.nodes}

    def _mark(self, t: TreeDecomposition, x: int, status: int) -> None:
        t.nodes[x].status = status
        self.steps += 1
        if status == PREVISITED:
            self._pre.add(x)
        else:
            self._pre.discard(x)

    def _min_unvisited(self, t: TreeDecomposition) -> Optional[int]:
        while self._heap:
            x = self._heap[0]
            nd = t.nodes.get(x)
            if nd is not None and nd.kind == MAIN and nd.status == UNVISITED:
                return x
            heapq.heappop(self._heap)
        return None

    def advance(self, t: TreeDecomposition) -> Optional[tuple[str, int]]:
        """One DFS step: ``("pre", x)``, ``("post", x)`` or ``None`` when done."""
        if self._pending_root is not None:
            x, self._pending_root = self._pending_root, None
            if x in t.nodes and t.nodes[x].status == UNVISITED:
                self._mark(t, x, PREVISITED)
                self.cursor = x
                return ("pre", x)
        c = self.cursor
        if c is None or c not in t.nodes or t.nodes[c].status != PREVISITED:
            c = dfs_resume_point(self, t)
            if c is None:
                return None
            if t.nodes[c].status == UNVISITED:
                self._mark(t, c, PREVISITED)
                self.cursor = c
                return ("pre", c)
        nxt = next((y for y in sorted(t.grandchildren(c)) if t.nodes[y].status == UNVISITED), None)
        if nxt is not None:
            self._mark(t, nxt, PREVISITED)
            self.cursor = nxt
            return ("pre", nxt)
        self._mark(t, c, POSTVISITED)
        up = t.main_parent(c)
        self.cursor = up if up is not None and t.nodes[up].status == PREVISITED else None
        return ("post", c)

    def all_post_visited(self, t: TreeDecomposition) -> bool:
        return all(t.nodes[x].status == POSTVISITED for x in t.main_nodes())


def _main_neighbours(t: TreeDecomposition, x: int) -> list[int]:
    out = list(t.grandchildren(x))
    up = t.main_parent(x)
    if up is not None:
        out.append(up)
    return out


def dfs_resume_point(d: DfsState, t: TreeDecomposition, new_nodes=None) -> Optional[int]:
    """Where the DFS continues after the tree changed under it.

    A pre-visited node next to an unvisited node wins (those adjacent to
    ``new_nodes`` first); otherwise the smallest-id unvisited node; then
    any remaining pre-visited node. ``None`` means the round is complete.
    """
    d.forget(t)
    if new_nodes:
        cand = sorted({y for x in new_nodes if x in t.nodes for y in _main_neighbours(t, x)
                       if t.nodes[y].status == PREVISITED})
        if cand:
            return cand[0]
    for x in sorted(d._pre):
        if any(t.nodes[y].status == UNVISITED for y in _main_neighbours(t, x)):
            return x
    u = d._min_unvisited(t)
    if u is not None:
        return u
    if d._pre:
        return min(d._pre)
    return None
