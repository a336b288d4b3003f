"""Bag partitions, their dense integer encoding, and per-node DP tables.

A partition of a bag labels every bag vertex ``W1``, ``W2``, ``W3`` or ``X``
(``W3`` is absent when ``base == 3``). Digit ``j`` of the encoding holds the
label of the ``j``-th smallest bag vertex, least significant first; the
separator label ``X`` is always the top digit ``base - 1``.

A table entry is the minimum separator size over legal partitions of the
node's subtree vertices compatible with the bag partition, counting bag
vertices labelled ``X``. Illegal bag partitions hold ``BOT``.

Combining a child into its parent follows one rule for both node kinds::

    parent[P] += child[P restricted or minimised onto the child bag] - |X shared|

where the shared separator vertices are those of the smaller of the two
bags (the intersection node's bag), counted once in the parent already.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import product
from typing import Iterable, Optional, Sequence

import numpy as np

from .graph import Graph

BOT = np.int32(1 << 30)
DTYPE = np.int32

LABELS = {4: ("W1", "W2", "W3", "X"), 3: ("W1", "W2", "X")}


class PartitionError(ValueError):
    pass


@dataclass
class OpStats:
    """Work counters for table operations; reset by the round driver."""

    ops: int = 0
    entries: int = 0
    max_entries: int = 0
    allocations: int = 0

    def record(self, size: int) -> None:
        self.ops += 1
        self.entries += size
        self.max_entries = max(self.max_entries, size)

    def reset(self) -> None:
        self.ops = self.entries = self.max_entries = self.allocations = 0


stats = OpStats()


@dataclass(frozen=True)
class BagPartition:
    bag: tuple[int, ...]
    labels: tuple[str, ...]

    def __post_init__(self):
        if len(self.bag) != len(self.labels):
            raise PartitionError("one label per bag vertex required")
        if list(self.bag) != sorted(set(self.bag)):
            raise PartitionError("bag must be sorted and duplicate-free")

    @classmethod
    def from_parts(cls, w1=(), w2=(), w3=(), x=()) -> "BagPartition":
        lab = {}
        for name, part in (("W1", w1), ("W2", w2), ("W3", w3), ("X", x)):
            for v in part:
                if v in lab:
                    raise PartitionError(f"vertex {v} in two parts")
                lab[v] = name
        bag = tuple(sorted(lab))
        return cls(bag, tuple(lab[v] for v in bag))

    def label_of(self, v: int) -> str:
        return self.labels[self.bag.index(v)]

    def part(self, name: str) -> set[int]:
        return {v for v, lab in zip(self.bag, self.labels) if lab == name}

    @property
    def separator(self) -> set[int]:
        return self.part("X")

    def restrict(self, vs: Iterable[int]) -> "BagPartition":
        keep = set(vs)
        pairs = [(v, lab) for v, lab in zip(self.bag, self.labels) if v in keep]
        return BagPartition(tuple(v for v, _ in pairs), tuple(lab for _, lab in pairs))


def encode_partition(p: BagPartition, base: int) -> int:
    digit = {lab: d for d, lab in enumerate(LABELS[base])}
    idx = 0
    for j, lab in enumerate(p.labels):
        if lab not in digit:
            raise PartitionError(f"label {lab} not available with base {base}")
        idx += digit[lab] * base ** j
    return idx


def decode_partition(index: int, bag: Sequence[int], base: int) -> BagPartition:
    if not 0 <= index < base ** len(bag):
        raise PartitionError(f"index {index} out of range for bag of size {len(bag)}")
    labs = []
    for _ in bag:
        index, d = divmod(index, base)
        labs.append(LABELS[base][d])
    return BagPartition(tuple(bag), tuple(labs))


def is_legal(g: Graph, p: BagPartition) -> bool:
    w = [(v, lab) for v, lab in zip(p.bag, p.labels) if lab != "X"]
    lab = dict(w)
    return not any(u in lab and lab[u] != lv and g.has_edge(u, v) for v, lv in w for u in g.adj[v])


# -- cached index arithmetic -------------------------------------------------

@lru_cache(maxsize=64)
def _digit(b: int, base: int, j: int) -> np.ndarray:
    idx = np.arange(base ** b, dtype=np.int64)
    return ((idx // base ** j) % base).astype(np.int8)


@lru_cache(maxsize=64)
def xcount(b: int, base: int) -> np.ndarray:
    out = np.zeros(base ** b, dtype=DTYPE)
    for j in range(b):
        out += _digit(b, base, j) == base - 1
    out.flags.writeable = False
    return out


@lru_cache(maxsize=2048)
def _legal_mask(b: int, base: int, pairs: tuple[tuple[int, int], ...]) -> np.ndarray:
    legal = np.ones(base ** b, dtype=bool)
    x = base - 1
    for p, q in pairs:
        dp, dq = _digit(b, base, p), _digit(b, base, q)
        legal &= ~((dp != dq) & (dp != x) & (dq != x))
    legal.flags.writeable = False
    return legal


def legal_mask(g: Graph, bag: Sequence[int], base: int) -> np.ndarray:
    pos = {v: i for i, v in enumerate(bag)}
    pairs = tuple(sorted((pos[u], pos[v]) for u in bag for v in g.adj[u] if v in pos and u < v))
    return _legal_mask(len(bag), base, pairs)


# -- tables --------------------------------------------------------------------

@dataclass
class DPTable:
    base: int
    bag: tuple[int, ...]
    entries: np.ndarray

    def __len__(self) -> int:
        return len(self.entries)

    def get(self, p: BagPartition | int) -> Optional[int]:
        idx = p if isinstance(p, (int, np.integer)) else encode_partition(p, self.base)
        val = int(self.entries[idx])
        return None if val >= BOT else val

    def same_as(self, other: "DPTable") -> bool:
        return (self.base == other.base and self.bag == other.bag
                and np.array_equal(self.entries, other.entries))


def _alloc(entries: np.ndarray, base: int, bag: tuple[int, ...]) -> DPTable:
    stats.allocations += 1
    stats.max_entries = max(stats.max_entries, len(entries))
    return DPTable(base, bag, entries)


def init_table(g: Graph, bag: Sequence[int], base: int = 4) -> DPTable:
    bag = tuple(bag)
    legal = legal_mask(g, bag, base)
    entries = np.where(legal, xcount(len(bag), base), BOT).astype(DTYPE)
    stats.record(len(entries))
    return _alloc(entries, base, bag)


def _child_view(parent: DPTable, child: DPTable) -> tuple[np.ndarray, np.ndarray]:
    """Child values and shared-separator counts aligned to the parent's entries."""
    base, bx, by = parent.base, parent.bag, child.bag
    if child.base != base:
        raise PartitionError("tables use different bases")
    if len(by) == len(bx) + 1 and set(bx) <= set(by):
        v = (set(by) - set(bx)).pop()
        axis = by.index(v)
        shaped = child.entries.reshape((base,) * len(by), order="F")
        best = shaped.min(axis=axis).reshape(-1, order="F")
        return best, xcount(len(bx), base)
    if set(by) <= set(bx):
        pos = set(bx.index(v) for v in by)
        shape = [base if j in pos else 1 for j in range(len(bx))]
        full = (base,) * len(bx)
        vals = np.broadcast_to(child.entries.reshape(shape, order="F"), full)
        xs = np.broadcast_to(xcount(len(by), base).reshape(shape, order="F"), full)
        return vals.reshape(-1, order="F"), xs.reshape(-1, order="F")
    raise PartitionError(f"bag {list(by)} is neither parent bag plus one vertex nor a subset of {list(bx)}")


def _combine(parent: DPTable, child: DPTable, sign: int) -> DPTable:
    vals, xs = _child_view(parent, child)
    dead = (parent.entries >= BOT) | (vals >= BOT)
    out = np.where(dead, BOT, parent.entries + sign * (vals - xs)).astype(DTYPE)
    stats.record(len(out))
    return _alloc(out, parent.base, parent.bag)


def add_child(parent: DPTable, child: DPTable) -> DPTable:
    """Parent table after attaching ``child`` (either node-kind case)."""
    return _combine(parent, child, +1)


def subtract_child(parent: DPTable, child: DPTable) -> DPTable:
    """Exact inverse of :func:`add_child` with the same child table."""
    return _combine(parent, child, -1)


def update_child(parent: DPTable, old: DPTable, new: DPTable) -> DPTable:
    vo, xo = _child_view(parent, old)
    vn, _ = _child_view(parent, new)
    dead = (parent.entries >= BOT) | (vo >= BOT) | (vn >= BOT)
    out = np.where(dead, BOT, parent.entries - vo + vn).astype(DTYPE)
    stats.record(len(out))
    return _alloc(out, parent.base, parent.bag)


def fuse(a: DPTable, b: DPTable) -> DPTable:
    """Join two tables over the same bag whose subtrees meet only in that bag."""
    if a.bag != b.bag or a.base != b.base:
        raise PartitionError("fuse needs equal bags")
    xs = xcount(len(a.bag), a.base)
    dead = (a.entries >= BOT) | (b.entries >= BOT)
    out = np.where(dead, BOT, a.entries + b.entries - xs).astype(DTYPE)
    stats.record(len(out))
    return _alloc(out, a.base, a.bag)


def all_partitions(bag: Sequence[int], base: int) -> Iterable[BagPartition]:
    for labs in product(LABELS[base], repeat=len(bag)):
        yield BagPartition(tuple(bag), labs)


def node_table(g: Graph, t, x: int, base: int) -> DPTable:
    """Table of node ``x`` from scratch given its children's current tables."""
    tab = init_table(g, t.nodes[x].bag, base)
    for c in t.nodes[x].children:
        tab = add_child(tab, t.nodes[c].table)
    return tab


def rebuild_tables(g: Graph, t, base: int) -> int:
    """Recompute every table bottom-up; returns the number of tables built."""
    order = t.postorder()
    for x in order:
        t.nodes[x].table = node_table(g, t, x, base)
    t.tables_at = t.revision
    return len(order)
