"""PACE 2017 ``.gr`` and ``.td`` text formats (1-indexed on disk)."""

from __future__ import annotations

from typing import TextIO

from .graph import Graph, GraphError
from .decomposition import MAIN, TreeDecomposition


class ParseError(ValueError):
    def __init__(self, lineno: int, msg: str):
        super().__init__(f"line {lineno}: {msg}")
        self.lineno = lineno


def _lines(text: str):
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        yield lineno, line.split()


def _ints(lineno: int, parts: list[str]) -> list[int]:
    try:
        return [int(p) for p in parts]
    except ValueError:
        raise ParseError(lineno, f"expected integers, got {' '.join(parts)!r}") from None


def parse_graph(text: str) -> Graph:
    n = m = None
    edges: list[tuple[int, int]] = []
    seen: set[tuple[int, int]] = set()
    for lineno, parts in _lines(text):
        if parts[0] == "p":
            if n is not None:
                raise ParseError(lineno, "duplicate header")
            if len(parts) != 4 or parts[1] != "tw":
                raise ParseError(lineno, "malformed header, expected 'p tw <n> <m>'")
            n, m = _ints(lineno, parts[2:])
            if n < 0 or m < 0:
                raise ParseError(lineno, "negative counts in header")
            continue
        if n is None:
            raise ParseError(lineno, "edge before header")
        if len(parts) != 2:
            raise ParseError(lineno, "expected '<u> <v>'")
        u, v = _ints(lineno, parts)
        if not (1 <= u <= n and 1 <= v <= n):
            raise ParseError(lineno, f"vertex id out of range 1..{n}")
        if u == v:
            raise ParseError(lineno, f"self-loop at vertex {u}")
        key = (min(u, v), max(u, v))
        if key in seen:
            raise ParseError(lineno, f"duplicate edge {u} {v}")
        seen.add(key)
        edges.append((u - 1, v - 1))
    if n is None:
        raise ParseError(0, "missing header")
    if len(edges) != m:
        raise ParseError(0, f"header declares {m} edges, found {len(edges)}")
    try:
        return Graph.from_edges(n, edges)
    except GraphError as exc:  # pragma: no cover - guarded above
        raise ParseError(0, str(exc)) from None


def format_graph(g: Graph) -> str:
    out = [f"p tw {g.n} {g.m}"]
    out.extend(f"{u + 1} {v + 1}" for u, v in g.edges())
    return "\n".join(out) + "\n"


def read_graph(path) -> Graph:
    with open(path) as fh:
        return parse_graph(fh.read())


def write_graph(g: Graph, fh: TextIO) -> None:
    fh.write(format_graph(g))


def parse_td(text: str) -> TreeDecomposition:
    """Parse a ``.td`` file; the first bag becomes the root, all nodes Main."""
    header = None
    bags: dict[int, list[int]] = {}
    tree_edges: list[tuple[int, int]] = []
    for lineno, parts in _lines(text):
        if parts[0] == "s":
            if header is not None:
                raise ParseError(lineno, "duplicate header")
            if len(parts) != 5 or parts[1] != "td":
                raise ParseError(lineno, "malformed header, expected 's td <N> <maxbag> <n>'")
            header = _ints(lineno, parts[2:])
        elif parts[0] == "b":
            if header is None:
                raise ParseError(lineno, "bag before header")
            nums = _ints(lineno, parts[1:])
            if not nums:
                raise ParseError(lineno, "bag line without id")
            i, vs = nums[0], nums[1:]
            if not 1 <= i <= header[0]:
                raise ParseError(lineno, f"bag id {i} out of range")
            if i in bags:
                raise ParseError(lineno, f"duplicate bag {i}")
            if any(not 1 <= v <= header[2] for v in vs):
                raise ParseError(lineno, "vertex id out of range")
            bags[i] = sorted({v - 1 for v in vs})
        else:
            if header is None:
                raise ParseError(lineno, "edge before header")
            if len(parts) != 2:
                raise ParseError(lineno, "expected '<i> <j>'")
            a, b = _ints(lineno, parts)
            if not (1 <= a <= header[0] and 1 <= b <= header[0]):
                raise ParseError(lineno, "tree edge references unknown bag")
            tree_edges.append((a, b))
    if header is None:
        raise ParseError(0, "missing header")
    nbags = header[0]
    if len(bags) != nbags:
        raise ParseError(0, f"header declares {nbags} bags, found {len(bags)}")
    if len(tree_edges) != max(nbags - 1, 0):
        raise ParseError(0, f"expected {max(nbags - 1, 0)} tree edges, found {len(tree_edges)}")

    td = TreeDecomposition()
    ids = {i: td.add_node(bags[i], MAIN) for i in sorted(bags)}
    nbr: dict[int, list[int]] = {i: [] for i in bags}
    for a, b in tree_edges:
        nbr[a].append(b)
        nbr[b].append(a)
    if nbags:
        root = min(bags)
        td.root = ids[root]
        seen = {root}
        stack = [root]
        while stack:
            a = stack.pop()
            for b in nbr[a]:
                if b in seen:
                    raise ParseError(0, "decomposition tree contains a cycle")
                seen.add(b)
                td.attach(ids[b], ids[a])
                stack.append(b)
                nbr[b].remove(a)
        if len(seen) != nbags:
            raise ParseError(0, "decomposition tree is disconnected")
    return td


def format_td(td: TreeDecomposition, n: int) -> str:
    order = td.preorder()
    num = {x: i + 1 for i, x in enumerate(order)}
    maxbag = max((len(td.nodes[x].bag) for x in order), default=0)
    out = [f"s td {len(order)} {maxbag} {n}"]
    for x in order:
        out.append(" ".join(["b", str(num[x])] + [str(v + 1) for v in td.nodes[x].bag]))
    for x in order:
        p = td.nodes[x].parent
        if p is not None:
            out.append(f"{num[p]} {num[x]}")
    return "\n".join(out) + "\n"


def read_td(path) -> TreeDecomposition:
    with open(path) as fh:
        return parse_td(fh.read())
