"""Round loop of the 2-approximation, the per-component bootstrap, and
potential-function telemetry."""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from . import partition
from .decomposition import (MAIN, TreeDecomposition, heuristic_decomposition, join,
                            make_grouped, restrict, single_bag, validate_grouped, validate_td)
from .graph import Graph, connected_components
from .partition import rebuild_tables
from .split import (DfsState, EngineCounters, InvariantError, apply_split, dfs_resume_point,
                    find_split, rotate)


@dataclass
class RunConfig:
    k: int
    mode: str = "auto"  # "auto", "3" or "4"
    telemetry: bool = False
    c_alpha: Fraction = Fraction(8)
    c_beta: Fraction = Fraction(1)
    c_gamma: Fraction = Fraction(2)
    c_delta: Fraction = Fraction(4)
    seed: int = 0
    check: bool = False  # validate after every rewrite; slow
    single_bag_max: int = 9  # components up to this size start from one bag
    parallel_components: bool = False

    def __post_init__(self):
        if self.k < 0:
            raise ValueError("k must be non-negative")
        if self.mode not in ("auto", "3", "4"):
            raise ValueError(f"mode must be auto, 3 or 4, not {self.mode!r}")
        for name in ("c_alpha", "c_beta", "c_gamma", "c_delta"):
            val = Fraction(getattr(self, name))
            if val <= 0:
                raise ValueError(f"{name} must be positive")
            setattr(self, name, val)
        if self.c_alpha <= max(self.c_beta, self.c_gamma, self.c_delta):
            raise ValueError("c_alpha must exceed c_beta, c_gamma and c_delta")


@dataclass
class PotentialMeter:
    alpha: Fraction
    beta: Fraction
    gamma: Fraction
    delta: Fraction
    raw: dict = field(default_factory=dict)  # the same terms before constants

    @property
    def phi(self) -> Fraction:
        return self.alpha + self.beta + self.gamma + self.delta


def alpha_raw(t: TreeDecomposition) -> Fraction:
    total = Fraction(0)
    for x in t.main_nodes():
        bag = t.nodes[x].bag
        up = t.main_parent(x)
        if up is None:
            total += Fraction(len(bag) * (len(bag) + 1), 2)
        else:
            total += len(bag) * len(set(bag) - set(t.nodes[up].bag))
    return total


def potential_phi(t: TreeDecomposition, cfg: RunConfig, k: Optional[int] = None,
                  constants: Optional[tuple] = None) -> PotentialMeter:
    """Snapshot of the four potential terms.

    The root weighs ``|B_r| (|B_r| + 1) / 2``, other Main nodes
    ``|B_x| * |B_x minus parent bag|``; statuses are taken from the nodes.
    ``constants`` overrides ``cfg``'s (alpha, beta, gamma, delta) without
    the ordering check, for inspecting raw terms.
    """
    k = cfg.k if k is None else k
    ca, cb, cg, cd = (cfg.c_alpha, cfg.c_beta, cfg.c_gamma, cfg.c_delta) if constants is None \
        else tuple(Fraction(c) for c in constants)
    a = alpha_raw(t)
    b = sum(t.nodes[x].status for x in t.main_nodes())
    c = len(t.nodes)
    top = t.max_bag_size()
    d = k * k * sum(1 for nd in t.nodes.values() if len(nd.bag) == top)
    return PotentialMeter(ca * a, cb * b, cg * c, cd * d,
                          {"alpha": a, "beta": b, "gamma": c, "delta": d})


def round_mode(w: int, k: int, forced: str = "auto") -> int:
    """3 parts for wide rounds (w >= 3k+3), 4 parts below."""
    if forced != "auto":
        return int(forced)
    return 3 if w >= 3 * k + 3 else 4


class WidthPreconditionError(ValueError):
    pass


@dataclass
class Outcome:
    ok: bool
    decomposition: Optional[TreeDecomposition]
    k: int
    failed_at: Optional[dict] = None
    rounds: list[dict] = field(default_factory=list)

    @property
    def width(self) -> Optional[int]:
        return None if self.decomposition is None else self.decomposition.width


# -- one round -------------------------------------------------------------------------

class _Checker:
    """Validation hooks for instrumented runs (criteria-style checking)."""

    def __init__(self, g: Graph, enabled: bool):
        self.g = g
        self.enabled = enabled
        self.violations: list[str] = []

    def width(self, t: TreeDecomposition) -> int:
        return t.width if self.enabled else 0

    def after(self, what: str, t: TreeDecomposition, width_before: int) -> None:
        if not self.enabled:
            return
        bad = validate_td(self.g, t) + validate_grouped(t)
        self.violations.extend(f"{what}: {v}" for v in bad)
        if t.width > width_before:
            self.violations.append(f"{what}: width grew {width_before} -> {t.width}")


def _move(g: Graph, t: TreeDecomposition, x: int, ctr: EngineCounters, chk: _Checker) -> None:
    path = [p for p in t.path_from_root(x) if t.nodes[p].kind == MAIN]
    for y in path[1:]:
        w0 = chk.width(t)
        rotate(g, t, t.root, y, ctr)
        chk.after("rotate", t, w0)


def run_round(g: Graph, t: TreeDecomposition, k: int, w: int, mode: int, cfg: RunConfig,
              chk: _Checker) -> dict:
    """Split every bag of size ``w + 1`` once, following one DFS over Main nodes."""
    start = time.perf_counter()
    ctr = EngineCounters()
    dfs = DfsState(t)
    meter = potential_phi(t, cfg, k) if cfg.telemetry else None
    ops0 = partition.stats.ops
    beta_start = sum(t.nodes[x].status for x in t.main_nodes())
    rec: dict = {"k": k, "w": w, "mode": mode, "nodes_start": len(t.nodes)}
    alpha_breaks = moves = 0
    guard = 8 * len(t.nodes) + 64
    failed = False
    while True:
        ev = dfs.advance(t)
        if ev is None:
            break
        kind, x = ev
        if kind != "pre" or len(t.nodes[x].bag) != w + 1:
            continue
        if ctr.splits >= guard:
            raise InvariantError(f"round at width {w} exceeded {guard} splits")
        a0 = alpha_raw(t) if cfg.telemetry else None
        w0 = chk.width(t)
        _move(g, t, x, ctr, chk)
        chk.after("move_to_root", t, w0)
        dfs.register(ctr.created)
        ctr.created.clear()
        moves += 1
        if cfg.telemetry and alpha_raw(t) != a0:
            alpha_breaks += 1
        s = find_split(g, t, k, mode)
        if s is None:
            failed = True
            break
        ctr.all_separator_parents += len(s.flags)
        res = apply_split(g, t, s, k, ctr)
        chk.after("apply_split", t, w0)
        dfs.register(ctr.created)
        ctr.created.clear()
        dfs.cursor = dfs_resume_point(dfs, t, res.new_mains)
    beta_end = sum(t.nodes[x].status for x in t.main_nodes())
    rec.update(
        failed=failed,
        dp_recomputes=partition.stats.ops - ops0,
        max_table_entries=partition.stats.max_entries,
        dfs_steps=dfs.steps,
        beta_start=beta_start,
        beta_end=beta_end,
        status_created=ctr.status_created,
        status_deleted=ctr.status_deleted,
        all_post_visited=dfs.all_post_visited(t) if not failed else None,
        rotations=ctr.rotations,
        merges=ctr.merges,
        fusions=ctr.fusions,
        splits=ctr.splits,
        moves=moves,
        chain_nodes=ctr.chain_nodes,
        all_separator_flags=ctr.all_separator_parents,
        alpha_breaks=alpha_breaks,
        width_end=t.width,
        nodes_end=len(t.nodes),
        wall_ms=(time.perf_counter() - start) * 1000.0,
    )
    if meter is not None:
        rec.update(phi_start=meter.phi, alpha=meter.alpha, beta=meter.beta,
                   gamma=meter.gamma, delta=meter.delta,
                   raw={k_: v for k_, v in meter.raw.items()})
    return rec


# -- per-component algorithm -----------------------------------------------------------

def _two_approx_connected(g: Graph, t: TreeDecomposition, k: int, cfg: RunConfig,
                          rounds: list[dict]) -> Optional[TreeDecomposition]:
    chk = _Checker(g, cfg.check)
    t = make_grouped(t)
    w = t.width
    base = None
    while w >= 2 * k + 2:
        mode = round_mode(w, k, cfg.mode)
        partition.stats.max_entries = 0
        if mode != base:
            ops0 = partition.stats.ops
            rebuild_tables(g, t, mode)
            base = mode
            rebuild_ops = partition.stats.ops - ops0
        else:
            rebuild_ops = 0
        rec = run_round(g, t, k, w, mode, cfg, chk)
        rec["rebuild_ops"] = rebuild_ops
        rec["violations"] = list(chk.violations)
        chk.violations.clear()
        rounds.append(rec)
        if rec["failed"]:
            return None
        if t.width >= w:
            raise InvariantError(f"round at width {w} left width {t.width}")
        w = t.width
    for nd in t.nodes.values():
        nd.table = None
    return t


def _component_td(t: TreeDecomposition, comp: list[int]) -> TreeDecomposition:
    local = {v: i for i, v in enumerate(comp)}
    return restrict(t, comp, relabel=local)


def _lift(t: TreeDecomposition, comp: list[int]) -> TreeDecomposition:
    out = t.copy()
    for nd in out.nodes.values():
        nd.bag = tuple(sorted(comp[v] for v in nd.bag))
        nd.table = None
    return out


def two_approx(g: Graph, t_in: TreeDecomposition, k: int, cfg: Optional[RunConfig] = None) -> Outcome:
    """Width at most ``2k + 1`` from a decomposition of width at most ``4k + 3``,
    or a failure proving ``tw(g) > k``."""
    cfg = cfg or RunConfig(k=k)
    bad = validate_td(g, t_in)
    if bad:
        raise ValueError(f"input is not a tree decomposition: {bad[0]}")
    if g.n and t_in.width > 4 * k + 3:
        raise WidthPreconditionError(f"input width {t_in.width} exceeds 4k+3 = {4 * k + 3}")
    rounds: list[dict] = []
    parts = []
    for comp in connected_components(g):
        sub, _ = g.subgraph(comp)
        if len(comp) <= 2 * k + 2:
            parts.append(single_bag(comp))
            continue
        res = _two_approx_connected(sub, _component_td(t_in, comp), k, cfg, rounds)
        if res is None:
            fail = dict(rounds[-1])
            fail["component"] = comp
            return Outcome(False, None, k, fail, rounds)
        parts.append(_lift(res, comp))
    return Outcome(True, join(parts), k, None, rounds)


def _decide_component(args) -> tuple[Optional[TreeDecomposition], list[dict], Optional[dict]]:
    sub, comp, k, cfg = args
    rounds: list[dict] = []
    if len(comp) <= max(2 * k + 2, 1):
        return single_bag(comp), rounds, None
    t = single_bag(range(sub.n)) if sub.n <= cfg.single_bag_max else heuristic_decomposition(sub)
    while t.width > 2 * k + 1:
        w = t.width
        kk = max(k, math.ceil((w - 3) / 4))
        res = _two_approx_connected(sub, t, kk, cfg, rounds)
        if res is None:
            fail = dict(rounds[-1])
            fail["component"] = comp
            return None, rounds, fail
        t = res
    return _lift(t, comp), rounds, None


def decide_treewidth(g: Graph, k: int, cfg: Optional[RunConfig] = None) -> Outcome:
    """Decomposition of width at most ``2k + 1``, or a proof that ``tw(g) > k``.

    Components are handled separately. Each starts from one bag when small
    and from a min-degree decomposition otherwise; while its width exceeds
    ``2k + 1`` the 2-approximation runs with ``max(k, ceil((w - 3) / 4))``,
    which always meets the input-width requirement and shrinks the width.
    """
    cfg = cfg or RunConfig(k=k)
    comps = connected_components(g)
    jobs = [(g.subgraph(c)[0], c, k, cfg) for c in comps]
    if cfg.parallel_components and len(jobs) > 1:
        with ProcessPoolExecutor() as ex:
            results = list(ex.map(_decide_component, jobs))
    else:
        results = [_decide_component(j) for j in jobs]
    rounds: list[dict] = []
    parts = []
    for td, recs, fail in results:
        rounds.extend(recs)
        if td is None:
            return Outcome(False, None, k, fail, rounds)
        parts.append(td)
    return Outcome(True, join(parts), k, None, rounds)


# -- telemetry helpers -------------------------------------------------------------------

def fit_constants(records: list[dict]) -> dict[str, int]:
    """Smallest integer constants with ``c_alpha > max(others)`` such that every
    round's DP work is within its starting potential.

    Raising any constant only raises the potential, so the others stay at 1
    and ``c_alpha`` is the least value that covers the worst round.
    """
    need = 2
    for r in records:
        raw = r["raw"]
        rest = raw["beta"] + raw["gamma"] + raw["delta"]
        if raw["alpha"] > 0:
            need = max(need, math.ceil(Fraction(r["dp_recomputes"] - rest) / raw["alpha"]))
    return {"c_alpha": need, "c_beta": 1, "c_gamma": 1, "c_delta": 1}


def record_json(rec: dict) -> dict:
    """JSON-safe copy of a round record (fractions become floats)."""
    def conv(v):
        if isinstance(v, Fraction):
            return float(v) if v.denominator != 1 else int(v)
        if isinstance(v, dict):
            return {a: conv(b) for a, b in v.items()}
        if isinstance(v, list):
            return [conv(b) for b in v]
        return v
    return {a: conv(b) for a, b in rec.items()}
