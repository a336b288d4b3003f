"""Command-line entry point: ``groupedtw {decompose,validate,exact,bench,stats}``."""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from fractions import Fraction
from typing import Optional, Sequence

from .decomposition import coarsen, heuristic_decomposition, validate_td
from .driver import Outcome, RunConfig, decide_treewidth, record_json, two_approx
from .graph import Graph
from .oracle import FAMILIES, GeneratorSpec, OracleLimitError, exact_treewidth, generate
from .pace import ParseError, format_td, read_graph, read_td
from .split import InvariantError

EXIT_OK, EXIT_INVALID, EXIT_TW_EXCEEDED = 0, 1, 2
EXIT_USAGE, EXIT_DATA, EXIT_SOFTWARE = 64, 65, 70


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(f"{self.prog}: {message}")


def _add_run_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--mode", choices=("auto", "3", "4"), default="auto")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--parallel-components", action="store_true")
    for name in ("alpha", "beta", "gamma", "delta"):
        p.add_argument(f"--c-{name}", type=str, default=None, help=f"potential constant c_{name}")


def _config(args, telemetry: bool) -> RunConfig:
    consts = {f"c_{n}": getattr(args, f"c_{n}") for n in ("alpha", "beta", "gamma", "delta")}
    consts = {k: v for k, v in consts.items() if v is not None}
    try:
        return RunConfig(k=args.k, mode=args.mode, telemetry=telemetry, seed=args.seed,
                         parallel_components=getattr(args, "parallel_components", False),
                         **{k: Fraction(v) for k, v in consts.items()})
    except ValueError as exc:
        raise _UsageError(str(exc)) from None


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="groupedtw", description="Treewidth 2-approximation on PACE files.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("decompose", help="width <= 2K+1 decomposition, or report tw > K")
    p.add_argument("-i", "--input", required=True)
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--telemetry", metavar="REPORT", help="write per-round JSON lines here")
    _add_run_options(p)

    p = sub.add_parser("validate", help="check a .td against a .gr")
    p.add_argument("-i", "--input", required=True)
    p.add_argument("-t", "--td", required=True)
    p.add_argument("--k", type=int)

    p = sub.add_parser("exact", help="exact treewidth (n <= 20)")
    p.add_argument("-i", "--input", required=True)

    p = sub.add_parser("bench", help="CSV timings on generated graphs")
    p.add_argument("--family", choices=FAMILIES, default="partial-k-tree")
    p.add_argument("--sizes", required=True, help="comma-separated vertex counts")
    p.add_argument("--keep", type=float, default=0.8, help="edge-keep probability")
    p.add_argument("--start-width", type=int, help="width of the coarsened start (default 2K+2)")
    _add_run_options(p)

    p = sub.add_parser("stats", help="per-round potential snapshots as JSON lines")
    p.add_argument("-i", "--input", required=True)
    p.add_argument("--start-width", type=int,
                   help="run one 2-approximation from a decomposition coarsened to this width")
    _add_run_options(p)
    return parser


def _start(g: Graph, width: int, witness=None):
    base = witness if witness is not None else heuristic_decomposition(g)
    return coarsen(base, width + 1)


def _run(g: Graph, args, cfg: RunConfig) -> Outcome:
    if getattr(args, "start_width", None) is not None:
        if not 0 <= args.start_width <= 4 * args.k + 3:
            raise _UsageError(f"--start-width must lie in [0, {4 * args.k + 3}]")
        return two_approx(g, _start(g, args.start_width), args.k, cfg)
    return decide_treewidth(g, args.k, cfg)


def _cmd_decompose(args, out) -> int:
    cfg = _config(args, telemetry=bool(args.telemetry))
    g = read_graph(args.input)
    res = _run(g, args, cfg)
    if args.telemetry:
        with open(args.telemetry, "w") as fh:
            for rec in res.rounds:
                fh.write(json.dumps(record_json(rec)) + "\n")
    if not res.ok:
        print(f"tw > {args.k}", file=out)
        return EXIT_TW_EXCEEDED
    with open(args.output, "w") as fh:
        fh.write(format_td(res.decomposition, g.n))
    print(f"width {res.width}", file=out)
    return EXIT_OK


def _cmd_validate(args, out) -> int:
    g = read_graph(args.input)
    t = read_td(args.td)
    bad = validate_td(g, t)
    if bad:
        print(f"invalid: {bad[0]}", file=out)
        return EXIT_INVALID
    if args.k is not None and t.width > 2 * args.k + 1:
        print(f"invalid: width {t.width} exceeds 2K+1 = {2 * args.k + 1}", file=out)
        return EXIT_INVALID
    print(f"valid, width {t.width}", file=out)
    return EXIT_OK


def _cmd_exact(args, out) -> int:
    g = read_graph(args.input)
    try:
        print(exact_treewidth(g), file=out)
    except OracleLimitError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


def _cmd_bench(args, out) -> int:
    try:
        sizes = [int(s) for s in args.sizes.split(",") if s.strip()]
    except ValueError:
        raise _UsageError(f"bad --sizes {args.sizes!r}") from None
    width = 2 * args.k + 2 if args.start_width is None else args.start_width
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["n", "width_out", "rounds", "dp_recomputes", "phi_start", "wall_ms"])
    cfg = _config(args, telemetry=True)
    for i, n in enumerate(sizes):
        g, witness = generate(GeneratorSpec(args.family, n, args.k, args.keep, args.seed + i))
        t = _start(g, width, witness)
        began = time.perf_counter()
        res = two_approx(g, t, args.k, cfg)
        wall = (time.perf_counter() - began) * 1000.0
        phi = res.rounds[0]["phi_start"] if res.rounds else 0
        writer.writerow([n, res.width if res.ok else "", len(res.rounds),
                         sum(r["dp_recomputes"] for r in res.rounds),
                         record_json({"p": phi})["p"], f"{wall:.1f}"])
    return EXIT_OK


def _cmd_stats(args, out) -> int:
    cfg = _config(args, telemetry=True)
    g = read_graph(args.input)
    res = _run(g, args, cfg)
    for rec in res.rounds:
        print(json.dumps(record_json(rec)), file=out)
    return EXIT_OK if res.ok else EXIT_TW_EXCEEDED


_COMMANDS = {"decompose": _cmd_decompose, "validate": _cmd_validate, "exact": _cmd_exact,
             "bench": _cmd_bench, "stats": _cmd_stats}


def run_cli(argv: Optional[Sequence[str]] = None, out=None) -> int:
    out = out or sys.stdout
    try:
        args = build_parser().parse_args(argv)
        return _COMMANDS[args.command](args, out)
    except _UsageError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_USAGE
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"cannot open file: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InvariantError as exc:
        print(f"internal invariant failed: {exc}", file=sys.stderr)
        return EXIT_SOFTWARE


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
