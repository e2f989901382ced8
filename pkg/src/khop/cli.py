"""Command line front end: ``khop gen|solve|verify|bench|render``."""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from . import bench
from .dissection import Shift
from .dp_engine import ResourceLimitError, default_m
from .estimator import InfeasibleError, run_algorithm
from .geom_instance import (ApproxParams, InstanceFormatError, dump_instance,
                            generate_instance, load_instance, normalize)
from .reference_solvers import (HopTree, InstanceTooLarge, dump_tree, load_tree,
                                tree_from_parents, validate_tree)
from .render import RenderSpec, render_svg

EXIT_USAGE = 2
EXIT_INFEASIBLE = 3


def positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return v


def unit_interval(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not 0 < v <= 1:
        raise argparse.ArgumentTypeError(f"expected a value in (0, 1], got {v}")
    return v


def shift_pair(text: str) -> tuple[int, int]:
    try:
        a, b = (int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'a,b' integers, got {text!r}") from None
    if a < 0 or b < 0:
        raise argparse.ArgumentTypeError("shift values must be non-negative")
    return a, b


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _read_instance(path: str, eps: float):
    raw = load_instance(Path(path).read_text())
    return raw, normalize(raw, ApproxParams(eps=eps))


def cmd_gen(args) -> int:
    raw = generate_instance(args.n, args.k, args.seed, args.dist)
    _write(args.out, dump_instance(raw))
    return 0


def cmd_solve(args) -> int:
    _, inst = _read_instance(args.input, args.eps)
    try:
        cost, tree, extra = run_algorithm(
            inst, args.algo, eps=args.eps, shifts=args.shifts, seed=args.seed, m=args.m,
            delta=args.delta, full_enum=args.full_enum, iters=args.iters)
    except (InstanceTooLarge, ResourceLimitError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except InfeasibleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    _write(args.out, dump_tree(tree))
    print(f"cost={cost:.9f} algo={args.algo} shifts_used={extra['shifts_used']} "
          f"raw_cost={cost / inst.scale:.9f}")
    return 0


def cmd_verify(args) -> int:
    _, inst = _read_instance(args.input, args.eps)
    try:
        parents = load_tree(Path(args.tree).read_text())
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if len(parents) != inst.n:
        print(f"error: tree has {len(parents)} points, instance has {inst.n}", file=sys.stderr)
        return 2
    violations = validate_tree(HopTree(tuple(parents), math.nan, ()), inst)
    if violations:
        for v in violations:
            print(v)
        return 1
    print(f"OK cost={tree_from_parents(parents, inst).cost:.9f}")
    return 0


def cmd_bench(args) -> int:
    report = bench.SUITES[args.suite](seed=args.seed, timings=not args.no_timings)
    Path(args.report).write_text(json.dumps(report.as_dict(), indent=1, sort_keys=True) + "\n")
    for c in report.checks:
        status = "PASS" if c.passed else ("FAIL" if c.gating else "INFO")
        print(f"{status} {c.name}: {c.detail}")
    if not report.ok:
        print(f"failed: {', '.join(report.failed)}", file=sys.stderr)
        return 1
    return 0


def cmd_render(args, parser) -> int:
    _, inst = _read_instance(args.input, args.eps)
    tree = None
    if args.tree:
        tree = tree_from_parents(load_tree(Path(args.tree).read_text()), inst)
    shift = None
    if args.dissection is not None:
        shift = Shift(*args.dissection)
        if not (shift.a < inst.L and shift.b < inst.L):
            parser.error(f"--dissection values must be below L={inst.L}")
    m = args.m if args.m is not None else default_m(inst.L, args.eps)
    try:
        spec = RenderSpec(inst, tree, shift, m=m, size=args.size)
    except ValueError as exc:
        parser.error(str(exc))
    _write(args.out, render_svg(spec))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="khop", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a random instance")
    p.add_argument("--n", type=positive_int, required=True)
    p.add_argument("--k", type=positive_int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dist", choices=("uniform", "clustered"), default="uniform")
    p.add_argument("--out")

    p = sub.add_parser("solve", help="compute a k-hop spanning tree")
    p.add_argument("--algo", choices=("exact", "exact-parents", "ptas", "heuristic"),
                   required=True)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out")
    p.add_argument("--eps", type=unit_interval, default=0.5)
    p.add_argument("--shifts", type=positive_int, default=6)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--full-enum", action="store_true")
    p.add_argument("--m", type=positive_int)
    p.add_argument("--delta", type=unit_interval)
    p.add_argument("--iters", type=positive_int, default=1000)

    p = sub.add_parser("verify", help="check a tree file against an instance")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--tree", required=True)
    p.add_argument("--eps", type=unit_interval, default=0.5)

    p = sub.add_parser("bench", help="run a benchmark suite and write a JSON report")
    p.add_argument("--suite", choices=sorted(bench.SUITES), required=True)
    p.add_argument("--report", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-timings", action="store_true",
                   help="omit wall times so the report is byte-reproducible")

    p = sub.add_parser("render", help="draw an instance as SVG")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--tree")
    p.add_argument("--dissection", type=shift_pair, metavar="A,B")
    p.add_argument("--m", type=positive_int)
    p.add_argument("--size", type=int, default=512)
    p.add_argument("--eps", type=unit_interval, default=0.5)
    p.add_argument("--out")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "render":
            return cmd_render(args, parser)
        handler = {"gen": cmd_gen, "solve": cmd_solve, "verify": cmd_verify,
                   "bench": cmd_bench}[args.command]
        return handler(args)
    except (InstanceFormatError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
