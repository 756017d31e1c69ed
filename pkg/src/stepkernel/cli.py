"""Command-line interface: ``stepkernel <command> ...`` (also ``python -m stepkernel``).

Exit codes: 0 holds/pass, 1 violated/fail, 2 usage or parse error, 3 resource cap.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
from decimal import Decimal, localcontext
from fractions import Fraction
from pathlib import Path

from . import graphs as g
from . import kernels as k
from . import search, suite
from .cones import cut_norm, is_copositive, is_locally_dense, is_psd, spectrum
from .errors import CapExceededError
from .homdensity import conditioned_density, density_dp, weighted_density

EXIT_OK, EXIT_VIOLATED, EXIT_USAGE, EXIT_CAP = 0, 1, 2, 3


class UsageError(ValueError):
    pass


# -- parsing of graph and kernel arguments ----------------------------------------------

_GRAPH_NAMES = {
    "k": g.clique,
    "c": g.cycle,
    "p": g.path,
    "w": g.wheel,
    "s": g.star,
}


def load_graph(spec: str) -> g.Graph:
    """``k5``, ``c4``, ``p3`` (path length), ``w5``, ``s3`` (star), ``h0``, ``diamond``, ``theta:1,2,3`` or a file."""
    text = spec.strip()
    if text == "h0":
        return g.h0()
    if text == "diamond":
        return g.diamond()
    if text.startswith("theta:"):
        return g.theta([int(x) for x in text[6:].split(",")])
    m = re.fullmatch(r"([kcpws])(\d+)", text)
    if m:
        return _GRAPH_NAMES[m.group(1)](int(m.group(2)))
    path = Path(spec)
    if not path.is_file():
        raise UsageError(f"unknown graph {spec!r} (not a built-in name or a file)")
    return g.parse_graph(path.read_text())


def load_kernel(spec: str) -> k.StepKernel:
    """``paper-4x4@p``, ``paper-5x5``, ``constant@p`` or a kernel JSON file."""
    text = spec.strip()
    if text == "paper-5x5":
        return k.five_block_psd_kernel()
    m = re.fullmatch(r"(paper-4x4|constant)@(.+)", text)
    if m:
        p = k.to_fraction(m.group(2))
        return k.four_block_dense_kernel(p) if m.group(1) == "paper-4x4" else k.constant(p)
    path = Path(spec)
    if not path.is_file():
        raise UsageError(f"unknown kernel {spec!r} (not a built-in name or a file)")
    return k.kernel_from_json(path.read_text())


def _int_list(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()] if text else []


def _frac_list(text: str) -> list[Fraction]:
    return [k.to_fraction(x) for x in text.split(",")]


def render(x: Fraction) -> str:
    """Exact rational followed by a 12-significant-digit decimal."""
    with localcontext() as ctx:
        ctx.prec = 12
        dec = Decimal(x.numerator) / Decimal(x.denominator)
    return f"{k.fraction_str(x)} {dec:.12g}"


def _emit(payload: str, out: str | None) -> None:
    if out:
        Path(out).write_text(payload)
    else:
        sys.stdout.write(payload)


def _dump(data) -> str:
    return json.dumps(data, indent=2) + "\n"


# -- commands -------------------------------------------------------------------------


def cmd_density(args) -> int:
    h = load_graph(args.graph)
    w = load_kernel(args.kernel)
    if args.fix and args.weights:
        raise UsageError("--fix and --weights cannot be combined")
    if args.fix:
        pairs = []
        for item in args.fix:
            v, _, b = item.partition("=")
            pairs.append((int(v), int(b)))
        value = conditioned_density(h, w, pairs)
    elif args.weights:
        value = weighted_density(h, w, k.BlockFunction(tuple(_frac_list(args.weights))))
    else:
        value = density_dp(h, w)
    print(render(value))
    return EXIT_OK


def cmd_check(args) -> int:
    w = load_kernel(args.kernel)
    if args.kind in ("locally-dense", "regular") and args.p is None:
        raise UsageError(f"check {args.kind} needs --p")
    if args.kind == "regular":
        p = k.to_fraction(args.p)
        degrees = k.degree_function(w)
        holds = all(d == p for d in degrees)
        print(json.dumps({"holds": holds, "degrees": degrees.to_json()}))
        return EXIT_OK if holds else EXIT_VIOLATED
    if args.kind == "psd":
        verdict = is_psd(w)
    elif args.kind == "copositive":
        verdict = is_copositive(w)
    else:
        verdict = is_locally_dense(w, k.to_fraction(args.p))
    data = verdict.to_json()
    if verdict.witness is not None and args.kind != "psd":
        data["witness_blocks"] = [i for i, x in enumerate(verdict.witness) if x != 0]
    print(json.dumps(data))
    return EXIT_OK if verdict.holds else EXIT_VIOLATED


def cmd_construct(args) -> int:
    op = args.op
    if op == "glue":
        if not (args.h1 and args.h2 and args.a is not None):
            raise UsageError("glue needs --h1, --h2 and --a")
        h = g.glue(load_graph(args.h1), g.GlueSpec(tuple(_int_list(args.i)), args.a), load_graph(args.h2))
    elif op == "subdivide":
        if not args.h or args.l is None:
            raise UsageError("subdivide needs --h and --l")
        h = g.subdivide(load_graph(args.h), args.l)
    elif op == "theta":
        if not args.lengths:
            raise UsageError("theta needs --lengths")
        h = g.theta(_int_list(args.lengths))
    elif op in ("clique", "cycle", "wheel", "path", "star"):
        if args.k is None:
            raise UsageError(f"{op} needs --k")
        h = getattr(g, op)(args.k)
    elif op == "h0":
        h = g.h0()
    else:
        h = g.diamond()
    _emit(json.dumps(g.graph_to_json(h)) + "\n", args.out)
    return EXIT_OK


def cmd_kernel(args) -> int:
    w = load_kernel(args.kernel)
    op = args.op
    if op in ("opow", "tpow"):
        if args.k is None:
            raise UsageError(f"{op} needs --k")
        out = k.operator_power(w, args.k) if op == "opow" else k.tensor_power(w, args.k)
    elif op in ("tensor", "hadamard", "oprod"):
        if not args.other:
            raise UsageError(f"{op} needs --other")
        other = load_kernel(args.other)
        out = {"tensor": k.tensor_product, "hadamard": k.hadamard_product, "oprod": k.operator_product}[op](w, other)
    elif op == "shift":
        if args.c is None:
            raise UsageError("shift needs --c")
        out = k.shift(w, k.to_fraction(args.c))
    elif op == "reweight":
        if not args.weights:
            raise UsageError("reweight needs --weights")
        out = k.reweight(w, k.BlockFunction(tuple(_frac_list(args.weights))))
    else:
        out = w
    if not out.is_symmetric:
        raise UsageError("result is not symmetric and cannot be written as a kernel file")
    _emit(_dump(out.to_json()), args.out)
    return EXIT_OK


def cmd_spectrum(args) -> int:
    report = spectrum(load_kernel(args.kernel))
    print(json.dumps({"eigenvalues": report.eigenvalues, "residual": report.residual}))
    return EXIT_OK


def cmd_cutnorm(args) -> int:
    print(render(cut_norm(load_kernel(args.kernel))))
    return EXIT_OK


def cmd_sweep(args) -> int:
    rows = search.sweep_graphs(load_kernel(args.kernel), args.max_v, args.min_v)
    shown = rows if args.limit is None else rows[: args.limit]
    for h, t in shown:
        edges = " ".join(f"{u}-{v}" for u, v in h.edges)
        print(f"{render(t)} | n={h.vertex_count} e={h.edge_count} | {edges}")
    return EXIT_OK


def cmd_search(args) -> int:
    if bool(args.graph) == bool(args.sweep):
        raise UsageError("search needs exactly one of a graph or --sweep")
    if args.graph:
        candidates = [load_graph(args.graph)]
    else:
        candidates = [h for h in g.connected_two_cores(args.max_v, args.max_v) if not g.is_theta_graph(h)]
        candidates.sort(key=lambda h: (-h.edge_count, g.canonical_form(h)))
    report = None
    for h in candidates:
        rep = search.minimize_density(
            h, args.n, restarts=args.restarts, steps=args.steps, seed=args.seed,
            target=args.target, workers=args.workers,
        )
        report = rep if report is None or rep.best_objective < report.best_objective else report
        if args.certify or args.sweep:
            cert = search.certify_counterexample(rep)
            if cert.certified:
                report = cert
                break
    if args.certify and not report.certified:
        report = search.certify_counterexample(report)
    _emit(report.dumps() + "\n", args.out)
    return EXIT_OK


def cmd_certify(args) -> int:
    report = search.SearchReport.from_json(Path(args.report).read_text())
    cert = search.certify_counterexample(report)
    _emit(cert.dumps() + "\n", args.out)
    return EXIT_OK if cert.certified else EXIT_VIOLATED


def _corrupted_five_block() -> k.StepKernel:
    rows = [list(r) for r in k.FIVE_BLOCK_MATRIX]
    rows[0][1] = rows[1][0] = -rows[0][1]
    return k.StepKernel.uniform(rows)


def cmd_paper_suite(args) -> int:
    ps = _frac_list(args.p) if args.p else list(suite.DEFAULT_PS)
    five = None
    if args.corrupt_five_block:
        five = _corrupted_five_block()
    elif args.five_block:
        five = load_kernel(args.five_block)
    runners = {
        "four-block": lambda: suite.check_four_block(ps),
        "five-block": lambda: suite.check_five_block(five),
        "identities": lambda: suite.check_identities(seed=args.seed),
        "cone-closure": lambda: suite.check_cone_closure(seed=args.seed),
        "psd-nonnegativity": lambda: suite.check_psd_nonnegativity(seed=args.seed),
        "knrs": lambda: suite.check_knrs(seed=args.seed),
        "search": lambda: suite.check_search(seed=args.seed),
    }
    names = args.only.split(",") if args.only else list(runners)
    unknown = [n for n in names if n not in runners]
    if unknown:
        raise UsageError(f"unknown checks: {', '.join(unknown)}")
    results = []
    for name in names:
        res = runners[name]()
        results.append(res)
        if not args.json:
            print(res.line())
            for key, val in res.values.items():
                print(f"    {key}: {val if len(val) < 120 else val[:117] + '...'}")
            for msg in res.failures:
                print(f"    ! {msg}")
    if args.json:
        print(_dump([r.to_json() for r in results]), end="")
    ok = all(r.passed for r in results)
    if not args.json:
        print(f"{sum(r.passed for r in results)}/{len(results)} checks passed")
    return EXIT_OK if ok else EXIT_VIOLATED


# -- argument parser ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stepkernel", description="Exact calculus for step kernels.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("density", help="homomorphism density t(H, W)")
    p.add_argument("graph")
    p.add_argument("kernel")
    p.add_argument("--fix", action="append", metavar="V=B", help="condition vertex V on block B (repeatable)")
    p.add_argument("--weights", help="comma-separated nonnegative vertex weights per block")
    p.set_defaults(func=cmd_density)

    p = sub.add_parser("check", help="cone membership and regularity")
    p.add_argument("kind", choices=["psd", "copositive", "locally-dense", "regular"])
    p.add_argument("kernel")
    p.add_argument("--p")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("construct", help="build a graph")
    p.add_argument("op", choices=["glue", "subdivide", "theta", "clique", "cycle", "wheel", "path", "star", "h0", "diamond"])
    p.add_argument("--h1")
    p.add_argument("--h2")
    p.add_argument("--i", default="", help="comma-separated independent set of H1")
    p.add_argument("--a", type=int, help="root vertex of H1")
    p.add_argument("--h")
    p.add_argument("--l", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--lengths")
    p.add_argument("--out")
    p.set_defaults(func=cmd_construct)

    p = sub.add_parser("kernel", help="kernel algebra")
    p.add_argument("op", choices=["opow", "tpow", "tensor", "hadamard", "oprod", "shift", "reweight", "show"])
    p.add_argument("kernel")
    p.add_argument("--k", type=int)
    p.add_argument("--other")
    p.add_argument("--c")
    p.add_argument("--weights")
    p.add_argument("--out")
    p.set_defaults(func=cmd_kernel)

    p = sub.add_parser("spectrum", help="float eigenvalues of T_W")
    p.add_argument("kernel")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("cutnorm", help="exact cut norm")
    p.add_argument("kernel")
    p.set_defaults(func=cmd_cutnorm)

    p = sub.add_parser("sweep", help="densities of all small 2-core graphs")
    p.add_argument("kernel")
    p.add_argument("--max-v", type=int, default=6)
    p.add_argument("--min-v", type=int, default=3)
    p.add_argument("--limit", type=int)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("search", help="hunt for a PSD 0-regular kernel with negative density")
    p.add_argument("graph", nargs="?")
    p.add_argument("--sweep", action="store_true", help="try every non-theta 2-core graph on --max-v vertices")
    p.add_argument("--max-v", type=int, default=6)
    p.add_argument("--n", type=int, default=5)
    p.add_argument("--restarts", type=int, default=20)
    p.add_argument("--steps", type=int, default=300)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--target", type=float, default=-1e-6, help="stop restarts once the objective is below this")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--certify", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("certify", help="exact certification of a search report")
    p.add_argument("report")
    p.add_argument("--out")
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("paper-suite", help="run the reproduction suite")
    p.add_argument("--p", help="comma-separated p values for the four-block checks")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--only", help="comma-separated subset of checks")
    p.add_argument("--five-block", help="replace the five-block kernel")
    p.add_argument("--corrupt-five-block", action="store_true", help="negative control: flip one entry pair")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_paper_suite)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits on --help and on usage errors
        return int(exc.code or 0)
    try:
        return args.func(args)
    except CapExceededError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAP
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
