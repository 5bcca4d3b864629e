"""Command-line front end.

Exit codes: 0 on success (including a NotRefuted verdict), 2 when a
compatibility check refutes the triple, 1 on any spec, IO or numeric error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Any, Sequence

import numpy as np

from .bounds import IncompatibleTripleError, check_pair_compat, check_triple_compat, cl_cu, improvement_report, joe_bounds
from .bounds import lift_bounds, product_bounds
from .copulas import Clayton, Copula2, InvalidSpecError, eval2, spec_from_dict
from .geometry import GridSpec
from .lifting import FamilyPath, LiftedCopula3, c_lift, c_product
from .quadrature import QuadratureConfig, QuadratureError
from .sampler import parse_seed, sample_lift

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_REFUTED = 2

FMT = ".12g"


class CliError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # exit status 2 is reserved for refutations
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def num(x: float) -> float:
    """Rounds to the printed precision so JSON and text output agree."""
    return float(format(float(x), FMT))


def _emit(obj: Any) -> None:
    print(json.dumps(obj, sort_keys=False))


def _load_json(path: str) -> Any:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise CliError(f"{path}: malformed JSON ({exc})") from None
    except OSError as exc:
        raise CliError(f"{path}: {exc.strerror or exc}") from None


def _point(text: str, dim: Sequence[int]) -> tuple[float, ...]:
    try:
        pt = tuple(float(x) for x in text.split(","))
    except ValueError:
        raise CliError(f"bad point {text!r}: expected comma-separated decimals") from None
    if len(pt) not in dim:
        raise CliError(f"bad point {text!r}: expected {' or '.join(map(str, dim))} coordinates")
    if any(not 0.0 <= x <= 1.0 for x in pt):
        raise CliError(f"bad point {text!r}: coordinates must lie in [0, 1]")
    return pt


def _check_paths(args: argparse.Namespace) -> None:
    for name in ("a", "b", "c12", "c13", "c23", "family", "triple", "lifted"):
        path = getattr(args, name, None)
        if path is not None and not os.access(path, os.R_OK):
            raise CliError(f"{path}: cannot read file")
    out = getattr(args, "out", None)
    if out is not None:
        parent = os.path.dirname(os.path.abspath(out))
        if not os.path.isdir(parent) or not os.access(parent, os.W_OK):
            raise CliError(f"{out}: output directory is not writable")


def _quad(args: argparse.Namespace) -> QuadratureConfig:
    base = QuadratureConfig()
    kw = {}
    if args.quad_nodes is not None:
        kw["nodes"] = args.quad_nodes
    if args.quad_panels is not None:
        kw["panels"] = args.quad_panels
        kw["max_panels"] = max(base.max_panels, args.quad_panels)
    if args.tol is not None:
        kw["tol"] = args.tol
    try:
        return QuadratureConfig(**kw)
    except ValueError as exc:
        raise CliError(str(exc)) from None


def _spec(args, name: str) -> Copula2:
    path = getattr(args, name)
    if path is None:
        raise CliError(f"--{name.replace('_', '-')} is required")
    return spec_from_dict(_load_json(path))


def _family(args) -> FamilyPath:
    if args.family is None:
        raise CliError("--family is required")
    return FamilyPath.from_dict(_load_json(args.family))


def _lifted(args) -> LiftedCopula3:
    quad = _quad(args)
    if getattr(args, "lifted", None):
        lifted = LiftedCopula3.from_dict(_load_json(args.lifted))
        return LiftedCopula3(lifted.a, lifted.b, lifted.fam, quad if _quad_overridden(args) else lifted.quad)
    return LiftedCopula3(_spec(args, "a"), _spec(args, "b"), _family(args), quad)


def _quad_overridden(args) -> bool:
    return any(getattr(args, k) is not None for k in ("quad_nodes", "quad_panels", "tol"))


def _triple(args) -> tuple[Copula2, Copula2, Copula2]:
    if args.triple is not None:
        data = _load_json(args.triple)
        if not isinstance(data, dict) or not {"c12", "c13", "c23"} <= set(data):
            raise CliError(f"{args.triple}: triple needs keys c12, c13, c23")
        c12, c13, c23 = (spec_from_dict(data[k]) for k in ("c12", "c13", "c23"))
    else:
        c12, c13, c23 = (_spec(args, k) for k in ("c12", "c13", "c23"))
    alpha = getattr(args, "alpha", None)
    if alpha is not None:
        if not isinstance(c13, Clayton):
            raise CliError("--alpha only applies when c13 is a Clayton copula")
        c13 = Clayton(alpha)
    return c12, c13, c23


def _write(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def cmd_eval(args) -> int:
    c = _spec(args, "a")
    u, v = _point(args.at, (2,))
    print(format(float(eval2(c, u, v)), FMT))
    return EXIT_OK


def cmd_product(args) -> int:
    a, b, fam = _spec(args, "a"), _spec(args, "b"), _family(args)
    u1, u3 = _point(args.at, (2,))
    print(format(float(c_product(a, b, fam, u1, u3, _quad(args))), FMT))
    return EXIT_OK


def cmd_lift(args) -> int:
    lifted = _lifted(args)
    u1, u2, u3 = _point(args.at, (3,))
    print(format(float(lifted(u1, u2, u3)), FMT))
    return EXIT_OK


def cmd_pair_bounds(args) -> int:
    c12, c23 = _spec(args, "c12"), _spec(args, "c23")
    pt = _point(args.at, (2, 3))
    quad = _quad(args)
    if len(pt) == 2:
        lo, hi = product_bounds(c12, c23, pt[0], pt[1], quad)
    else:
        lo, hi = lift_bounds(c12, c23, *pt, quad)
    _emit({"point": list(pt), "lower": num(lo), "upper": num(hi)})
    return EXIT_OK


def cmd_check_compat(args) -> int:
    c12, c13, c23 = _triple(args)
    quad = _quad(args)
    if args.pair:
        verdict = check_pair_compat(c12, c23, c13, args.grid, quad)
    else:
        verdict = check_triple_compat(c12, c13, c23, args.grid, quad)
    out = _rounded(verdict.to_dict())
    out["triple"] = {"c12": c12.to_dict(), "c13": c13.to_dict(), "c23": c23.to_dict()}
    _emit(out)
    return EXIT_REFUTED if verdict.refuted else EXIT_OK


def cmd_frechet_bounds(args) -> int:
    c12, c13, c23 = _triple(args)
    u = _point(args.at, (3,))
    cl, cu = cl_cu(c12, c13, c23, *u, quad=_quad(args))
    fl, fu = joe_bounds(c12, c13, c23, *u)
    _emit({"point": list(u), "CL": num(cl), "CU": num(cu), "FL": num(fl), "FU": num(fu)})
    return EXIT_OK


def cmd_improvement(args) -> int:
    c12, c13, c23 = _triple(args)
    try:
        report = improvement_report(c12, c13, c23, args.grid, _quad(args))
    except IncompatibleTripleError as exc:
        _emit(_rounded(exc.verdict.to_dict()))
        print(str(exc), file=sys.stderr)
        return EXIT_REFUTED
    if args.out is not None:
        _write(report.to_csv(fmt=FMT), args.out)
    _emit(_rounded(report.summary()))
    return EXIT_OK


def cmd_sample(args) -> int:
    lifted = _lifted(args)
    if args.n < 1:
        raise CliError("--n must be at least 1")
    try:
        seed = parse_seed(args.seed)
    except ValueError:
        raise CliError(f"bad seed {args.seed!r}: expected decimal or 0x-hex") from None
    batch = sample_lift(lifted, args.n, seed, workers=args.workers)
    lines = ["u1,u2,u3"]
    lines += [",".join(format(float(x), FMT) for x in row) for row in batch.samples]
    _write("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def cmd_grid_export(args) -> int:
    lifted = _lifted(args)
    g = GridSpec(args.grid)
    mesh = g.mesh(3)
    vals = np.asarray(c_lift(lifted.a, lifted.b, lifted.fam, *mesh, lifted.quad))
    lines = ["u1,u2,u3,value"]
    for row in np.column_stack([m.reshape(-1) for m in mesh] + [vals.reshape(-1)]):
        lines.append(",".join(format(float(x), FMT) for x in row))
    _write("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def _rounded(obj):
    if isinstance(obj, float):
        return num(obj)
    if isinstance(obj, dict):
        return {k: _rounded(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_rounded(v) for v in obj]
    return obj


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="frechet3", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, fn, help_):
        p = sub.add_parser(name, help=help_)
        p.set_defaults(func=fn)
        p.add_argument("--quad-nodes", type=int, help="Gauss-Legendre nodes per panel (default 16)")
        p.add_argument("--quad-panels", type=int, help="panels per smooth piece (default 32)")
        p.add_argument("--tol", type=float, help="absolute quadrature tolerance (default 1e-8)")
        return p

    def pair_args(p, *names):
        for n in names:
            p.add_argument(f"--{n}", metavar="JSON", help=f"path to the {n.upper()} copula spec")

    def lift_args(p):
        pair_args(p, "a", "b")
        p.add_argument("--family", metavar="JSON", help="mixing family (or a single copula spec)")
        p.add_argument("--lifted", metavar="JSON", help="bundled lifting {a, b, fam, quad} instead of --a/--b/--family")

    def triple_args(p):
        p.add_argument("--triple", metavar="JSON", help='{"c12": ..., "c13": ..., "c23": ...}')
        pair_args(p, "c12", "c13", "c23")
        p.add_argument("--alpha", type=float, help="replace the Clayton parameter of c13")

    p = add("eval", cmd_eval, "evaluate a bivariate copula")
    pair_args(p, "a")
    p.add_argument("--at", required=True, metavar="U,V")

    p = add("product", cmd_product, "evaluate the C-product of A and B")
    pair_args(p, "a", "b")
    p.add_argument("--family", metavar="JSON")
    p.add_argument("--at", required=True, metavar="U1,U3")

    p = add("lift", cmd_lift, "evaluate the C-lifting of A and B")
    lift_args(p)
    p.add_argument("--at", required=True, metavar="U1,U2,U3")

    p = add("pair-bounds", cmd_pair_bounds, "W/M product bounds (2 coords) or lifting bounds (3 coords)")
    pair_args(p, "c12", "c23")
    p.add_argument("--at", required=True, metavar="POINT")

    p = add("check-compat", cmd_check_compat, "try to refute compatibility of a triple on a grid")
    triple_args(p)
    p.add_argument("--grid", type=int, default=21)
    p.add_argument("--pair", action="store_true", help="only check C13 against C12 and C23")

    p = add("frechet-bounds", cmd_frechet_bounds, "CL, CU and the classical FL, FU at a point")
    triple_args(p)
    p.add_argument("--at", required=True, metavar="U1,U2,U3")

    p = add("improvement", cmd_improvement, "compare both bound pairs over a grid")
    triple_args(p)
    p.add_argument("--grid", type=int, default=11)
    p.add_argument("--out", metavar="CSV")

    p = add("sample", cmd_sample, "draw samples from a lifting")
    lift_args(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", default="0")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", metavar="CSV")

    p = add("grid-export", cmd_grid_export, "tabulate a lifting on a grid as CSV")
    lift_args(p)
    p.add_argument("--grid", type=int, default=11)
    p.add_argument("--out", metavar="CSV")
    return parser


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _check_paths(args)
        if getattr(args, "grid", None) is not None:
            GridSpec(args.grid)
        return args.func(args)
    except (CliError, InvalidSpecError, QuadratureError, ValueError, OSError) as exc:
        print(f"frechet3 {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
