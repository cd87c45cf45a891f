"""Command-line front end: every command prints (or writes) JSON, some also CSV.

Exit codes: 0 success, 1 a guard of the wrapped operation was hit, 2 usage
or validation error.  Errors go to stderr as a JSON object.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from typing import Callable, Sequence

from . import asymptotics as asy
from . import celldecomp as cd
from . import decomposition as dec
from .evaluate import EvalError, count_tuples, definable_set, parse_assignment, satisfies
from .formula import FormulaError, free_vars, parse
from .qe import (
    QEError,
    normal_form_cyclic,
    qe_block_predicate,
    qe_linear_order,
    verify_equivalence,
)
from .rational import fmt, parse_grid, parse_rational
from .structures import AlphaSpec, FiniteStructure, StructureError, make

FAMILIES = ("ord", "ocyc", "block", "beatty")


class UsageError(ValueError):
    pass


# ---------------------------------------------------------------- parsing


def _sizes(text: str) -> list[int]:
    """``"2..200"``, ``"2..200:7"`` (step) or ``"10,100,500"``."""
    text = text.strip()
    try:
        if ".." in text:
            lo, rest = text.split("..", 1)
            hi, _, step = rest.partition(":")
            out = list(range(int(lo), int(hi) + 1, int(step or 1)))
        else:
            out = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"bad size list {text!r}") from None
    if not out:
        raise UsageError("empty size list")
    return out


def _pairs(items: Sequence[str] | None, conv: Callable[[str], object] = int) -> dict:
    out = {}
    for item in items or []:
        for part in item.split(","):
            if not part.strip():
                continue
            name, sep, value = part.partition("=")
            if not sep:
                raise UsageError(f"expected name=value, got {part!r}")
            try:
                out[name.strip()] = conv(value.strip())
            except ValueError:
                raise UsageError(f"bad value in {part!r}") from None
    return out


def _alpha(args) -> AlphaSpec | None:
    return AlphaSpec.parse(args.alpha) if getattr(args, "alpha", None) else None


def _structure(args) -> FiniteStructure:
    return make(args.family, args.param, _alpha(args))


def _formula(args):
    return parse(args.formula, args.family)


def _grid(args) -> list[Fraction]:
    grid = parse_grid(args.grid)
    if any(not 0 <= g <= 1 for g in grid):
        raise UsageError("grid entries must lie in [0, 1]")
    return grid


def _measures(args) -> list[tuple[Fraction, ...]] | None:
    if getattr(args, "mu", None):
        return [tuple(parse_rational(t) for t in args.mu.split(","))]
    return dec.grid_tuples(args.k, _grid(args))


class Proportional:
    """Parameters at fixed fractions of the universe: position floor(t * |M|), capped at max."""

    def __init__(self, at: dict[str, Fraction]):
        self.at = at

    def __call__(self, M: FiniteStructure) -> dict[str, int]:
        return {v: min(int(t * M.size), M.size - 1) for v, t in self.at.items()}


def _param_map(args) -> Callable[[FiniteStructure], dict[str, int]] | None:
    at = _pairs(args.at, parse_rational)
    fixed = _pairs(args.assign)
    if any(not 0 <= t <= 1 for t in at.values()):
        raise UsageError("--at fractions must lie in [0, 1]")
    if not at and not fixed:
        return None
    prop = Proportional(at)
    return _ParamMap(prop, fixed)


class _ParamMap:
    def __init__(self, prop: Proportional, fixed: dict[str, int]):
        self.prop, self.fixed = prop, fixed

    def __call__(self, M: FiniteStructure) -> dict[str, int]:
        out = self.prop(M)
        out.update(parse_assignment(M, self.fixed))
        return out


def _scheme(args, phi, x: str):
    """Parameter scheme for class-level commands."""
    if args.at or args.assign:
        pm = _param_map(args)
        return lambda M: [pm(M)]
    return args.params


# ----------------------------------------------------------------- output


def _emit(args, payload: dict, rows: list[dict] | None = None) -> None:
    if args.format == "csv":
        if rows is None:
            raise UsageError(f"{args.command} has no CSV form")
        buf = io.StringIO()
        if rows:
            w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
            w.writeheader()
            w.writerows(rows)
        text = buf.getvalue()
    else:
        text = json.dumps(payload, indent=2) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _pmap(fn, items, jobs: int) -> list:
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        return [fn(i) for i in items]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(fn, items))


# --------------------------------------------------------------- commands


def cmd_eval(args) -> None:
    M = _structure(args)
    phi = _formula(args)
    env = parse_assignment(M, _pairs(args.assign))
    missing = [v for v in free_vars(phi) if v not in env]
    if missing:
        raise UsageError("unassigned free variable(s): " + ", ".join(missing))
    _emit(args, {"structure": M.descriptor(), "formula": args.formula, "result": satisfies(M, phi, env)})


def cmd_count(args) -> None:
    M = _structure(args)
    phi = _formula(args)
    params = parse_assignment(M, _pairs(args.assign))
    variables = args.vars.split(",") if args.vars else [v for v in free_vars(phi) if v not in params]
    if not variables:
        raise UsageError("nothing to count: every variable is assigned")
    n = count_tuples(M, phi, variables, params)
    _emit(args, {"structure": M.descriptor(), "formula": args.formula, "variables": variables, "count": n})


def cmd_qe(args) -> None:
    phi = _formula(args)
    if args.family == "ord":
        res = qe_linear_order(phi)
    elif args.family == "block":
        res = qe_block_predicate(phi)
    elif args.family == "ocyc":
        Ns = _sizes(args.certify) if args.certify else ()
        params = _pairs(args.assign) or None
        if params is not None:
            # the cyclic normal form takes labels in [-N, N], not positions
            N = args.N if args.N is not None else (Ns[0] if Ns else 4)
            parse_assignment(make("ocyc", N), params)  # range check only
        res = normal_form_cyclic(phi, args.x, args.N, params, Ns)
        _emit(args, res.to_json())
        return
    else:
        raise UsageError(f"no quantifier elimination for family {args.family!r}")
    if args.certify:
        bound = int(args.certify)
        res.status = verify_equivalence(args.family, phi, res.output, bound)
    _emit(args, res.to_json())


def cmd_decompose(args) -> None:
    M = _structure(args)
    phi = _formula(args)
    params = parse_assignment(M, _pairs(args.assign))
    X = definable_set(M, phi, args.x, params)
    w = dec.search_witness(M, X, args.k, _measures(args), parse_rational(args.C), args.mode)
    out = {"structure": M.descriptor(), "formula": args.formula, "params": params}
    if isinstance(w, dec.NoWitness):
        out.update(w.to_json())
    else:
        out["witness"] = w.to_json()
        out["report"] = dec.check_witness(M, X, w).to_json()
    _emit(args, out)


def _sample(args) -> list[FiniteStructure]:
    return [make(args.family, n, _alpha(args)) for n in _sizes(args.sizes)]


def cmd_fit(args) -> None:
    phi = _formula(args)
    res = dec.fit_constant(
        _sample(args), phi, _scheme(args, phi, args.x), args.k, _measures(args), args.mode, args.x, seed=args.seed
    )
    _emit(args, dict(res.to_json(), formula=args.formula))


def _verify_one(job):
    family, n, alpha, formula, x, k, E, C, mode, at, assign, params, seed = job
    ns = argparse.Namespace(at=at, assign=assign, params=params)
    phi = parse(formula, family)
    M = make(family, n, alpha)
    return dec.verify_class([M], phi, _scheme(ns, phi, x), k, E, C, mode, x, seed).rows


def cmd_verify_class(args) -> None:
    E = _measures(args)
    C = parse_rational(args.C)
    jobs = [
        (args.family, n, _alpha(args), args.formula, args.x, args.k, E, C, args.mode, args.at, args.assign, args.params, args.seed)
        for n in _sizes(args.sizes)
    ]
    report = dec.ClassReport([r for rows in _pmap(_verify_one, jobs, args.jobs) for r in rows])
    rows = []
    for r in report.rows:
        w = r.witness
        rows.append(
            {
                "param": r.structure["param"],
                "params": json.dumps(r.params, sort_keys=True),
                "holds": r.holds,
                "cuts": " ".join(map(str, w.cuts)) if isinstance(w, dec.DecompositionWitness) else "",
                "mu": " ".join(fmt(m) for m in w.mu) if isinstance(w, dec.DecompositionWitness) else "",
            }
        )
    _emit(args, dict(report.to_json(), formula=args.formula), rows)


def cmd_cells(args) -> None:
    M = _structure(args)
    phi = _formula(args)
    params = parse_assignment(M, _pairs(args.assign))
    variables = args.vars.split(",")
    D = cd.decompose_cells(M, phi, variables, params, args.k, _grid(args), parse_rational(args.C), args.mode)
    report = cd.check_cell_counting(M, phi, D, variables, params)
    _emit(args, {"structure": M.descriptor(), "formula": args.formula, "decomposition": D.to_json(), "check": report.to_json()})


def _sweep_one(job):
    family, n, alpha, formula, x, pm = job
    phi = parse(formula, family)
    return asy.measure_sweep(family, phi, [n], pm, alpha, x).rows[0]


def cmd_sweep(args) -> None:
    alpha = _alpha(args)
    pm = _param_map(args)
    parse(args.formula, args.family)  # validate before forking
    target = None
    if args.target:
        try:
            target = parse_rational(args.target)
        except ValueError:
            target = AlphaSpec.parse(args.target)
    sizes = _sizes(args.sizes)
    rows = _pmap(_sweep_one, [(args.family, n, alpha, args.formula, args.x, pm) for n in sizes], args.jobs)
    series = asy.MeasureSeries(rows, target, args.formula)
    csv_rows = list(csv.DictReader(io.StringIO(series.to_csv())))
    _emit(args, series.to_json(), csv_rows)


def cmd_weyl(args) -> None:
    alpha = _alpha(args)
    if alpha is None:
        raise UsageError("--alpha is required")
    Ms = [args.M] if args.M else list(range(1, alpha.reciprocal_floor() + 1))
    tol = parse_rational(args.tolerance)
    results = [asy.weyl_check(alpha, M, args.n, tol) for M in Ms]
    rows = []
    for r in results:
        d = r.density
        rows.append(
            {
                "alpha": str(alpha),
                "M": r.M,
                "n": r.n,
                "count_direct": r.direct,
                "count_fractional": r.criterion,
                "agree": r.agree_pointwise,
                "density_num": d.numerator,
                "density_den": d.denominator,
                "target": r.target_text,
                "within_tolerance": r.within,
            }
        )
    jumps = asy.jump_density(alpha, args.n)
    _emit(args, {"alpha": str(alpha), "checks": [r.to_json() for r in results], "jumps": jumps.to_json(alpha)}, rows)


def cmd_refute_cp(args) -> None:
    rep = asy.refute_block_class(args.n, args.k, parse_rational(args.C), _grid(args), args.mode)
    _emit(args, rep.to_json())


def cmd_gamma(args) -> None:
    delta = parse_rational(args.delta)
    if not 0 < delta <= Fraction(1, 4):
        raise UsageError("--delta must lie in (0, 1/4]")
    img = asy.gamma_image(args.family, _formula(args), _sizes(args.sizes), delta, _param_map(args), _alpha(args), args.x)
    _emit(args, dict(img.to_json(), formula=args.formula))


# ------------------------------------------------------------------ parser


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", help="write here instead of stdout")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--jobs", type=int, default=int(os.environ.get("OASYM_JOBS", "1") or 1))
    p.add_argument("--seed", type=int, default=0)


def _structure_args(p, sizes: bool = False) -> None:
    p.add_argument("--family", required=True, choices=FAMILIES)
    if sizes:
        p.add_argument("--sizes", required=True, help='e.g. "2..200", "2..200:5" or "10,100,500"')
    else:
        p.add_argument("--param", required=True, type=int)
    p.add_argument("--alpha", help='quadratic irrational, e.g. "(-1+1*sqrt2)/1"')
    p.add_argument("--formula", required=True)


def _witness_args(p, k: int = 2) -> None:
    p.add_argument("--x", default="x", help="object variable")
    p.add_argument("--k", type=int, default=k)
    p.add_argument("--C", default="1")
    p.add_argument("--grid", default="i/8", help='"i/8" or a comma list of rationals')
    p.add_argument("--mu", help="one fixed measure tuple instead of the grid")
    p.add_argument("--mode", choices=("strong", "weak"), default="strong")


def _param_args(p, scheme: bool = False) -> None:
    p.add_argument("--assign", action="append", help="name=value (element values), repeatable")
    p.add_argument("--at", action="append", help="name=fraction of the universe, e.g. a=1/3")
    if scheme:
        p.add_argument("--params", default="all", help='"all" or "random:K"')


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="oasym", description="Experiments on O-asymptotic classes of finite ordered structures.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eval", help="truth of a formula under an assignment")
    _structure_args(p)
    p.add_argument("--assign", action="append")
    p.set_defaults(run=cmd_eval)

    p = sub.add_parser("count", help="number of satisfying tuples")
    _structure_args(p)
    p.add_argument("--vars", help="counted variables (default: the unassigned free ones)")
    p.add_argument("--assign", action="append")
    p.set_defaults(run=cmd_count)

    p = sub.add_parser("qe", help="quantifier elimination with optional certification")
    p.add_argument("--family", required=True, choices=("ord", "block", "ocyc"))
    p.add_argument("--formula", required=True)
    p.add_argument("--certify", help="size bound (ord, block) or list of N (ocyc)")
    p.add_argument("--x", default="x", help="distinguished variable (ocyc)")
    p.add_argument("--N", type=int, help="instance size for the ocyc output")
    p.add_argument("--assign", action="append", help="parameter values for the ocyc instance")
    p.set_defaults(run=cmd_qe)

    p = sub.add_parser("decompose", help="search a decomposition witness")
    _structure_args(p)
    _witness_args(p)
    p.add_argument("--assign", action="append")
    p.set_defaults(run=cmd_decompose)

    p = sub.add_parser("fit", help="least constant C over a sample")
    _structure_args(p, sizes=True)
    _witness_args(p)
    _param_args(p, scheme=True)
    p.set_defaults(run=cmd_fit)

    p = sub.add_parser("verify-class", help="witness for every instance of a sample")
    _structure_args(p, sizes=True)
    _witness_args(p)
    _param_args(p, scheme=True)
    p.set_defaults(run=cmd_verify_class)

    p = sub.add_parser("cells", help="cell decomposition of M^n, n <= 2")
    _structure_args(p)
    p.add_argument("--vars", default="x,y", help="base variable first")
    p.add_argument("--k", type=int, default=cd.CELL_K)
    p.add_argument("--C", default="1")
    p.add_argument("--grid", default="0,1/2,1")
    p.add_argument("--mode", choices=("strong", "weak"), default="strong")
    p.add_argument("--assign", action="append")
    p.set_defaults(run=cmd_cells)

    p = sub.add_parser("sweep", help="exact densities across sizes")
    _structure_args(p, sizes=True)
    p.add_argument("--x", default="x")
    p.add_argument("--target", help="limit to compare with: a rational or a quadratic irrational")
    _param_args(p)
    p.set_defaults(run=cmd_sweep)

    p = sub.add_parser("weyl", help="Beatty jump density and the fractional-part criterion")
    p.add_argument("--alpha", required=True)
    p.add_argument("--M", type=int, help="shift (default: every M up to floor(1/alpha))")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--tolerance", default="1/100")
    p.set_defaults(run=cmd_weyl)

    p = sub.add_parser("refute-cp", help="no witness for the block-predicate class")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--C", required=True)
    p.add_argument("--grid", default="i/8")
    p.add_argument("--mode", choices=("auto", "exhaustive", "analytic"), default="auto")
    p.set_defaults(run=cmd_refute_cp)

    p = sub.add_parser("gamma", help="image of a definable set under j -> j/|M|")
    _structure_args(p, sizes=True)
    p.add_argument("--x", default="x")
    p.add_argument("--delta", default="1/100")
    _param_args(p)
    p.set_defaults(run=cmd_gamma)

    for p in sub.choices.values():
        _common(p)
    return parser


def _fail(kind: str, exc: Exception, code: int) -> int:
    err = {"kind": kind, "message": str(exc.args[0]) if exc.args else str(exc)}
    pos = getattr(exc, "pos", None)
    if pos is not None:
        err["position"] = pos
    sys.stderr.write(json.dumps({"error": err}) + "\n")
    return code


GUARDS = (cd.CellGuardError, QEError, EvalError, dec.WitnessError, asy.AsymptoticsError, cd.CellError)
USAGE = (UsageError, FormulaError, StructureError)


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.run(args)
    except USAGE as exc:
        return _fail("usage", exc, 2)
    except GUARDS as exc:
        return _fail("guard", exc, 1)
    except ValueError as exc:
        return _fail("usage", exc, 2)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
