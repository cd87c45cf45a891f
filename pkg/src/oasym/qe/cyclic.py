"""Normal form for one-variable formulas of the ordered cyclic groups Z_N.

Route: read Z_N as the integer window [-N, N] with N a symbol, so that a
cyclic sum ``a + b`` becomes ``a + b + k(2N+1)`` for the unique
``k in {-1, 0, 1}`` landing back in the window; eliminate quantifiers by
Cooper's method (this introduces divisibility atoms ``m | e``); then, for a
concrete N and concrete parameters, turn every remaining atom in x into the
shapes ``x = b``, ``x < b``, ``b < x`` and ``P_m(x + b)``.  A divisibility
atom ``m | n*x + c`` goes through the three g.c.d. cases: no solution, or a
single residue ``x = r (mod m')`` which is ``P_m'(x + -r)`` repaired at the
bottom of the window and at x = r.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from math import gcd
from typing import Mapping, Sequence

import numpy as np

from ..evaluate import truth_table
from ..formula import (
    FALSE,
    TRUE,
    And,
    Bottom,
    Const,
    Eq,
    Exists,
    Forall,
    Formula,
    Iff,
    Implies,
    Lt,
    Not,
    Num,
    Or,
    PredPm,
    Succ,
    Sum,
    Term,
    Top,
    Var,
    conj,
    disj,
    free_vars,
    neg,
    validate,
)
from ..structures import make_ordered_cyclic
from . import presburger as pb
from .common import Counterexample, QEError, QEResult, QEUnsupported, VerifiedUpTo
from .presburger import NSYM, Lin, PForm

WINDOW_N = Lin.var(NSYM)
MODULUS = WINDOW_N.scale(2).plus(1)  # 2N + 1


def _in_window(e: Lin) -> PForm:
    return pb.pand(pb.le(-WINDOW_N, e), pb.le(e, WINDOW_N))


# --- cyclic terms as piecewise linear forms

Piece = tuple[PForm, Lin]


def term_pieces(t: Term) -> list[Piece]:
    """Exhaustive, mutually exclusive cases ``(condition, value)`` for a cyclic term."""
    if isinstance(t, Var):
        return [(pb.PTRUE, Lin.var(t.name))]
    if isinstance(t, Const):
        return [(pb.PTRUE, -WINDOW_N if t.which == "min" else WINDOW_N)]
    if isinstance(t, Num):
        if t.value == 0:
            return [(pb.PTRUE, Lin.num(0))]
        out = []
        for k in range(-abs(t.value), abs(t.value) + 1):
            e = Lin.num(t.value) - MODULUS.scale(k)
            cond = _in_window(e)
            if cond != pb.PFALSE:
                out.append((cond, e))
        return out
    if isinstance(t, Succ):
        out = []
        for cond, e in term_pieces(t.base):
            shifted = e.plus(t.k)
            if t.k > 0:
                inside, cap = pb.le(shifted, WINDOW_N), WINDOW_N
            else:
                inside, cap = pb.le(-WINDOW_N, shifted), -WINDOW_N
            out.append((pb.pand(cond, inside), shifted))
            out.append((pb.pand(cond, pb.pneg(inside)), cap))
        return [p for p in out if p[0] != pb.PFALSE]
    if isinstance(t, Sum):
        out = []
        for (ca, ea), (cb, eb) in itertools.product(term_pieces(t.left), term_pieces(t.right)):
            for k in (-1, 0, 1):
                e = ea + eb + MODULUS.scale(k)
                cond = pb.pand(ca, cb, _in_window(e))
                if cond != pb.PFALSE:
                    out.append((cond, e))
        return out
    raise QEUnsupported(f"term {t} is outside the cyclic signature")


def _pairs(a: Term, b: Term):
    for (ca, ea), (cb, eb) in itertools.product(term_pieces(a), term_pieces(b)):
        yield pb.pand(ca, cb), ea, eb


def translate(phi: Formula, positive: bool = True) -> PForm:
    """``phi`` (or its negation) as a quantifier-free integer formula with symbol N."""
    if isinstance(phi, Top):
        return pb.PConst(positive)
    if isinstance(phi, Bottom):
        return pb.PConst(not positive)
    if isinstance(phi, Eq):
        make = pb.eq if positive else pb.ne
        return pb.por(*(pb.pand(c, make(ea - eb)) for c, ea, eb in _pairs(phi.left, phi.right)))
    if isinstance(phi, Lt):
        if positive:
            return pb.por(*(pb.pand(c, pb.lt(ea - eb)) for c, ea, eb in _pairs(phi.left, phi.right)))
        return pb.por(*(pb.pand(c, pb.le(eb, ea)) for c, ea, eb in _pairs(phi.left, phi.right)))
    if isinstance(phi, PredPm):
        out = []
        for c, e in term_pieces(phi.arg):
            if positive:
                out.append(pb.pand(c, pb.ne(e), pb.dvd(phi.m, e)))
            else:
                out.append(pb.pand(c, pb.por(pb.eq(e), pb.atom("ndvd", e, phi.m))))
        return pb.por(*out)
    if isinstance(phi, Not):
        return translate(phi.body, not positive)
    if isinstance(phi, And):
        parts = [translate(a, positive) for a in phi.args]
        return pb.pand(*parts) if positive else pb.por(*parts)
    if isinstance(phi, Or):
        parts = [translate(a, positive) for a in phi.args]
        return pb.por(*parts) if positive else pb.pand(*parts)
    if isinstance(phi, Implies):
        return translate(Or((Not(phi.left), phi.right)), positive)
    if isinstance(phi, Iff):
        both = And((phi.left, phi.right))
        neither = And((Not(phi.left), Not(phi.right)))
        return translate(Or((both, neither)), positive)
    if isinstance(phi, (Exists, Forall)):
        y = phi.var
        window = _in_window(Lin.var(y))
        if isinstance(phi, Exists):
            inner = pb.eliminate(y, pb.pand(window, translate(phi.body, True)))
            return inner if positive else pb.pneg(inner)
        # forall y body  =  !exists y !body
        inner = pb.eliminate(y, pb.pand(window, translate(phi.body, False)))
        return pb.pneg(inner) if positive else inner
    raise QEUnsupported(f"{type(phi).__name__} is outside the cyclic signature")


# --- per-instance shapes


def _labels(N: int) -> np.ndarray:
    return np.arange(-N, N + 1)


def _pm_labels(N: int, m: int, shift: int) -> np.ndarray:
    """Truth of P_m(x + shift) for every label x in the window."""
    y = (_labels(N) + shift + N) % (2 * N + 1) - N
    return (y != 0) & (y % m == 0)


def _points(N: int, mask: np.ndarray, x: Var) -> list[Formula]:
    return [Eq(x, Num(int(v))) for v in _labels(N)[mask]]


def _residue_formula(N: int, m: int, r: int, x: Var) -> Formula:
    """x = r (mod m) on the window, as P_m(x + -r) with point repairs."""
    target = (_labels(N) - r) % m == 0
    shift = -r
    if shift < -N or shift > N:
        shift = (shift + N) % (2 * N + 1) - N
    core = PredPm(m, x) if shift == 0 else PredPm(m, Sum(x, Num(shift)))
    have = _pm_labels(N, m, shift)
    drop = have & ~target
    add = target & ~have
    out = core
    if drop.any():
        out = conj(out, *(Not(p) for p in _points(N, drop, x)))
    if add.any():
        out = disj(out, *_points(N, add, x))
    return out


def _atom_shape(a: pb.Atom, x: str, N: int) -> Formula:
    """One atom ``n*x + c (op) 0`` as a formula of the lemma shape in x."""
    X = Var(x)
    n, c = a.lin.coef(x), a.lin.const
    if a.lin.vars() - {x}:
        raise QEError(f"atom {a} still has parameters")
    if a.kind == "lt":
        if n > 0:
            u = (-c - 1) // n  # x <= u
            if u >= N:
                return TRUE
            if u < -N:
                return FALSE
            return Lt(X, Num(u + 1))
        l = c // (-n) + 1  # x >= l
        if l <= -N:
            return TRUE
        if l > N:
            return FALSE
        return Lt(Num(l - 1), X)
    if a.kind in ("eq", "ne"):
        if c % n or not -N <= -c // n <= N:
            point = FALSE
        else:
            point = Eq(X, Num(-c // n))
        return point if a.kind == "eq" else neg(point)
    # m | n*x + c
    m = a.m
    n, c = n % m, c % m
    g = gcd(n, m)
    if c % g:
        shape = FALSE
    else:
        m1, n1, c1 = m // g, n // g, c // g
        if m1 == 1:
            shape = TRUE
        else:
            r = (-c1 * pow(n1, -1, m1)) % m1
            shape = _residue_formula(N, m1, r, X)
    return shape if a.kind == "dvd" else neg(shape)


def _shape(f: PForm, x: str, N: int) -> Formula:
    if isinstance(f, pb.PConst):
        return TRUE if f.value else FALSE
    if isinstance(f, pb.Atom):
        return _atom_shape(f, x, N)
    parts = [_shape(a, x, N) for a in f.args]
    return conj(*parts) if isinstance(f, pb.PAnd) else disj(*parts)


def _mask(psi: Formula, N: int) -> np.ndarray:
    """Truth of a lemma-shape formula at every label of the window."""
    xs = _labels(N)
    if isinstance(psi, Top):
        return np.ones(xs.size, dtype=bool)
    if isinstance(psi, Bottom):
        return np.zeros(xs.size, dtype=bool)
    if isinstance(psi, Not):
        return ~_mask(psi.body, N)
    if isinstance(psi, And):
        return np.logical_and.reduce([_mask(a, N) for a in psi.args])
    if isinstance(psi, Or):
        return np.logical_or.reduce([_mask(a, N) for a in psi.args])
    if isinstance(psi, PredPm):
        shift = psi.arg.right.value if isinstance(psi.arg, Sum) else 0
        return _pm_labels(N, psi.m, shift)
    # numerals are labels already inside the window
    if isinstance(psi, Eq):
        b = psi.right if isinstance(psi.right, Num) else psi.left
        return xs == b.value
    if isinstance(psi.right, Num):
        return xs < psi.right.value
    return psi.left.value < xs


def fold_instance(psi: Formula, N: int) -> Formula:
    """Replace every subformula that is constant on the window by true/false."""
    m = _mask(psi, N)
    if m.all():
        return TRUE
    if not m.any():
        return FALSE
    if isinstance(psi, Not):
        return neg(fold_instance(psi.body, N))
    if isinstance(psi, And):
        return conj(*(fold_instance(a, N) for a in psi.args))
    if isinstance(psi, Or):
        return disj(*(fold_instance(a, N) for a in psi.args))
    return psi


def instance_formula(uniform: PForm, x: str, N: int, params: Mapping[str, int] | None = None) -> Formula:
    """The lemma-shape formula in x for a concrete N and concrete parameter labels."""
    env = {NSYM: N, **(params or {})}
    return fold_instance(_shape(pb.instantiate(uniform, env), x, N), N)


def is_lemma_shape(psi: Formula, x: str) -> bool:
    """Boolean combination of x = b, x < b, b < x, P_m(x) and P_m(x + b) with numerals b."""
    X = Var(x)
    if isinstance(psi, (Top, Bottom)):
        return True
    if isinstance(psi, Not):
        return is_lemma_shape(psi.body, x)
    if isinstance(psi, (And, Or)):
        return all(is_lemma_shape(a, x) for a in psi.args)
    if isinstance(psi, (Eq, Lt)):
        sides = {psi.left, psi.right}
        return X in sides and any(isinstance(s, Num) for s in sides)
    if isinstance(psi, PredPm):
        arg = psi.arg
        return arg == X or (isinstance(arg, Sum) and arg.left == X and isinstance(arg.right, Num))
    return False


# --- driver


@dataclass
class CyclicNormalForm:
    """The uniform integer form plus helpers to instantiate it."""

    phi: Formula
    x: str
    params: list[str]
    uniform: PForm
    instances: dict = field(default_factory=dict)

    def at(self, N: int, params: Mapping[str, int] | None = None) -> Formula:
        key = (N, tuple(sorted((params or {}).items())))
        if key not in self.instances:
            self.instances[key] = instance_formula(self.uniform, self.x, N, params)
        return self.instances[key]


def uniform_form(phi: Formula, x: str) -> CyclicNormalForm:
    validate(phi, "ocyc")
    params = [v for v in free_vars(phi) if v != x]
    return CyclicNormalForm(phi, x, params, translate(phi))


def certify_cyclic(
    form: CyclicNormalForm, Ns: Sequence[int]
) -> tuple[VerifiedUpTo | Counterexample, int]:
    """Compare every instance with ``phi`` on Z_N for all N in ``Ns`` and all parameters.

    Returns the certification and the largest number of atoms in an instance
    (the uniform bound on the size of the boolean combination).
    """
    widest = 0
    variables = [form.x] + form.params
    for N in Ns:
        M = make_ordered_cyclic(N)
        table = truth_table(M, form.phi, variables)
        for idx in itertools.product(range(M.size), repeat=len(form.params)):
            params = {v: M.value(p) for v, p in zip(form.params, idx)}
            psi = form.at(N, params)
            if not is_lemma_shape(psi, form.x):
                raise QEError(f"instance at N={N} left the lemma shape")
            widest = max(widest, _count_atoms(psi))
            got = truth_table(M, psi, [form.x])
            want = table[(slice(None),) + idx]
            diff = np.flatnonzero(got != want)
            if diff.size:
                pos = int(diff[0])
                assignment = {form.x: M.value(pos), **params}
                form.instances.pop((N, tuple(sorted(params.items()))), None)
                return Counterexample(M.descriptor(), assignment, bool(want[pos]), bool(got[pos])), widest
    return VerifiedUpTo(max(Ns), len(Ns)), widest


def _count_atoms(psi: Formula) -> int:
    if isinstance(psi, (Top, Bottom)):
        return 0
    if isinstance(psi, Not):
        return _count_atoms(psi.body)
    if isinstance(psi, (And, Or)):
        return sum(_count_atoms(a) for a in psi.args)
    return 1


def _already_shaped(phi: Formula, x: str) -> bool:
    return is_lemma_shape(phi, x) and free_vars(phi) in ([], [x])


def normal_form_cyclic(
    phi: Formula,
    x: str = "x",
    N: int | None = None,
    params: Mapping[str, int] | None = None,
    certify: Sequence[int] = (),
) -> QEResult:
    """Lemma-shape equivalent of ``phi`` in the distinguished variable ``x``.

    The uniform output is the integer formula with symbol N (rendered in
    ``QEResult.uniform``).  ``output`` is its instance at ``N`` and ``params``;
    with no N given it is the instance at the first certification size (or
    N = 4), and None when parameters are needed but missing.
    """
    validate(phi, "ocyc")
    if _already_shaped(phi, x):
        result = QEResult("ocyc", phi, phi, uniform=None)
        if certify:
            form = CyclicNormalForm(phi, x, [], pb.PTRUE)
            form.instances = {(n, ()): phi for n in certify}
            result.status, _ = certify_cyclic(form, certify)
        return result
    form = uniform_form(phi, x)
    result = QEResult("ocyc", phi, None, uniform=pb.render(form.uniform))
    missing = [v for v in form.params if v not in (params or {})]
    if N is None:
        N = certify[0] if certify else 4
    if not missing:
        result.output = form.at(N, {v: params[v] for v in form.params} if params else {})
    else:
        result.notes.append("instance needs values for " + ", ".join(missing))
    if certify:
        result.status, widest = certify_cyclic(form, certify)
        result.notes.append(f"at most {widest} atoms in any certified instance")
    return result
