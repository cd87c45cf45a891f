"""Uniform quantifier elimination for finite linear orders, optionally with the block predicate.

Target language: min, max, <, =, S^k (clamped), and for the block family
also P, L, R.  One existential is removed at a time from a quantifier-free
body put in DNF.  Every literal mentioning the eliminated variable x is
rewritten, exactly under the clamped successor, into x-free guards plus a
bound ``L <= x``, ``x <= U`` or ``x = V``:

* an equality bound is a witness term: substitute it;
* otherwise the lower bounds are merged by the case split
  ``(t0 < t1 & elim(t1, ...)) | (!(t0 < t1) & elim(t0, ...))`` (and dually
  for upper bounds) down to one lower and one upper bound, where
  ``exists x (L <= x <= U)`` is ``L <= U``.

With a literal ``P(x)`` (or its negation) the last step becomes
``L <= U & (P(L) | P(U) | (S(L) < U & hat(L, U)))`` where ``hat`` is the
change-of-sign clause built from R.
"""
from __future__ import annotations

import itertools
from typing import Iterable

from ..formula import (
    FALSE,
    MAX,
    MIN,
    TRUE,
    And,
    Bottom,
    Const,
    Eq,
    Formula,
    LFun,
    Lt,
    Not,
    Or,
    PredP,
    RFun,
    S,
    Succ,
    Term,
    Top,
    Var,
    atom_terms,
    conj,
    disj,
    iter_subterms,
    map_terms,
    neg,
    term_vars,
    validate,
)
from .common import (
    QEResult,
    QEUnsupported,
    dnf,
    eliminate_all,
    nnf,
    simplify,
    simplify_atom,
)

# a bound is (kind, term): kind in {"ge", "le", "eq"}; ("p", (sign, k)) for P(S^k(x)) or its negation
Bound = tuple[str, object]
Alternative = tuple[list[Formula], list[Bound]]


def _le(a: Term, b: Term) -> Formula:
    return simplify_atom(neg(simplify_atom(Lt(b, a))))


def _lt(a: Term, b: Term) -> Formula:
    return simplify_atom(Lt(a, b))


def _eq(a: Term, b: Term) -> Formula:
    return simplify_atom(Eq(a, b))


def _side(t: Term, x: str) -> tuple[str, object]:
    """('x', p) for S^p(x), ('t', t) for an x-free term."""
    if x not in set(term_vars(t)):
        return ("t", t)
    if t == Var(x):
        return ("x", 0)
    if isinstance(t, Succ) and t.base == Var(x):
        return ("x", t.k)
    raise QEUnsupported(f"variable {x} occurs under a function other than S in {t}")


# --- exact rewrites of S^p(x) <op> T under clamping (positions 0..max)


def _below(p: int, T: Term) -> list[Alternative]:
    """S^p(x) < T."""
    if p >= 0:
        return [([_lt(S(MIN, p), T)], [("le", S(T, -(p + 1)))])]
    q = -p
    return [([_lt(MIN, T)], [("le", S(T, q - 1))])]


def _above(p: int, T: Term) -> list[Alternative]:
    """T < S^p(x)."""
    if p >= 0:
        return [([_lt(T, MAX)], [("ge", S(T, 1 - p))])]
    q = -p
    return [([_lt(S(T, q), MAX)], [("ge", S(T, q + 1))])]


def _equal(p: int, T: Term) -> list[Alternative]:
    """S^p(x) = T."""
    if p >= 0:
        return [
            ([_lt(T, MAX), neg(_lt(T, S(MIN, p)))], [("eq", S(T, -p))]),
            ([_eq(T, MAX)], [("ge", S(MAX, -p))]),
        ]
    q = -p
    return [
        ([_lt(MIN, T), _lt(S(T, q - 1), MAX)], [("eq", S(T, q))]),
        ([_eq(T, MIN)], [("le", S(MIN, q))]),
    ]


def _x_lt_x(p: int, q: int) -> list[Alternative]:
    """S^p(x) < S^q(x)."""
    if p >= q:
        return []
    if p >= 0:
        return _below(p, MAX)
    if q <= 0:
        return _above(q, MIN)
    return [([_lt(MIN, MAX)], [])]


def _x_eq_x(lo: int, hi: int) -> list[Alternative]:
    """S^lo(x) = S^hi(x) with lo < hi: the complement of :func:`_x_lt_x`."""
    if lo >= 0:
        return _equal(lo, MAX)
    if hi <= 0:
        return _equal(hi, MIN)
    return [([_eq(MIN, MAX)], [])]


def _atom_alternatives(atom: Formula, x: str) -> list[Alternative] | None:
    """Alternatives for a positive atom; None if x does not occur."""
    if isinstance(atom, PredP):
        if x not in set(term_vars(atom.arg)):
            return None
        return [([], [("p", (True, _p_offset(atom.arg, x)))])]
    if isinstance(atom, (Top, Bottom)):
        return None
    if not isinstance(atom, (Lt, Eq)):
        raise QEUnsupported(f"unexpected atom {atom}")
    a, b = _side(atom.left, x), _side(atom.right, x)
    if a[0] == "t" and b[0] == "t":
        return None
    if isinstance(atom, Lt):
        if a[0] == "x" and b[0] == "t":
            return _below(a[1], b[1])
        if a[0] == "t" and b[0] == "x":
            return _above(b[1], a[1])
        return _x_lt_x(a[1], b[1])
    if a[0] == "x" and b[0] == "t":
        return _equal(a[1], b[1])
    if a[0] == "t" and b[0] == "x":
        return _equal(b[1], a[1])
    p, q = a[1], b[1]
    if p == q:
        return [([], [])]
    return _x_eq_x(min(p, q), max(p, q))


def _p_offset(arg: Term, x: str) -> int:
    kind, k = _side(arg, x)
    if kind != "x":
        raise QEUnsupported(f"P applied to {arg}; only P(S^k({x})) is eliminable")
    return k


def _negated(atom: Formula, x: str) -> list[Alternative]:
    if isinstance(atom, PredP):
        return [([], [("p", (False, _p_offset(atom.arg, x)))])]
    if isinstance(atom, Lt):
        # !(a < b)  <=>  b < a | b = a
        return _atom_alternatives(Lt(atom.right, atom.left), x) + _atom_alternatives(
            Eq(atom.right, atom.left), x
        )
    if isinstance(atom, Eq):
        return _atom_alternatives(Lt(atom.left, atom.right), x) + _atom_alternatives(
            Lt(atom.right, atom.left), x
        )
    raise QEUnsupported(f"unexpected negated atom {atom}")


def _literal_alternatives(lit: Formula, x: str) -> list[Alternative] | None:
    if isinstance(lit, Not):
        if _atom_alternatives(lit.body, x) is None:
            return None
        return _negated(lit.body, x)
    return _atom_alternatives(lit, x)


# --- mixed-offset case split


def sign_change_clause(a: Term, b: Term, positive: bool = True) -> Formula:
    """exists x (a < x < b & P(x)) without the S(a) < b guard, via R; ``positive=False`` for !P."""
    pa = PredP(a) if positive else Not(PredP(a))
    npa = Not(PredP(a)) if positive else PredP(a)
    ra = RFun(a)
    return disj(
        conj(npa, _lt(ra, b)),
        conj(pa, neg(_eq(ra, S(a)))),
        conj(pa, _eq(ra, S(a)), _lt(RFun(S(a)), b)),
    )


def _interval_with_p(L: Term, U: Term, sign: bool | None, k: int = 0) -> Formula:
    if sign is None:
        return _le(L, U)
    p = (lambda t: PredP(t)) if sign else (lambda t: Not(PredP(t)))
    # x -> S^k(x) maps [L, U] onto [S^k(L), S^k(U)]
    lo, hi = S(L, k), S(U, k)
    inner = conj(_lt(S(lo), hi), sign_change_clause(lo, hi, sign))
    return conj(_le(L, U), disj(p(lo), p(hi), inner))


def split_bounds(lows: list[Term], ups: list[Term], sign: bool | None, k: int = 0) -> Formula:
    """exists x (AND lows <= x & AND x <= ups [& P(x)^sign]) by pairwise case split."""
    if len(lows) > 1:
        t0, t1 = lows[0], lows[1]
        return disj(
            conj(_lt(t0, t1), split_bounds(lows[1:], ups, sign, k)),
            conj(neg(_lt(t0, t1)), split_bounds([t0] + lows[2:], ups, sign, k)),
        )
    if len(ups) > 1:
        u0, u1 = ups[0], ups[1]
        return disj(
            conj(_lt(u0, u1), split_bounds(lows, [u0] + ups[2:], sign, k)),
            conj(neg(_lt(u0, u1)), split_bounds(lows, ups[1:], sign, k)),
        )
    L = lows[0] if lows else MIN
    U = ups[0] if ups else MAX
    if sign is None and (not lows or not ups):
        return TRUE
    return _interval_with_p(L, U, sign, k)


def _at(bound: Bound, V: Term) -> Formula:
    kind, t = bound
    if kind == "ge":
        return _le(t, V)
    if kind == "le":
        return _le(V, t)
    if kind == "eq":
        return _eq(V, t)
    sign, k = t
    return PredP(S(V, k)) if sign else Not(PredP(S(V, k)))


def _eliminate_alternative(guards: list[Formula], bounds: list[Bound]) -> Formula:
    eqs = [t for k, t in bounds if k == "eq"]
    if eqs:
        V = eqs[0]
        return conj(*guards, *(_at(b, V) for b in bounds if b != ("eq", V)))
    lits = {t for k, t in bounds if k == "p"}
    offsets = {k for _, k in lits}
    if len(offsets) > 1:
        raise QEUnsupported("P at several successor offsets of the eliminated variable")
    if len({sign for sign, _ in lits}) > 1:
        return FALSE
    sign, offset = lits.pop() if lits else (None, 0)
    lows = list(dict.fromkeys(t for k, t in bounds if k == "ge"))
    ups = list(dict.fromkeys(t for k, t in bounds if k == "le"))
    return conj(*guards, split_bounds(lows, ups, sign, offset))


def _mixed_pair(t: Term, x: str) -> Succ | None:
    """An innermost S^a(S^b(u)) with a, b of opposite signs and x in u."""
    for s in iter_subterms(t):
        if (
            isinstance(s, Succ)
            and isinstance(s.base, Succ)
            and (s.k > 0) != (s.base.k > 0)
            and not isinstance(s.base.base, Succ)
            and x in set(term_vars(s.base.base))
        ):
            return s
    return None


def _replace(t: Term, old: Term, new: Term) -> Term:
    if t == old:
        return new
    if isinstance(t, Succ):
        return S(_replace(t.base, old, new), t.k)
    if isinstance(t, (LFun, RFun)):
        return type(t)(_replace(t.arg, old, new))
    return t


def _unmix(phi: Formula, x: str) -> Formula:
    """Split atoms on S^a(S^b(x)) with mixed signs into clamped and unclamped cases.

    S^a(S^-b(x)) is S^a(min) when x <= S^b(min), else S^(a-b)(x); dually
    S^-a(S^b(x)) is S^-a(max) when S^-b(max) <= x, else S^(b-a)(x).
    """
    if isinstance(phi, (Not, And, Or)):
        if isinstance(phi, Not):
            return neg(_unmix(phi.body, x))
        parts = [_unmix(a, x) for a in phi.args]
        return conj(*parts) if isinstance(phi, And) else disj(*parts)
    pair = next((m for m in map(lambda u: _mixed_pair(u, x), atom_terms(phi)) if m is not None), None)
    if pair is None:
        return phi
    inner, a, b = pair.base.base, pair.k, pair.base.k
    if b < 0:
        clamped, cond = S(MIN, a), _le(inner, S(MIN, -b))
    else:
        clamped, cond = S(MAX, a), _le(S(MAX, -b), inner)
    swap = lambda new: map_terms(phi, lambda t: _replace(t, pair, new))  # noqa: E731
    return _unmix(disj(conj(cond, swap(clamped)), conj(neg(cond), swap(S(inner, a + b)))), x)


def exists_qf(x: str, body: Formula) -> Formula:
    """Eliminate ``exists x`` from a quantifier-free body."""
    out: list[Formula] = []
    for conjunct in dnf(nnf(_unmix(simplify(body), x))):
        free_part: list[Formula] = []
        options: list[list[Alternative]] = []
        for lit in conjunct:
            alts = _literal_alternatives(lit, x)
            if alts is None:
                free_part.append(lit)
            else:
                options.append(alts)
        if not options:
            out.append(conj(*free_part))
            continue
        for combo in itertools.product(*options):
            guards = [g for alt in combo for g in alt[0]]
            bounds = [b for alt in combo for b in alt[1]]
            out.append(conj(*free_part, _eliminate_alternative(guards, bounds)))
    return simplify(disj(*out))


def _check_terms(phi: Formula, allowed: Iterable[type]) -> None:
    from ..formula import atom_terms, iter_formulas

    allowed = tuple(allowed)
    for f in iter_formulas(phi):
        for t in atom_terms(f):
            for s in iter_subterms(t):
                if not isinstance(s, allowed):
                    raise QEUnsupported(f"term {s} outside the QE language")


def qe_linear_order(phi: Formula) -> QEResult:
    """Quantifier-free equivalent of ``phi`` uniformly over all finite linear orders."""
    validate(phi, "ord")
    out = eliminate_all(phi, exists_qf)
    _check_terms(out, (Var, Const, Succ))
    return QEResult("ord", phi, out)


def qe_block_predicate(phi: Formula) -> QEResult:
    """Quantifier-free equivalent in {<, =, P, L, R, S, min, max} over the block-predicate class."""
    validate(phi, "block")
    out = eliminate_all(phi, exists_qf)
    return QEResult("block", phi, out)
