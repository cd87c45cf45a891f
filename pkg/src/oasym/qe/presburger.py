"""Quantifier-free linear integer arithmetic with divisibility, and Cooper elimination.

Linear forms carry an extra symbol ``N`` (the half-width of the cyclic
window) that is never eliminated, so an eliminated formula is uniform in N.
Atoms are ``e < 0``, ``e = 0``, ``e != 0``, ``m | e`` and ``!(m | e)``;
formulas are kept in negation normal form built from these with and/or.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import gcd, lcm
from typing import Iterable, Iterator, Mapping

NSYM = "#N"


@dataclass(frozen=True)
class Lin:
    """``sum(c_v * v) + const`` with nonzero coefficients sorted by name."""

    terms: tuple[tuple[str, int], ...] = ()
    const: int = 0

    @staticmethod
    def of(coefs: Mapping[str, int] | None = None, const: int = 0) -> "Lin":
        items = tuple(sorted((v, c) for v, c in (coefs or {}).items() if c))
        return Lin(items, const)

    @staticmethod
    def var(name: str, c: int = 1) -> "Lin":
        return Lin.of({name: c})

    @staticmethod
    def num(c: int) -> "Lin":
        return Lin((), c)

    def coefs(self) -> dict[str, int]:
        return dict(self.terms)

    def coef(self, v: str) -> int:
        for name, c in self.terms:
            if name == v:
                return c
        return 0

    def vars(self) -> set[str]:
        return {v for v, _ in self.terms}

    def __add__(self, other: "Lin") -> "Lin":
        d = self.coefs()
        for v, c in other.terms:
            d[v] = d.get(v, 0) + c
        return Lin.of(d, self.const + other.const)

    def __neg__(self) -> "Lin":
        return self.scale(-1)

    def __sub__(self, other: "Lin") -> "Lin":
        return self + (-other)

    def plus(self, c: int) -> "Lin":
        return Lin(self.terms, self.const + c)

    def scale(self, k: int) -> "Lin":
        return Lin.of({v: c * k for v, c in self.terms}, self.const * k)

    def drop(self, v: str) -> "Lin":
        return Lin(tuple(t for t in self.terms if t[0] != v), self.const)

    def subst(self, v: str, value: "Lin") -> "Lin":
        c = self.coef(v)
        return self if c == 0 else self.drop(v) + value.scale(c)

    def evaluate(self, env: Mapping[str, int]) -> int:
        return self.const + sum(c * env[v] for v, c in self.terms)

    def partial(self, env: Mapping[str, int]) -> "Lin":
        out = self
        for v, value in env.items():
            out = out.subst(v, Lin.num(value))
        return out

    def __str__(self) -> str:
        parts = []
        for v, c in self.terms:
            name = "N" if v == NSYM else v
            mag = "" if abs(c) == 1 else f"{abs(c)}*"
            parts.append(("-" if c < 0 else "+") + " " + mag + name)
        if self.const or not parts:
            parts.append(("-" if self.const < 0 else "+") + " " + str(abs(self.const)))
        text = " ".join(parts)
        return text[2:] if text.startswith("+ ") else "-" + text[2:]


# --- formulas

@dataclass(frozen=True)
class Atom:
    kind: str  # lt | eq | ne | dvd | ndvd
    lin: Lin
    m: int = 0

    def __str__(self) -> str:
        if self.kind == "lt":
            return f"{self.lin} < 0"
        if self.kind == "eq":
            return f"{self.lin} = 0"
        if self.kind == "ne":
            return f"{self.lin} != 0"
        bar = "|" if self.kind == "dvd" else "!|"
        return f"{self.m} {bar} {self.lin}"


@dataclass(frozen=True)
class PAnd:
    args: tuple


@dataclass(frozen=True)
class POr:
    args: tuple


@dataclass(frozen=True)
class PConst:
    value: bool


PTRUE = PConst(True)
PFALSE = PConst(False)
PForm = Atom | PAnd | POr | PConst


def pand(*parts: PForm) -> PForm:
    out: list[PForm] = []
    for p in parts:
        if p == PFALSE:
            return PFALSE
        if p == PTRUE:
            continue
        for q in p.args if isinstance(p, PAnd) else (p,):
            if q not in out:
                out.append(q)
    if not out:
        return PTRUE
    return out[0] if len(out) == 1 else PAnd(tuple(out))


def por(*parts: PForm) -> PForm:
    out: list[PForm] = []
    for p in parts:
        if p == PTRUE:
            return PTRUE
        if p == PFALSE:
            continue
        for q in p.args if isinstance(p, POr) else (p,):
            if q not in out:
                out.append(q)
    if not out:
        return PFALSE
    return out[0] if len(out) == 1 else POr(tuple(out))


def lt(lin: Lin) -> PForm:
    return atom("lt", lin)


def le(a: Lin, b: Lin) -> PForm:
    """a <= b."""
    return lt(a - b - Lin.num(1))


def eq(lin: Lin) -> PForm:
    return atom("eq", lin)


def ne(lin: Lin) -> PForm:
    return atom("ne", lin)


def dvd(m: int, lin: Lin) -> PForm:
    return atom("dvd", lin, m)


def pneg(f: PForm) -> PForm:
    if isinstance(f, PConst):
        return PConst(not f.value)
    if isinstance(f, PAnd):
        return por(*(pneg(a) for a in f.args))
    if isinstance(f, POr):
        return pand(*(pneg(a) for a in f.args))
    if f.kind == "lt":
        return lt((-f.lin).plus(-1))
    flip = {"eq": "ne", "ne": "eq", "dvd": "ndvd", "ndvd": "dvd"}
    return atom(flip[f.kind], f.lin, f.m)


def _lt_on_naturals(a: int, c: int) -> bool | None:
    """Truth of ``a*N + c < 0`` if it is the same for every N >= 0."""
    if a >= 0 and c >= 0:
        return False
    if a <= 0 and c < 0:
        return True
    return None


def atom(kind: str, lin: Lin, m: int = 0) -> PForm:
    """Build a normalized atom, folding it when its truth is decided for every N >= 0."""
    if kind in ("dvd", "ndvd"):
        if m <= 0:
            raise ValueError("modulus must be positive")
        lin = Lin.of({v: c % m for v, c in lin.terms}, lin.const % m)
        g = gcd(m, *(c for _, c in lin.terms)) if lin.terms else m
        if g > 1 and lin.terms:
            # g | m and g | coefficients: m | e forces g | const
            if lin.const % g:
                return PConst(kind == "ndvd")
            m //= g
            lin = Lin.of({v: c // g for v, c in lin.terms}, lin.const // g)
            lin = Lin.of({v: c % m for v, c in lin.terms}, lin.const % m)
        if m == 1:
            return PConst(kind == "dvd")
        if not lin.terms:
            return PConst((lin.const % m == 0) == (kind == "dvd"))
        return Atom(kind, lin, m)
    if lin.terms:
        g = gcd(*(c for _, c in lin.terms))
        if g > 1:
            if kind == "lt":
                # g*e' + c < 0  <=>  e' < ceil(-c/g)
                lin = Lin(tuple((v, c // g) for v, c in lin.terms), lin.const // g)
            elif lin.const % g:
                return PConst(kind == "ne")
            else:
                lin = Lin(tuple((v, c // g) for v, c in lin.terms), lin.const // g)
    if kind in ("eq", "ne") and lin.terms and lin.terms[0][1] < 0:
        lin = -lin
    if lin.vars() <= {NSYM}:
        a, c = lin.coef(NSYM), lin.const
        if kind == "lt":
            t = _lt_on_naturals(a, c)
            if t is not None:
                return PConst(t)
        else:
            zero = c == 0 if a == 0 else (c % a == 0 and -c // a >= 0)
            if not zero:
                return PConst(kind == "ne")
            if a == 0:
                return PConst(kind == "eq")
    return Atom(kind, lin, m)


# --- traversal

def iter_atoms(f: PForm) -> Iterator[Atom]:
    if isinstance(f, Atom):
        yield f
    elif isinstance(f, (PAnd, POr)):
        for a in f.args:
            yield from iter_atoms(a)


def map_atoms(f: PForm, fn) -> PForm:
    if isinstance(f, Atom):
        return fn(f)
    if isinstance(f, PAnd):
        return pand(*(map_atoms(a, fn) for a in f.args))
    if isinstance(f, POr):
        return por(*(map_atoms(a, fn) for a in f.args))
    return f


def psubst(f: PForm, v: str, value: Lin) -> PForm:
    return map_atoms(f, lambda a: atom(a.kind, a.lin.subst(v, value), a.m))


def instantiate(f: PForm, env: Mapping[str, int]) -> PForm:
    return map_atoms(f, lambda a: atom(a.kind, a.lin.partial(env), a.m))


def holds(f: PForm, env: Mapping[str, int]) -> bool:
    if isinstance(f, PConst):
        return f.value
    if isinstance(f, PAnd):
        return all(holds(a, env) for a in f.args)
    if isinstance(f, POr):
        return any(holds(a, env) for a in f.args)
    v = f.lin.evaluate(env)
    if f.kind == "lt":
        return v < 0
    if f.kind == "eq":
        return v == 0
    if f.kind == "ne":
        return v != 0
    return (v % f.m == 0) == (f.kind == "dvd")


def free_symbols(f: PForm) -> set[str]:
    out: set[str] = set()
    for a in iter_atoms(f):
        out |= a.lin.vars()
    return out


def count_atoms(f: PForm) -> int:
    return sum(1 for _ in iter_atoms(f))


def render(f: PForm) -> str:
    if isinstance(f, PConst):
        return "true" if f.value else "false"
    if isinstance(f, Atom):
        return str(f)
    op = " & " if isinstance(f, PAnd) else " | "
    return "(" + op.join(render(a) for a in f.args) + ")"


# --- Cooper

def _unit_coefficient(a: Atom, y: str, l: int) -> Atom:
    """Scale ``a`` so that y's coefficient is +-l, then read l*y as the new y."""
    c = a.lin.coef(y)
    s = l // abs(c)
    lin = a.lin.scale(s)
    sign = 1 if c > 0 else -1
    if a.kind != "lt" and sign < 0:
        lin, sign = -lin, 1
    lin = lin.drop(y) + Lin.var(y, sign)
    return Atom(a.kind, lin, a.m * s if a.m else 0)


def eliminate(y: str, f: PForm) -> PForm:
    """``exists y. f`` over the integers as a quantifier-free formula (Cooper)."""
    ys = [a for a in iter_atoms(f) if a.lin.coef(y)]
    if not ys:
        return f
    l = lcm(*(abs(a.lin.coef(y)) for a in ys))

    def norm(a: Atom) -> PForm:
        return _unit_coefficient(a, y, l) if a.lin.coef(y) else a

    g = map_atoms(f, norm)
    if l > 1:
        g = pand(g, Atom("dvd", Lin.var(y), l))

    # a top-level equality pins y down
    if isinstance(g, PAnd):
        for a in g.args:
            if isinstance(a, Atom) and a.kind == "eq" and a.lin.coef(y) == 1:
                return psubst(g, y, -a.lin.drop(y))

    delta = 1
    bounds: list[Lin] = []
    for a in iter_atoms(g):
        c = a.lin.coef(y)
        if not c:
            continue
        rest = a.lin.drop(y)
        if a.kind in ("dvd", "ndvd"):
            delta = lcm(delta, a.m)
        elif a.kind == "lt" and c < 0:
            bounds.append(rest)
        elif a.kind == "eq":
            bounds.append((-rest).plus(-1))
        elif a.kind == "ne":
            bounds.append(-rest)
    bounds = list(dict.fromkeys(bounds))

    def at_minus_infinity(a: Atom) -> PForm:
        c = a.lin.coef(y)
        if not c or a.kind in ("dvd", "ndvd"):
            return a
        if a.kind == "lt":
            return PTRUE if c > 0 else PFALSE
        return PFALSE if a.kind == "eq" else PTRUE

    low = map_atoms(g, at_minus_infinity)
    out: list[PForm] = []
    for j in range(1, delta + 1):
        if low != PFALSE:
            out.append(psubst(low, y, Lin.num(j)))
        for b in bounds:
            out.append(psubst(g, y, b.plus(j)))
    return por(*out)


def eliminate_all(ys: Iterable[str], f: PForm) -> PForm:
    for y in ys:
        f = eliminate(y, f)
    return f
