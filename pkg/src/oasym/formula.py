"""First-order formulas over finite ordered signatures.

Terms and formulas are frozen dataclasses.  Constructors do not normalize;
call :func:`normalize` (the parser already does) to get canonical shapes:
successor powers folded, f-powers folded, sums left-nested.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping

FAMILIES = ("ord", "ocyc", "block", "beatty")


class FormulaError(ValueError):
    """Parse or validation failure.  ``pos`` is a character offset when known."""

    def __init__(self, message: str, pos: int | None = None):
        self.pos = pos
        if pos is not None:
            message = f"{message} (at position {pos})"
        super().__init__(message)


class SignatureError(FormulaError):
    pass


# ---------------------------------------------------------------- terms


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Const:
    which: str  # "min" | "max"


@dataclass(frozen=True)
class Num:
    """Integer label of an ordered cyclic group (reduced mod 2N+1 on evaluation)."""

    value: int


@dataclass(frozen=True)
class Succ:
    """``S^k(base)``; negative k iterates the predecessor.  Clamped at the ends."""

    base: "Term"
    k: int


@dataclass(frozen=True)
class Sum:
    left: "Term"
    right: "Term"


@dataclass(frozen=True)
class FApp:
    """``f^s(arg)`` for the Beatty map f(x) = floor(alpha x)."""

    s: int
    arg: "Term"


@dataclass(frozen=True)
class LFun:
    """Nearest change of sign of P to the left."""

    arg: "Term"


@dataclass(frozen=True)
class RFun:
    """Nearest change of sign of P to the right."""

    arg: "Term"


Term = Var | Const | Num | Succ | Sum | FApp | LFun | RFun

MIN = Const("min")
MAX = Const("max")


def S(t: Term, k: int = 1) -> Term:
    """Successor power, folding compositions that are sound under clamping.

    S^a(S^b(t)) = S^(a+b)(t) only when a and b have the same sign: a step
    down clamped at min followed by a step up is not a shorter step.
    """
    if k == 0:
        return t
    if isinstance(t, Const) and (t.which == "max") == (k > 0):
        return t
    if isinstance(t, Succ) and (t.k > 0) == (k > 0):
        return S(t.base, t.k + k)
    return Succ(t, k)


# ------------------------------------------------------------- formulas


@dataclass(frozen=True)
class Top:
    pass


@dataclass(frozen=True)
class Bottom:
    pass


@dataclass(frozen=True)
class Eq:
    left: Term
    right: Term


@dataclass(frozen=True)
class Lt:
    left: Term
    right: Term


@dataclass(frozen=True)
class PredP:
    arg: Term


@dataclass(frozen=True)
class PredPm:
    m: int
    arg: Term


@dataclass(frozen=True)
class Not:
    body: "Formula"


@dataclass(frozen=True)
class And:
    args: tuple["Formula", ...]


@dataclass(frozen=True)
class Or:
    args: tuple["Formula", ...]


@dataclass(frozen=True)
class Implies:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Iff:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Exists:
    var: str
    body: "Formula"


@dataclass(frozen=True)
class Forall:
    var: str
    body: "Formula"


Formula = (
    Top | Bottom | Eq | Lt | PredP | PredPm | Not | And | Or | Implies | Iff | Exists | Forall
)
ATOMS = (Top, Bottom, Eq, Lt, PredP, PredPm)
TRUE = Top()
FALSE = Bottom()


def conj(*parts: Formula) -> Formula:
    """Conjunction with unit/zero folding and flattening."""
    out: list[Formula] = []
    for p in parts:
        if isinstance(p, Top):
            continue
        if isinstance(p, Bottom):
            return FALSE
        if isinstance(p, And):
            out.extend(p.args)
        else:
            out.append(p)
    out = list(dict.fromkeys(out))
    if not out:
        return TRUE
    if len(out) == 1:
        return out[0]
    return And(tuple(out))


def disj(*parts: Formula) -> Formula:
    out: list[Formula] = []
    for p in parts:
        if isinstance(p, Bottom):
            continue
        if isinstance(p, Top):
            return TRUE
        if isinstance(p, Or):
            out.extend(p.args)
        else:
            out.append(p)
    out = list(dict.fromkeys(out))
    if not out:
        return FALSE
    if len(out) == 1:
        return out[0]
    return Or(tuple(out))


def neg(p: Formula) -> Formula:
    if isinstance(p, Top):
        return FALSE
    if isinstance(p, Bottom):
        return TRUE
    if isinstance(p, Not):
        return p.body
    return Not(p)


# ------------------------------------------------------------ traversal


def term_children(t: Term) -> tuple[Term, ...]:
    if isinstance(t, (Succ,)):
        return (t.base,)
    if isinstance(t, Sum):
        return (t.left, t.right)
    if isinstance(t, (FApp, LFun, RFun)):
        return (t.arg,)
    return ()


def iter_subterms(t: Term) -> Iterator[Term]:
    yield t
    for c in term_children(t):
        yield from iter_subterms(c)


def atom_terms(phi: Formula) -> tuple[Term, ...]:
    if isinstance(phi, (Eq, Lt)):
        return (phi.left, phi.right)
    if isinstance(phi, (PredP, PredPm)):
        return (phi.arg,)
    return ()


def children(phi: Formula) -> tuple[Formula, ...]:
    if isinstance(phi, Not):
        return (phi.body,)
    if isinstance(phi, (And, Or)):
        return phi.args
    if isinstance(phi, (Implies, Iff)):
        return (phi.left, phi.right)
    if isinstance(phi, (Exists, Forall)):
        return (phi.body,)
    return ()


def term_vars(t: Term) -> Iterator[str]:
    for s in iter_subterms(t):
        if isinstance(s, Var):
            yield s.name


def free_vars(phi: Formula) -> list[str]:
    """Free variables in order of first occurrence."""
    seen: dict[str, None] = {}

    def walk(f: Formula, bound: frozenset[str]) -> None:
        for t in atom_terms(f):
            for v in term_vars(t):
                if v not in bound:
                    seen.setdefault(v)
        if isinstance(f, (Exists, Forall)):
            walk(f.body, bound | {f.var})
        else:
            for c in children(f):
                walk(c, bound)

    walk(phi, frozenset())
    return list(seen)


def all_vars(phi: Formula) -> set[str]:
    out: set[str] = set()
    for f in iter_formulas(phi):
        for t in atom_terms(f):
            out.update(term_vars(t))
        if isinstance(f, (Exists, Forall)):
            out.add(f.var)
    return out


def iter_formulas(phi: Formula) -> Iterator[Formula]:
    yield phi
    for c in children(phi):
        yield from iter_formulas(c)


def is_quantifier_free(phi: Formula) -> bool:
    return not any(isinstance(f, (Exists, Forall)) for f in iter_formulas(phi))


def size(phi: Formula) -> int:
    return sum(1 for _ in iter_formulas(phi))


# -------------------------------------------------------- normalization


def normalize_term(t: Term) -> Term:
    if isinstance(t, Succ):
        return S(normalize_term(t.base), t.k)
    if isinstance(t, FApp):
        arg = normalize_term(t.arg)
        if isinstance(arg, FApp):
            return FApp(t.s + arg.s, arg.arg)
        return FApp(t.s, arg)
    if isinstance(t, Sum):
        left = normalize_term(t.left)
        right = normalize_term(t.right)
        # left-nest: a + (b + c) -> (a + b) + c
        while isinstance(right, Sum):
            left = Sum(left, right.left)
            right = right.right
        return Sum(left, right)
    if isinstance(t, LFun):
        return LFun(normalize_term(t.arg))
    if isinstance(t, RFun):
        return RFun(normalize_term(t.arg))
    return t


def map_terms(phi: Formula, fn) -> Formula:
    if isinstance(phi, Eq):
        return Eq(fn(phi.left), fn(phi.right))
    if isinstance(phi, Lt):
        return Lt(fn(phi.left), fn(phi.right))
    if isinstance(phi, PredP):
        return PredP(fn(phi.arg))
    if isinstance(phi, PredPm):
        return PredPm(phi.m, fn(phi.arg))
    if isinstance(phi, Not):
        return Not(map_terms(phi.body, fn))
    if isinstance(phi, And):
        return And(tuple(map_terms(a, fn) for a in phi.args))
    if isinstance(phi, Or):
        return Or(tuple(map_terms(a, fn) for a in phi.args))
    if isinstance(phi, Implies):
        return Implies(map_terms(phi.left, fn), map_terms(phi.right, fn))
    if isinstance(phi, Iff):
        return Iff(map_terms(phi.left, fn), map_terms(phi.right, fn))
    if isinstance(phi, Exists):
        return Exists(phi.var, map_terms(phi.body, fn))
    if isinstance(phi, Forall):
        return Forall(phi.var, map_terms(phi.body, fn))
    return phi


def normalize(phi: Formula) -> Formula:
    """Canonical shape: normalized terms, flattened n-ary and/or."""
    phi = map_terms(phi, normalize_term)

    def flat(f: Formula) -> Formula:
        if isinstance(f, (And, Or)):
            kind = type(f)
            out: list[Formula] = []
            for a in f.args:
                a = flat(a)
                if isinstance(a, kind):
                    out.extend(a.args)
                else:
                    out.append(a)
            return kind(tuple(out))
        if isinstance(f, Not):
            return Not(flat(f.body))
        if isinstance(f, Implies):
            return Implies(flat(f.left), flat(f.right))
        if isinstance(f, Iff):
            return Iff(flat(f.left), flat(f.right))
        if isinstance(f, (Exists, Forall)):
            return type(f)(f.var, flat(f.body))
        return f

    return flat(phi)


# ---------------------------------------------------------- substitution


def substitute_term(t: Term, bindings: Mapping[str, Term]) -> Term:
    if isinstance(t, Var):
        return bindings.get(t.name, t)
    if isinstance(t, Succ):
        return S(substitute_term(t.base, bindings), t.k)
    if isinstance(t, Sum):
        return Sum(substitute_term(t.left, bindings), substitute_term(t.right, bindings))
    if isinstance(t, FApp):
        return normalize_term(FApp(t.s, substitute_term(t.arg, bindings)))
    if isinstance(t, LFun):
        return LFun(substitute_term(t.arg, bindings))
    if isinstance(t, RFun):
        return RFun(substitute_term(t.arg, bindings))
    return t


def fresh_name(base: str, avoid: Iterable[str]) -> str:
    avoid = set(avoid)
    stem = re.sub(r"\d+$", "", base) or "v"
    i = 1
    while f"{stem}{i}" in avoid:
        i += 1
    return f"{stem}{i}"


def substitute(
    phi: Formula, bindings: Mapping[str, Term], declared: Iterable[str] | None = None
) -> Formula:
    """Replace free occurrences of variables; bound variables are renamed to avoid capture.

    If ``declared`` is given, every binding key must be one of those variables.
    """
    if declared is not None:
        declared = set(declared)
        for v in bindings:
            if v not in declared:
                raise FormulaError(f"binding for undeclared variable {v!r}")
    bindings = {k: v for k, v in bindings.items() if v != Var(k)}
    if not bindings:
        return phi
    return _subst(phi, dict(bindings))


def _subst(phi: Formula, bindings: dict[str, Term]) -> Formula:
    if isinstance(phi, (Exists, Forall)):
        inner = {k: v for k, v in bindings.items() if k != phi.var}
        if not inner:
            return phi
        incoming: set[str] = set()
        for v in inner.values():
            incoming.update(term_vars(v))
        var, body = phi.var, phi.body
        if var in incoming:
            new = fresh_name(var, incoming | all_vars(body) | set(inner))
            body = _subst(body, {var: Var(new)})
            var = new
        return type(phi)(var, _subst(body, inner))
    if isinstance(phi, ATOMS):
        return map_terms(phi, lambda t: substitute_term(t, bindings))
    if isinstance(phi, Not):
        return Not(_subst(phi.body, bindings))
    if isinstance(phi, (And, Or)):
        return type(phi)(tuple(_subst(a, bindings) for a in phi.args))
    return type(phi)(_subst(phi.left, bindings), _subst(phi.right, bindings))


# -------------------------------------------------------------- render


def render_term(t: Term) -> str:
    if isinstance(t, Var):
        return t.name
    if isinstance(t, Const):
        return t.which
    if isinstance(t, Num):
        return str(t.value)
    if isinstance(t, Succ):
        inner = render_term(t.base)
        return f"S({inner})" if t.k == 1 else f"S^{t.k}({inner})"
    if isinstance(t, Sum):
        return f"{render_term(t.left)} + {_render_summand(t.right)}"
    if isinstance(t, FApp):
        inner = render_term(t.arg)
        return f"f({inner})" if t.s == 1 else f"f^{t.s}({inner})"
    if isinstance(t, LFun):
        return f"L({render_term(t.arg)})"
    if isinstance(t, RFun):
        return f"R({render_term(t.arg)})"
    raise TypeError(t)


def _render_summand(t: Term) -> str:
    if isinstance(t, Sum):
        # only reachable on non-normalized input; the grammar has no term parens
        raise FormulaError("cannot render right-nested sum; normalize first")
    return render_term(t)


def render(phi: Formula) -> str:
    """Fully parenthesized concrete syntax accepted by :func:`parse`."""
    if isinstance(phi, Top):
        return "true"
    if isinstance(phi, Bottom):
        return "false"
    if isinstance(phi, Eq):
        return f"{render_term(phi.left)} = {render_term(phi.right)}"
    if isinstance(phi, Lt):
        return f"{render_term(phi.left)} < {render_term(phi.right)}"
    if isinstance(phi, PredP):
        return f"P({render_term(phi.arg)})"
    if isinstance(phi, PredPm):
        return f"P_{phi.m}({render_term(phi.arg)})"
    if isinstance(phi, Not):
        return f"!({render(phi.body)})"
    if isinstance(phi, And):
        return "(" + " & ".join(render(a) for a in phi.args) + ")"
    if isinstance(phi, Or):
        return "(" + " | ".join(render(a) for a in phi.args) + ")"
    if isinstance(phi, Implies):
        return f"({render(phi.left)} -> {render(phi.right)})"
    if isinstance(phi, Iff):
        return f"({render(phi.left)} <-> {render(phi.right)})"
    if isinstance(phi, Exists):
        return f"(exists {phi.var} {render(phi.body)})"
    if isinstance(phi, Forall):
        return f"(forall {phi.var} {render(phi.body)})"
    raise TypeError(phi)


# --------------------------------------------------------------- parser

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<op><->|->|<=|>=|!=|[()&|!=<>+,])
  | (?P<pm>P_(?P<pm_n>\d+))
  | (?P<spow>S\^(?P<spow_n>-?\d+))
  | (?P<fpow>f\^(?P<fpow_n>\d+))
  | (?P<num>-?\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
    """,
    re.VERBOSE,
)

KEYWORDS = {"exists", "forall", "min", "max", "true", "false", "S", "f", "P", "L", "R"}


@dataclass
class _Tok:
    kind: str
    text: str
    pos: int
    value: int | None = None


def _tokenize(text: str) -> list[_Tok]:
    out: list[_Tok] = []
    i = 0
    while i < len(text):
        m = _TOKEN.match(text, i)
        if not m:
            raise FormulaError(f"unexpected character {text[i]!r}", i)
        kind = m.lastgroup
        if kind in ("pm_n", "spow_n", "fpow_n"):
            kind = {"pm_n": "pm", "spow_n": "spow", "fpow_n": "fpow"}[kind]
        if kind == "pm":
            out.append(_Tok("pm", m.group(), i, int(m.group("pm_n"))))
        elif kind == "spow":
            out.append(_Tok("spow", m.group(), i, int(m.group("spow_n"))))
        elif kind == "fpow":
            out.append(_Tok("fpow", m.group(), i, int(m.group("fpow_n"))))
        elif kind == "num":
            out.append(_Tok("num", m.group(), i, int(m.group())))
        elif kind == "op":
            out.append(_Tok(m.group(), m.group(), i))
        elif kind == "ident":
            out.append(_Tok("ident", m.group(), i))
        i = m.end()
    out.append(_Tok("eof", "", len(text)))
    return out


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0

    @property
    def cur(self) -> _Tok:
        return self.toks[self.i]

    def take(self) -> _Tok:
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, kind: str) -> _Tok:
        t = self.cur
        if t.kind != kind:
            got = t.text or "end of input"
            raise FormulaError(f"expected {kind!r}, got {got!r}", t.pos)
        return self.take()

    def is_ident(self, word: str) -> bool:
        return self.cur.kind == "ident" and self.cur.text == word

    # formula := quant | iff
    def formula(self) -> Formula:
        if self.is_ident("exists") or self.is_ident("forall"):
            q = self.take().text
            name = self.var_name()
            body = self.formula()
            return Exists(name, body) if q == "exists" else Forall(name, body)
        return self.iff()

    def var_name(self) -> str:
        t = self.cur
        if t.kind != "ident" or t.text in KEYWORDS:
            raise FormulaError(f"expected variable name, got {t.text or 'end of input'!r}", t.pos)
        self.take()
        return t.text

    def iff(self) -> Formula:
        left = self.imp()
        while self.cur.kind == "<->":
            self.take()
            left = Iff(left, self.imp())
        return left

    def imp(self) -> Formula:
        left = self.disj()
        if self.cur.kind == "->":
            self.take()
            return Implies(left, self.imp())
        return left

    def disj(self) -> Formula:
        parts = [self.conj()]
        while self.cur.kind == "|":
            self.take()
            parts.append(self.conj())
        return parts[0] if len(parts) == 1 else Or(tuple(parts))

    def conj(self) -> Formula:
        parts = [self.unary()]
        while self.cur.kind == "&":
            self.take()
            parts.append(self.unary())
        return parts[0] if len(parts) == 1 else And(tuple(parts))

    def unary(self) -> Formula:
        t = self.cur
        if t.kind == "!":
            self.take()
            return Not(self.unary())
        if self.is_ident("exists") or self.is_ident("forall"):
            return self.formula()
        if t.kind == "(":
            # "(" may open a parenthesized formula; terms never start with "("
            self.take()
            f = self.formula()
            self.expect(")")
            return f
        return self.atom()

    def atom(self) -> Formula:
        t = self.cur
        if self.is_ident("true"):
            self.take()
            return TRUE
        if self.is_ident("false"):
            self.take()
            return FALSE
        if t.kind == "pm":
            self.take()
            if t.value < 2:
                raise FormulaError("P_m requires m >= 2", t.pos)
            self.expect("(")
            arg = self.term()
            self.expect(")")
            return PredPm(t.value, arg)
        if self.is_ident("P"):
            self.take()
            self.expect("(")
            arg = self.term()
            self.expect(")")
            return PredP(arg)
        left = self.term()
        op = self.cur
        if op.kind not in ("=", "<", ">", "<=", ">=", "!="):
            raise FormulaError(f"expected comparison, got {op.text or 'end of input'!r}", op.pos)
        self.take()
        right = self.term()
        if op.kind == "=":
            return Eq(left, right)
        if op.kind == "<":
            return Lt(left, right)
        if op.kind == ">":
            return Lt(right, left)
        if op.kind == "<=":
            return Not(Lt(right, left))
        if op.kind == ">=":
            return Not(Lt(left, right))
        return Not(Eq(left, right))

    def term(self) -> Term:
        left = self.primary()
        while self.cur.kind == "+":
            self.take()
            left = Sum(left, self.primary())
        return left

    def call_arg(self) -> Term:
        self.expect("(")
        arg = self.term()
        self.expect(")")
        return arg

    def primary(self) -> Term:
        t = self.cur
        if t.kind == "spow":
            self.take()
            return Succ(self.call_arg(), t.value)
        if t.kind == "fpow":
            self.take()
            if t.value < 1:
                raise FormulaError("f^s requires s >= 1", t.pos)
            return FApp(t.value, self.call_arg())
        if t.kind == "num":
            self.take()
            return Num(t.value)
        if t.kind == "ident":
            if t.text == "S":
                self.take()
                return Succ(self.call_arg(), 1)
            if t.text == "f":
                self.take()
                return FApp(1, self.call_arg())
            if t.text == "L":
                self.take()
                return LFun(self.call_arg())
            if t.text == "R":
                self.take()
                return RFun(self.call_arg())
            if t.text in ("min", "max"):
                self.take()
                return Const(t.text)
            return Var(self.var_name())
        raise FormulaError(f"expected term, got {t.text or 'end of input'!r}", t.pos)


def parse(text: str, family: str | None = None, free: Iterable[str] | None = None) -> Formula:
    """Parse concrete syntax; validate against ``family`` when given."""
    p = _Parser(text)
    phi = p.formula()
    if p.cur.kind != "eof":
        raise FormulaError(f"unexpected {p.cur.text!r}", p.cur.pos)
    phi = normalize(phi)
    if family is not None:
        validate(phi, family, free)
    return phi


def parse_term(text: str) -> Term:
    p = _Parser(text)
    t = p.term()
    if p.cur.kind != "eof":
        raise FormulaError(f"unexpected {p.cur.text!r}", p.cur.pos)
    return normalize_term(t)


# ----------------------------------------------------------- validation

_ALLOWED_TERMS = {
    "ord": (Var, Const, Succ),
    "ocyc": (Var, Const, Succ, Sum, Num),
    "block": (Var, Const, Succ, LFun, RFun),
    "beatty": (Var, Const, Succ, FApp),
}
_ALLOWED_PREDS = {
    "ord": (),
    "ocyc": (PredPm,),
    "block": (PredP,),
    "beatty": (),
}
_SYMBOL = {Sum: "+", Num: "numeral", LFun: "L", RFun: "R", FApp: "f", PredP: "P", PredPm: "P_m"}


def validate(phi: Formula, family: str, free: Iterable[str] | None = None) -> None:
    """Check the symbols belong to ``family`` and (optionally) that free variables are declared."""
    if family not in FAMILIES:
        raise SignatureError(f"unknown family {family!r}")
    terms_ok = _ALLOWED_TERMS[family]
    preds_ok = _ALLOWED_PREDS[family]
    for f in iter_formulas(phi):
        if isinstance(f, (PredP, PredPm)) and not isinstance(f, preds_ok):
            raise SignatureError(f"symbol {_SYMBOL[type(f)]!r} not in the {family} language")
        for t in atom_terms(f):
            for s in iter_subterms(t):
                if not isinstance(s, terms_ok):
                    raise SignatureError(
                        f"symbol {_SYMBOL.get(type(s), type(s).__name__)!r} not in the {family} language"
                    )
    if free is not None:
        extra = [v for v in free_vars(phi) if v not in set(free)]
        if extra:
            raise FormulaError(f"undeclared free variable(s): {', '.join(extra)}")
