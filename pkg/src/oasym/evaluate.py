"""Satisfaction, definable sets and counting on finite structures.

:func:`satisfies` is the reference semantics: plain Tarskian recursion with
memoization and P_m evaluated by its defining chain.  :func:`truth_table`
is the vectorized path used by the sweeps; the test-suite checks the two
against each other.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .formula import (
    And,
    Bottom,
    Const,
    Eq,
    Exists,
    FApp,
    Forall,
    Formula,
    FormulaError,
    Iff,
    Implies,
    LFun,
    Lt,
    Not,
    Num,
    Or,
    PredP,
    PredPm,
    RFun,
    Succ,
    Sum,
    Term,
    Top,
    Var,
    free_vars,
    validate,
)
from .structures import FiniteStructure

MAX_TUPLE_ARITY = 3


class EvalError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class IndexSet:
    """A subset of the universe: sorted positions plus prefix counts.

    ``prefix[j]`` is the number of members strictly below position ``j``.
    """

    universe: int
    mask: np.ndarray
    prefix: np.ndarray

    @classmethod
    def from_mask(cls, mask) -> "IndexSet":
        mask = np.asarray(mask, dtype=bool)
        prefix = np.zeros(mask.size + 1, dtype=np.int64)
        np.cumsum(mask, out=prefix[1:])
        return cls(mask.size, mask, prefix)

    @classmethod
    def from_positions(cls, positions, universe: int) -> "IndexSet":
        mask = np.zeros(universe, dtype=bool)
        pos = np.asarray(list(positions), dtype=np.int64)
        if pos.size and (pos.min() < 0 or pos.max() >= universe):
            raise EvalError("position outside the universe")
        mask[pos] = True
        return cls.from_mask(mask)

    @property
    def positions(self) -> np.ndarray:
        return np.flatnonzero(self.mask)

    def __len__(self) -> int:
        return int(self.prefix[-1])

    def __contains__(self, pos: int) -> bool:
        return bool(self.mask[pos])

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, IndexSet)
            and self.universe == other.universe
            and bool(np.array_equal(self.mask, other.mask))
        )

    def complement(self) -> "IndexSet":
        return IndexSet.from_mask(~self.mask)

    def __and__(self, other: "IndexSet") -> "IndexSet":
        return IndexSet.from_mask(self.mask & other.mask)

    def __or__(self, other: "IndexSet") -> "IndexSet":
        return IndexSet.from_mask(self.mask | other.mask)

    def tolist(self) -> list[int]:
        return self.positions.tolist()


def count_interval(X: IndexSet, u: int, v: int) -> int:
    """|X ∩ (u, v)| for the open interval, in O(1)."""
    if u > v:
        raise EvalError(f"empty interval bounds u={u} > v={v}")
    if v <= u + 1:
        return 0
    return int(X.prefix[v] - X.prefix[u + 1])


def alternation_number(X: IndexSet, M: FiniteStructure | None = None) -> int:
    """Number of consecutive position pairs where membership flips."""
    if M is not None and M.size != X.universe:
        raise EvalError("set and structure have different universes")
    m = X.mask
    return int(np.count_nonzero(m[1:] != m[:-1]))


# ------------------------------------------------------- scalar semantics


def eval_term(M: FiniteStructure, t: Term, env: Mapping[str, int]) -> int:
    if isinstance(t, Var):
        try:
            return env[t.name]
        except KeyError:
            raise EvalError(f"unbound variable {t.name!r}") from None
    if isinstance(t, Const):
        return 0 if t.which == "min" else M.size - 1
    if isinstance(t, Num):
        return M.label_position(t.value)
    if isinstance(t, Succ):
        return M.succ(eval_term(M, t.base, env), t.k)
    if isinstance(t, Sum):
        return M.add(eval_term(M, t.left, env), eval_term(M, t.right, env))
    if isinstance(t, FApp):
        return M.f(eval_term(M, t.arg, env), t.s)
    if isinstance(t, LFun):
        return int(M.l_table[eval_term(M, t.arg, env)])
    if isinstance(t, RFun):
        return int(M.r_table[eval_term(M, t.arg, env)])
    raise TypeError(t)


def pm_chain(M: FiniteStructure, m: int, y: int) -> bool:
    """P_m(y) := exists t (0<t<2t<...<mt=y  or  0>t>2t>...>mt=y), by direct search."""
    zero = M.label_position(0)
    for t in M.positions():
        multiples = [t]
        for _ in range(m - 1):
            multiples.append(M.add(multiples[-1], t))
        if multiples[-1] != y:
            continue
        chain = [zero] + multiples
        if all(a < b for a, b in zip(chain, chain[1:])):
            return True
        if all(a > b for a, b in zip(chain, chain[1:])):
            return True
    return False


class _Evaluator:
    def __init__(self, M: FiniteStructure):
        self.M = M
        self.memo: dict = {}
        self.fv: dict[int, tuple[str, ...]] = {}
        self.pm_memo: dict[tuple[int, int], bool] = {}

    def free(self, phi: Formula) -> tuple[str, ...]:
        key = id(phi)
        out = self.fv.get(key)
        if out is None:
            out = tuple(free_vars(phi))
            self.fv[key] = out
        return out

    def sat(self, phi: Formula, env: dict[str, int]) -> bool:
        M = self.M
        if isinstance(phi, Top):
            return True
        if isinstance(phi, Bottom):
            return False
        if isinstance(phi, Eq):
            return eval_term(M, phi.left, env) == eval_term(M, phi.right, env)
        if isinstance(phi, Lt):
            return eval_term(M, phi.left, env) < eval_term(M, phi.right, env)
        if isinstance(phi, PredP):
            return bool(M.p_table[eval_term(M, phi.arg, env)])
        if isinstance(phi, PredPm):
            y = eval_term(M, phi.arg, env)
            key = (phi.m, y)
            if key not in self.pm_memo:
                self.pm_memo[key] = pm_chain(M, phi.m, y)
            return self.pm_memo[key]
        if isinstance(phi, Not):
            return not self.sat(phi.body, env)
        if isinstance(phi, And):
            return all(self.sat(a, env) for a in phi.args)
        if isinstance(phi, Or):
            return any(self.sat(a, env) for a in phi.args)
        if isinstance(phi, Implies):
            return (not self.sat(phi.left, env)) or self.sat(phi.right, env)
        if isinstance(phi, Iff):
            return self.sat(phi.left, env) == self.sat(phi.right, env)
        if isinstance(phi, (Exists, Forall)):
            key = (id(phi), tuple(env.get(v) for v in self.free(phi)))
            hit = self.memo.get(key)
            if hit is not None:
                return hit
            want = isinstance(phi, Exists)
            inner = dict(env)
            result = not want
            for b in M.positions():
                inner[phi.var] = b
                if self.sat(phi.body, inner) == want:
                    result = want
                    break
            self.memo[key] = result
            return result
        raise TypeError(phi)


def satisfies(M: FiniteStructure, phi: Formula, assignment: Mapping[str, int] | None = None) -> bool:
    """Truth of ``phi`` in ``M`` under ``assignment`` (variable -> position)."""
    assignment = dict(assignment or {})
    validate(phi, M.family)
    missing = [v for v in free_vars(phi) if v not in assignment]
    if missing:
        raise EvalError(f"unbound free variable(s): {', '.join(missing)}")
    for v, p in assignment.items():
        if not 0 <= p < M.size:
            raise EvalError(f"position {p} for {v!r} outside the universe")
    return _Evaluator(M).sat(phi, assignment)


# --------------------------------------------------- vectorized semantics


class _Tables:
    def __init__(self, M: FiniteStructure, axes: dict[str, int]):
        self.M = M
        self.axes = axes

    def term(self, t: Term, depth: int) -> np.ndarray:
        M = self.M
        if isinstance(t, Var):
            if t.name not in self.axes:
                raise EvalError(f"unbound variable {t.name!r}")
            shape = [1] * depth
            shape[self.axes[t.name]] = M.size
            return np.arange(M.size, dtype=np.int64).reshape(shape)
        if isinstance(t, Const):
            v = 0 if t.which == "min" else M.size - 1
            return np.full([1] * depth, v, dtype=np.int64)
        if isinstance(t, Num):
            return np.full([1] * depth, M.label_position(t.value), dtype=np.int64)
        if isinstance(t, Succ):
            return np.clip(self.term(t.base, depth) + t.k, 0, M.size - 1)
        if isinstance(t, Sum):
            a = self.term(t.left, depth)
            b = self.term(t.right, depth)
            return (a + b - M.param) % M.size
        if isinstance(t, FApp):
            a = self.term(t.arg, depth)
            tab = M.f_table
            for _ in range(t.s):
                a = tab[a]
            return a
        if isinstance(t, LFun):
            return M.l_table[self.term(t.arg, depth)]
        if isinstance(t, RFun):
            return M.r_table[self.term(t.arg, depth)]
        raise TypeError(t)

    def formula(self, phi: Formula, depth: int) -> np.ndarray:
        if isinstance(phi, Top):
            return np.ones([1] * depth, dtype=bool)
        if isinstance(phi, Bottom):
            return np.zeros([1] * depth, dtype=bool)
        if isinstance(phi, Eq):
            return self.term(phi.left, depth) == self.term(phi.right, depth)
        if isinstance(phi, Lt):
            return self.term(phi.left, depth) < self.term(phi.right, depth)
        if isinstance(phi, PredP):
            return self.M.p_table[self.term(phi.arg, depth)]
        if isinstance(phi, PredPm):
            return self.M.pm_table(phi.m)[self.term(phi.arg, depth)]
        if isinstance(phi, Not):
            return ~self.formula(phi.body, depth)
        if isinstance(phi, And):
            out = self.formula(phi.args[0], depth)
            for a in phi.args[1:]:
                out = out & self.formula(a, depth)
            return out
        if isinstance(phi, Or):
            out = self.formula(phi.args[0], depth)
            for a in phi.args[1:]:
                out = out | self.formula(a, depth)
            return out
        if isinstance(phi, Implies):
            return ~self.formula(phi.left, depth) | self.formula(phi.right, depth)
        if isinstance(phi, Iff):
            return self.formula(phi.left, depth) == self.formula(phi.right, depth)
        if isinstance(phi, (Exists, Forall)):
            saved = self.axes.get(phi.var)
            self.axes[phi.var] = depth
            body = self.formula(phi.body, depth + 1)
            if saved is None:
                del self.axes[phi.var]
            else:
                self.axes[phi.var] = saved
            if isinstance(phi, Exists):
                return body.any(axis=depth)
            return body.all(axis=depth)
        raise TypeError(phi)


def truth_table(M: FiniteStructure, phi: Formula, variables: Sequence[str]) -> np.ndarray:
    """Boolean array of shape ``(|M|,) * len(variables)``; axis i ranges over ``variables[i]``."""
    variables = list(variables)
    missing = [v for v in free_vars(phi) if v not in variables]
    if missing:
        raise EvalError(f"unbound free variable(s): {', '.join(missing)}")
    ev = _Tables(M, {v: i for i, v in enumerate(variables)})
    out = ev.formula(phi, len(variables))
    return np.broadcast_to(out, (M.size,) * len(variables))


def term_table(M: FiniteStructure, t: Term, x: str = "x") -> np.ndarray:
    """Position of ``t`` for every position of ``x`` (t may not use other variables)."""
    ev = _Tables(M, {x: 0})
    return np.broadcast_to(ev.term(t, 1), (M.size,)).astype(np.int64)


def definable_set(
    M: FiniteStructure, phi: Formula, x: str, params: Mapping[str, int] | None = None
) -> IndexSet:
    """The positions b with M ⊨ phi(b; params)."""
    params = dict(params or {})
    extra = [v for v in free_vars(phi) if v != x and v not in params]
    if extra:
        raise EvalError(f"unbound free variable(s): {', '.join(extra)}")
    validate(phi, M.family)
    names = [x] + list(params)
    tab = truth_table(M, phi, names)
    index = (slice(None),) + tuple(params[v] for v in names[1:])
    return IndexSet.from_mask(np.array(tab[index]))


def definable_set_scalar(
    M: FiniteStructure, phi: Formula, x: str, params: Mapping[str, int] | None = None
) -> IndexSet:
    """Same as :func:`definable_set` through the reference evaluator."""
    params = dict(params or {})
    ev = _Evaluator(M)
    validate(phi, M.family)
    members = []
    for b in M.positions():
        env = dict(params)
        env[x] = b
        if ev.sat(phi, env):
            members.append(b)
    return IndexSet.from_positions(members, M.size)


def count_tuples(
    M: FiniteStructure,
    phi: Formula,
    variables: Sequence[str],
    params: Mapping[str, int] | None = None,
) -> int:
    """Number of tuples over ``variables`` satisfying ``phi`` with ``params`` fixed."""
    variables = list(variables)
    if not variables:
        raise EvalError("count_tuples needs at least one variable")
    if len(variables) > MAX_TUPLE_ARITY:
        raise EvalError(f"arity {len(variables)} exceeds the guard of {MAX_TUPLE_ARITY}")
    params = dict(params or {})
    validate(phi, M.family)
    names = variables + list(params)
    tab = truth_table(M, phi, names)
    index = (slice(None),) * len(variables) + tuple(params[v] for v in params)
    return int(np.count_nonzero(tab[index]))


def count_tuples_scalar(
    M: FiniteStructure,
    phi: Formula,
    variables: Sequence[str],
    params: Mapping[str, int] | None = None,
) -> int:
    """Nested enumeration through the reference evaluator (short-circuit per tuple)."""
    variables = list(variables)
    if not variables or len(variables) > MAX_TUPLE_ARITY:
        raise EvalError("count_tuples_scalar needs 1..3 variables")
    ev = _Evaluator(M)
    env = dict(params or {})
    total = 0

    def rec(i: int) -> None:
        nonlocal total
        if i == len(variables):
            total += ev.sat(phi, env)
            return
        for b in M.positions():
            env[variables[i]] = b
            rec(i + 1)

    rec(0)
    return total


def parse_assignment(M: FiniteStructure, items: Mapping[str, int], by_value: bool = True) -> dict[str, int]:
    """Translate ``var -> value`` (element values) into positions."""
    if not by_value:
        return dict(items)
    try:
        return {k: M.position_of(v) for k, v in items.items()}
    except ValueError as exc:
        raise EvalError(str(exc)) from None


__all__ = [
    "IndexSet",
    "EvalError",
    "FormulaError",
    "alternation_number",
    "count_interval",
    "count_tuples",
    "count_tuples_scalar",
    "definable_set",
    "definable_set_scalar",
    "eval_term",
    "pm_chain",
    "satisfies",
    "term_table",
    "truth_table",
]
