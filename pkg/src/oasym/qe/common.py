"""Shared pieces of the quantifier-elimination engines: results, NNF/DNF, certification."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from ..evaluate import truth_table
from ..formula import (
    Const,
    And,
    Bottom,
    Eq,
    Exists,
    Forall,
    Formula,
    Iff,
    Implies,
    Lt,
    Not,
    Or,
    PredP,
    PredPm,
    Top,
    conj,
    disj,
    free_vars,
    iter_formulas,
    neg,
    render,
)
from ..structures import AlphaSpec, FiniteStructure, make

# total truth-table cells a certification run may touch
WORK_LIMIT = 2_000_000_000


class QEError(ValueError):
    pass


class QEUnsupported(QEError):
    """The formula is outside the fragment this engine eliminates."""


@dataclass
class VerifiedUpTo:
    bound: int
    structures: int = 0

    def to_json(self) -> dict:
        return {"status": "verified", "bound": self.bound, "structures": self.structures}


@dataclass
class Counterexample:
    structure: dict
    assignment: dict[str, int]
    lhs: bool
    rhs: bool

    def to_json(self) -> dict:
        return {
            "status": "counterexample",
            "structure": self.structure,
            "assignment": self.assignment,
            "lhs": self.lhs,
            "rhs": self.rhs,
        }


@dataclass
class Unchecked:
    def to_json(self) -> dict:
        return {"status": "unchecked"}


Certification = VerifiedUpTo | Counterexample | Unchecked


@dataclass
class QEResult:
    family: str
    input: Formula
    output: Formula | None
    status: Certification = field(default_factory=Unchecked)
    notes: list[str] = field(default_factory=list)
    uniform: str | None = None

    def to_json(self) -> dict:
        out = {
            "family": self.family,
            "input": render(self.input),
            "output": None if self.output is None else render(self.output),
            "certification": self.status.to_json(),
        }
        if self.uniform is not None:
            out["uniform"] = self.uniform
        if self.notes:
            out["notes"] = list(self.notes)
        return out


# ----------------------------------------------------------- NNF / DNF

Literal = Formula  # atom or Not(atom)


def is_atom(f: Formula) -> bool:
    return isinstance(f, (Eq, Lt, PredP, PredPm, Top, Bottom))


def nnf(phi: Formula, negate: bool = False) -> Formula:
    """Negation normal form of a quantifier-free formula."""
    if is_atom(phi):
        return neg(phi) if negate else phi
    if isinstance(phi, Not):
        return nnf(phi.body, not negate)
    if isinstance(phi, And):
        parts = [nnf(a, negate) for a in phi.args]
        return disj(*parts) if negate else conj(*parts)
    if isinstance(phi, Or):
        parts = [nnf(a, negate) for a in phi.args]
        return conj(*parts) if negate else disj(*parts)
    if isinstance(phi, Implies):
        return nnf(Or((Not(phi.left), phi.right)), negate)
    if isinstance(phi, Iff):
        both = And((phi.left, phi.right))
        neither = And((Not(phi.left), Not(phi.right)))
        return nnf(Or((both, neither)), negate)
    raise QEError(f"nnf expects a quantifier-free formula, got {type(phi).__name__}")


def dnf(phi: Formula) -> list[list[Literal]]:
    """Disjunctive normal form of an NNF formula, contradictory conjuncts dropped."""
    if isinstance(phi, Top):
        return [[]]
    if isinstance(phi, Bottom):
        return []
    if isinstance(phi, Or):
        out: list[list[Literal]] = []
        for a in phi.args:
            out.extend(dnf(a))
        return out
    if isinstance(phi, And):
        acc: list[list[Literal]] = [[]]
        for a in phi.args:
            part = dnf(a)
            acc = [x + y for x in acc for y in part if _consistent(x + y)]
            if not acc:
                return []
        return [list(dict.fromkeys(c)) for c in acc]
    return [[phi]]


def _consistent(lits: Sequence[Literal]) -> bool:
    s = set(lits)
    return not any(isinstance(l, Not) and l.body in s for l in lits)


def simplify_atom(f: Formula) -> Formula:
    if isinstance(f, Lt) and (f.left == f.right or f.right == Const("min") or f.left == Const("max")):
        return Bottom()
    if isinstance(f, Eq) and f.left == f.right:
        return Top()
    return f


def simplify(phi: Formula) -> Formula:
    """Fold constant atoms and connectives bottom-up (quantifier-free input)."""
    if is_atom(phi):
        return simplify_atom(phi)
    if isinstance(phi, Not):
        return neg(simplify(phi.body))
    if isinstance(phi, And):
        return conj(*(simplify(a) for a in phi.args))
    if isinstance(phi, Or):
        return disj(*(simplify(a) for a in phi.args))
    if isinstance(phi, Implies):
        return disj(neg(simplify(phi.left)), simplify(phi.right))
    if isinstance(phi, Iff):
        a, b = simplify(phi.left), simplify(phi.right)
        return disj(conj(a, b), conj(neg(a), neg(b)))
    return phi


def eliminate_all(phi: Formula, exists_qf: Callable[[str, Formula], Formula]) -> Formula:
    """Innermost-first elimination driver; ``exists_qf`` removes one ∃ over a QF body."""
    if isinstance(phi, Exists):
        return exists_qf(phi.var, eliminate_all(phi.body, exists_qf))
    if isinstance(phi, Forall):
        body = eliminate_all(phi.body, exists_qf)
        return simplify(neg(exists_qf(phi.var, nnf(body, negate=True))))
    if is_atom(phi):
        return simplify_atom(phi)
    if isinstance(phi, Not):
        return neg(eliminate_all(phi.body, exists_qf))
    if isinstance(phi, And):
        return conj(*(eliminate_all(a, exists_qf) for a in phi.args))
    if isinstance(phi, Or):
        return disj(*(eliminate_all(a, exists_qf) for a in phi.args))
    if isinstance(phi, Implies):
        return disj(neg(eliminate_all(phi.left, exists_qf)), eliminate_all(phi.right, exists_qf))
    if isinstance(phi, Iff):
        a = eliminate_all(phi.left, exists_qf)
        b = eliminate_all(phi.right, exists_qf)
        return disj(conj(a, b), conj(neg(a), neg(b)))
    raise TypeError(phi)


# -------------------------------------------------------- certification


def family_structures(family: str, bound: int, alpha: AlphaSpec | None = None, start: int | None = None):
    """Structures of a family with size parameter from ``start`` up to ``bound``."""
    if start is None:
        start = {"ord": 1, "ocyc": 2, "block": 1, "beatty": 1}[family]
    for param in range(start, bound + 1):
        yield make(family, param, alpha)


def quantifier_depth(phi: Formula) -> int:
    def depth(f: Formula) -> int:
        inner = max((depth(c) for c in _kids(f)), default=0)
        return inner + isinstance(f, (Exists, Forall))

    return depth(phi)


def _kids(f: Formula):
    from ..formula import children

    return children(f)


def verify_equivalence(
    family: str,
    phi: Formula,
    psi: Formula,
    bound: int,
    alpha: AlphaSpec | None = None,
    structures: Iterable[FiniteStructure] | None = None,
    variables: Sequence[str] | None = None,
) -> VerifiedUpTo | Counterexample:
    """Exhaustively compare ``phi`` and ``psi`` on every structure up to ``bound``
    and every assignment of their free variables."""
    if variables is None:
        variables = list(dict.fromkeys(free_vars(phi) + free_vars(psi)))
    variables = list(variables)
    structs = list(structures) if structures is not None else list(family_structures(family, bound, alpha))
    depth = max(quantifier_depth(phi), quantifier_depth(psi))
    work = sum(M.size ** (len(variables) + depth) for M in structs)
    if work > WORK_LIMIT:
        raise QEError(f"certification would touch ~{work:.3g} cells; lower the bound")
    for M in structs:
        a = truth_table(M, phi, variables)
        b = truth_table(M, psi, variables)
        diff = a != b
        if diff.any():
            idx = tuple(int(i) for i in np.argwhere(diff)[0])
            assignment = {v: M.value(p) for v, p in zip(variables, idx)}
            return Counterexample(M.descriptor(), assignment, bool(a[idx]), bool(b[idx]))
    return VerifiedUpTo(bound, len(structs))


def lift(pairs: Iterable[tuple[Formula, ...]]):
    return itertools.product(*pairs)
