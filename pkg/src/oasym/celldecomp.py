"""C-cell decompositions of M^n for n <= 2, built and checked by enumeration.

For n = 1 the cells are the cut points of a decomposition witness and the
open intervals between them.  For n = 2 (base x, fiber y) every base point
b gets the canonical witness of its fiber phi(M, b; a); the base splits by
the measure tuple chosen, each piece is decomposed once more as a set in M,
and cells are stacked over the resulting base cells: graphs of the cut
functions m_s and bands between consecutive ones.  Bands whose measure is 0
are refined by the graphs of their phi-points (process (a)); base cells of
measure 0 are finite and are split into one column per point (process (b)).
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction
from math import isqrt
from typing import Mapping, Sequence

import numpy as np

from .decomposition import DecompositionWitness, NoWitness, grid_tuples, search_witness
from .evaluate import IndexSet, truth_table
from .formula import Formula, free_vars
from .rational import fmt
from .structures import FiniteStructure

CELL_GRID = (Fraction(0), Fraction(1, 2), Fraction(1))
CELL_K = 5
MAX_SIZE_N2 = 60


class CellError(ValueError):
    pass


class CellGuardError(CellError):
    """A desk-scale guard was exceeded."""


@dataclass(frozen=True)
class Cell:
    signature: tuple[int, ...]
    members: tuple[tuple[int, ...], ...]
    construction: dict = field(default_factory=dict, compare=False)
    # other signatures the same set was recorded under
    descriptions: tuple[tuple[int, ...], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "members", tuple(sorted(set(tuple(m) for m in self.members))))
        if not self.members:
            raise CellError("cells are nonempty")
        sig = self.signature
        if not sig or sig[0] != 1 or any(i not in (0, 1) for i in sig):
            raise CellError(f"bad signature {sig}")
        for d in self.descriptions:
            if len(d) != len(sig) or d[0] != 1:
                raise CellError(f"bad alternative signature {d}")
        if any(len(m) != len(sig) for m in self.members):
            raise CellError("member arity differs from the signature length")

    @property
    def size(self) -> int:
        return len(self.members)

    def to_json(self) -> dict:
        return {
            "signature": list(self.signature),
            "dim": cell_dim(self),
            "construction": self.construction,
            "members": [list(m) for m in self.members],
        }


def cell_dim(Z: Cell) -> int:
    """Least signature sum over the recorded descriptions of Z."""
    return min(sum(s) for s in (Z.signature, *Z.descriptions))


def max_one_cell(Z: Cell) -> int:
    """Size of a largest 1-cell inside Z: a subset projecting bijectively onto
    an interval along one coordinate, i.e. the longest run of consecutive
    values among the projections."""
    best = 0
    for j in range(len(Z.signature)):
        vals = sorted({m[j] for m in Z.members})
        run = 1
        best = max(best, 1)
        for a, b in zip(vals, vals[1:]):
            run = run + 1 if b == a + 1 else 1
            best = max(best, run)
    return best


@dataclass
class CellDecomposition:
    n: int
    universe: int
    cells: list[Cell]
    alpha: tuple[Fraction, ...]
    C: Fraction
    witness: DecompositionWitness | None = None  # n = 1
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.alpha) != len(self.cells):
            raise CellError("one measure per cell")
        self.alpha = tuple(Fraction(a) for a in self.alpha)

    def partition_ok(self) -> bool:
        cover = np.zeros((self.universe,) * self.n, dtype=np.int64)
        for Z in self.cells:
            if len(Z.signature) != self.n:
                return False
            idx = tuple(np.array(Z.members).T)
            np.add.at(cover, idx, 1)
        return bool((cover == 1).all())

    def with_alpha(self, i: int, a: Fraction) -> "CellDecomposition":
        alpha = list(self.alpha)
        alpha[i] = Fraction(a)
        return replace(self, alpha=tuple(alpha))

    def to_json(self) -> dict:
        out = {
            "n": self.n,
            "universe": self.universe,
            "C": fmt(self.C),
            "cells": [dict(Z.to_json(), alpha=fmt(a)) for Z, a in zip(self.cells, self.alpha)],
        }
        if self.witness is not None:
            out["witness"] = self.witness.to_json()
        out.update(self.info)
        return out


# ------------------------------------------------------------ counting check


@dataclass
class CellStatus:
    index: int
    size: int
    count: int
    alpha: Fraction
    dim: int
    one_cell: int
    holds: bool
    needed: Fraction  # least C on the 1/64 grid that this cell needs

    def to_json(self) -> dict:
        return {
            "cell": self.index,
            "size": self.size,
            "count": self.count,
            "alpha": fmt(self.alpha),
            "dim": self.dim,
            "max_one_cell": self.one_cell,
            "holds": self.holds,
            "needed_C": fmt(self.needed),
        }


@dataclass
class CellReport:
    C: Fraction
    partition: bool
    cells: list[CellStatus]

    @property
    def holds(self) -> bool:
        return self.partition and all(c.holds for c in self.cells)

    @property
    def flagged(self) -> list[int]:
        return [c.index for c in self.cells if not c.holds]

    @property
    def fitted_C(self) -> Fraction:
        return max((c.needed for c in self.cells), default=Fraction(0))

    def to_json(self) -> dict:
        return {
            "C": fmt(self.C),
            "partition": self.partition,
            "holds": self.holds,
            "fitted_C": fmt(self.fitted_C),
            "flagged": self.flagged,
            "cells": [c.to_json() for c in self.cells],
        }


def _cell_passes(count: int, size: int, alpha: Fraction, L: int, dim: int, C: Fraction) -> bool:
    if alpha == 0:
        return count <= C
    dev = count - alpha * size
    # |dev| <= C L^(dim - 1/2)  <=>  dev^2 <= C^2 L^(2 dim - 1)
    return dev * dev <= C * C * L ** (2 * dim - 1)


def _least_C(count: int, size: int, alpha: Fraction, L: int, dim: int, res: int = 64) -> Fraction:
    if alpha == 0:
        return Fraction(count)
    dev = count - alpha * size
    r = dev * dev * res * res / L ** (2 * dim - 1)  # need j^2 >= r
    j = isqrt(r.numerator // r.denominator)
    while j * j * r.denominator < r.numerator:
        j += 1
    return Fraction(j, res)


def _phi_table(M: FiniteStructure, phi: Formula, variables: Sequence[str], params) -> np.ndarray:
    params = dict(params or {})
    extra = [v for v in free_vars(phi) if v not in variables and v not in params]
    if extra:
        raise CellError(f"unbound free variable(s): {', '.join(extra)}")
    names = list(variables) + list(params)
    tab = truth_table(M, phi, names)
    return np.asarray(tab[(slice(None),) * len(variables) + tuple(params[v] for v in params)])


def check_cell_counting(
    M: FiniteStructure,
    phi: Formula,
    D: CellDecomposition,
    variables: Sequence[str],
    params: Mapping[str, int] | None = None,
) -> CellReport:
    """Condition (*) for every cell, compared exactly."""
    if len(variables) != D.n or D.universe != M.size:
        raise CellError("decomposition does not match the structure or variables")
    tab = _phi_table(M, phi, variables, params)
    rows = []
    for i, (Z, a) in enumerate(zip(D.cells, D.alpha)):
        count = int(tab[tuple(np.array(Z.members).T)].sum())
        d, L = cell_dim(Z), max_one_cell(Z)
        rows.append(
            CellStatus(i, Z.size, count, a, d, L, _cell_passes(count, Z.size, a, L, d, D.C), _least_C(count, Z.size, a, L, d))
        )
    return CellReport(D.C, D.partition_ok(), rows)


# -------------------------------------------------------------- construction


def _witness(M: FiniteStructure, mask: np.ndarray, k: int, E, C: Fraction, mode: str) -> DecompositionWitness:
    w = search_witness(M, IndexSet.from_mask(mask), k, E, C, mode)
    if isinstance(w, NoWitness):
        raise CellError(f"no decomposition witness with k <= {k} and C = {fmt(C)}")
    return w


def _line_cells(w: DecompositionWitness, size: int) -> list[tuple[tuple[int, ...], Fraction, str]]:
    """Points c_i (measure 0) and nonempty open intervals (c_{i-1}, c_i) (measure mu_i), in order."""
    out = []
    cuts = sorted(set(w.cuts))
    out.append(((cuts[0],), Fraction(0), "point"))
    for lo, hi, mu in zip(w.cuts, w.cuts[1:], w.mu):
        if hi - lo > 1:
            out.append((tuple(range(lo + 1, hi)), mu, "interval"))
        if hi != lo:
            out.append(((hi,), Fraction(0), "point"))
    return out


def _nearest(grid: Sequence[Fraction], x: Fraction) -> Fraction:
    return min(grid, key=lambda g: (abs(g - x), g))


def decompose_cells(
    M: FiniteStructure,
    phi: Formula,
    variables: Sequence[str],
    params: Mapping[str, int] | None = None,
    k: int = CELL_K,
    grid: Sequence[Fraction] = CELL_GRID,
    C: Fraction | int = 1,
    mode: str = "strong",
    witness: DecompositionWitness | None = None,
) -> CellDecomposition:
    """Cell decomposition of M^n (n = len(variables) <= 2) adapted to phi.

    ``k``, ``grid`` and ``C`` govern the witness search; the returned
    constant is the least C (on a 1/64 grid) for which condition (*) holds.
    ``witness`` fixes the cuts for n = 1 instead of searching.
    """
    n = len(variables)
    if n not in (1, 2):
        raise CellGuardError(f"n = {n} is out of range; only n <= 2 is supported")
    if n == 2 and M.size > MAX_SIZE_N2:
        raise CellGuardError(f"|M| = {M.size} exceeds the n = 2 guard of {MAX_SIZE_N2}")
    grid = tuple(sorted(set(Fraction(g) for g in grid)))
    E = grid_tuples(k, grid)
    C = Fraction(C)
    tab = _phi_table(M, phi, variables, params)
    if n == 1:
        if witness is None:
            witness = _witness(M, tab, k, E, C, mode)
        else:
            witness.validate_for(M)
        cells, alpha = [], []
        for members, mu, kind in _line_cells(witness, M.size):
            cells.append(Cell((1,), [(m,) for m in members], {"kind": kind, "range": [members[0], members[-1]]}))
            alpha.append(mu)
        D = CellDecomposition(1, M.size, cells, tuple(alpha), C, witness)
    else:
        D = _stack(M, tab, k, E, grid, C, mode)
    D.C = check_cell_counting(M, phi, D, variables, params).fitted_C
    if n == 2:
        # reported, not asserted: the fitted constant may exceed it
        D.info["within_compositional_bound"] = D.C <= Fraction(D.info["compositional_bound"])
    if not D.partition_ok():  # construction bug, never expected
        raise CellError("cells do not partition M^n")
    return D


def _stack(M, tab, k, E, grid, C, mode) -> CellDecomposition:
    size = M.size
    fibers: dict[bytes, DecompositionWitness] = {}
    wit = []
    for b in range(size):
        key = tab[b].tobytes()
        if key not in fibers:
            fibers[key] = _witness(M, tab[b], k, E, C, mode)
        wit.append(fibers[key])
    # the base splits by the chosen measure tuple (the sets phi_i)
    groups: dict[tuple[Fraction, ...], list[int]] = {}
    for b, w in enumerate(wit):
        groups.setdefault(w.mu, []).append(b)
    order = sorted(groups, key=lambda mu: (len(mu), mu))

    cells: list[Cell] = []
    alpha: list[Fraction] = []
    base_fit = Fraction(0)  # fitted constant of the base decompositions

    def add(members, sig, a, construction, descriptions=()):
        if members:
            cells.append(Cell(sig, members, construction, descriptions))
            alpha.append(a)

    for gi, mu in enumerate(order):
        phi_i = np.zeros(size, dtype=bool)
        phi_i[groups[mu]] = True
        wb = _witness(M, phi_i, k, E, C, mode)
        for members, nu, kind in _line_cells(wb, size):
            B = [b for b in members if phi_i[b]]
            base_fit = max(base_fit, _least_C(len(B), len(members), nu, len(members), 1))
            if not B:
                continue
            base = {"kind": kind, "range": [members[0], members[-1]], "measure_tuple": gi, "nu": fmt(nu)}
            # finite bases (measure 0) get one column per point
            bases = [[p] for p in B] if nu == 0 else [B]
            for Bs in bases:
                node = base if len(Bs) > 1 else dict(base, point=Bs[0])
                _over_base(M, tab, Bs, wit, mu, grid, node, add)
    info = {
        "measure_tuples": [[fmt(m) for m in mu] for mu in order],
        "fiber_C": fmt(C),
        "base_C": fmt(base_fit),
        "compositional_bound": fmt(compositional_bound(C, base_fit)),
    }
    return CellDecomposition(2, size, cells, tuple(alpha), C, info=info)


def _over_base(M, tab, B, wit, mu, grid, base, add):
    k = len(mu)
    cuts = {b: wit[b].cuts for b in B}
    for s in range(k + 1):
        pts = [(b, cuts[b][s]) for b in B if s == 0 or cuts[b][s] != cuts[b][s - 1]]
        if pts:
            dens = Fraction(int(sum(tab[p] for p in pts)), len(pts))
            add(pts, (1, 0), _nearest(grid, dens), {"kind": "graph", "function": f"m_{s}", "base": base}, ((1, 1),))
    for s in range(k):
        if mu[s] > 0:
            band = [(b, z) for b in B for z in range(cuts[b][s] + 1, cuts[b][s + 1])]
            add(band, (1, 1), mu[s], {"kind": "band", "between": [f"m_{s}", f"m_{s + 1}"], "base": base})
            continue
        # measure 0: the phi-points f_1 < f_2 < ... of each fiber interval, split by how many there are
        by_count: dict[int, list[tuple[int, list[int]]]] = {}
        for b in B:
            lo, hi = cuts[b][s], cuts[b][s + 1]
            zs = [z for z in range(lo + 1, hi) if tab[b, z]]
            by_count.setdefault(len(zs), []).append((b, [lo, *zs, hi]))
        for c, rows in sorted(by_count.items()):
            sub = dict(base, fiber_count=c) if len(by_count) > 1 else base
            for r in range(1, c + 1):
                add([(b, f[r]) for b, f in rows], (1, 0), Fraction(1),
                    {"kind": "graph", "function": f"f_{r},{s}", "base": sub}, ((1, 1),))
            for r in range(c + 1):
                band = [(b, z) for b, f in rows for z in range(f[r] + 1, f[r + 1])]
                add(band, (1, 1), Fraction(0),
                    {"kind": "band", "between": [f"f_{r},{s}", f"f_{r + 1},{s}"], "base": sub})


def compositional_bound(C1: Fraction, Cn: Fraction) -> Fraction:
    """The compositional constant 2 C_1 C_n for the step n -> n+1."""
    return 2 * Fraction(C1) * Fraction(Cn)


__all__ = [
    "CELL_GRID",
    "CELL_K",
    "Cell",
    "CellDecomposition",
    "CellError",
    "CellGuardError",
    "CellReport",
    "CellStatus",
    "MAX_SIZE_N2",
    "cell_dim",
    "check_cell_counting",
    "decompose_cells",
    "max_one_cell",
    "compositional_bound",
]
