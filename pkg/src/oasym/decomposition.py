"""Decomposition witnesses: cuts, measures and the error constant.

A witness for a set X in a structure M is a cut tuple
``min = c_0 < c_1 < ... < c_k = max`` with one measure per open interval
``(c_{i-1}, c_i)``.  An interval with measure 0 may hold at most C points of
X.  An interval with measure mu > 0 must satisfy

    | |X ∩ (u, v)| - mu * |(u, v)| |  <=  C * |(u, v)|^(1/2)

for the interval itself (weak mode) or for every open subinterval (strong
mode).  Everything is compared in integers: with mu = p/q and C = a/b the
test is ``b^2 (q*cnt - p*l)^2 <= a^2 q^2 l``.

Strong mode has a useful monotonicity: once a window inside (c, d) violates
the bound, every larger interval containing it does too, so for each left
cut a the good right cuts form a range ``(a, F(a)]``.  The search and the
canonical cuts run a dynamic program over these ranges.
"""
from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from fractions import Fraction
from math import isqrt
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .evaluate import IndexSet, count_interval, definable_set
from .formula import Formula, free_vars
from .rational import fmt
from .structures import FiniteStructure

EXHAUSTIVE_SEARCH_LIMIT = 200
EXHAUSTIVE_SCAN_LIMIT = 5000
DEFAULT_GRID = tuple(Fraction(i, 8) for i in range(9))
FIT_RESOLUTION = Fraction(1, 64)
FIT_MAX = Fraction(16)


class WitnessError(ValueError):
    pass


@dataclass(frozen=True)
class DecompositionWitness:
    cuts: tuple[int, ...]
    mu: tuple[Fraction, ...]
    C: Fraction
    mode: str = "strong"

    def __post_init__(self):
        object.__setattr__(self, "cuts", tuple(int(c) for c in self.cuts))
        object.__setattr__(self, "mu", tuple(Fraction(m) for m in self.mu))
        object.__setattr__(self, "C", Fraction(self.C))
        if self.mode not in ("weak", "strong"):
            raise WitnessError(f"mode must be weak or strong, not {self.mode!r}")
        if len(self.cuts) < 2 or len(self.mu) != len(self.cuts) - 1:
            raise WitnessError("need k+1 cuts and k measures")
        if any(not 0 <= m <= 1 for m in self.mu):
            raise WitnessError("measures must lie in [0, 1]")
        if self.C < 0:
            raise WitnessError("C must be nonnegative")
        if self.cuts != (0, 0) and any(b <= a for a, b in zip(self.cuts, self.cuts[1:])):
            raise WitnessError("cuts must be strictly increasing")

    @property
    def k(self) -> int:
        return len(self.mu)

    def validate_for(self, M: FiniteStructure) -> None:
        if self.cuts[0] != 0 or self.cuts[-1] != M.size - 1:
            raise WitnessError("cuts must start at min and end at max")
        if self.cuts == (0, 0) and M.size != 1:
            raise WitnessError("the degenerate cut tuple (min, min) needs a one-point universe")

    def to_json(self) -> dict:
        return {"cuts": list(self.cuts), "mu": [fmt(m) for m in self.mu], "C": fmt(self.C), "mode": self.mode}


@dataclass(frozen=True)
class NoWitness:
    exhaustive: bool
    searched: int = 0

    def to_json(self) -> dict:
        return {"witness": None, "exhaustive": self.exhaustive, "searched_tuples": self.searched}


@dataclass
class IntervalStatus:
    index: int
    lo: int
    hi: int
    mu: Fraction
    count: int
    length: int
    holds: bool
    exhaustive: bool = True
    # worst window (u, v) found, its count, length and |count - mu*length|
    worst: tuple[int, int, int, int] | None = None
    deviation: Fraction = Fraction(0)

    def to_json(self) -> dict:
        out = {
            "interval": [self.lo, self.hi],
            "mu": fmt(self.mu),
            "count": self.count,
            "length": self.length,
            "holds": self.holds,
        }
        if self.mu > 0:
            out["deviation"] = fmt(self.deviation)
            out["exhaustive"] = self.exhaustive
            if self.worst is not None:
                out["worst_window"] = list(self.worst)
        return out


@dataclass
class WitnessReport:
    witness: DecompositionWitness
    intervals: list[IntervalStatus]

    @property
    def holds(self) -> bool:
        return all(s.holds for s in self.intervals)

    @property
    def violations(self) -> list[IntervalStatus]:
        return [s for s in self.intervals if not s.holds]

    @property
    def exhaustive(self) -> bool:
        return all(s.exhaustive for s in self.intervals)

    def to_json(self) -> dict:
        out = self.witness.to_json()
        out["holds"] = self.holds
        out["violations"] = [s.to_json() for s in self.violations]
        out["intervals"] = [s.to_json() for s in self.intervals]
        return out


# ------------------------------------------------------------------ scans


def _threshold(mu: Fraction, C: Fraction, length: int) -> int:
    """Largest t with b^2 t^2 <= a^2 q^2 l, i.e. the allowed |q*cnt - p*l|."""
    a, b, q = C.numerator, C.denominator, mu.denominator
    return isqrt(a * a * q * q * length // (b * b))


def _lengths(L: int, limit: int) -> tuple[list[int], bool]:
    if L <= limit:
        return list(range(1, L + 1)), True
    out, l = [], 1
    while l <= L:
        out.append(l)
        l *= 2
    if out[-1] != L:
        out.append(L)
    return out, False


def scan_interval(
    pre: np.ndarray,
    lo: int,
    hi: int,
    mu: Fraction,
    C: Fraction,
    strong: bool = True,
    limit: int = EXHAUSTIVE_SCAN_LIMIT,
    early_exit: bool = False,
) -> IntervalStatus:
    """Check one open interval ``(lo, hi)`` given prefix counts ``pre``."""
    L = max(hi - lo - 1, 0)
    count = int(pre[hi] - pre[lo + 1]) if L else 0
    if mu == 0:
        return IntervalStatus(0, lo, hi, mu, count, L, count <= C)
    p, q = mu.numerator, mu.denominator
    lengths, exhaustive = _lengths(L, limit) if strong else ([L] if L else [], True)
    inner = pre[lo + 1 : hi + 1].astype(np.int64)  # prefix counts relative to the interval
    holds = True
    best = (0, 1)  # largest D^2 / l so far; a violation always maximizes it
    worst = None
    for l in lengths:
        counts = inner[l:] - inner[:-l]
        D = q * counts - p * l
        i_max, i_min = int(np.argmax(D)), int(np.argmin(D))
        if D[i_max] >= -D[i_min]:
            s, d = i_max, int(D[i_max])
        else:
            s, d = i_min, -int(D[i_min])
        if d * d * best[1] > best[0] * l or worst is None:
            best = (d * d, l)
            worst = (lo + s, lo + s + l + 1, int(counts[s]), l)
        if d > _threshold(mu, C, l):
            holds = False
            if early_exit:
                break
    deviation = Fraction(abs(q * worst[2] - p * worst[3]), q) if worst else Fraction(0)
    return IntervalStatus(0, lo, hi, mu, count, L, holds, exhaustive, worst, deviation)


def check_witness(
    M: FiniteStructure,
    X: IndexSet,
    w: DecompositionWitness,
    limit: int = EXHAUSTIVE_SCAN_LIMIT,
    early_exit: bool = False,
) -> WitnessReport:
    """Condition (*) for every interval of ``w``; strong mode scans all subintervals."""
    if X.universe != M.size:
        raise WitnessError("set and structure have different universes")
    w.validate_for(M)
    out = []
    for i, (lo, hi, mu) in enumerate(zip(w.cuts, w.cuts[1:], w.mu)):
        st = scan_interval(X.prefix, lo, hi, mu, w.C, w.mode == "strong", limit, early_exit)
        st.index = i
        out.append(st)
        if early_exit and not st.holds:
            break
    return WitnessReport(w, out)


# ------------------------------------------------------- good-interval tables


def reach_bound(pre: np.ndarray, mu: Fraction, C: Fraction, limit: int = EXHAUSTIVE_SCAN_LIMIT) -> tuple[np.ndarray, bool]:
    """F with: (a, b) is a strong-good interval for ``mu`` iff a < b <= F[a].

    Returns F and whether every window was examined.
    """
    size = pre.size - 1
    if mu == 0:
        cap = int(np.floor(C))
        # largest b with pre[b] - pre[a+1] <= cap
        targets = pre[np.minimum(np.arange(size) + 1, size)] + cap
        F = np.searchsorted(pre, targets, side="right") - 1
        return np.minimum(F, size - 1).astype(np.int64), True
    p, q = mu.numerator, mu.denominator
    first_bad_end = np.full(size, size, dtype=np.int64)
    lengths, exhaustive = _lengths(size, limit)
    for l in lengths:
        if l > size:
            break
        counts = pre[l:] - pre[:-l]
        D = np.abs(q * counts - p * l)
        bad = D > _threshold(mu, C, l)
        if bad.any():
            starts = np.flatnonzero(bad)
            ends = starts + l - 1
            first_bad_end[starts] = np.minimum(first_bad_end[starts], ends)
    # F[a] = min over window starts s > a of first_bad_end[s]
    suffix = np.minimum.accumulate(first_bad_end[::-1])[::-1]
    F = np.empty(size, dtype=np.int64)
    F[:-1] = suffix[1:]
    F[-1] = size
    return np.minimum(F, size - 1), exhaustive


def weak_good(pre: np.ndarray, mu: Fraction, C: Fraction) -> np.ndarray:
    """Matrix G with G[a, b] true iff the full interval (a, b), a < b, passes."""
    size = pre.size - 1
    a = np.arange(size)[:, None]
    b = np.arange(size)[None, :]
    L = np.maximum(b - a - 1, 0).astype(object if size > 1 << 20 else np.int64)
    cnt = np.where(b > a + 1, pre[np.minimum(b, size)] - pre[np.minimum(a + 1, size)], 0)
    if mu == 0:
        ok = cnt <= C
    else:
        p, q = mu.numerator, mu.denominator
        ca, cb = C.numerator, C.denominator
        D = q * cnt - p * L
        ok = (cb * cb) * D * D <= (ca * ca) * (q * q) * L
    return ok & (b > a)


class _Tables:
    """Per-(set, C, mode) cache of good-interval tables, one per measure value."""

    def __init__(self, X: IndexSet, C: Fraction, mode: str, limit: int, allowed: np.ndarray | None):
        self.pre = X.prefix.astype(np.int64)
        self.size = X.universe
        self.C = Fraction(C)
        self.mode = mode
        self.limit = limit
        self.allowed = allowed if allowed is not None else np.ones(self.size, dtype=bool)
        self.cache: dict = {}
        self.exhaustive = True

    def table(self, mu: Fraction):
        if mu not in self.cache:
            if self.mode == "strong":
                F, ex = reach_bound(self.pre, mu, self.C, self.limit)
                self.exhaustive &= ex
                self.cache[mu] = F
            else:
                self.cache[mu] = weak_good(self.pre, mu, self.C)
        return self.cache[mu]

    def step(self, reach: np.ndarray, mu: Fraction) -> np.ndarray:
        """Cuts b reachable by one interval of measure mu from a cut in ``reach``."""
        t = self.table(mu)
        if self.mode == "strong":
            diff = np.zeros(self.size + 1, dtype=np.int64)
            src = np.flatnonzero(reach)
            hi = t[src]
            keep = hi > src
            np.add.at(diff, src[keep] + 1, 1)
            np.add.at(diff, hi[keep] + 1, -1)
            out = np.cumsum(diff[:-1]) > 0
        else:
            out = t[reach].any(axis=0)
        return out & self.allowed

    def can_step(self, a: int, target: np.ndarray, mu: Fraction) -> np.ndarray:
        """Cuts b > a with a good interval (a, b) for mu and target[b]."""
        t = self.table(mu)
        out = np.zeros(self.size, dtype=bool)
        if self.mode == "strong":
            out[a + 1 : t[a] + 1] = True
        else:
            out = t[a].copy()
        return out & target & self.allowed


def _canonical(tabs: _Tables, mu: Sequence[Fraction]) -> tuple[int, ...] | None:
    size = tabs.size
    if size == 1:
        return (0, 0) if len(mu) == 1 else None
    k = len(mu)
    # feasible[i][c]: from cut c at index i the remaining measures reach max
    feasible = [None] * (k + 1)
    last = np.zeros(size, dtype=bool)
    last[size - 1] = True
    feasible[k] = last
    for i in range(k - 1, -1, -1):
        nxt = feasible[i + 1]
        t = tabs.table(mu[i])
        cur = np.zeros(size, dtype=bool)
        if tabs.mode == "strong":
            # first feasible cut strictly after a
            idx = np.flatnonzero(nxt)
            pos = np.searchsorted(idx, np.arange(size) + 1)
            has = pos < idx.size
            first = np.where(has, idx[np.minimum(pos, idx.size - 1)], size)
            cur = has & (first <= t)
        else:
            cur = (t & nxt[None, :]).any(axis=1)
        feasible[i] = cur & tabs.allowed
    if not feasible[0][0]:
        return None
    cuts = [0]
    for i in range(k):
        options = np.flatnonzero(tabs.can_step(cuts[-1], feasible[i + 1], mu[i]))
        cuts.append(int(options[0]))
    return tuple(cuts)


def _normalize_grid(E: Iterable[Sequence[Fraction | str]], k: int) -> list[tuple[Fraction, ...]]:
    out = {tuple(Fraction(m) for m in t): None for t in E}
    return sorted((t for t in out if 1 <= len(t) <= k), key=lambda t: (len(t), t))


def _fitting(tuples: list[tuple[Fraction, ...]], size: int) -> list[tuple[Fraction, ...]]:
    """Tuples usable on a universe of ``size`` points.

    k intervals need k+1 distinct cuts; on a universe too small for a tuple
    its subsequences of the largest placeable length stand in for it.
    """
    room = max(size - 1, 1)
    out: dict[tuple[Fraction, ...], None] = {}
    for t in tuples:
        for u in [t] if len(t) <= room else itertools.combinations(t, room):
            out[u] = None
    return list(out)


def grid_tuples(k: int, grid: Sequence[Fraction] = DEFAULT_GRID, exact_length: bool = False) -> list[tuple[Fraction, ...]]:
    """All measure tuples over ``grid`` of length k (or 1..k)."""
    lengths = [k] if exact_length else range(1, k + 1)
    return [t for n in lengths for t in itertools.product(grid, repeat=n)]


def candidate_cuts(X: IndexSet, levels: int = 6) -> np.ndarray:
    """Alternation points of X (both sides) plus a dyadic grid; used above the exhaustive size."""
    size = X.universe
    m = X.mask
    allowed = np.zeros(size, dtype=bool)
    flips = np.flatnonzero(m[1:] != m[:-1])
    for d in (-1, 0, 1, 2):
        allowed[np.clip(flips + d, 0, size - 1)] = True
    for j in range(levels + 1):
        allowed[[(i * (size - 1)) >> j for i in range((1 << j) + 1)]] = True
    allowed[[0, size - 1]] = True
    return allowed


def search_witness(
    M: FiniteStructure,
    X: IndexSet,
    k: int,
    E: Iterable[Sequence[Fraction]] | None = None,
    C: Fraction | int = 0,
    mode: str = "strong",
    exhaustive_limit: int = EXHAUSTIVE_SEARCH_LIMIT,
    scan_limit: int = EXHAUSTIVE_SCAN_LIMIT,
) -> DecompositionWitness | NoWitness:
    """First measure tuple of E (by length, then lexicographically) that has a witness,
    with its lexicographically least cuts; exhaustive over all cut tuples when
    |M| <= ``exhaustive_limit``."""
    if k < 1:
        raise WitnessError("k must be at least 1")
    if X.universe != M.size:
        raise WitnessError("set and structure have different universes")
    tuples = _fitting(_normalize_grid(grid_tuples(k) if E is None else E, k), M.size)
    allowed = None
    exhaustive = M.size <= exhaustive_limit
    if not exhaustive:
        allowed = candidate_cuts(X)
    tabs = _Tables(X, Fraction(C), mode, scan_limit, allowed)
    for n, mu in enumerate(tuples):
        cuts = _canonical(tabs, mu)
        if cuts is not None:
            w = DecompositionWitness(cuts, mu, Fraction(C), mode)
            if not tabs.exhaustive:
                # the dyadic scan may have missed a window; confirm on the full scan
                if not check_witness(M, X, w, limit=max(scan_limit, M.size), early_exit=True).holds:
                    continue
            return w
    return NoWitness(exhaustive and tabs.exhaustive, len(tuples))


def canonical_cuts_for_set(
    M: FiniteStructure,
    X: IndexSet,
    mu: Sequence[Fraction],
    C: Fraction | int = 0,
    mode: str = "strong",
    scan_limit: int = EXHAUSTIVE_SCAN_LIMIT,
) -> tuple[int, ...] | None:
    tabs = _Tables(X, Fraction(C), mode, scan_limit, None)
    return _canonical(tabs, tuple(Fraction(m) for m in mu))


def canonical_cuts(
    M: FiniteStructure,
    phi: Formula,
    params: Mapping[str, int] | None,
    mu: Sequence[Fraction],
    C: Fraction | int = 0,
    mode: str = "strong",
    x: str | None = None,
) -> tuple[int, ...] | None:
    """Values m_1, ..., m_{k-1} of the canonical cut functions (with min and max),
    chosen coordinate by coordinate as the least cut that still extends to a
    good decomposition; None if there is none."""
    x = x or _object_variable(phi, params)
    X = definable_set(M, phi, x, params)
    return canonical_cuts_for_set(M, X, mu, C, mode)


def _object_variable(phi: Formula, params: Mapping[str, int] | None) -> str:
    rest = [v for v in free_vars(phi) if v not in (params or {})]
    if len(rest) > 1:
        raise WitnessError(f"ambiguous object variable among {rest}")
    return rest[0] if rest else "x"


# ------------------------------------------------------- samples and fitting

ParamScheme = str | Sequence[Mapping[str, int]] | Callable[[FiniteStructure], Iterable[Mapping[str, int]]]


def parameter_tuples(M: FiniteStructure, names: Sequence[str], scheme: ParamScheme = "all", seed: int = 0):
    """Parameter assignments (positions) for ``names``.

    ``"all"``: every tuple; ``"random:K"``: K tuples from a seeded RNG;
    a list of dicts: fixed element values; a callable: positions computed from M.
    """
    names = list(names)
    if callable(scheme):
        yield from scheme(M)
        return
    if isinstance(scheme, str):
        if scheme == "all":
            for tup in itertools.product(range(M.size), repeat=len(names)):
                yield dict(zip(names, tup))
            return
        if scheme.startswith("random:"):
            rng = random.Random(f"{seed}:{M.family}:{M.param}")
            for _ in range(int(scheme.split(":", 1)[1])):
                yield {v: rng.randrange(M.size) for v in names}
            return
        raise WitnessError(f"unknown parameter scheme {scheme!r}")
    for values in scheme:
        yield {v: M.position_of(values[v]) for v in names}


@dataclass
class InstanceRow:
    structure: dict
    params: dict[str, int]
    holds: bool
    witness: DecompositionWitness | NoWitness

    def to_json(self) -> dict:
        w = self.witness.to_json()
        return {"structure": self.structure, "params": self.params, "holds": self.holds, "witness": w}


@dataclass
class ClassReport:
    rows: list[InstanceRow] = field(default_factory=list)

    @property
    def holds(self) -> bool:
        return all(r.holds for r in self.rows)

    def to_json(self) -> dict:
        return {"holds": self.holds, "instances": len(self.rows), "rows": [r.to_json() for r in self.rows]}


def _instances(sample, phi, scheme, x, seed):
    x = x or "x"
    names = [v for v in free_vars(phi) if v != x]
    for M in sample:
        for params in parameter_tuples(M, names, scheme, seed):
            yield M, params, definable_set(M, phi, x, params)


def verify_class(
    sample: Sequence[FiniteStructure],
    phi: Formula,
    scheme: ParamScheme,
    k: int,
    E: Iterable[Sequence[Fraction]] | None,
    C: Fraction | int,
    mode: str = "strong",
    x: str = "x",
    seed: int = 0,
) -> ClassReport:
    """Search a witness for every structure and parameter tuple of the sample."""
    E = None if E is None else list(E)
    report = ClassReport()
    for M, params, X in _instances(sample, phi, scheme, x, seed):
        w = search_witness(M, X, k, E, C, mode)
        values = {v: M.value(p) for v, p in params.items()}
        report.rows.append(InstanceRow(M.descriptor(), values, isinstance(w, DecompositionWitness), w))
    return report


@dataclass
class FitResult:
    C: Fraction | None  # None: even FIT_MAX fails somewhere
    argmax: dict | None
    instances: int

    def to_json(self) -> dict:
        return {"C": "inf" if self.C is None else fmt(self.C), "argmax": self.argmax, "instances": self.instances}


def fit_constant(
    sample: Sequence[FiniteStructure],
    phi: Formula,
    scheme: ParamScheme,
    k: int,
    E: Iterable[Sequence[Fraction]] | None,
    mode: str = "strong",
    x: str = "x",
    resolution: Fraction = FIT_RESOLUTION,
    c_max: Fraction = FIT_MAX,
    seed: int = 0,
) -> FitResult:
    """Least grid constant j*resolution for which every instance has a witness."""
    if not sample:
        raise WitnessError("empty sample")
    E = None if E is None else list(E)
    steps = int(Fraction(c_max) / resolution)
    cur, argmax, n = 0, None, 0
    for M, params, X in _instances(sample, phi, scheme, x, seed):
        n += 1

        def ok(j: int) -> bool:
            return isinstance(search_witness(M, X, k, E, j * resolution, mode), DecompositionWitness)

        if ok(cur):
            if argmax is None:
                argmax = {"structure": M.descriptor(), "params": {v: M.value(p) for v, p in params.items()}}
            continue
        if not ok(steps):
            return FitResult(None, {"structure": M.descriptor(), "params": {v: M.value(p) for v, p in params.items()}}, n)
        lo, hi = cur, steps  # ok(lo) false, ok(hi) true
        while hi - lo > 1:
            mid = (lo + hi) // 2
            lo, hi = (lo, mid) if ok(mid) else (mid, hi)
        cur = hi
        argmax = {"structure": M.descriptor(), "params": {v: M.value(p) for v, p in params.items()}}
    return FitResult(cur * resolution, argmax, n)


def check_mu_definition(
    M: FiniteStructure,
    phi: Formula,
    candidate: Formula,
    mu: Sequence[Fraction],
    C: Fraction | int,
    mode: str = "strong",
    x: str = "x",
) -> tuple[bool, list[dict]]:
    """Compare the parameters for which ``mu`` admits a witness with the set
    defined by ``candidate`` (a formula in the parameters).  Returns agreement
    and the disagreeing parameter tuples."""
    from .evaluate import satisfies

    names = [v for v in free_vars(phi) if v != x]
    mismatches = []
    for params in parameter_tuples(M, names, "all"):
        X = definable_set(M, phi, x, params)
        has = canonical_cuts_for_set(M, X, mu, C, mode) is not None
        if has != satisfies(M, candidate, params):
            mismatches.append({v: M.value(p) for v, p in params.items()})
    return not mismatches, mismatches


__all__ = [
    "ClassReport",
    "DEFAULT_GRID",
    "DecompositionWitness",
    "FitResult",
    "IntervalStatus",
    "NoWitness",
    "WitnessError",
    "WitnessReport",
    "canonical_cuts",
    "canonical_cuts_for_set",
    "check_mu_definition",
    "check_witness",
    "count_interval",
    "fit_constant",
    "grid_tuples",
    "parameter_tuples",
    "reach_bound",
    "scan_interval",
    "search_witness",
    "verify_class",
]
