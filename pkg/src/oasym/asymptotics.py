"""Densities across growing structures and the finite-scale checks built on them.

Covers the Beatty statements (jump density, the fractional-part criterion and
Weyl limits, fibers of f), the refutation for the block-predicate class,
the k-intersection fact for counting measures, the image estimator for
normalized positions, and pseudocontinuity of definable functions.
No floating point is used in any pass/fail decision.
"""
from __future__ import annotations

import csv
import io
import itertools
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from math import isqrt
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .decomposition import DEFAULT_GRID, DecompositionWitness, NoWitness, grid_tuples, search_witness
from .evaluate import IndexSet, definable_set, term_table
from .formula import Formula, Term, term_vars
from .rational import fmt
from .structures import (
    AlphaSpec,
    FiniteStructure,
    StructureError,
    beatty_floor_array,
    compare_alpha_times,
    make,
    make_block_predicate,
)

POINT_OCCUPANCY = 8


class AsymptoticsError(ValueError):
    pass


# ------------------------------------------------------------ measure sweeps


@dataclass
class MeasureRow:
    param: int
    size: int
    count: int

    @property
    def density(self) -> Fraction:
        return Fraction(self.count, self.size)


@dataclass
class MeasureSeries:
    rows: list[MeasureRow]
    target: Fraction | AlphaSpec | None = None
    label: str = ""

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["size", "count", "density_num", "density_den", "target", "abs_err"])
        for r in self.rows:
            d = r.density
            w.writerow([r.size, r.count, d.numerator, d.denominator, *_target_cells(d, self.target)])
        return buf.getvalue()

    def to_json(self) -> dict:
        return {
            "label": self.label,
            "target": _target_text(self.target),
            "rows": [
                {"param": r.param, "size": r.size, "count": r.count, "density": fmt(r.density)} for r in self.rows
            ],
        }


def _target_text(target) -> str | None:
    if target is None:
        return None
    if isinstance(target, Fraction):
        return fmt(target)
    return str(target)


def _target_cells(d: Fraction, target) -> list[str]:
    if target is None:
        return ["", ""]
    if isinstance(target, Fraction):
        return [fmt(target), fmt(abs(d - target))]
    # irrational targets only get an advisory decimal error
    return [str(target), f"{abs(float(d) - target.approx()):.3e}"]


def measure_sweep(
    family: str,
    phi: Formula,
    sizes: Sequence[int],
    params: Callable[[FiniteStructure], Mapping[str, int]] | None = None,
    alpha: AlphaSpec | None = None,
    x: str = "x",
    target: Fraction | AlphaSpec | None = None,
) -> MeasureSeries:
    """Exact counts |phi(M)| / |M| for structures of the given size parameters.

    ``params`` maps a structure to parameter positions (the finite stand-in
    for a parameter fixed in proportion to the size).
    """
    sizes = list(sizes)
    if any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise AsymptoticsError("sizes must be strictly increasing")
    rows = []
    for n in sizes:
        M = make(family, n, alpha)
        X = definable_set(M, phi, x, params(M) if params else None)
        rows.append(MeasureRow(n, M.size, len(X)))
    return MeasureSeries(rows, target)


# ------------------------------------------------------------- Beatty statements


@dataclass
class JumpDensity:
    n: int
    count: int
    within_two: bool

    @property
    def density(self) -> Fraction:
        return Fraction(self.count, self.n + 1)

    def to_json(self, alpha: AlphaSpec | None = None) -> dict:
        out = {"n": self.n, "count": self.count, "density": fmt(self.density), "within_two": self.within_two}
        if alpha is not None:
            out["approx_abs_err"] = abs(float(self.density) - alpha.approx())
        return out


def _within(alpha: AlphaSpec, count: int, scale: int, slack: int) -> bool:
    """|count - alpha*scale| <= slack, exactly."""
    return (
        compare_alpha_times(alpha, scale, Fraction(count - slack)) >= 0
        and compare_alpha_times(alpha, scale, Fraction(count + slack)) <= 0
    )


def jump_density(alpha: AlphaSpec, n: int) -> JumpDensity:
    """Number of x < n with f(x) < f(x+1) on [0, n], and the bound |count - alpha(n+1)| <= 2."""
    if n < 1:
        raise AsymptoticsError("n must be >= 1")
    f = beatty_floor_array(alpha, np.arange(n + 1))
    count = int(np.count_nonzero(f[1:] > f[:-1]))
    return JumpDensity(n, count, _within(alpha, count, n + 1, 2))


def jump_bound_all(alpha: AlphaSpec, n_max: int) -> tuple[bool, int | None]:
    """The bound for every n in [1, n_max] at once; returns (all hold, first failing n).

    The counts are the running sums of jumps; ``alpha*(n+1)`` is never an
    integer, so ``c - 2 <= alpha(n+1) <= c + 2`` reads
    ``c - 2 <= floor(alpha(n+1)) <= c + 1``.
    """
    f = beatty_floor_array(alpha, np.arange(n_max + 2))
    jumps = np.cumsum(f[1:] > f[:-1])  # jumps[n-1] = count for [0, n]
    counts = jumps[: n_max]
    ns = np.arange(1, n_max + 1)
    fl = f[ns + 1]
    ok = (counts - 2 <= fl) & (fl <= counts + 1)
    if ok.all():
        return True, None
    return False, int(ns[np.argmin(ok)])


@dataclass
class WeylResult:
    n: int
    M: int
    direct: int
    criterion: int
    agree_pointwise: bool
    target_text: str
    within: bool | None = None
    tolerance: Fraction | None = None

    @property
    def density(self) -> Fraction:
        return Fraction(self.direct, self.n + 1)

    def to_json(self) -> dict:
        out = {
            "n": self.n,
            "M": self.M,
            "count_direct": self.direct,
            "count_fractional": self.criterion,
            "agree": self.agree_pointwise,
            "density": fmt(self.density),
            "target": self.target_text,
        }
        if self.tolerance is not None:
            out["tolerance"] = fmt(self.tolerance)
            out["within_tolerance"] = self.within
        return out


def weyl_masks(alpha: AlphaSpec, M: int, n: int) -> tuple[np.ndarray, np.ndarray]:
    """For x in [0, n-M]: f(x) = f(x+M) directly, and frac(alpha x) < 1 - alpha M.

    The second is ``alpha(x+M) < f(x) + 1``, i.e.
    ``q sqrt(d) (x+M) < r(f(x)+1) - p(x+M)``, squared in integers.
    """
    xs = np.arange(n - M + 1, dtype=np.int64)
    f = beatty_floor_array(alpha, np.arange(n + 1))
    direct = f[xs] == f[xs + M]
    rhs = alpha.r * (f[xs] + 1) - alpha.p * (xs + M)
    lhs_sq = alpha.q * alpha.q * alpha.d * (xs + M) * (xs + M)
    if n and int(alpha.q * alpha.q * alpha.d) * (n + 1) ** 2 >= 1 << 62:
        raise AsymptoticsError("n too large for the int64 criterion")
    criterion = (rhs > 0) & (lhs_sq < rhs * rhs)
    return direct, criterion


def weyl_check(alpha: AlphaSpec, M: int, n: int, tolerance: Fraction | None = None) -> WeylResult:
    """Count x <= n-M with f(x) = f(x+M) two ways; optionally test the density against 1 - alpha M."""
    top = alpha.reciprocal_floor()
    if not 1 <= M <= top:
        raise AsymptoticsError(f"M must lie in [1, {top}] = [1, floor(1/alpha)]")
    if n < M:
        raise AsymptoticsError("n must be >= M")
    direct, criterion = weyl_masks(alpha, M, n)
    res = WeylResult(
        n,
        M,
        int(direct.sum()),
        int(criterion.sum()),
        bool(np.array_equal(direct, criterion)),
        f"1 - {M}*{alpha}",
    )
    if tolerance is not None:
        # |c/(n+1) - (1 - alpha M)| <= tol  <=>  1 - c/(n+1) - tol <= alpha M <= 1 - c/(n+1) + tol
        base = 1 - res.density
        res.tolerance = Fraction(tolerance)
        res.within = (
            compare_alpha_times(alpha, M, base - res.tolerance) >= 0
            and compare_alpha_times(alpha, M, base + res.tolerance) <= 0
        )
    return res


@dataclass
class PreimageProfile:
    n: int
    s: int
    image_top: int
    image_gap_free: bool
    N: int
    interior_sizes: dict[int, int] = field(default_factory=dict)
    last_fiber: int | None = None
    interior_ok: bool = True

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "s": self.s,
            "image": [0, self.image_top],
            "gap_free": self.image_gap_free,
            "N": self.N,
            "interior_fiber_sizes": {str(k): v for k, v in sorted(self.interior_sizes.items())},
            "last_fiber": self.last_fiber,
            "last_fiber_truncated": self.last_fiber is not None and self.last_fiber not in (self.N, self.N + 1),
            "interior_ok": self.interior_ok,
        }


def preimage_profile(alpha: AlphaSpec, n: int, s: int = 1) -> PreimageProfile:
    """Image of f^s on [0, n] and, for s = 1, the fiber sizes over the image."""
    if n < 1 or s < 1:
        raise AsymptoticsError("need n >= 1 and s >= 1")
    f = beatty_floor_array(alpha, np.arange(n + 1))
    vals = np.arange(n + 1)
    for _ in range(s):
        vals = f[vals]
    top = int(vals[-1])
    present = np.zeros(top + 1, dtype=bool)
    present[vals] = True
    prof = PreimageProfile(n, s, top, bool(present.all() and vals.min() == 0), alpha.reciprocal_floor())
    if s == 1:
        sizes = np.bincount(f, minlength=top + 1)
        interior = sizes[:top]
        prof.interior_sizes = dict(Counter(int(v) for v in interior))
        prof.last_fiber = int(sizes[top])
        prof.interior_ok = set(prof.interior_sizes) <= {prof.N, prof.N + 1}
    return prof


# --------------------------------------------------- block-class refutation


@dataclass
class RefutationReport:
    mode: str
    n: int
    k: int
    C: Fraction
    grid: tuple[Fraction, ...]
    refuted: bool | None  # None: the argument is inconclusive at this n
    witness: DecompositionWitness | None = None
    exhaustive: bool = True
    details: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        out = {
            "mode": self.mode,
            "n": self.n,
            "k": self.k,
            "C": fmt(self.C),
            "grid": [fmt(g) for g in self.grid],
            "refuted": self.refuted,
            "exhaustive": self.exhaustive,
        }
        if self.witness is not None:
            out["witness"] = self.witness.to_json()
        out.update(self.details)
        return out


def density_chain(n: int, k: int, C: Fraction, mu: Fraction) -> dict:
    """The density chain for an interval of length >= (n/k) 2^n, evaluated exactly.

    It needs ``1/(n/k) + C/(n/k)^(1/2) < mu``, which the premise
    ``n > k((1+C)/mu)^2`` guarantees.
    """
    C, mu = Fraction(C), Fraction(mu)
    ratio = Fraction(n, k)
    bound = k * ((1 + C) / mu) ** 2
    required = int(bound) + 1  # least n with n > bound
    # 1/r + C/sqrt(r) < mu  <=>  C/sqrt(r) < mu - 1/r  <=>  (mu - 1/r > 0 and C^2/r < (mu - 1/r)^2)
    slack = mu - 1 / ratio
    holds = slack > 0 and C * C / ratio < slack * slack
    return {
        "premise": f"n > k*((1+C)/mu)^2 = {fmt(bound)}",
        "premise_holds": n > bound,
        "required_n": required,
        "inequality": "1/(n/k) + C/(n/k)^(1/2) < mu",
        "inequality_holds": bool(holds),
        "lhs_approx": float(1 / ratio) + float(C) / float(ratio) ** 0.5,
        "mu": fmt(mu),
    }


def _min_positive(grid: Iterable[Fraction]) -> Fraction:
    pos = [Fraction(g) for g in grid if g > 0]
    if not pos:
        raise AsymptoticsError("the grid has no positive measure")
    return min(pos)


def _window_counts(pre: np.ndarray, length: int) -> np.ndarray:
    return pre[length:] - pre[:-length]


def refute_block_class(
    n: int,
    k: int,
    C: Fraction | int,
    grid: Sequence[Fraction] = DEFAULT_GRID,
    mode: str = "auto",
    exhaustive_limit: int = 4096,
) -> RefutationReport:
    """Show that the set P of the n-th block structure has no k-interval witness.

    Exhaustive mode searches every cut tuple (strong mode, tuples over the
    grid of length <= k).  Analytic mode follows the pigeonhole argument:
    some interval of any k-cut tuple has length L0 >= (|M| - k - 1)/k; it is
    certified on the structure itself that every window of length L0

    * holds more than C points of P, so its measure cannot be 0, and
    * contains a P-free window of length g with mu*g > C*g^(1/2) for the
      least positive grid measure mu, so no positive measure fits either.
    """
    C = Fraction(C)
    grid = tuple(sorted(set(Fraction(g) for g in grid)))
    if n < 1 or k < 1:
        raise AsymptoticsError("need n >= 1 and k >= 1")
    size = n << n
    if mode == "auto":
        mode = "exhaustive" if size <= exhaustive_limit else "analytic"
    if mode == "exhaustive":
        if size > exhaustive_limit:
            raise AsymptoticsError(f"|M| = {size} exceeds the exhaustive limit {exhaustive_limit}")
        M = make_block_predicate(n)
        X = IndexSet.from_mask(M.p_table)
        w = search_witness(M, X, k, grid_tuples(k, grid), C, "strong", exhaustive_limit=size)
        if isinstance(w, NoWitness):
            return RefutationReport(
                "exhaustive", n, k, C, grid, True, exhaustive=w.exhaustive,
                details={"witness": None, "searched_tuples": w.searched},
            )
        return RefutationReport("exhaustive", n, k, C, grid, False, witness=w)
    if mode != "analytic":
        raise AsymptoticsError(f"unknown mode {mode!r}")
    try:
        M = make_block_predicate(n)
    except StructureError as exc:
        raise AsymptoticsError(str(exc)) from None
    return _analytic(M, n, k, C, grid)


def _analytic(M: FiniteStructure, n: int, k: int, C: Fraction, grid) -> RefutationReport:
    mu = _min_positive(grid)
    size = M.size
    p = M.p_table
    pre = np.zeros(size + 1, dtype=np.int64)
    np.cumsum(p, out=pre[1:])
    # the longest of k open intervals between k+1 distinct cuts
    L0 = -(-(size - k - 1) // k)
    # least gap length g with mu g > C sqrt(g): g > (C/mu)^2
    g0 = int((C / mu) ** 2) + 1
    details: dict = {"universe": size, "long_interval_length": L0, "gap_needed": g0, "mu_min": fmt(mu)}
    details["density_chain"] = density_chain(n, k, C, mu)

    counts = _window_counts(pre, L0)
    sparsest = int(np.argmin(counts))
    densest = int(np.argmax(counts))
    details["sparsest_window"] = _window_json(M, sparsest, L0, int(counts[sparsest]))
    details["densest_window"] = _window_json(M, densest, L0, int(counts[densest]))
    zero_fails = int(counts[sparsest]) > C

    # run length of P-free positions ending at each position
    free = ~p
    idx = np.arange(size)
    last_p = np.maximum.accumulate(np.where(p, idx, -1))
    run = np.where(free, idx - last_p, 0)
    gap_end = run >= g0
    ge = np.zeros(size + 1, dtype=np.int64)
    np.cumsum(gap_end, out=ge[1:])
    # window [s, s+L0-1] holds a P-free window of length g0 iff a gap end lies in [s+g0-1, s+L0-1]
    span = L0 - g0 + 1
    if span <= 0:
        positive_fails = False
        details["gap_check"] = "long interval shorter than the needed gap"
    else:
        ends = ge[g0 - 1 + span :] - ge[g0 - 1 : size - span + 1]
        worst = int(np.argmin(ends))
        positive_fails = bool(ends[worst] > 0)
        details["fewest_gap_ends"] = int(ends[worst])
        # explicit instance inside the densest window
        s = densest
        inside = np.flatnonzero(gap_end[s + g0 - 1 : s + L0])
        if inside.size:
            e = s + g0 - 1 + int(inside[0])
            u, v = e - g0, e + 1  # open window (u, v) of g0 P-free points
            details["gap_instance"] = {
                "window": [M.value(u), M.value(v)],
                "length": g0,
                "count": 0,
                "inequality": f"|0 - {fmt(mu)}*{g0}| = {fmt(mu * g0)} > {fmt(C)}*{g0}^(1/2)",
                "holds": bool(mu * g0 > 0 and (mu * g0) ** 2 > C * C * g0),
            }
    refuted = bool(zero_fails and positive_fails)
    return RefutationReport("analytic", n, k, C, tuple(grid), refuted if refuted else None, details=details)


def _window_json(M: FiniteStructure, start: int, length: int, count: int) -> dict:
    # positions start .. start+length-1 form the open interval (start-1, start+length)
    return {
        "interval_values": [M.value(start) - 1, M.value(start + length - 1) + 1],
        "length": length,
        "count": count,
        "density": fmt(Fraction(count, length)),
    }


# ------------------------------------------------------ k-intersection fact


@dataclass
class IntersectionResult:
    found: tuple[int, ...] | None  # 1-based indices
    measure: Fraction
    bound: Fraction
    best: tuple[int, ...] | None = None

    def to_json(self) -> dict:
        return {
            "found": list(self.found) if self.found else None,
            "measure": fmt(self.measure),
            "bound": fmt(self.bound),
            "best": list(self.best) if self.best else None,
        }


def k_intersection_check(
    sets: Sequence[IndexSet],
    base: tuple[int, int],
    epsilon: Fraction,
    k: int,
) -> IntersectionResult:
    """Least (lexicographic) indices i_1 < ... < i_k whose intersection has
    normalized measure >= epsilon^(3^(k-1)) on ``base`` (inclusive positions);
    otherwise the best measure found over all k-subsets."""
    epsilon = Fraction(epsilon)
    if not 0 < epsilon <= Fraction(1, 2):
        raise AsymptoticsError("epsilon must lie in (0, 1/2]")
    if k < 1 or len(sets) < k:
        raise AsymptoticsError("need at least k sets and k >= 1")
    lo, hi = base
    total = hi - lo + 1
    if total <= 0:
        raise AsymptoticsError("empty base")
    bits = []
    for i, X in enumerate(sets):
        seg = X.mask[lo : hi + 1]
        if Fraction(int(seg.sum()), total) < epsilon:
            raise AsymptoticsError(f"set {i + 1} has measure below epsilon on the base")
        bits.append(int.from_bytes(np.packbits(seg, bitorder="little").tobytes(), "little"))
    bound = epsilon ** (3 ** (k - 1))
    need = bound * total
    best, best_tuple = -1, None
    for combo in itertools.combinations(range(len(sets)), k):
        acc = bits[combo[0]]
        for j in combo[1:]:
            acc &= bits[j]
        c = acc.bit_count()
        if c > best:
            best, best_tuple = c, combo
        if c >= need:
            t = tuple(i + 1 for i in combo)
            return IntersectionResult(t, Fraction(c, total), bound, t)
    return IntersectionResult(None, Fraction(best, total), bound, tuple(i + 1 for i in best_tuple))


# ------------------------------------------------------------- gamma image


@dataclass
class GammaImage:
    delta: Fraction
    intervals: list[tuple[Fraction, Fraction]]
    points: list[Fraction]

    def to_json(self) -> dict:
        return {
            "delta": fmt(self.delta),
            "intervals": [[fmt(a), fmt(b)] for a, b in self.intervals],
            "points": [fmt(p) for p in self.points],
        }


def gamma_image(
    family: str,
    phi: Formula,
    sizes: Sequence[int],
    delta: Fraction,
    params: Callable[[FiniteStructure], Mapping[str, int]] | None = None,
    alpha: AlphaSpec | None = None,
    x: str = "x",
    point_occupancy: int = POINT_OCCUPANCY,
) -> GammaImage:
    """Estimate the standard-part image of phi under j -> j/|M|.

    Positions are binned into ``ceil(1/delta)`` bins.  A bin occupied at the
    largest size is point material if its occupancy stays <= ``point_occupancy``
    at every size of the sweep and does not grow from the first size to the
    last, interval material otherwise.  Point bins next
    to interval material join it (an interval's end rarely fills its bin);
    adjacent interval bins merge into closed intervals.
    """
    delta = Fraction(delta)
    if not 0 < delta <= Fraction(1, 4):
        raise AsymptoticsError("delta must lie in (0, 1/4]")
    sizes = sorted(sizes)
    if not sizes:
        raise AsymptoticsError("need at least one size")
    nbins = -(-delta.denominator // delta.numerator)
    occupancy = []
    last_members = None
    for n in sizes:
        M = make(family, n, alpha)
        X = definable_set(M, phi, x, params(M) if params else None)
        pos = X.positions
        # bin of j/|M| is floor(j / (|M| delta)) = floor(j * den / (|M| * num))
        b = (pos * delta.denominator) // (M.size * delta.numerator)
        occupancy.append(np.bincount(b, minlength=nbins)[:nbins])
        last_members = (pos, M.size)
    occ = np.array(occupancy)
    final = occ[-1] > 0
    bounded = (occ <= point_occupancy).all(axis=0)
    if len(sizes) > 1:
        # finite sets stop growing; a thin slice of an interval does not
        bounded &= occ[-1] <= occ[0]
    interval_bins = final & ~bounded
    # a sparse bin touching interval material is that interval's ragged end
    touching = np.zeros(nbins, dtype=bool)
    touching[1:] |= interval_bins[:-1]
    touching[:-1] |= interval_bins[1:]
    interval_bins |= final & bounded & touching
    point_bins = final & ~interval_bins
    intervals = []
    i = 0
    while i < nbins:
        if interval_bins[i]:
            j = i
            while j + 1 < nbins and interval_bins[j + 1]:
                j += 1
            intervals.append((i * delta, min(Fraction(1), (j + 1) * delta)))
            i = j + 1
        else:
            i += 1
    pos, size = last_members
    b = (pos * delta.denominator) // (size * delta.numerator)
    points = []
    for i in np.flatnonzero(point_bins):
        members = pos[b == i]
        points.append(Fraction(int(members[len(members) // 2]), size))
    return GammaImage(delta, intervals, points)


# ------------------------------------------------------- pseudocontinuity


def pseudocontinuity_bound(M: FiniteStructure, t: Term, cap: int, x: str = "x") -> int | None:
    """Least N with f(S(a)) in [S^-N(f(a)), S^N(f(a))] for all a, where f is
    the term ``t`` in ``x``; None when N would exceed ``cap``."""
    extra = [v for v in _term_vars(t) if v != x]
    if extra:
        raise AsymptoticsError(f"term is not a function of {x} alone: {extra}")
    vals = term_table(M, t, x)
    nxt = vals[np.minimum(np.arange(M.size) + 1, M.size - 1)]
    N = int(np.abs(nxt - vals).max()) if M.size else 0
    return N if N <= cap else None


def _term_vars(t: Term) -> list[str]:
    return list(dict.fromkeys(term_vars(t)))


__all__ = [
    "GammaImage",
    "IntersectionResult",
    "JumpDensity",
    "MeasureSeries",
    "PreimageProfile",
    "RefutationReport",
    "WeylResult",
    "gamma_image",
    "jump_bound_all",
    "jump_density",
    "k_intersection_check",
    "measure_sweep",
    "density_chain",
    "preimage_profile",
    "pseudocontinuity_bound",
    "refute_block_class",
    "weyl_check",
    "weyl_masks",
]
