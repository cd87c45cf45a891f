"""Concrete finite ordered structures.

Elements are always addressed by *position* ``0 .. size-1`` in the order.
Each family adds a way to turn positions into the values the definitions talk
about (labels ``-N..N`` for cyclic groups, ``1..n*2^n`` for the block
predicate, ``0..n`` for Beatty structures).
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from math import isqrt

import numpy as np

MAX_UNIVERSE = 1 << 26


class StructureError(ValueError):
    pass


@dataclass(frozen=True)
class AlphaSpec:
    """The quadratic irrational ``(p + q*sqrt(d)) / r`` in ``(0, 1)``."""

    p: int
    q: int
    d: int
    r: int

    def __post_init__(self):
        if self.q <= 0 or self.r <= 0:
            raise StructureError("alpha needs q > 0 and r > 0")
        if self.d <= 1 or isqrt(self.d) ** 2 == self.d:
            raise StructureError(f"d={self.d} must be > 1 and not a perfect square")
        # 0 < p + q sqrt(d) < r, decided exactly
        if compare_surd(self.p, self.q, self.d, 0) <= 0:
            raise StructureError("alpha must be positive")
        if compare_surd(self.p, self.q, self.d, self.r) >= 0:
            raise StructureError("alpha must be below 1")

    @classmethod
    def parse(cls, text: str) -> "AlphaSpec":
        """Accept ``(p+q*sqrtd)/r`` (as in ``(-1+1*sqrt2)/1``) or the shorthands below."""
        named = {
            "sqrt2-1": cls(-1, 1, 2, 1),
            "golden": cls(-1, 1, 5, 2),
            "(sqrt5-1)/2": cls(-1, 1, 5, 2),
        }
        key = text.replace(" ", "")
        if key in named:
            return named[key]
        m = re.fullmatch(r"\(?([+-]?\d+)([+-]\d*)\*?sqrt\(?(\d+)\)?\)?(?:/(\d+))?", key)
        if not m:
            raise StructureError(f"cannot parse alpha {text!r}; expected (p+q*sqrtd)/r")
        q_text = m.group(2)
        q = int(q_text) if q_text not in ("+", "-") else int(q_text + "1")
        return cls(int(m.group(1)), q, int(m.group(3)), int(m.group(4) or 1))

    def to_json(self) -> dict:
        return {"p": self.p, "q": self.q, "d": self.d, "r": self.r}

    def __str__(self) -> str:
        return f"({self.p}+{self.q}*sqrt{self.d})/{self.r}"

    def approx(self) -> float:
        return (self.p + self.q * self.d**0.5) / self.r

    def reciprocal_floor(self) -> int:
        """floor(1/alpha): the largest N with N*alpha <= 1."""
        n = 1
        while compare_alpha_times(self, n + 1, Fraction(1)) <= 0:
            n += 1
        return n


def compare_surd(p: int, q: int, d: int, target: int | Fraction) -> int:
    """Sign of ``p + q*sqrt(d) - target`` for q >= 0, d non-square (exact)."""
    target = Fraction(target)
    # compare q*sqrt(d)*den with (target - p)*den
    den = target.denominator
    rhs = target.numerator - p * den
    lhs_sq = q * q * d * den * den
    if q == 0:
        return (0 > rhs) - (0 < rhs)
    if rhs < 0:
        return 1
    if lhs_sq > rhs * rhs:
        return 1
    if lhs_sq < rhs * rhs:
        return -1
    return 0


def compare_alpha_times(alpha: AlphaSpec, y: int, target: Fraction | int) -> int:
    """Sign of ``alpha*y - target`` computed exactly (y >= 0)."""
    if y < 0:
        raise ValueError("y must be nonnegative")
    target = Fraction(target)
    # alpha*y = (p*y + q*y*sqrt d)/r
    return compare_surd(alpha.p * y, alpha.q * y, alpha.d, target * alpha.r)


def beatty_floor(alpha: AlphaSpec, x: int) -> int:
    """Exact floor(alpha * x) for integer x >= 0.

    With A = p*x + isqrt(q^2 d x^2) the true numerator lies strictly inside
    (A, A+1) for x > 0, and no multiple of r fits strictly between consecutive
    integers, so floor(alpha x) = floor(A / r).
    """
    if x < 0:
        raise ValueError("beatty_floor is defined for x >= 0")
    return (alpha.p * x + isqrt(alpha.q * alpha.q * alpha.d * x * x)) // alpha.r


def beatty_floor_array(alpha: AlphaSpec, xs: np.ndarray) -> np.ndarray:
    """Vectorized :func:`beatty_floor`; float sqrt is corrected to the exact isqrt."""
    xs = np.asarray(xs, dtype=np.int64)
    k = alpha.q * alpha.q * alpha.d
    if xs.size and k * int(xs.max()) ** 2 >= 1 << 62:
        raise StructureError("argument too large for int64 beatty evaluation")
    s = k * xs * xs
    t = np.floor(np.sqrt(s.astype(np.float64))).astype(np.int64)
    # repair float rounding so that t*t <= s < (t+1)^2
    for _ in range(3):
        t = np.where(t * t > s, t - 1, t)
        t = np.where((t + 1) * (t + 1) <= s, t + 1, t)
    return (alpha.p * xs + t) // alpha.r


@dataclass(frozen=True, eq=False)
class FiniteStructure:
    family: str
    param: int
    size: int
    alpha: AlphaSpec | None = None

    # ---- shared order structure (clamped successor)
    @property
    def max_pos(self) -> int:
        return self.size - 1

    def succ(self, pos: int, k: int = 1) -> int:
        return min(max(pos + k, 0), self.size - 1)

    def positions(self) -> range:
        return range(self.size)

    # ---- values
    def value(self, pos: int) -> int:
        """The element as the definitions write it."""
        if self.family == "ocyc":
            return pos - self.param
        if self.family == "block":
            return pos + 1
        return pos

    def position_of(self, value: int) -> int:
        if self.family == "ocyc":
            return self.label_position(value)
        pos = value - 1 if self.family == "block" else value
        if not 0 <= pos < self.size:
            raise StructureError(f"value {value} outside the universe")
        return pos

    # ---- ordered cyclic group
    def label_position(self, label: int) -> int:
        """Position of the label congruent to ``label`` mod 2N+1."""
        self._need("ocyc")
        return (label + self.param) % self.size

    def add(self, a: int, b: int) -> int:
        """Group addition on positions."""
        self._need("ocyc")
        n = self.param
        return ((a - n) + (b - n) + n) % self.size

    @cached_property
    def pm_tables(self) -> dict:
        return {}

    def pm_table(self, m: int) -> np.ndarray:
        """Membership of P_m by position: label nonzero and divisible by m."""
        self._need("ocyc")
        tab = self.pm_tables.get(m)
        if tab is None:
            labels = np.arange(self.size) - self.param
            tab = (labels != 0) & (labels % m == 0)
            self.pm_tables[m] = tab
        return tab

    # ---- block predicate
    @cached_property
    def p_table(self) -> np.ndarray:
        self._need("block")
        n = self.param
        block = 1 << n
        tab = np.zeros(self.size, dtype=bool)
        for k in range(n):
            lo = k * block + 1
            hi = k * block + block // (1 << k)
            tab[lo - 1 : hi] = True
        return tab

    @cached_property
    def l_table(self) -> np.ndarray:
        """L(x): nearest position to the left where P differs from P(x); min if none."""
        p = self.p_table
        out = np.empty(self.size, dtype=np.int64)
        last_change = -1
        for i in range(self.size):
            if i > 0 and p[i] != p[i - 1]:
                last_change = i - 1
            out[i] = last_change if last_change >= 0 else 0
        return out

    @cached_property
    def r_table(self) -> np.ndarray:
        p = self.p_table
        out = np.empty(self.size, dtype=np.int64)
        nxt = -1
        for i in range(self.size - 1, -1, -1):
            if i < self.size - 1 and p[i] != p[i + 1]:
                nxt = i + 1
            out[i] = nxt if nxt >= 0 else self.size - 1
        return out

    @cached_property
    def r_degenerate(self) -> np.ndarray:
        """Positions where R found no change of sign and fell back to max."""
        p = self.p_table
        return _no_change_right(p)

    # ---- Beatty
    @cached_property
    def f_table(self) -> np.ndarray:
        self._need("beatty")
        return beatty_floor_array(self.alpha, np.arange(self.size))

    def f(self, pos: int, s: int = 1) -> int:
        tab = self.f_table
        for _ in range(s):
            pos = int(tab[pos])
        return pos

    def _need(self, family: str) -> None:
        if self.family != family:
            raise StructureError(f"operation needs a {family} structure, not {self.family}")

    def descriptor(self) -> dict:
        out = {"family": self.family, "param": self.param}
        if self.alpha is not None:
            out["alpha"] = self.alpha.to_json()
        return out

    def __repr__(self) -> str:
        extra = f", alpha={self.alpha}" if self.alpha else ""
        return f"FiniteStructure({self.family}, param={self.param}, size={self.size}{extra})"


def make_linear_order(n: int) -> FiniteStructure:
    if n < 1:
        raise StructureError("a linear order needs n >= 1")
    return FiniteStructure("ord", n, n)


def make_ordered_cyclic(N: int) -> FiniteStructure:
    if N < 0:
        raise StructureError("N must be >= 0")
    return FiniteStructure("ocyc", N, 2 * N + 1)


def make_block_predicate(n: int) -> FiniteStructure:
    if n < 1:
        raise StructureError("block predicate needs n >= 1")
    size = n << n
    if size > MAX_UNIVERSE:
        raise StructureError(f"n*2^n = {size} exceeds the universe bound {MAX_UNIVERSE}")
    return FiniteStructure("block", n, size)


def make_beatty(alpha: AlphaSpec, n: int) -> FiniteStructure:
    if n < 1:
        raise StructureError("Beatty structure needs n >= 1")
    if n + 1 > MAX_UNIVERSE:
        raise StructureError("universe too large")
    return FiniteStructure("beatty", n, n + 1, alpha)


def block_predicate_values(n: int) -> list[int]:
    """The values in P(M_n), straight from the union-of-blocks description."""
    out = []
    for k in range(n):
        out.extend(range(k * 2**n + 1, k * 2**n + 2**n // 2**k + 1))
    return out


def from_descriptor(desc: dict) -> FiniteStructure:
    """Build from ``{"family": ..., "param": int, "alpha": {...}}``."""
    family = desc.get("family")
    param = desc.get("param")
    if not isinstance(param, int):
        raise StructureError("descriptor needs an integer 'param'")
    if family == "ord":
        return make_linear_order(param)
    if family == "ocyc":
        return make_ordered_cyclic(param)
    if family == "block":
        return make_block_predicate(param)
    if family == "beatty":
        a = desc.get("alpha")
        if not isinstance(a, dict):
            raise StructureError("beatty descriptor needs 'alpha'")
        return make_beatty(AlphaSpec(a["p"], a["q"], a["d"], a["r"]), param)
    raise StructureError(f"unknown family {family!r}")


def make(family: str, param: int, alpha: AlphaSpec | None = None) -> FiniteStructure:
    desc = {"family": family, "param": param}
    if alpha is not None:
        desc["alpha"] = alpha.to_json()
    return from_descriptor(desc)


def _no_change_right(p: np.ndarray) -> np.ndarray:
    # True where P is constant from the position to the end of the universe
    out = np.empty(p.size, dtype=bool)
    const = True
    for i in range(p.size - 1, -1, -1):
        if i < p.size - 1 and p[i] != p[i + 1]:
            const = False
        out[i] = const
    return out
