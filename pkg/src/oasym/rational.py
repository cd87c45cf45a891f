"""Exact rationals on the wire: always ``"p/q"`` strings, never floats."""
from __future__ import annotations

from fractions import Fraction


def fmt(x: Fraction | int) -> str:
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


def parse_rational(text: str | int | Fraction) -> Fraction:
    if isinstance(text, (int, Fraction)):
        return Fraction(text)
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError):
        raise ValueError(f"not a rational: {text!r}") from None


def parse_grid(text: str) -> list[Fraction]:
    """``"i/8"`` style shorthand (all i/q for 0 <= i <= q) or a comma list."""
    text = text.strip()
    if text.startswith("i/"):
        q = int(text[2:])
        if q <= 0:
            raise ValueError("grid denominator must be positive")
        return [Fraction(i, q) for i in range(q + 1)]
    return [parse_rational(t) for t in text.split(",") if t.strip()]
