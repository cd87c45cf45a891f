"""Fixed formula corpora for the quantifier-elimination and alternation checks."""
from __future__ import annotations

import itertools

ORD = [
    "exists x (a < x & x < b)",
    "exists x (x < a)",
    "exists x (a < x)",
    "forall x (x < a | x = a | b < x)",
    "exists x (a < x & x < b & x != c)",
    "exists x (S(a) < x & x < b)",
    "exists x (x = S(a) & x < b)",
    "exists x (S(x) = a)",
    "exists x (S(x) = a & x != a)",
    "exists x (S^2(x) = a & a != max)",
    "exists x exists y (a < x & x < y & y < b)",
    "exists x exists y (x < y & y < a)",
    "forall x (x = max | S(x) != x)",
    "exists x (x != min & x != max & x < a)",
    "exists x (a < x & b < x & x < c)",
    "exists x (x < a & x < b & c < x)",
    "forall x (a < x -> b < x)",
    "exists x (x = S^3(min) & a < x)",
    "exists x (S^-2(max) < x & x < a)",
    "forall x exists y (x < y | x = max)",
    "exists x (!(x < a) & !(b < x))",
    "exists x (x < a) & exists y (b < y)",
    "!exists x (a < x & x < S^2(a))",
    "exists x (a < x & S(x) < b)",
    "exists x (S(a) = S(x) & x != a)",
    "forall x (x < a -> S(x) < S(a) | x = a)",
    "exists x (x < a & (x = b | x = c))",
    "exists x ((a < x | b < x) & x < c)",
    "exists x exists y (x != y & x < a & y < a)",
    "exists x exists y exists z (x < y & y < z & z < a)",
]

# generated cuts: exists x over conjunctions of bounds
_ORD_BOUNDS = ["a < x", "x < a", "S(a) < x", "x < S(b)", "x = S^2(a)", "x != b", "b < S(x)", "S^2(x) < c"]
ORD += [f"exists x ({p} & {q})" for p, q in itertools.combinations(_ORD_BOUNDS, 2)][:30]

BLOCK = [
    "exists x (a < x & x < b & P(x))",
    "exists x (a < x & x < b & !P(x))",
    "exists x (P(x) & x < a)",
    "exists x (P(x) & a < x)",
    "exists x (!P(x) & a < x)",
    "exists x (!P(x) & x < a)",
    "exists x (P(x) & S(x) = a)",
    "exists x (P(x) & !P(S(a)) & x < a)",
    "exists x (!P(x) & P(L(a)) & a < x)",
    "forall x (a < x & x < b -> P(x))",
    "forall x (a < x & x < b -> !P(x))",
    "exists x (L(a) < x & x < a & P(x))",
    "exists x (x = L(a) & P(x))",
    "exists x (x = R(a) & !P(x))",
    "exists x (a < x & x < R(a))",
    "exists x (P(x) & x != a & x < b)",
    "exists x (P(x) & a < x & x < S^2(a))",
    "exists x (P(x) & (x = a | x = b))",
    "exists x (P(S(x)) & x < a)",
    "exists x (!P(S^2(x)) & a < x & x < b)",
    "exists x (P(S^-1(x)) & x != max)",
    "forall x (x < a -> P(S(x)))",
    "!exists x (P(x) & a < x)",
]
_BLOCK_LIT = ["P(x)", "!P(x)", "a < x", "x < b", "x < a", "x != S(a)", "x = R(b)", "S(a) < x"]
BLOCK += [f"exists x ({p} & {q})" for p, q in itertools.combinations(_BLOCK_LIT, 2)][:32]

OCYC = [
    "exists y (x = y + y)",
    "exists y (x = y + y + y)",
    "exists y (y < x & P_2(y))",
    "exists y (x < y & P_2(y) & y < a)",
    "P_2(x + a)",
    "P_3(x + 1)",
    "exists y (x = y + a)",
    "exists y (x = y + y & y < 0)",
    "exists y (x = y + y & 0 < y)",
    "x + x = a",
    "x + 1 < a",
    "x + x < x",
    "x < x + a",
    "P_2(x) & !P_3(x)",
    "exists y (y + y = a & y < x)",
    "forall y (y < x -> y + 1 != x)",
    "x = a + a",
    "x + a = 0",
    "exists y (P_2(y) & x = y + 1)",
    "exists y (P_3(y) & x + y = 0)",
]
_CYC_LIT = ["P_2(x)", "P_3(x)", "x < a", "a < x", "x + x < a", "P_2(x + 1)", "x < 0", "P_4(x + a)"]
OCYC += [f"{p} & !({q})" for p, q in itertools.permutations(_CYC_LIT, 2)][:32]

# one-variable C_ord formulas, no parameters: bounded alternation regardless of size
ALTERNATION = [
    "x < S^3(min)",
    "S^-2(max) < x",
    "x = S^2(min) | x = S^4(min)",
    "x != S(min) & x != S^-1(max)",
    "exists y (x < y & y < S^3(min))",
    "(x < S^2(min) | S^-3(max) < x) & x != min",
    "exists y (S(y) = x & y != min)",
    "x = min | x = max | x = S^5(min)",
    "!(x = S^2(min)) & x < S^6(min)",
    "exists y exists z (x < y & y < z)",
    "forall y (y < x -> y < S^2(min))",
    "x = S^-1(max) | x = S^-3(max) | x = S^-5(max)",
    "exists y (x < y) & exists y (y < x)",
    "x < S^4(min) & !(x = S^2(min))",
    "exists y (x = S^2(y))",
    "forall y (x < y -> S(y) = y | S^2(y) = y)",
    "S^2(min) < x & x < S^-2(max)",
    "x = S^3(min) | (S^-2(max) < x & x != max)",
    "exists y (y < x & S(y) < x & S^2(y) < x)",
    "!exists y (S^3(x) = y & y != max)",
]
