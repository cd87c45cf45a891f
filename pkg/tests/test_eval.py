import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import alternations, random_instance
from oasym.evaluate import (
    EvalError,
    IndexSet,
    alternation_number,
    count_interval,
    count_tuples,
    count_tuples_scalar,
    definable_set,
    definable_set_scalar,
    satisfies,
    term_table,
    truth_table,
)
from oasym.formula import parse
from oasym.structures import AlphaSpec, make


def P(text, family="ord"):
    return parse(text, family)


def test_satisfies_examples():
    Z5 = make("ocyc", 2)
    assert satisfies(Z5, P("P_2(x)", "ocyc"), {"x": Z5.position_of(2)})
    assert not satisfies(Z5, P("P_2(x)", "ocyc"), {"x": Z5.position_of(1)})
    for fam, param in [("ord", 4), ("ocyc", 3), ("block", 2)]:
        M = make(fam, param)
        assert all(satisfies(M, P("x = x", fam), {"x": b}) for b in M.positions())


def test_definable_set_examples():
    Z5 = make("ocyc", 2)
    assert definable_set(Z5, P("P_2(x)", "ocyc"), "x").positions.tolist() == [0, 4]
    M2 = make("block", 2)
    assert definable_set(M2, P("P(x)", "block"), "x").positions.tolist() == list(range(6))
    assert definable_set(make("ord", 10), P("x < S^7(min)"), "x").positions.tolist() == list(range(7))


def test_count_interval():
    X = IndexSet.from_positions(range(7), 10)
    assert count_interval(X, 2, 5) == 2
    assert count_interval(X, 3, 4) == 0
    Z = make("ocyc", 50)
    evens = definable_set(Z, P("P_2(x)", "ocyc"), "x")
    assert count_interval(evens, Z.position_of(-50), Z.position_of(50)) == 48


def test_alternation_number():
    M = make("ord", 10)
    assert alternation_number(IndexSet.from_positions(range(7), 10), M) == 1
    assert alternation_number(IndexSet.from_positions([], 10), M) == 0
    Z9 = make("ocyc", 4)
    evens = definable_set(Z9, P("P_2(x)", "ocyc"), "x")
    assert [Z9.value(p) for p in evens.positions] == [-4, -2, 2, 4]
    # T F T F F F T F T
    assert alternation_number(evens, Z9) == 6
    with pytest.raises(EvalError):
        alternation_number(evens, M)


def test_count_tuples_examples():
    assert count_tuples(make("ord", 5), P("x < y"), ["x", "y"]) == 10
    assert count_tuples(make("ord", 4), P("x = x & y = y"), ["x", "y"]) == 16
    assert count_tuples(make("ocyc", 2), P("x + y = 0", "ocyc"), ["x", "y"]) == 5


def test_unbound_variable():
    with pytest.raises(EvalError):
        definable_set(make("ord", 5), P("x < a"), "x")


def test_p_m_chain_definition():
    # P_m(y): some t with 0 < t < 2t < ... < mt = y, or the mirror chain below 0
    for N in range(1, 12):
        Z = make("ocyc", N)
        for m in (2, 3, 4):
            want = []
            for y in range(-N, N + 1):
                ok = any(
                    all(0 < j * t <= N for j in range(1, m + 1)) and m * t == y
                    or all(-N <= j * t < 0 for j in range(1, m + 1)) and m * t == y
                    for t in range(-N, N + 1)
                )
                want.append(ok)
            assert Z.pm_table(m).tolist() == want


def test_beatty_terms():
    alpha = AlphaSpec.parse("sqrt2-1")
    M = make("beatty", 50, alpha)
    jumps = definable_set(M, P("f(x) < f(S(x))", "beatty"), "x")
    f = M.f_table
    assert jumps.positions.tolist() == [x for x in range(50) if f[x] < f[x + 1]]
    assert term_table(M, parse("x = f^2(x)", "beatty").right).tolist() == [int(f[f[x]]) for x in range(51)]


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 2**32))
def test_vectorized_matches_scalar_and_semantics(seed):
    family, param, text, params, mask = random_instance(random.Random(seed), 30)
    M = make(family, param)
    phi = P(text, family)
    fast = definable_set(M, phi, "x", params)
    slow = definable_set_scalar(M, phi, "x", params)
    assert fast.mask.tolist() == slow.mask.tolist() == mask
    assert alternation_number(fast) == alternations(mask)


_TWO = ["x < y", "S(x) = y", "exists z (x < z & z < y)", "x = y | y < S^2(min)", "forall z (z < x -> z < y)"]


@pytest.mark.parametrize("text", _TWO)
@pytest.mark.parametrize("size", [1, 2, 6, 11])
def test_count_tuples_vectorized_vs_scalar(text, size):
    M = make("ord", size)
    assert count_tuples(M, P(text), ["x", "y"]) == count_tuples_scalar(M, P(text), ["x", "y"])


def test_truth_table_shape():
    tab = truth_table(make("ord", 4), P("x < y"), ["x", "y"])
    assert tab.shape == (4, 4) and np.array_equal(tab, np.triu(np.ones((4, 4), dtype=bool), 1))
