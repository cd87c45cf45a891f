import random
from fractions import Fraction

import numpy as np
import pytest

from oracles import beatty_floor, best_intersection
from oasym.asymptotics import (
    AsymptoticsError,
    gamma_image,
    jump_bound_all,
    jump_density,
    k_intersection_check,
    measure_sweep,
    density_chain,
    preimage_profile,
    pseudocontinuity_bound,
    refute_block_class,
    weyl_check,
    weyl_masks,
)
from oasym.evaluate import IndexSet
from oasym.formula import MIN, Var, parse
from oasym.structures import AlphaSpec, make

F = Fraction
SQRT2 = AlphaSpec.parse("sqrt2-1")
GOLDEN = AlphaSpec.parse("golden")


def P(text, family="ord"):
    return parse(text, family)


# --- sweeps


def test_sweep_counts():
    s = measure_sweep("ocyc", P("P_2(x)", "ocyc"), [10, 50, 100])
    assert [r.count for r in s.rows] == [10, 50, 100]
    assert s.rows[1].density == F(50, 101)
    assert all(r.density == 1 for r in measure_sweep("ord", P("x = x"), [1, 5, 9]).rows)
    assert [r.count for r in measure_sweep("block", P("P(x)", "block"), [2, 3, 4]).rows] == [6, 14, 30]


def test_sweep_csv_and_order():
    s = measure_sweep("ocyc", P("P_2(x)", "ocyc"), [10, 20], target=F(1, 2))
    lines = s.to_csv().splitlines()
    assert lines[0] == "size,count,density_num,density_den,target,abs_err"
    assert lines[1] == "21,10,10,21,1/2,1/42"
    with pytest.raises(AsymptoticsError):
        measure_sweep("ord", P("x = x"), [5, 5])


def test_sweep_with_proportional_parameter():
    s = measure_sweep("ord", P("x < a"), [30, 60, 90], params=lambda M: {"a": M.size // 3})
    assert [r.density for r in s.rows] == [F(1, 3)] * 3


# --- Beatty statements


def test_jump_density():
    j = jump_density(SQRT2, 10**5)
    assert j.within_two
    assert abs(float(j.density) - SQRT2.approx()) <= 2 / (10**5 + 1)
    assert jump_density(SQRT2, 1).count == 0
    g = jump_density(GOLDEN, 10**6)
    assert g.within_two and abs(float(g.density) - GOLDEN.approx()) < 2e-6
    with pytest.raises(AsymptoticsError):
        jump_density(SQRT2, 0)


@pytest.mark.parametrize("alpha", [SQRT2, GOLDEN, AlphaSpec(1, 1, 3, 4)])
def test_jump_bound_matches_pointwise(alpha):
    ok, first = jump_bound_all(alpha, 3000)
    pointwise = [jump_density(alpha, n).within_two for n in range(1, 3001)]
    assert ok == all(pointwise)
    if not ok:
        assert pointwise.index(False) + 1 == first


def test_weyl():
    g = weyl_check(GOLDEN, 1, 10**6, F(1, 100))
    assert g.agree_pointwise and g.within
    s = weyl_check(SQRT2, 2, 10**5, F(1, 100))
    assert s.agree_pointwise and s.within
    assert abs(float(s.density) - (1 - 2 * SQRT2.approx())) < 0.01
    with pytest.raises(AsymptoticsError):
        weyl_check(GOLDEN, 2, 100)


def test_weyl_masks_against_oracle():
    n = 2000
    for alpha, M in [(SQRT2, 1), (SQRT2, 2), (GOLDEN, 1)]:
        direct, crit = weyl_masks(alpha, M, n)
        f = [beatty_floor(alpha.p, alpha.q, alpha.d, alpha.r, x) for x in range(n + 1)]
        assert direct.tolist() == [f[x] == f[x + M] for x in range(n - M + 1)]
        assert np.array_equal(direct, crit)


def test_preimage_profiles():
    p = preimage_profile(SQRT2, 10**4)
    assert p.N == 2 and set(p.interior_sizes) <= {2, 3} and p.interior_ok
    g = preimage_profile(GOLDEN, 10**4)
    assert g.N == 1 and set(g.interior_sizes) <= {1, 2}
    for alpha in (SQRT2, GOLDEN):
        three = preimage_profile(alpha, 1000, 3)
        assert three.image_gap_free
        f = [beatty_floor(alpha.p, alpha.q, alpha.d, alpha.r, x) for x in range(1001)]
        assert three.image_top == f[f[f[1000]]]


def test_pseudocontinuity():
    M = make("beatty", 10**5, GOLDEN)
    assert pseudocontinuity_bound(M, P("f(x) = x", "beatty").left, 5) == 1
    assert pseudocontinuity_bound(M, Var("x"), 5) == 1
    assert pseudocontinuity_bound(M, MIN, 5) == 0
    assert pseudocontinuity_bound(make("ord", 20), P("S^3(x) = x").left, 5) == 1
    with pytest.raises(AsymptoticsError):
        pseudocontinuity_bound(M, Var("a"), 5)


# --- block refutation


def test_refute_small_block():
    rep = refute_block_class(5, 2, 1, mode="exhaustive")
    assert rep.refuted is True and rep.exhaustive and rep.details["searched_tuples"] > 0
    single = refute_block_class(1, 2, 1, mode="exhaustive")
    assert single.refuted is False and single.witness is not None


def test_refute_analytic_large_block():
    rep = refute_block_class(20, 3, 5, mode="analytic")
    assert rep.refuted is True
    d = rep.details
    assert d["sparsest_window"]["count"] > 5
    assert d["gap_instance"]["holds"] and d["fewest_gap_ends"] > 0
    assert rep.to_json()["mode"] == "analytic"


def test_analytic_never_claims_witness():
    rep = refute_block_class(5, 2, 1, mode="analytic")
    assert rep.refuted is None and rep.witness is None


def test_chain_arithmetic():
    c = density_chain(20, 3, F(5), F(1, 8))
    assert not c["premise_holds"] and c["required_n"] == 6913 and not c["inequality_holds"]
    assert density_chain(7000, 3, F(5), F(1, 8))["inequality_holds"]


def test_refute_guards():
    with pytest.raises(AsymptoticsError):
        refute_block_class(12, 2, 1, mode="exhaustive")
    with pytest.raises(AsymptoticsError):
        refute_block_class(3, 2, 1, mode="nope")


# --- k-intersections


def _idx(members, size):
    return IndexSet.from_positions(sorted(members), size)


def test_k_intersection_examples():
    evens = _idx(range(0, 10, 2), 10)
    r = k_intersection_check([evens, evens], (0, 9), F(1, 2), 2)
    assert r.found == (1, 2) and r.measure == F(1, 2) and r.bound == F(1, 8)
    low, high = _idx(range(5), 10), _idx(range(5, 10), 10)
    r = k_intersection_check([low, high, low], (0, 9), F(1, 2), 2)
    assert r.found == (1, 3) and r.measure == F(1, 2)


def test_k_intersection_random_halves():
    rng = random.Random(5)
    sets = [set(rng.sample(range(100), 50)) for _ in range(20)]
    r = k_intersection_check([_idx(s, 100) for s in sets], (0, 99), F(1, 2), 3)
    assert r.found is not None and r.measure >= F(1, 2) ** 9


def test_k_intersection_reports_best_on_failure():
    # disjoint quarters: no pair meets, best measure 0
    sets = [set(range(i * 25, i * 25 + 25)) for i in range(4)]
    r = k_intersection_check([_idx(s, 100) for s in sets], (0, 99), F(1, 4), 2)
    assert r.found is None and r.measure == 0
    assert best_intersection(sets, (0, 99), 2)[0] == 0


def test_k_intersection_guards():
    a = _idx(range(10), 20)
    with pytest.raises(AsymptoticsError):
        k_intersection_check([a, a], (0, 19), F(3, 4), 2)
    with pytest.raises(AsymptoticsError):
        k_intersection_check([a, _idx([1], 20)], (0, 19), F(1, 2), 2)
    with pytest.raises(AsymptoticsError):
        k_intersection_check([a], (0, 19), F(1, 2), 2)


# --- gamma image


def test_gamma_initial_third():
    img = gamma_image("ord", P("x < a"), [300, 600, 900], F(1, 100), params=lambda M: {"a": M.size // 3})
    assert img.points == [] and len(img.intervals) == 1
    lo, hi = img.intervals[0]
    assert lo == 0 and abs(hi - F(1, 3)) <= F(1, 100)


def test_gamma_empty_and_dense():
    assert gamma_image("ord", P("x < min"), [100, 200], F(1, 100)).intervals == []
    img = gamma_image("ocyc", P("P_2(x)", "ocyc"), [500, 1000], F(1, 100))
    assert img.intervals == [(0, 1)]


def test_gamma_points():
    img = gamma_image("ord", P("x = min | x = S^-1(max)"), [200, 400, 800], F(1, 50))
    assert img.intervals == [] and img.points[0] == 0 and abs(img.points[-1] - 1) < F(1, 50)
    with pytest.raises(AsymptoticsError):
        gamma_image("ord", P("x = x"), [10], F(1, 2))
