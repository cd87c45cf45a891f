from fractions import Fraction

import pytest

from oasym.celldecomp import (
    Cell,
    CellDecomposition,
    CellError,
    CellGuardError,
    cell_dim,
    check_cell_counting,
    decompose_cells,
    max_one_cell,
)
from oasym.decomposition import DecompositionWitness
from oasym.evaluate import count_tuples
from oasym.formula import parse
from oasym.structures import make

F = Fraction


def P(text):
    return parse(text, "ord")


def test_cell_dim_and_one_cells():
    interval = Cell((1,), [(i,) for i in range(3, 10)])
    assert cell_dim(interval) == 1 and max_one_cell(interval) == 7
    graph = Cell((1, 0), [(i, i + 1) for i in range(9)], descriptions=((1, 1),))
    assert cell_dim(graph) == 1 and max_one_cell(graph) == 9
    band = Cell((1, 1), [(i, j) for i in range(4) for j in range(i + 1, 6)])
    assert cell_dim(band) == 2
    assert max_one_cell(Cell((1,), [(4,)])) == 1


def test_cell_validation():
    with pytest.raises(CellError):
        Cell((1,), [])
    with pytest.raises(CellError):
        Cell((0, 1), [(0, 0)])
    with pytest.raises(CellError):
        Cell((1, 1), [(0,)])


def test_one_variable_example():
    M = make("ord", 10)
    w = DecompositionWitness((0, 7, 9), (F(1), F(0)), 1)
    D = decompose_cells(M, P("x < a"), ["x"], {"a": 7}, witness=w)
    assert [Z.members for Z in D.cells] == [((0,),), tuple((i,) for i in range(1, 7)), ((7,),), ((8,),), ((9,),)]
    assert D.alpha == (0, 1, 0, 0, 0)
    assert D.C == 1 and D.partition_ok()
    rep = check_cell_counting(M, P("x < a"), D, ["x"], {"a": 7})
    assert rep.holds
    flagged = check_cell_counting(M, P("x < a"), D.with_alpha(1, F(1, 2)), ["x"], {"a": 7})
    assert flagged.flagged == [1]


def test_false_gives_zero_measures():
    M = make("ord", 12)
    D = decompose_cells(M, P("x < min"), ["x"])
    assert set(D.alpha) == {0} and D.C == 0
    D2 = decompose_cells(M, P("x < min & y = y"), ["x", "y"])
    assert set(D2.alpha) == {0} and D2.partition_ok()


def test_full_space_cell():
    M = make("ord", 6)
    full = Cell((1, 1), [(i, j) for i in range(6) for j in range(6)])
    D = CellDecomposition(2, 6, [full], (F(1),), F(0))
    rep = check_cell_counting(M, P("x = x & y = y"), D, ["x", "y"])
    assert rep.holds and rep.fitted_C == 0


@pytest.mark.parametrize("text", ["x < y", "S(x) = y", "x < y & y < S^3(x)", "exists z (x < z & z < y)"])
@pytest.mark.parametrize("size", [1, 3, 8, 25])
def test_two_variable_partition_and_counts(text, size):
    M = make("ord", size)
    D = decompose_cells(M, P(text), ["x", "y"])
    assert D.partition_ok()
    rep = check_cell_counting(M, P(text), D, ["x", "y"])
    assert rep.holds
    # the cell counts add up to the tuple count
    assert sum(c.count for c in rep.cells) == count_tuples(M, P(text), ["x", "y"])
    assert "compositional_bound" in D.to_json()


def test_parameters():
    M = make("ord", 15)
    D = decompose_cells(M, P("x < a & a < y"), ["x", "y"], {"a": 6})
    assert check_cell_counting(M, P("x < a & a < y"), D, ["x", "y"], {"a": 6}).holds


def test_guards():
    with pytest.raises(CellGuardError):
        decompose_cells(make("ord", 5), P("x < y & y < z"), ["x", "y", "z"])
    with pytest.raises(CellGuardError):
        decompose_cells(make("ord", 61), P("x < y"), ["x", "y"])
    with pytest.raises(CellError):
        decompose_cells(make("ord", 5), P("x < a"), ["x"])
    D = decompose_cells(make("ord", 5), P("x < y"), ["x", "y"])
    with pytest.raises(CellError):
        check_cell_counting(make("ord", 6), P("x < y"), D, ["x", "y"])
