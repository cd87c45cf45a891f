import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oasym.formula import (
    MIN,
    And,
    Eq,
    Exists,
    FApp,
    FormulaError,
    Lt,
    Or,
    PredPm,
    S,
    SignatureError,
    Succ,
    Sum,
    Var,
    free_vars,
    parse,
    render,
    substitute,
)


def test_parse_examples():
    assert parse("exists x (a < x & x < b)", "ord") == Exists("x", And((Lt(Var("a"), Var("x")), Lt(Var("x"), Var("b")))))
    assert parse("P_2(x + b)", "ocyc") == PredPm(2, Sum(Var("x"), Var("b")))
    assert parse("f(x) < f(S(x))", "beatty") == Lt(FApp(1, Var("x")), FApp(1, Succ(Var("x"), 1)))


def test_render_examples():
    assert render(Eq(Var("x"), S(MIN, 3))) == "x = S^3(min)"
    assert render(PredPm(2, Var("x"))) == "P_2(x)"
    text = render(Or((And((Lt(Var("x"), Var("a")), Eq(Var("x"), Var("b")))), Lt(Var("b"), Var("x")))))
    assert "(" in text and parse(text, "ord") == parse("(x < a & x = b) | b < x", "ord")


def test_free_vars():
    assert free_vars(parse("x < a", "ord")) == ["x", "a"]
    assert free_vars(parse("exists x (x < a)", "ord")) == ["a"]
    assert free_vars(parse("forall x exists y (x < y | x = max)", "ord")) == []


def test_substitute():
    phi = parse("x < a", "ord")
    assert render(substitute(phi, {"a": S(MIN, 2)})) == "x < S^2(min)"
    assert substitute(phi, {"x": Var("x")}) == phi
    captured = substitute(parse("exists a (x < a)", "ord"), {"x": Var("a")})
    assert isinstance(captured, Exists) and captured.var != "a"
    assert free_vars(captured) == ["a"]


def test_successor_folding_respects_clamping():
    assert S(S(Var("x"), 2), 3) == Succ(Var("x"), 5)
    assert S(S(Var("x"), -2), -1) == Succ(Var("x"), -3)
    # a clamped step down followed by a step up is not a shorter step
    assert S(S(Var("x"), -2), 1) == Succ(Succ(Var("x"), -2), 1)
    assert S(S(MIN, -1), 0) == MIN


@pytest.mark.parametrize(
    "text, family",
    [
        ("x < ", "ord"),
        ("exists (x < a)", "ord"),
        ("P(x)", "ord"),
        ("x + y = 0", "ord"),
        ("f(x) = 0", "ocyc"),
        ("x < a )", "ord"),
    ],
)
def test_malformed_or_out_of_signature(text, family):
    with pytest.raises(FormulaError):
        parse(text, family)


def test_error_carries_position():
    with pytest.raises(FormulaError) as info:
        parse("x < a & & b < x", "ord")
    assert info.value.pos is not None and 0 <= info.value.pos <= len("x < a & & b < x")


def test_signature_error_is_formula_error():
    assert issubclass(SignatureError, FormulaError)


# --- round trips over generated formulas

_terms = st.sampled_from(["x", "a", "min", "max", "S(x)", "S^2(a)", "S^-1(max)", "S^3(min)"])


@st.composite
def _ord_formula(draw, depth=3):
    if depth == 0 or draw(st.booleans()):
        op = draw(st.sampled_from(["<", "=", "!="]))
        return f"{draw(_terms)} {op} {draw(_terms)}"
    kind = draw(st.sampled_from(["&", "|", "->", "<->", "!", "exists", "forall"]))
    if kind == "!":
        return f"!({draw(_ord_formula(depth - 1))})"
    if kind in ("exists", "forall"):
        return f"{kind} x ({draw(_ord_formula(depth - 1))})"
    return f"({draw(_ord_formula(depth - 1))}) {kind} ({draw(_ord_formula(depth - 1))})"


@settings(max_examples=200, deadline=None)
@given(_ord_formula())
def test_render_parse_round_trip(text):
    phi = parse(text, "ord")
    assert parse(render(phi), "ord") == phi
