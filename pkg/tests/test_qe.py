import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oasym.evaluate import definable_set
from oasym.formula import TRUE, Var, is_quantifier_free, parse, render
from oasym.qe import (
    Counterexample,
    QEUnsupported,
    VerifiedUpTo,
    is_lemma_shape,
    normal_form_cyclic,
    qe_block_predicate,
    qe_linear_order,
    sign_change_clause,
    verify_equivalence,
)
from oasym.qe.common import QEError
from oasym.structures import make


def P(text, family="ord"):
    return parse(text, family)


def test_interval_nonempty():
    phi = P("exists x (a < x & x < b)")
    out = qe_linear_order(phi).output
    assert is_quantifier_free(out)
    assert verify_equivalence("ord", phi, out, 20) == VerifiedUpTo(20, 20)
    assert isinstance(verify_equivalence("ord", phi, P("S(a) < b"), 20), VerifiedUpTo)


def test_exists_equal_is_true():
    out = qe_linear_order(P("exists x (x = a)")).output
    assert isinstance(verify_equivalence("ord", TRUE, out, 12, variables=["a"]), VerifiedUpTo)


def test_three_bounds_case_split():
    phi = P("exists x (a < x & x < b & c < x)")
    out = qe_linear_order(phi).output
    assert isinstance(verify_equivalence("ord", phi, out, 20), VerifiedUpTo)


def test_mixed_successor_chain():
    # clamping makes S(S^-2(max)) differ from S^-1(max) on two points
    phi = P("exists x (S^-2(max) < x & x < a)")
    assert isinstance(verify_equivalence("ord", phi, qe_linear_order(phi).output, 20), VerifiedUpTo)
    phi = P("exists x (S(S^-3(x)) = a)")
    assert isinstance(verify_equivalence("ord", phi, qe_linear_order(phi).output, 15), VerifiedUpTo)


def test_ord_rejects_foreign_symbols():
    with pytest.raises(Exception):
        qe_linear_order(P("exists x P(x)", "block"))


def test_block_substitution():
    phi = P("exists x (x = c & P(x))", "block")
    out = qe_block_predicate(phi).output
    assert isinstance(verify_equivalence("block", phi, out, 3), VerifiedUpTo)
    assert isinstance(verify_equivalence("block", P("P(c)", "block"), out, 3), VerifiedUpTo)


def test_block_interval_with_p():
    for text in ["exists x (a < x & x < b & P(x))", "exists x (a < x & x < b & !P(x))"]:
        phi = P(text, "block")
        assert isinstance(verify_equivalence("block", phi, qe_block_predicate(phi).output, 4), VerifiedUpTo)


def test_verbatim_sign_change_clause_fails_on_empty_interval():
    phi = P("exists x (a < x & x < b & P(x))", "block")
    res = verify_equivalence("block", phi, sign_change_clause(Var("a"), Var("b")), 3)
    assert isinstance(res, Counterexample)
    assert res.structure["param"] == 2 and res.assignment == {"a": 1, "b": 1}
    assert (res.lhs, res.rhs) == (False, True)


def test_block_p_at_successor_offset():
    phi = P("exists x (P(S^2(x)) & x < a)", "block")
    assert isinstance(verify_equivalence("block", phi, qe_block_predicate(phi).output, 4), VerifiedUpTo)


def test_block_unsupported_shapes():
    with pytest.raises(QEUnsupported):
        qe_block_predicate(P("exists x exists y (x < y & P(x) & !P(y) & y < a)", "block"))
    with pytest.raises(QEUnsupported):
        qe_block_predicate(P("exists x (x < R(x))", "block"))


def test_cyclic_identity():
    res = normal_form_cyclic(P("P_2(x)", "ocyc"), "x", certify=(4, 5, 6))
    assert render(res.output) == "P_2(x)"
    assert res.status == VerifiedUpTo(6, 3)


def test_cyclic_halving_is_total():
    res = normal_form_cyclic(P("exists y (y + y = x)", "ocyc"), "x", certify=(4, 5))
    assert isinstance(res.status, VerifiedUpTo)
    Z9 = make("ocyc", 4)
    assert definable_set(Z9, res.output, "x").mask.all()


def test_cyclic_positive_halves():
    res = normal_form_cyclic(P("exists y (0 < y & y + y = x)", "ocyc"), "x", certify=(4, 5, 6))
    assert isinstance(res.status, VerifiedUpTo)
    assert is_lemma_shape(res.output, "x")
    Z9 = make("ocyc", 4)
    X = definable_set(Z9, res.output, "x")
    assert sorted(Z9.value(p) for p in X.positions) == [-3, -1, 2, 4]


def test_cyclic_parameters():
    phi = P("exists y (x < y & P_2(y) & y < a)", "ocyc")
    res = normal_form_cyclic(phi, "x", certify=(4, 5, 6))
    assert isinstance(res.status, VerifiedUpTo)
    assert res.output is None and res.notes and res.uniform
    Z = make("ocyc", 5)
    # parameters are labels
    inst = normal_form_cyclic(phi, "x", N=5, params={"a": 3})
    assert is_lemma_shape(inst.output, "x")
    got = definable_set(Z, inst.output, "x")
    want = definable_set(Z, phi, "x", {"a": Z.position_of(3)})
    assert got.mask.tolist() == want.mask.tolist()


def test_verify_equivalence_counterexamples():
    res = verify_equivalence("ord", P("x < a"), P("x < b"), 20)
    assert isinstance(res, Counterexample) and res.structure["param"] == 2
    assert isinstance(verify_equivalence("ocyc", P("P_2(x)", "ocyc"), P("!P_2(x)", "ocyc"), 5), Counterexample)


def test_certification_work_guard():
    phi = P("exists x exists y exists z (a < x & x < y & y < z & z < b & c < d & d < e)")
    with pytest.raises(QEError):
        verify_equivalence("ord", phi, phi, 60)


# --- generated formulas, certified against brute force

_atoms = ["a < x", "x < a", "x = b", "S(x) < b", "S^-1(b) < x", "x = S^2(min)", "S(a) = x", "x != max", "c < S^2(x)"]


@st.composite
def _qf(draw, depth=2):
    if depth == 0 or draw(st.booleans()):
        return draw(st.sampled_from(_atoms))
    op = draw(st.sampled_from(["&", "|"]))
    neg = "!" if draw(st.booleans()) else ""
    return f"{neg}(({draw(_qf(depth - 1))}) {op} ({draw(_qf(depth - 1))}))"


@settings(max_examples=60, deadline=None)
@given(_qf(), st.sampled_from(["exists", "forall"]))
def test_generated_ord_certifies(body, q):
    phi = P(f"{q} x ({body})")
    out = qe_linear_order(phi).output
    assert is_quantifier_free(out)
    assert isinstance(verify_equivalence("ord", phi, out, 10), VerifiedUpTo)


@settings(max_examples=40, deadline=None)
@given(_qf(), st.sampled_from(["P(x)", "!P(x)", "P(S(x))"]))
def test_generated_block_certifies(body, lit):
    phi = P(f"exists x (({body}) & {lit})", "block")
    assert isinstance(verify_equivalence("block", phi, qe_block_predicate(phi).output, 3), VerifiedUpTo)


_cyc_atoms = ["P_2(x)", "P_3(x + a)", "x < a", "x + x < a", "x = 1", "P_2(y + x)", "y < x", "y + y = x"]


@settings(max_examples=25, deadline=None)
@given(st.lists(st.sampled_from(_cyc_atoms), min_size=1, max_size=3), st.booleans())
def test_generated_cyclic_certifies(atoms, negate):
    body = " & ".join(atoms)
    text = f"exists y ({'!' if negate else ''}({body}))" if any("y" in a for a in atoms) else body
    res = normal_form_cyclic(P(text, "ocyc"), "x", certify=(4, 5))
    assert isinstance(res.status, VerifiedUpTo)
