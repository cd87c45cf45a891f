"""Uniform quantifier elimination engines and the brute-force certification harness."""
from .common import (
    Counterexample,
    QEError,
    QEResult,
    QEUnsupported,
    Unchecked,
    VerifiedUpTo,
    verify_equivalence,
)
from .cyclic import certify_cyclic, is_lemma_shape, normal_form_cyclic, uniform_form
from .ordered import qe_block_predicate, qe_linear_order, sign_change_clause

__all__ = [
    "Counterexample",
    "QEError",
    "QEResult",
    "QEUnsupported",
    "Unchecked",
    "VerifiedUpTo",
    "certify_cyclic",
    "is_lemma_shape",
    "normal_form_cyclic",
    "qe_block_predicate",
    "qe_linear_order",
    "sign_change_clause",
    "uniform_form",
    "verify_equivalence",
]
