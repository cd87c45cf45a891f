"""Finite experiments on O-asymptotic classes of ordered structures.

Submodules: ``formula`` (syntax), ``structures`` (the families), ``evaluate``
(model checking and counting), ``qe`` (uniform quantifier elimination),
``decomposition`` (interval witnesses), ``celldecomp`` (cells in M^n, n <= 2),
``asymptotics`` (densities, Beatty statements, refutations) and ``cli``.
"""
from .formula import FormulaError, parse, render
from .structures import AlphaSpec, FiniteStructure, StructureError, make

__version__ = "0.1.0"

__all__ = ["AlphaSpec", "FiniteStructure", "FormulaError", "StructureError", "make", "parse", "render", "__version__"]
