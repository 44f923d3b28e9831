"""Toolkit for second-order quantified Boolean formulas.

Quantification ranges over Boolean functions; the package provides a
brute-force semantic oracle, a text format, fragment classification,
equivalence-preserving rewrites, two specialized decision engines, and
Turing-machine hardness encoders.
"""

from .core import (
    And,
    Clause,
    Const,
    Exists,
    Forall,
    Formula,
    Iff,
    Implies,
    Interpretation,
    Literal,
    Not,
    Or,
    Term,
    TruthTable,
    Var,
    equivalent,
    evaluate,
    free_vars,
    instantiate,
)
from .textio import parse, print_formula
from .classify import FragmentProfile, classify

__all__ = [
    "And",
    "Clause",
    "Const",
    "Exists",
    "Forall",
    "Formula",
    "FragmentProfile",
    "Iff",
    "Implies",
    "Interpretation",
    "Literal",
    "Not",
    "Or",
    "Term",
    "TruthTable",
    "Var",
    "classify",
    "equivalent",
    "evaluate",
    "free_vars",
    "instantiate",
    "parse",
    "print_formula",
]

__version__ = "0.1.0"
