"""Exact finite-horizon experiments on density bisection, statistical
independence and a finite condition algebra over subsets of the naturals."""

__version__ = "0.1.0"

from .kernels import BACKEND
from .rationals import format_rational, parse_rational
from .sets import (
    BudgetExhausted,
    PreconditionError,
    SchemaSyntaxError,
    SetSchema,
    evens,
    odds,
    omega,
    parse_schema,
    residues,
)

__all__ = [
    "BACKEND",
    "BudgetExhausted",
    "PreconditionError",
    "SchemaSyntaxError",
    "SetSchema",
    "__version__",
    "evens",
    "format_rational",
    "odds",
    "omega",
    "parse_rational",
    "parse_schema",
    "residues",
]
