"""Exact pseudo-differential symbol calculus on tori, crossed products by group
actions, transversal parametrices and a numeric spectral engine."""

__version__ = "0.1.0"

from .cones import ConicRegion
from .crossed import AlgebraElement, DiracOperator, ModeOperator, SymbolFamily
from .exact import ExactConstant, ExactScalar, TrigPolynomial
from .microlocal import GroupDescriptor, classify_symbol
from .symbols import MatrixSymbol, adjoint, compose

__all__ = [
    "AlgebraElement",
    "ConicRegion",
    "DiracOperator",
    "ExactConstant",
    "ExactScalar",
    "GroupDescriptor",
    "MatrixSymbol",
    "ModeOperator",
    "SymbolFamily",
    "TrigPolynomial",
    "adjoint",
    "classify_symbol",
    "compose",
]
