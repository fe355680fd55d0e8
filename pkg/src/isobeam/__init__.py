"""Iso-spectral beam operators: jets, factorization, solution families, symmetries and spectra."""

from .errors import (
    ContractViolation,
    DomainError,
    EvaluationError,
    IsobeamError,
    NumericalFailure,
    ParseError,
    PoleError,
    QuadratureError,
    SingularPointError,
    SpecViolation,
)
from .exprlang import evaluate, jet_function, parse, unparse
from .factorization import BeamCoefficients, FactorPair
from .families import ChazyFamilySpec, LieFamilySpec
from .jets import DEFAULT_ORDER, Jet, Jet2
from .spectral import BoundaryCondition, assemble, isospec_report, solve_spectrum, spectrum

__version__ = "0.1.0"

__all__ = [
    "BeamCoefficients",
    "BoundaryCondition",
    "ChazyFamilySpec",
    "ContractViolation",
    "DEFAULT_ORDER",
    "DomainError",
    "EvaluationError",
    "FactorPair",
    "IsobeamError",
    "Jet",
    "Jet2",
    "LieFamilySpec",
    "NumericalFailure",
    "ParseError",
    "PoleError",
    "QuadratureError",
    "SingularPointError",
    "SpecViolation",
    "assemble",
    "evaluate",
    "isospec_report",
    "jet_function",
    "parse",
    "solve_spectrum",
    "spectrum",
    "unparse",
]
