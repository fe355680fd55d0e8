"""Verification suites shared by the command line and the test-suite.

Each suite returns a list of :class:`Check` records (name, max residual,
tolerance).  Residuals are absolute unless a check name says otherwise.
"""

from __future__ import annotations

import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import ContractViolation, PoleError
from .exprlang import jet_function, unparse
from .factorization import BeamCoefficients, FactorPair, factorization_residuals_batch, principal_residual
from .families import (
    CHAZY_ALPHA,
    K_ROOTS,
    ChazyFamilySpec,
    LieFamilySpec,
    chazy_denominator_roots,
    chazy_r,
    chazy_sigma,
    gauge_coefficients,
    hypergeometric_identity_residuals,
    lie_poles,
    theorem1_coeffs,
    theorem1_r,
)
from .jets import DEFAULT_ORDER, Jet
from .symmetry import (
    X1,
    X2,
    X3,
    bracket,
    chazy_map_check,
    combine,
    gauge_field,
    random_manifold_points,
    symmetry_residual,
)

DEFAULT_TOL = 1e-9
POLE_EXCLUSION = 0.05
SUITES = ("factorization", "principal", "symmetry", "brackets", "chazy-map", "hypergeometric")

TEST_FUNCTIONS = ("exp(z)", "sin(3*z) + z^2", "cos(z)/(2 + z^2)", "1/(3 + z)", "z^5 - 2*z")
DEFAULT_GAUGES = ("1", "exp(z)", "1+z^2/4")
DEFAULT_CHAZY = ((0, 1, 1, 0), (-1, 0, 0, 1), (1, 1, 2, 1))
HYPERGEOMETRIC_TAUS = (0.005, 0.01, 0.02, 0.05)


@dataclass
class Check:
    name: str
    residual: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return math.isfinite(self.residual) and self.residual <= self.tolerance

    def to_dict(self) -> dict:
        return {"residual": self.residual, "tolerance": self.tolerance, "pass": self.passed}


def random_factor_pairs(rng: np.random.Generator, count: int = 5) -> list[FactorPair]:
    """Smooth (r, s) pairs with random coefficients, regular on ``[0, 1]``."""
    pairs = []
    for _ in range(count):
        c = rng.uniform(-1.0, 1.0, 6)
        r = f"{c[0]:.6f}*sin({1 + abs(c[1]):.6f}*z) + {c[2]:.6f}*z^2"
        s = f"{c[3]:.6f}*exp({c[4]:.6f}*z) + {c[5]:.6f}/(2 + z)"
        pairs.append(FactorPair.from_exprs(r, s))
    return pairs


def factorization_suite(rng: np.random.Generator, samples: int = 50, tol: float = DEFAULT_TOL) -> list[Check]:
    first = second = 0.0
    tests = [jet_function(U) for U in TEST_FUNCTIONS]
    pairs = random_factor_pairs(rng)
    for z in np.linspace(0.0, 1.0, samples):
        z = float(z)
        jets = [U(z, DEFAULT_ORDER) for U in tests]
        for fp in pairs:
            for a, b in factorization_residuals_batch(fp, jets, z):
                first, second = max(first, a), max(second, b)
    return [Check("R*R - L", first, tol), Check("RR* - Lhat", second, tol)]


def lie_principal_residual(spec: LieFamilySpec, zs: Sequence[float]) -> float:
    poles = lie_poles(spec, float(min(zs)), float(max(zs)))
    if poles:
        raise PoleError("gauge family is singular on the sampled interval", poles[0])
    worst = 0.0
    for z in zs:
        A, B = theorem1_coeffs(spec, float(z), 2)
        worst = max(worst, abs(principal_residual(theorem1_r(spec, float(z), 3), A, B)))
    return worst


def chazy_principal_residual(spec: ChazyFamilySpec, zs: Sequence[float], exclusion: float = POLE_EXCLUSION) -> float:
    """Max residual over the samples at least ``exclusion`` away from every pole."""
    poles = chazy_denominator_roots(spec)
    worst = 0.0
    for z in zs:
        if poles.size and np.min(np.abs(poles - z)) < exclusion:
            continue
        worst = max(worst, abs(principal_residual(chazy_r(spec, float(z), 3), Jet.constant(0.0, float(z), 2), 0.0)))
    return worst


def principal_suite(
    families: Sequence[LieFamilySpec | ChazyFamilySpec] | None = None,
    interval: tuple[float, float] = (0.0, 1.0),
    samples: int = 101,
    tol: float = DEFAULT_TOL,
) -> list[Check]:
    if families is None:
        families = [LieFamilySpec(a, C=2.0, k=k) for a in DEFAULT_GAUGES for k in K_ROOTS]
        families += [ChazyFamilySpec(*ks) for ks in DEFAULT_CHAZY]
    zs = np.linspace(*interval, samples)
    checks = []
    for fam in families:
        if isinstance(fam, LieFamilySpec):
            name = f"lie a={unparse(fam.a)} k={fam.k} C={fam.C:g}"
            checks.append(Check(name, lie_principal_residual(fam, zs), tol))
        else:
            checks.append(Check(f"chazy k={fam.ks}", chazy_principal_residual(fam, zs), tol))
    return checks


def symmetry_suite(
    rng: np.random.Generator,
    case: str = "I",
    a: str = "exp(z)",
    C1: float = 0.0,
    C2: float = 0.0,
    points: int = 100,
    tol: float = 1e-8,
) -> list[Check]:
    """Case I: the three generators of the unit beam.  Case II: the gauge field for ``a``."""
    if case == "I":
        coeffs = BeamCoefficients.zero()
        fields = [X1, X2, X3]
    elif case == "II":
        coeffs = gauge_coefficients(a, C1, C2)
        fields = [gauge_field(a)]
    else:
        raise ContractViolation(f"unknown symmetry case {case!r}; expected I or II")
    pts = random_manifold_points(coeffs, points, rng, (0.1, 0.9), 1.0)
    return [Check(f"{X.name} residual", max(abs(symmetry_residual(X, coeffs, p)) for p in pts), tol) for X in fields]


def bracket_suite(rng: np.random.Generator, points: int = 50, tol: float = 1e-10) -> list[Check]:
    table = [
        ("[X1,X2] - X1", bracket(X1, X2), X1),
        ("[X1,X3] - 2 X2", bracket(X1, X3), combine((2.0, X2))),
        ("[X2,X3] - X3", bracket(X2, X3), X3),
    ]
    zr = rng.uniform(-2.0, 2.0, (points, 2))
    checks = []
    for name, lhs, rhs in table:
        worst = 0.0
        for z, r in zr:
            (x1, e1), (x2, e2) = lhs(z, r), rhs(z, r)
            worst = max(worst, abs(x1 - x2), abs(e1 - e2))
        checks.append(Check(name, worst, tol))
    return checks


NON_SOLUTIONS = ("z", "sin(z) + z^2", "exp(z/2)/(1 + z^2)")


def chazy_map_suite(tol: float = DEFAULT_TOL) -> list[Check]:
    worst = 0.0
    for r in NON_SOLUTIONS:
        for z in np.linspace(0.1, 0.9, 9):
            lhs, rhs = chazy_map_check(r, float(z))
            worst = max(worst, abs(lhs - rhs))
    alpha_ok = CHAZY_ALPHA == Fraction(4, 27)
    sigma_ok = chazy_sigma(CHAZY_ALPHA) == Fraction(-1, 48)
    return [
        Check("principal - (27/8) chazy", worst, tol),
        Check("alpha == 4/27 (exact)", 0.0 if alpha_ok else math.inf, 0.0),
        Check("sigma == -1/48 (exact)", 0.0 if sigma_ok else math.inf, 0.0),
    ]


def hypergeometric_suite(taus: Sequence[float] = HYPERGEOMETRIC_TAUS, tol: float = 1e-8) -> list[Check]:
    checks = []
    for tau in taus:
        a, b = hypergeometric_identity_residuals(tau)
        checks.append(Check(f"tau={tau} first identity", a, tol))
        checks.append(Check(f"tau={tau} second identity", b, tol))
    return checks


def run_suite(name: str, rng: np.random.Generator, **options) -> list[Check]:
    runners: dict[str, Callable[[], list[Check]]] = {
        "factorization": lambda: factorization_suite(rng, **_pick(options, "samples", "tol")),
        "principal": lambda: principal_suite(**_pick(options, "families", "interval", "samples", "tol")),
        "symmetry": lambda: symmetry_suite(rng, **_pick(options, "case", "a", "C1", "C2", "points")),
        "brackets": lambda: bracket_suite(rng),
        "chazy-map": lambda: chazy_map_suite(**_pick(options, "tol")),
        "hypergeometric": lambda: hypergeometric_suite(),
    }
    if name not in runners:
        raise ContractViolation(f"unknown suite {name!r}; expected one of {SUITES}")
    return runners[name]()


def _pick(options: dict, *keys: str) -> dict:
    return {k: options[k] for k in keys if options.get(k) is not None}
