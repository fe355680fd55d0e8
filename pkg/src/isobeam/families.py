"""Closed-form solution families of the principal equation.

Two families are built here:

* the gauge family: for a nonvanishing gauge function ``a(z)`` the
  coefficients (A, B) below admit the one-parameter symmetry generated by
  ``a d/dz - (a' r + 2 a'') d/dr``; with both integration constants zero the
  ansatz ``v = k u^2`` on the first-order invariants produces
  ``r = 1/(C a - k a Q) - 2 a'/a`` with ``Q(z) = int_0^z 1/a`` and
  ``k`` a root of ``12k^3 - 19k^2 + 8k - 1``;
* the rational family for the unit beam (A = B = 0), obtained from the
  parametric solution of the Chazy equation with ``alpha = 4/27``.

Supporting pieces: adaptive Gauss-Kronrod quadrature, the Gauss
hypergeometric series and the exact hypergeometric identities used by the
reparametrization.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import (
    ContractViolation,
    DomainError,
    NumericalFailure,
    PoleError,
    QuadratureError,
    SpecViolation,
)
from .exprlang import ExprAst, as_ast, evaluate, jet_function
from .factorization import BeamCoefficients, FactorPair
from .jets import Jet, jet_integrate

# ---------------------------------------------------------------------------
# cubic for the ansatz exponent

K_ROOTS = (Fraction(1, 4), Fraction(1, 3), Fraction(1))


def ansatz_cubic(k):
    return 12 * k**3 - 19 * k**2 + 8 * k - 1


if any(ansatz_cubic(k) != 0 for k in K_ROOTS):  # exact rational check at import
    raise AssertionError("tabulated ansatz roots do not solve the cubic")


def k_roots() -> tuple[Fraction, Fraction, Fraction]:
    """The three admissible ansatz constants, exactly."""
    return K_ROOTS


def parse_k(value) -> Fraction:
    """Accept ``"1/4"``, ``0.25``, ``Fraction(1, 4)``...; reject anything but the three roots."""
    try:
        k = Fraction(value).limit_denominator(10**6) if not isinstance(value, str) else Fraction(value.strip())
    except (ValueError, TypeError, OverflowError, ZeroDivisionError) as exc:
        raise SpecViolation(f"k must be one of 1/4, 1/3, 1; got {value!r}") from exc
    if k not in K_ROOTS:
        raise SpecViolation(f"k must be one of 1/4, 1/3, 1; got {value}")
    return k


# ---------------------------------------------------------------------------
# quadrature

_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])
_NODES = np.concatenate((-_XGK[:-1], _XGK[::-1]))
_WK15 = np.concatenate((_WGK[:-1], _WGK[::-1]))
_WG7 = np.zeros(15)
_WG7[1:7:2] = _WG[:3]
_WG7[7] = _WG[3]
_WG7[9:14:2] = _WG[2::-1]


def _as_integrand(f):
    if callable(f):
        return lambda x: np.array([float(f(t)) for t in x])
    node = as_ast(f)
    return lambda x: np.broadcast_to(np.asarray(evaluate(node, x), dtype=float), x.shape)


def _gk15(f, a: float, b: float) -> tuple[float, float]:
    c, h = 0.5 * (a + b), 0.5 * (b - a)
    y = f(c + h * _NODES)
    k = h * np.dot(_WK15, y)
    g = h * np.dot(_WG7, y)
    return k, abs(k - g)


def quadrature(f, lo: float, hi: float, tol: float = 1e-12, max_intervals: int = 2000) -> float:
    """Adaptive Gauss-Kronrod (7/15) integral of ``f`` over ``[lo, hi]``.

    ``f`` is an expression (text or tree) or a scalar callable.  Intervals
    with the largest embedded error estimate are bisected until the summed
    estimate is below ``tol``.
    """
    if tol <= 0:
        raise ContractViolation("tolerance must be positive")
    if lo == hi:
        return 0.0
    if lo > hi:
        return -quadrature(f, hi, lo, tol, max_intervals)
    g = _as_integrand(f)
    total, err = _gk15(g, lo, hi)
    heap = [(-err, lo, hi, total)]
    n = 1
    while sum(-e for e, *_ in heap) > tol:
        if n >= max_intervals:
            raise QuadratureError("adaptive quadrature did not converge", sum(-e for e, *_ in heap))
        _, a, b, _ = heapq.heappop(heap)
        m = 0.5 * (a + b)
        for lo_, hi_ in ((a, m), (m, b)):
            v, e = _gk15(g, lo_, hi_)
            heapq.heappush(heap, (-e, lo_, hi_, v))
        n += 1
    if not all(math.isfinite(v) for *_, v in heap):
        raise QuadratureError("integrand produced non-finite values", math.inf)
    return float(math.fsum(v for *_, v in heap))


# ---------------------------------------------------------------------------
# gauge family


@dataclass(frozen=True)
class LieFamilySpec:
    """Parameters of the gauge family.  ``a`` must not vanish on the working interval."""

    a: ExprAst
    C: float = 1.0
    k: Fraction = Fraction(1)
    C1: float = 0.0
    C2: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "a", as_ast(self.a))
        object.__setattr__(self, "k", parse_k(self.k))


def _gauge_jet(spec: LieFamilySpec, z: float, order: int) -> Jet:
    a = jet_function(spec.a)(z, order)
    if a.value == 0.0:
        raise PoleError(f"gauge function vanishes at z={z}", (z, z))
    return a


def gauge_coefficients_jets(a: Jet, C1: float = 0.0, C2: float = 0.0) -> tuple[Jet, Jet]:
    """(A, B) of the one-symmetry class from a jet of ``a`` (order drops by 4)."""
    n = a.order - 4
    if n < 0:
        raise ContractViolation("gauge jet needs order >= 4")
    d = [a.derivative(k).truncate(n) for k in range(5)]
    a0, a1, a2, a3, a4 = d
    A = (5.0 * a1 * a1 - 10.0 * a0 * a2 + 2.0 * C1) / (2.0 * a0 * a0)
    num = (
        81.0 * a1**4
        + 12.0 * a1 * a1 * (3.0 * C1 - 17.0 * a0 * a2)
        + 72.0 * a0 * a0 * a1 * a3
        + 4.0 * (C1 * C1 + 4.0 * C2 - 6.0 * C1 * a0 * a2 + 21.0 * a0 * a0 * a2 * a2 - 6.0 * a0**3 * a4)
    )
    B = num / (16.0 * a0**4)
    return A, B


def theorem1_coeffs(spec: LieFamilySpec, z: float, order: int = 2) -> tuple[Jet, Jet]:
    """Jets of A and B (both of ``order``) for the gauge ``spec.a`` and constants C1, C2."""
    a = _gauge_jet(spec, z, order + 4)
    return gauge_coefficients_jets(a, spec.C1, spec.C2)


def gauge_coefficients(a, C1: float = 0.0, C2: float = 0.0) -> BeamCoefficients:
    """(A, B) as jet functions of z for an arbitrary gauge expression."""
    af = jet_function(a)
    last: dict = {}  # A and B are usually requested in pairs at the same point

    def jets(z0: float, order: int):
        key = (z0, order)
        if key not in last:
            aj = af(z0, order + 4)
            if aj.value == 0.0:
                raise PoleError(f"gauge function vanishes at z={z0}", (z0, z0))
            last.clear()
            last[key] = gauge_coefficients_jets(aj, C1, C2)
        return last[key]

    return BeamCoefficients(lambda z0, n: jets(z0, n)[0], lambda z0, n: jets(z0, n)[1])


def gauge_integral(spec: LieFamilySpec, z: float, tol: float = 1e-13) -> float:
    """``Q(z) = int_0^z dt / a(t)``."""
    node = spec.a
    return quadrature(lambda t: 1.0 / float(evaluate(node, t)), 0.0, z, tol)


def bernoulli_w(spec: LieFamilySpec, z: float, order: int = 3, Q: float | None = None) -> Jet:
    """Jet of ``w = 1/(C a - k a Q)``, the Bernoulli variable ``r + 2a'/a``."""
    _require_closed_form(spec)
    a = _gauge_jet(spec, z, order)
    if Q is None:
        Q = gauge_integral(spec, z)
    inv_a = 1.0 / a.truncate(order - 1) if order >= 1 else None
    Qj = jet_integrate(inv_a, Q) if inv_a is not None else Jet.constant(Q, z, 0)
    den = a * (spec.C - float(spec.k) * Qj)
    if abs(den.value) < 1e-300 or abs(spec.C - float(spec.k) * Q) <= 1e-14 * max(1.0, abs(spec.C)):
        raise PoleError(f"C a - k a Q vanishes at z={z}", (z, z))
    return 1.0 / den


def _require_closed_form(spec: LieFamilySpec) -> None:
    if spec.C1 != 0.0 or spec.C2 != 0.0:
        raise SpecViolation("the closed-form gauge family requires C1 = C2 = 0")


def theorem1_r(spec: LieFamilySpec, z: float, order: int = 3, Q: float | None = None) -> Jet:
    """Jet of ``r = 1/(C a - k a Q) - 2 a'/a`` at ``z``.

    The quadrature value of ``Q(z)`` seeds the jet; its derivatives come from
    ``Q' = 1/a`` exactly.  Pass ``Q`` to reuse a precomputed integral.
    """
    w = bernoulli_w(spec, z, order, Q)
    a = _gauge_jet(spec, z, order + 1)
    return w - 2.0 * a.derivative() / a.truncate(order)


def bernoulli_residual(spec: LieFamilySpec, z: float) -> float:
    """``w' + (a'/a) w - k w^2`` at ``z``."""
    w = bernoulli_w(spec, z, 1)
    a = _gauge_jet(spec, z, 1)
    return w.coeffs[1] + a.coeffs[1] / a.coeffs[0] * w.coeffs[0] - float(spec.k) * w.coeffs[0] ** 2


def first_order_invariants(a: Jet, r: Jet) -> tuple[Jet, Jet]:
    """``u = a r + 2a'`` and ``v = a^2 r' + a a' r + 2 a a''``; order drops by 2 relative to ``a``."""
    n = min(a.order - 2, r.order - 1)
    a0, a1, a2 = (a.derivative(k).truncate(n) for k in range(3))
    r0, r1 = r.truncate(n), r.derivative().truncate(n)
    u = a0 * r0 + 2.0 * a1
    v = a0 * a0 * r1 + a0 * a1 * r0 + 2.0 * a0 * a2
    return u, v


def reduced_residual(u: Jet, v: Jet, C1: float = 0.0, C2: float = 0.0) -> float:
    """Residual of the second-order equation satisfied by ``v(u)``.

    ``u`` and ``v`` are jets in ``z`` of order >= 2; ``dv/du`` and
    ``d^2v/du^2`` follow from the chain rule.
    """
    u0, u1, u2 = u.coeffs[:3]
    v0, v1, v2 = v.coeffs[:3]
    if u1 == 0.0:
        raise PoleError("u'(z) = 0: v is not a function of u here")
    dv = v1 / u1
    d2v = (v2 * u1 - v1 * u2) / u1**3
    lhs = 2.0 * v0 * v0 * d2v
    rhs = (
        6.0 * u0 * v0 * dv
        - 2.0 * v0 * dv * dv
        + u0**4
        - 8.0 * u0 * u0 * v0
        + 7.0 * v0 * v0
        + 2.0 * C1 * u0 * u0
        - 4.0 * C1 * v0
        - 4.0 * C2
    )
    return float(lhs - rhs)


def lie_poles(spec: LieFamilySpec, lo: float, hi: float, samples: int = 400) -> list[tuple[float, float]]:
    """Brackets where ``a`` or ``C - k Q`` changes sign or vanishes.

    The scan covers the integration path from 0 as well, since ``Q`` is an
    integral from the origin.
    """
    start, stop = min(0.0, lo), max(0.0, hi)
    zs = np.linspace(start, stop, max(samples, 2))
    node = spec.a
    try:
        avals = np.array([float(evaluate(node, t)) for t in zs])
    except ArithmeticError as exc:
        raise PoleError(f"gauge function cannot be evaluated on [{start}, {stop}]: {exc}") from exc
    brackets = []
    for i in range(len(zs) - 1):
        if avals[i] == 0.0 or avals[i] * avals[i + 1] < 0:
            brackets.append((float(zs[i]), float(zs[i + 1])))
    if avals[-1] == 0.0:
        brackets.append((float(zs[-2]), float(zs[-1])))
    if brackets:
        return brackets
    k = float(spec.k)
    i0 = int(np.argmin(np.abs(zs)))
    Q = np.zeros_like(zs)
    for i in range(i0 + 1, len(zs)):
        Q[i] = Q[i - 1] + quadrature(lambda t: 1.0 / float(evaluate(node, t)), zs[i - 1], zs[i], 1e-13)
    for i in range(i0 - 1, -1, -1):
        Q[i] = Q[i + 1] - quadrature(lambda t: 1.0 / float(evaluate(node, t)), zs[i], zs[i + 1], 1e-13)
    g = spec.C - k * Q
    for i in range(len(zs) - 1):
        if g[i] == 0.0 or g[i] * g[i + 1] < 0:
            brackets.append((float(zs[i]), float(zs[i + 1])))
    return [b for b in brackets if b[1] >= lo and b[0] <= hi]


def lie_factor_pair(spec: LieFamilySpec) -> FactorPair:
    """(r, s) for the gauge family with ``s = (A + r^2 - r')/2``."""
    _require_closed_form(spec)

    def r(z0: float, order: int) -> Jet:
        return theorem1_r(spec, z0, order)

    def s(z0: float, order: int) -> Jet:
        rj = theorem1_r(spec, z0, order + 1)
        A, _ = theorem1_coeffs(spec, z0, order + 1)
        return ((A + rj * rj).truncate(order) - rj.derivative()) * 0.5

    return FactorPair(r, s)


# ---------------------------------------------------------------------------
# Chazy-derived rational family

CHAZY_ALPHA = Fraction(4, 27)


def chazy_sigma(alpha) -> Fraction:
    """Hypergeometric parameter ``1/(144 (1 - 9 alpha))`` of the linearizing equation."""
    alpha = Fraction(alpha)
    if alpha == Fraction(1, 9):
        raise DomainError("alpha = 1/9 is the degenerate (Airy) case")
    return 1 / (144 * (1 - 9 * alpha))


@dataclass(frozen=True)
class ChazyFamilySpec:
    k1: float
    k2: float
    k3: float
    k4: float
    det_tol: float = field(default=1e-12, repr=False)

    def __post_init__(self):
        det = self.k1 * self.k4 - self.k2 * self.k3
        if abs(det + 1.0) > self.det_tol:
            raise SpecViolation(f"k1 k4 - k2 k3 must equal -1, got {det!r}")

    @property
    def ks(self) -> tuple[float, float, float, float]:
        return self.k1, self.k2, self.k3, self.k4


def _chazy_parts(spec: ChazyFamilySpec, z):
    k1, k2, k3, k4 = spec.ks
    p = 3.0 * k3 * z - 2.0 * k1
    q = 3.0 * k4 * z - 2.0 * k2
    num = 3.0 * k3 * p * p * q + 2.0 * k4 * q * q * q + k4 * p * p * p
    den = q * (2.0 * (-p) * (-p) * (-p) - q * q * q)
    return num, den


def chazy_denominator_roots(spec: ChazyFamilySpec) -> np.ndarray:
    """Real zeros of the denominator of the rational family."""
    k1, k2, k3, k4 = spec.ks
    q = np.poly1d([3.0 * k4, -2.0 * k2])
    p = np.poly1d([3.0 * k3, -2.0 * k1])
    den = q * (-2.0 * p**3 - q**3)
    roots = np.roots(den.coeffs) if den.order > 0 else np.array([])
    return np.sort(roots[np.abs(roots.imag) < 1e-9].real)


def chazy_poles(spec: ChazyFamilySpec, lo: float, hi: float, margin: float = 1e-9) -> list[tuple[float, float]]:
    return [
        (float(z) - margin, float(z) + margin)
        for z in chazy_denominator_roots(spec)
        if lo - margin <= z <= hi + margin
    ]


def chazy_r(spec: ChazyFamilySpec, z: float, order: int = 3) -> Jet:
    """Jet of the rational solution of the principal equation with A = B = 0."""
    num, den = _chazy_parts(spec, Jet.variable(z, order))
    if abs(den.value) < 1e-13:
        raise PoleError(f"rational family has a pole at z={z}", (z, z))
    return 6.0 * num / den


def chazy_factor_pair(spec: ChazyFamilySpec) -> FactorPair:
    """(r, s) with ``s = (r^2 - r')/2`` (the unit beam)."""

    def r(z0: float, order: int) -> Jet:
        return chazy_r(spec, z0, order)

    def s(z0: float, order: int) -> Jet:
        rj = chazy_r(spec, z0, order + 1)
        return ((rj * rj).truncate(order) - rj.derivative()) * 0.5

    return FactorPair(r, s)


def chazy_parametric(spec: ChazyFamilySpec, tau: float) -> tuple[float, float]:
    """Point ``(x, y)`` of the parametric Chazy solution; real cube-root branch, ``tau >= 0``."""
    if tau < 0:
        raise DomainError("tau must be non-negative (real cube-root branch)")
    if tau == 0.5:
        raise DomainError("tau = 1/2 is a singularity of the parametrization")
    k1, k2, k3, k4 = spec.ks
    t = float(np.cbrt(tau))
    den = k3 + k4 * t
    if den == 0.0:
        raise PoleError(f"x is infinite at tau={tau}", (tau, tau))
    x = (k1 + k2 * t) / den
    y = 3.0 * den * (3.0 * k3 * t * t + k4 * (2.0 - tau)) / (1.0 - 2.0 * tau)
    return x, y


def chazy_closed_form(spec: ChazyFamilySpec, x):
    """``y(x)`` of the Chazy solution after eliminating the parameter; accepts floats or jets."""
    k1, k2, k3, k4 = spec.ks
    p = k3 * x - k1
    q = k4 * x - k2
    num = 3.0 * (3.0 * k3 * p * p * q + 2.0 * k4 * q * q * q + k4 * p * p * p)
    den = q * (2.0 * (-p) * (-p) * (-p) - q * q * q)
    return num / den


# ---------------------------------------------------------------------------
# hypergeometric function and identities


def hyp2f1(a: float, b: float, c: float, x: float, rtol: float = 1e-12, max_terms: int = 100000) -> float:
    """Gauss hypergeometric function for real ``x < 1``.

    Sums the power series directly for ``-1/2 <= x < 1``; for ``x < -1/2``
    applies the Pfaff transformation
    ``2F1(a,b;c;x) = (1-x)^-a 2F1(a, c-b; c; x/(x-1))`` whose argument lies
    in ``(1/3, 1)``.
    """
    if c <= 0 and float(c).is_integer():
        raise DomainError(f"c = {c} is a non-positive integer")
    if x >= 1.0:
        raise DomainError(f"argument {x} outside the supported range x < 1")
    if x < -0.5:
        return (1.0 - x) ** (-a) * hyp2f1(a, c - b, c, x / (x - 1.0), rtol, max_terms)
    total = 1.0
    term = 1.0
    n = 0
    while True:
        term *= (a + n) * (b + n) / ((c + n) * (n + 1)) * x
        total += term
        n += 1
        if term == 0.0:
            return total
        ratio = abs((a + n) * (b + n) / ((c + n) * (n + 1)) * x)
        bound = max(ratio, abs(x))
        if n > abs(a) + abs(b) + abs(c) and bound < 1.0:
            tail = abs(term) * bound / (1.0 - bound)
            if tail <= rtol * abs(total):
                return total
        if n >= max_terms:
            raise NumericalFailure("hypergeometric series did not converge", n)


def reparametrized_argument(tau: float) -> float:
    """``tau (tau + 4)^3 / (4 (2 tau - 1)^3)``, the argument that makes both series elementary."""
    return tau * (tau + 4.0) ** 3 / (4.0 * (2.0 * tau - 1.0) ** 3)


def hypergeometric_identity_residuals(tau: float) -> tuple[float, float]:
    """Absolute gaps of the two closed-form evaluations at ``tau``."""
    w = reparametrized_argument(tau)
    lhs1 = hyp2f1(0.25, -1.0 / 12.0, 2.0 / 3.0, w)
    rhs1 = (1.0 - 2.0 * tau) ** -0.25
    lhs2 = hyp2f1(0.25, 7.0 / 12.0, 4.0 / 3.0, w)
    rhs2 = 4.0 * (1.0 - 2.0 * tau) ** 0.75 / (tau + 4.0)
    return abs(lhs1 - rhs1), abs(lhs2 - rhs2)


def chazy_pair_series(spec: ChazyFamilySpec, tau: float) -> tuple[float, float]:
    """Linearizing solutions (phi, psi) evaluated through the hypergeometric series at ``1 - t = w(tau)``."""
    k1, k2, k3, k4 = spec.ks
    w = reparametrized_argument(tau)
    f1 = hyp2f1(0.25, -1.0 / 12.0, 2.0 / 3.0, w)
    f2 = float(np.cbrt(w)) * hyp2f1(0.25, 7.0 / 12.0, 4.0 / 3.0, w)
    scale = 4.0 ** (-2.0 / 3.0)
    return k1 * f1 - scale * k2 * f2, k3 * f1 - scale * k4 * f2


def chazy_pair_closed(spec: ChazyFamilySpec, tau: float) -> tuple[float, float]:
    """The same pair after the reparametrization: ``(k + k' tau^(1/3)) (1 - 2 tau)^(-1/4)``."""
    k1, k2, k3, k4 = spec.ks
    t = float(np.cbrt(tau))
    g = (1.0 - 2.0 * tau) ** -0.25
    return (k1 + k2 * t) * g, (k3 + k4 * t) * g
