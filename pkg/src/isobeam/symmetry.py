"""Numerical verification of the point symmetries of the principal equation.

Vector fields ``X = xi(z, r) d/dz + eta(z, r) d/dr`` are given by coefficient
callables that work on floats and on jet-like arguments.  Partial
derivatives are never taken by finite differences: brackets use bivariate
expansions (:class:`~isobeam.jets.Jet2`), and prolongations are computed
along the curve ``z -> (z, r(z))`` whose jet is the jet-space point itself,
where the total derivative ``D`` is plain differentiation.

The prolongation recursion is ``eta[k] = D(eta[k-1]) - r^(k) D(xi)``.  A
``sign`` argument keeps the opposite convention available so that it can be
shown to fail.
"""

from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation
from .exprlang import jet_function
from .factorization import BeamCoefficients, principal_lhs
from .jets import Jet, Jet2, JetFunction, lift, truncate_common


class PointVectorField:
    """``xi(z, r) d/dz + eta(z, r) d/dr`` with coefficients generic over float/Jet/Jet2."""

    def __init__(self, xi: Callable, eta: Callable, name: str = ""):
        self.xi = xi
        self.eta = eta
        self.name = name

    def expand(self, z0: float, r0: float, order: int) -> tuple[Jet2, Jet2]:
        """Bivariate expansions of (xi, eta) about ``(z0, r0)``."""
        z, r = Jet2.variables(z0, r0, order)
        return _as_jet2(self.xi(z, r), z0, r0, order), _as_jet2(self.eta(z, r), z0, r0, order)

    def __call__(self, z: float, r: float) -> tuple[float, float]:
        xi, eta = self.expand(z, r, 0)
        return xi.value, eta.value

    def along(self, zj: Jet, rj: Jet) -> tuple[Jet, Jet]:
        """Coefficients restricted to the curve ``(zj, rj)``."""
        n = min(zj.order, rj.order)
        xi, eta = self.expand(zj.value, rj.value, n)
        return xi.along(zj, rj), eta.along(zj, rj)

    def __repr__(self) -> str:
        return f"PointVectorField({self.name or '?'})"


def _as_jet2(v, z0: float, r0: float, order: int) -> Jet2:
    if isinstance(v, Jet2):
        return v
    return Jet2.constant(float(v), z0, r0, order)


class _Bracket(PointVectorField):
    def __init__(self, X: PointVectorField, Y: PointVectorField):
        self.X, self.Y = X, Y
        super().__init__(None, None, f"[{X.name},{Y.name}]")

    def expand(self, z0: float, r0: float, order: int) -> tuple[Jet2, Jet2]:
        xX, eX = self.X.expand(z0, r0, order + 1)
        xY, eY = self.Y.expand(z0, r0, order + 1)

        def apply(xi: Jet2, eta: Jet2, f: Jet2) -> Jet2:
            return xi.truncate(order) * f.dz() + eta.truncate(order) * f.dr()

        return apply(xX, eX, xY) - apply(xY, eY, xX), apply(xX, eX, eY) - apply(xY, eY, eX)


def bracket(X: PointVectorField, Y: PointVectorField) -> PointVectorField:
    """Commutator ``[X, Y]`` with coefficients ``X(Y_i) - Y(X_i)``."""
    return _Bracket(X, Y)


class _Combination(PointVectorField):
    def __init__(self, terms: list[tuple[float, PointVectorField]]):
        self.terms = terms
        super().__init__(None, None, " + ".join(f"{c:g}*{f.name}" for c, f in terms))

    def expand(self, z0: float, r0: float, order: int) -> tuple[Jet2, Jet2]:
        xi = Jet2.constant(0.0, z0, r0, order)
        eta = Jet2.constant(0.0, z0, r0, order)
        for c, f in self.terms:
            fx, fe = f.expand(z0, r0, order)
            xi, eta = xi + fx * c, eta + fe * c
        return xi, eta


def combine(*terms: tuple[float, PointVectorField]) -> PointVectorField:
    """Linear combination ``sum c_i X_i``."""
    return _Combination(list(terms))


# the three generators of the unit-beam case --------------------------------------------

X1 = PointVectorField(lambda z, r: 1.0, lambda z, r: 0.0, "X1")
X2 = PointVectorField(lambda z, r: z, lambda z, r: -r, "X2")
X3 = PointVectorField(lambda z, r: z * z, lambda z, r: -2.0 * (r * z + 2.0), "X3")
R_SCALING = PointVectorField(lambda z, r: 0.0, lambda z, r: r, "r d/dr")

# the corresponding generators of the Chazy equation in (x, y)
Y1 = PointVectorField(lambda x, y: 1.0, lambda x, y: 0.0, "Y1")
Y2 = PointVectorField(lambda x, y: x, lambda x, y: -y, "Y2")
Y3 = PointVectorField(lambda x, y: x * x, lambda x, y: -(2.0 * x * y + 6.0), "Y3")


def gauge_field(a) -> PointVectorField:
    """``a(z) d/dz - (a'(z) r + 2 a''(z)) d/dr`` for a gauge expression or jet function."""
    af: JetFunction = jet_function(a)
    return PointVectorField(
        lambda z, r: lift(af, z),
        lambda z, r: -(lift(af, z, 1) * r + 2.0 * lift(af, z, 2)),
        "Gamma",
    )


def to_chazy_coordinates(X: PointVectorField) -> PointVectorField:
    """Push a field forward under ``z = 2x/3, r = y``."""
    return PointVectorField(
        lambda x, y: 1.5 * X.xi(x * (2.0 / 3.0), y),
        lambda x, y: X.eta(x * (2.0 / 3.0), y),
        f"{X.name}~",
    )


# jet-space points --------------------------------------------------------------------


@dataclass(frozen=True)
class JetPoint:
    """Point ``(z, r, r', r'', r''')`` of third-order jet space."""

    z: float
    r0: float
    r1: float
    r2: float
    r3: float = 0.0

    @classmethod
    def on_manifold(cls, z: float, r0: float, r1: float, r2: float, coeffs: BeamCoefficients) -> JetPoint:
        """Point with ``r'''`` solved from the principal equation."""
        return cls(z, r0, r1, r2, solve_r3(z, r0, r1, r2, coeffs))

    def curve(self) -> Jet:
        return Jet(self.z, [self.r0, self.r1, self.r2, self.r3])


def solve_r3(z: float, r0: float, r1: float, r2: float, coeffs: BeamCoefficients) -> float:
    """``r'''`` from the principal equation (it enters linearly with unit coefficient)."""
    A = coeffs.A(z, 2).coeffs
    B = coeffs.B(z, 0).coeffs
    return -float(principal_lhs(r0, r1, r2, 0.0, A[0], A[1], A[2], B[0]))


def prolong(X: PointVectorField, p: JetPoint, sign: float = -1.0) -> tuple[float, float, float]:
    """First three prolongation coefficients of ``X`` at ``p``.

    ``sign=-1`` is the standard recursion ``eta[k] = D eta[k-1] - r^(k) D xi``.
    """
    etas = _prolongation_jets(X, p, sign)
    return etas[1].value, etas[2].value, etas[3].value


def _prolongation_jets(X: PointVectorField, p: JetPoint, sign: float) -> list[Jet]:
    zc = Jet.variable(p.z, 3)
    rc = p.curve()
    xi, eta = X.along(zc, rc)
    dxi = xi.derivative()
    out = [eta]
    rk = rc
    for _ in range(3):
        rk = rk.derivative()
        prev = out[-1].derivative()
        prev, rk_t, dxi_t = truncate_common(prev, rk, dxi)
        out.append(prev + sign * rk_t * dxi_t)
    return out


def symmetry_residual(X: PointVectorField, coeffs: BeamCoefficients, p: JetPoint, sign: float = -1.0) -> float:
    """Third prolongation of ``X`` applied to the principal equation at ``p``.

    ``r'''`` is first eliminated through the equation itself, so ``p`` only
    contributes ``(z, r, r', r'')``.  Zero at every point iff ``X`` is a symmetry.
    """
    coeffs = coeffs.pinned(p.z, 3)
    p = JetPoint.on_manifold(p.z, p.r0, p.r1, p.r2, coeffs)
    xi, eta = X(p.z, p.r0)
    e1, e2, e3 = prolong(X, p, sign)
    # directional derivative of the defining function along the prolonged field
    t = lambda v, dv: Jet(p.z, [v, dv])  # noqa: E731
    zt = Jet(p.z, [p.z, xi])
    A = coeffs.A(p.z, 3)
    B = coeffs.B(p.z, 1)
    A0, A1, A2 = (A.derivative(k).truncate(1).compose(zt) for k in range(3))
    B0 = B.compose(zt)
    F = principal_lhs(t(p.r0, eta), t(p.r1, e1), t(p.r2, e2), t(p.r3, e3), A0, A1, A2, B0)
    return float(F.coeffs[1])


def determining_residuals(a, coeffs: BeamCoefficients, z: float, form: str = "derived"):
    """Residuals of the three determining equations for the gauge ``a`` at ``z``.

    ``res7 = a A' + 2 a' A + 5 a'''`` and ``res9 = 3 a' A' + 2 a'' A + a A'' + 5 a''''``.
    ``res8`` is the first-order relation for ``B``; with ``form="derived"`` the
    ``A'`` term carries ``a''/a`` (the version that follows from the symmetry
    condition).  ``form="alternate"`` uses ``a''/a'`` instead and returns ``None``
    for ``res8`` where ``a' = 0``.
    """
    if form not in ("derived", "alternate"):
        raise ContractViolation(f"unknown form {form!r}")
    aj = jet_function(a)(z, 5).coeffs
    Aj = coeffs.A(z, 3).coeffs
    Bj = coeffs.B(z, 1).coeffs
    a0, a1, a2, a3, a4, a5 = aj
    A0, A1, A2, A3 = Aj
    B0, B1 = Bj
    res7 = a0 * A1 + 2 * a1 * A0 + 5 * a3
    res9 = 3 * a1 * A1 + 2 * a2 * A0 + a0 * A2 + 5 * a4
    if form == "alternate":
        if a1 == 0.0:
            return float(res7), None, float(res9)
        mid = a2 / a1 * A1
    else:
        mid = a2 / a0 * A1
    rhs = a1 / a0 * A0**2 + A0 * A1 / 2 + mid + 2 * a1 / a0 * A2 + 2 * a3 / a0 * A0 + A3 / 2 + a5 / a0
    res8 = B1 + 4 * a1 / a0 * B0 - rhs
    return float(res7), float(res8), float(res9)


# Chazy correspondence ----------------------------------------------------------------


def chazy_residual(y: Jet, alpha: float) -> float:
    """``y''' - 2 y y'' + 3 y'^2 - alpha (6 y' - y^2)^2`` at the base point."""
    if y.order < 3:
        raise ContractViolation("Chazy residual needs a jet of order >= 3")
    y0, y1, y2, y3 = y.coeffs[:4]
    return float(y3 - 2 * y0 * y2 + 3 * y1 * y1 - alpha * (6 * y1 - y0 * y0) ** 2)


def chazy_map_check(r_source: JetFunction, z: float, alpha: float = 4.0 / 27.0) -> tuple[float, float]:
    """(principal residual of ``r`` at ``z`` with A = B = 0, (27/8) * Chazy residual of ``y(x) = r(2x/3)``).

    The two agree for every smooth ``r``, not only for solutions.
    """
    r = jet_function(r_source)(z, 3)
    lhs = float(principal_lhs(*r.coeffs[:4], 0.0, 0.0, 0.0, 0.0))
    x0 = 1.5 * z
    y = r.compose(Jet.variable(x0, 3) * (2.0 / 3.0))
    return lhs, 27.0 / 8.0 * chazy_residual(y, alpha)


def random_manifold_points(
    coeffs: BeamCoefficients, n: int, rng: np.random.Generator, z_range=(-1.0, 1.0), scale: float = 1.0
) -> list[JetPoint]:
    pts = []
    for _ in range(n):
        z = float(rng.uniform(*z_range))
        r0, r1, r2 = (float(v) for v in rng.normal(0.0, scale, 3))
        pts.append(JetPoint.on_manifold(z, r0, r1, r2, coeffs))
    return pts
