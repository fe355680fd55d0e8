"""Beam operators, their second-order factorization and the swapped operator.

The canonical beam operator is ``L = d^4 + d(A d) + B``.  Writing
``L = R* R`` with ``R = d^2 + r d + s`` and its formal adjoint
``R* = d^2 - d(r .) + s`` ties (A, B) to (r, s); the reversed product
``R R*`` is again a beam operator with coefficients (Ahat, Bhat).

All operators act on jets, so every identity holds to rounding error at a
single point without any discretization.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ContractViolation
from .exprlang import jet_function
from .jets import DEFAULT_ORDER, Jet, JetFunction, truncate_common


@dataclass(frozen=True)
class FactorPair:
    """Coefficient functions ``r`` and ``s`` of ``R = d^2 + r d + s``."""

    r: JetFunction
    s: JetFunction

    @classmethod
    def from_exprs(cls, r, s) -> FactorPair:
        """Build from expression text, trees, numbers or jet functions."""
        return cls(jet_function(r), jet_function(s))

    @classmethod
    def from_r(cls, r, A=0.0) -> FactorPair:
        """Pair whose ``s`` is fixed by ``A = r' - r^2 + 2s`` for a prescribed ``A``."""
        rf, Af = jet_function(r), jet_function(A)

        def s(z0: float, order: int) -> Jet:
            return s_from_r(rf(z0, order + 1), Af(z0, order + 1))

        return cls(rf, s)

    def pinned(self, z: float, order: int) -> FactorPair:
        """Same pair with ``r`` and ``s`` expanded once at ``z`` up to ``order``.

        Requests at ``z`` up to that order are served by truncation; anything
        else falls through to the original functions.
        """
        return FactorPair(_pin(self.r, z, order), _pin(self.s, z, order))


def _pin(f: JetFunction, z: float, order: int) -> JetFunction:
    cached = f(z, order)

    def g(z0: float, n: int) -> Jet:
        if z0 == z and n <= order:
            return cached.truncate(n)
        return f(z0, n)

    return g


@dataclass(frozen=True)
class BeamCoefficients:
    """Coefficient functions ``A`` and ``B`` of ``L = d^4 + d(A d) + B``."""

    A: JetFunction
    B: JetFunction

    @classmethod
    def from_exprs(cls, A, B) -> BeamCoefficients:
        return cls(jet_function(A), jet_function(B))

    @classmethod
    def zero(cls) -> BeamCoefficients:
        return cls.from_exprs(0.0, 0.0)

    @classmethod
    def from_factors(cls, fp: FactorPair) -> BeamCoefficients:
        """Coefficients of ``R* R``."""

        def A(z0: float, order: int) -> Jet:
            return coeffs_from_factors(fp, z0, order + 2)[0].truncate(order)

        def B(z0: float, order: int) -> Jet:
            return coeffs_from_factors(fp, z0, order + 2)[1]

        return cls(A, B)

    @classmethod
    def swapped(cls, fp: FactorPair) -> BeamCoefficients:
        """Coefficients of ``R R*``."""

        def A(z0: float, order: int) -> Jet:
            return hat_coeffs(fp, z0, order + 3)[0].truncate(order)

        def B(z0: float, order: int) -> Jet:
            return hat_coeffs(fp, z0, order + 3)[1]

        return cls(A, B)

    def pinned(self, z: float, order: int) -> BeamCoefficients:
        """Same coefficients with ``A`` and ``B`` expanded once at ``z`` up to ``order``."""
        return BeamCoefficients(_pin(self.A, z, order), _pin(self.B, z, order))


def _d(x: Jet) -> Jet:
    return x.derivative()


def coeffs_from_factors(fp: FactorPair, z: float, order: int = DEFAULT_ORDER) -> tuple[Jet, Jet]:
    """(A, B) with ``A = r' - r^2 + 2s`` and ``B = s'' - (rs)' + s^2``.

    ``r`` and ``s`` are expanded to ``order``; A comes back with order
    ``order - 1`` and B with ``order - 2``.
    """
    r, s = fp.r(z, order), fp.s(z, order)
    r, s = truncate_common(r, s)
    A = _d(r) - (r * r - 2.0 * s).truncate(order - 1)
    B = _d(_d(s)) - _d(r * s).truncate(order - 2) + (s * s).truncate(order - 2)
    return A, B


def hat_coeffs(fp: FactorPair, z: float, order: int = DEFAULT_ORDER) -> tuple[Jet, Jet]:
    """(Ahat, Bhat) of ``R R*``: ``2s - 3r' - r^2`` and ``s^2 + s'' - r''' - r r'' + r s' - s r'``.

    Ahat has order ``order - 1`` and Bhat order ``order - 3``.
    """
    r, s = truncate_common(fp.r(z, order), fp.s(z, order))
    r1, s1 = _d(r), _d(s)
    r2, s2 = _d(r1), _d(s1)
    r3 = _d(r2)
    n = order - 3
    Ahat = (2.0 * s - r * r).truncate(order - 1) - 3.0 * r1
    t = lambda x: x.truncate(n)  # noqa: E731
    Bhat = t(s * s) + t(s2) - r3 - t(r) * t(r2) + t(r) * t(s1) - t(s) * t(r1)
    return Ahat, Bhat


def s_from_r(r_jet: Jet, A_jet: Jet) -> Jet:
    """``s = (A + r^2 - r')/2``; the result order is one less than the smaller input order."""
    r, A = truncate_common(r_jet, A_jet)
    n = r.order - 1
    return ((A + r * r).truncate(n) - _d(r)) * 0.5


def principal_lhs(r0, r1, r2, r3, A0, A1, A2, B0):
    """Left-hand side of the principal equation in terms of jet coordinates.

    Works on floats or any jet-like arguments.
    """
    return (
        r3
        - 3.0 * r0 * r2
        - 3.5 * r1 * r1
        + 2.0 * (2.0 * r0 * r0 + A0) * r1
        - A2
        - r0 * r0 * A0
        - 0.5 * A0 * A0
        - 0.5 * r0 * r0 * r0 * r0
        + r0 * A1
        + 2.0 * B0
    )


def principal_residual(r_jet: Jet, A_jet: Jet, B_val) -> float:
    """Principal-equation residual at the common base point of the jets.

    Needs ``r`` to order 3 and ``A`` to order 2; ``B_val`` is a float or a jet
    (only its value is used).
    """
    if r_jet.order < 3 or A_jet.order < 2:
        raise ContractViolation("principal residual needs r to order 3 and A to order 2")
    r, A = r_jet.coeffs, A_jet.coeffs
    B0 = B_val.value if isinstance(B_val, Jet) else float(B_val)
    return float(principal_lhs(r[0], r[1], r[2], r[3], A[0], A[1], A[2], B0))


def _need(U: Jet, k: int, what: str) -> None:
    if U.order < k:
        raise ContractViolation(f"{what} needs a test jet of order >= {k}, got {U.order}")


def apply_R(fp: FactorPair, U: Jet) -> Jet:
    """``R U = U'' + r U' + s U`` (order drops by 2)."""
    _need(U, 2, "R")
    n = U.order - 2
    z = U.base_point
    r, s = fp.r(z, n), fp.s(z, n)
    return _d(_d(U)) + r * _d(U).truncate(n) + s * U.truncate(n)


def apply_Rstar(fp: FactorPair, U: Jet) -> Jet:
    """``R* U = U'' - (r U)' + s U`` (order drops by 2)."""
    _need(U, 2, "R*")
    n = U.order - 2
    z = U.base_point
    r = fp.r(z, n + 1)
    s = fp.s(z, n)
    return _d(_d(U)) - _d(r * U.truncate(n + 1)) + s * U.truncate(n)


def apply_L(coeffs: BeamCoefficients, U: Jet) -> Jet:
    """``L U = U'''' + A U'' + A' U' + B U`` (order drops by 4)."""
    _need(U, 4, "L")
    n = U.order - 4
    z = U.base_point
    A = coeffs.A(z, n + 1)
    B = coeffs.B(z, n)
    U1 = _d(U)
    U2 = _d(U1)
    return U.derivative(4) + A.truncate(n) * U2.truncate(n) + _d(A) * U1.truncate(n) + B * U.truncate(n)


def _test_jet(U, z: float, order: int) -> Jet:
    if isinstance(U, Jet):
        return U
    return jet_function(U)(z, order)


def factorization_residuals(fp: FactorPair, U, z: float, order: int = DEFAULT_ORDER) -> tuple[float, float]:
    """``(|R*(R U) - L U|, |R(R* U) - Lhat U|)`` at ``z`` for a test function ``U``."""
    return factorization_residuals_batch(fp, [U], z, order)[0]


def factorization_residuals_batch(fp: FactorPair, Us, z: float, order: int = DEFAULT_ORDER) -> list[tuple[float, float]]:
    """:func:`factorization_residuals` for several test functions sharing one expansion of the coefficients."""
    fp = fp.pinned(z, order + 3)
    L = BeamCoefficients.from_factors(fp).pinned(z, order - 3)
    Lhat = BeamCoefficients.swapped(fp).pinned(z, order - 3)
    out = []
    for U in Us:
        Uj = _test_jet(U, z, order)
        first = apply_Rstar(fp, apply_R(fp, Uj)) - apply_L(L, Uj)
        second = apply_R(fp, apply_Rstar(fp, Uj)) - apply_L(Lhat, Uj)
        out.append((abs(first.value), abs(second.value)))
    return out


def intertwine_residual(
    fp: FactorPair, U, z: float, order: int = DEFAULT_ORDER, relative: bool = False
) -> tuple[float, float]:
    """``(|R*(R U) - L U|, |R(L U) - Lhat(R U)|)`` at ``z``.

    Both vanish identically; the second is the statement that ``R`` maps
    eigenfunctions of ``L`` to eigenfunctions of ``Lhat``.  ``U`` needs order >= 6.
    With ``relative`` each residual is divided by ``max(1, |compared values|)``.
    """
    Uj = _test_jet(U, z, order)
    _need(Uj, 6, "intertwining check")
    fp = fp.pinned(z, order + 3)
    L = BeamCoefficients.from_factors(fp).pinned(z, order - 3)
    Lhat = BeamCoefficients.swapped(fp).pinned(z, order - 3)
    RU = apply_R(fp, Uj)
    LU = apply_L(L, Uj)
    first = apply_Rstar(fp, RU) - LU
    RLU, LhatRU = apply_R(fp, LU), apply_L(Lhat, RU)
    second = RLU - LhatRU
    if relative:
        return (
            abs(first.value) / max(1.0, abs(LU.value)),
            abs(second.value) / max(1.0, abs(RLU.value), abs(LhatRU.value)),
        )
    return abs(first.value), abs(second.value)
