import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from isobeam.errors import ContractViolation
from isobeam.exprlang import jet_function
from isobeam.factorization import BeamCoefficients
from isobeam.families import ChazyFamilySpec, chazy_r, gauge_coefficients
from isobeam.jets import Jet
from isobeam.symmetry import (
    R_SCALING,
    X1,
    X2,
    X3,
    Y1,
    Y2,
    Y3,
    JetPoint,
    PointVectorField,
    bracket,
    chazy_map_check,
    chazy_residual,
    combine,
    determining_residuals,
    gauge_field,
    prolong,
    random_manifold_points,
    solve_r3,
    symmetry_residual,
    to_chazy_coordinates,
)

z, r, r1, r2, r3, r4 = sp.symbols("z r r1 r2 r3 r4")
JET = (r, r1, r2, r3, r4)


def D(f):
    """Symbolic total derivative in jet coordinates."""
    return sp.diff(f, z) + sum(JET[i + 1] * sp.diff(f, JET[i]) for i in range(4))


def symbolic_prolongation(xi, eta):
    out = [eta]
    for k in range(1, 4):
        out.append(sp.expand(D(out[-1]) - JET[k] * D(xi)))
    return out[1:]


def principal_F():
    return r3 - 3 * r * r2 - sp.Rational(7, 2) * r1**2 + 4 * r**2 * r1 - r**4 / 2


ZERO = BeamCoefficients.zero()
rng_points = [(0.3, 0.7, -1.1, 0.4, 2.0), (-0.8, 1.5, 0.2, -0.9, -0.3), (0.0, 1.0, 1.0, 1.0, 0.5)]


@pytest.mark.parametrize(
    "X, xi, eta",
    [
        (X1, sp.Integer(1), sp.Integer(0)),
        (X2, z, -r),
        (X3, z**2, -2 * (r * z + 2)),
        (PointVectorField(lambda z_, r_: z_ * r_, lambda z_, r_: r_ * r_ + z_, "test"), z * r, r**2 + z),
    ],
)
def test_prolongation_against_symbolic(X, xi, eta):
    etas = symbolic_prolongation(xi, eta)
    for p in rng_points:
        subs = dict(zip((z, r, r1, r2, r3), p))
        got = prolong(X, JetPoint(*p))
        assert got == pytest.approx([float(e.subs(subs)) for e in etas], rel=1e-13, abs=1e-13)


def test_prolongation_examples():
    p = JetPoint(0.4, 1.3, -0.7, 2.1, 0.9)
    assert prolong(X1, p) == (0.0, 0.0, 0.0)
    assert prolong(X2, p) == pytest.approx((-2 * p.r1, -3 * p.r2, -4 * p.r3))
    assert prolong(X3, p)[0] == pytest.approx(-2 * p.r0 - 4 * p.z * p.r1)


def test_on_manifold_solves_principal():
    p = JetPoint.on_manifold(0.2, 1.0, 0.5, -0.3, ZERO)
    F = principal_F().subs({r: 1.0, r1: 0.5, r2: -0.3, r3: p.r3})
    assert abs(float(F)) < 1e-14
    assert solve_r3(0.2, 0.0, 0.0, 0.0, ZERO) == 0.0


@pytest.mark.parametrize("X", [X1, X2, X3])
def test_case_one_generators(X):
    rng = np.random.default_rng(7)
    for p in random_manifold_points(ZERO, 100, rng):
        assert abs(symmetry_residual(X, ZERO, p)) <= 1e-8


def test_symmetry_condition_against_symbolic():
    # X^[3] F restricted to F = 0, computed independently
    F = principal_F()
    for xi, eta, X in ((z**2, -2 * (r * z + 2), X3), (sp.Integer(0), r, R_SCALING)):
        e1, e2, e3 = symbolic_prolongation(xi, eta)
        XF = xi * sp.diff(F, z) + eta * sp.diff(F, r) + e1 * sp.diff(F, r1) + e2 * sp.diff(F, r2) + e3 * sp.diff(F, r3)
        r3_sol = sp.solve(F, r3)[0]
        XF = sp.expand(XF.subs(r3, r3_sol))
        for p in [(0.3, 0.7, -1.1, 0.4), (0.1, 1.0, 0.0, 0.0)]:
            want = float(XF.subs(dict(zip((z, r, r1, r2), p))))
            assert symmetry_residual(X, ZERO, JetPoint(*p)) == pytest.approx(want, abs=1e-12)


def test_plus_sign_prolongation_fails():
    rng = np.random.default_rng(3)
    pts = random_manifold_points(ZERO, 20, rng)
    assert max(abs(symmetry_residual(X3, ZERO, p, sign=+1.0)) for p in pts) > 1e-3
    assert max(abs(symmetry_residual(X2, ZERO, p, sign=+1.0)) for p in pts) > 1e-3


def test_scaling_of_r_is_not_a_symmetry():
    # the equation mixes degrees 1 and 4 in r, so r d/dr fails away from special points
    assert abs(symmetry_residual(R_SCALING, ZERO, JetPoint(0.0, 1.0, 0.0, 0.0))) == pytest.approx(1.5)
    rng = np.random.default_rng(11)
    assert max(abs(symmetry_residual(R_SCALING, ZERO, p)) for p in random_manifold_points(ZERO, 20, rng)) > 1e-2
    # at the point (0; 1, 1, 1) the residual happens to cancel
    assert abs(symmetry_residual(R_SCALING, ZERO, JetPoint(0.0, 1.0, 1.0, 1.0))) < 1e-12


@pytest.mark.parametrize("a, C1, C2", [("exp(z)", 0.0, 0.0), ("1+z^2/4", 0.7, -0.3), ("2+sin(z)", -1.0, 2.0)])
def test_gauge_field_is_a_symmetry(a, C1, C2):
    coeffs = gauge_coefficients(a, C1, C2)
    rng = np.random.default_rng(5)
    for p in random_manifold_points(coeffs, 100, rng, (0.1, 0.9)):
        assert abs(symmetry_residual(gauge_field(a), coeffs, p)) <= 1e-8


def test_gauge_field_fails_for_foreign_coefficients():
    coeffs = BeamCoefficients.from_exprs("z", "1")
    rng = np.random.default_rng(5)
    pts = random_manifold_points(coeffs, 10, rng, (0.1, 0.9))
    assert max(abs(symmetry_residual(gauge_field("exp(z)"), coeffs, p)) for p in pts) > 1e-3


def test_determining_examples():
    coeffs = gauge_coefficients("exp(z)")
    assert coeffs.A(0.3, 0).value == pytest.approx(-2.5)
    res7, res8, res9 = determining_residuals("exp(z)", coeffs, 0.3)
    assert abs(res7) < 1e-12 and abs(res8) < 1e-12 and abs(res9) < 1e-12
    res7, res8, res9 = determining_residuals("1", ZERO, 0.3, form="alternate")
    assert res7 == 0.0 and res9 == 0.0 and res8 is None
    with pytest.raises(ContractViolation):
        determining_residuals("1", ZERO, 0.3, form="other")


@pytest.mark.parametrize("a, C1, C2", [("1+z^2/4", 0.0, 0.0), ("2+sin(z)", 0.4, 1.1), ("exp(z/2)*(1+z)", -0.5, 0.2)])
def test_determining_equations_vanish_on_gauge_family(a, C1, C2):
    coeffs = gauge_coefficients(a, C1, C2)
    for z0 in (0.1, 0.5, 0.9):
        assert max(abs(v) for v in determining_residuals(a, coeffs, z0)) < 1e-10


def test_alternate_b_relation_fails():
    a = "1+z^2/4"
    coeffs = gauge_coefficients(a)
    assert abs(determining_residuals(a, coeffs, 0.5, form="alternate")[1]) > 1e-3


def test_res9_is_derivative_of_res7():
    a = "2+sin(z)"
    coeffs = BeamCoefficients.from_exprs("z^2 - cos(z)", "1")  # generic, not a symmetry class
    h = 1e-4
    d7 = (determining_residuals(a, coeffs, 0.4 + h)[0] - determining_residuals(a, coeffs, 0.4 - h)[0]) / (2 * h)
    assert d7 == pytest.approx(determining_residuals(a, coeffs, 0.4)[2], rel=1e-7)


# brackets ---------------------------------------------------------------------------

GRID = [(zz, rr) for zz in np.linspace(-2, 2, 7) for rr in np.linspace(-2, 2, 7)]


def _same(X, Y, tol=1e-10):
    return all(np.allclose(X(*p), Y(*p), atol=tol, rtol=0) for p in GRID)


def test_bracket_table():
    assert _same(bracket(X1, X2), X1)
    assert _same(bracket(X1, X3), combine((2.0, X2)))
    assert _same(bracket(X2, X3), X3)


def test_bracket_antisymmetry():
    zero = combine()
    assert _same(bracket(X3, X3), zero)
    assert _same(bracket(X2, X1), combine((-1.0, X1)))


def test_jacobi_identity():
    lhs = combine(
        (1.0, bracket(X1, bracket(X2, X3))),
        (1.0, bracket(X2, bracket(X3, X1))),
        (1.0, bracket(X3, bracket(X1, X2))),
    )
    assert _same(lhs, combine(), 1e-9)


def test_bracket_against_symbolic():
    xa, ea = z * r, sp.sin(z) + r**2
    xb, eb = sp.exp(z), z * r**3
    X = PointVectorField(lambda z_, r_: z_ * r_, lambda z_, r_: z_.apply("sin") + r_ * r_, "X")
    Y = PointVectorField(lambda z_, r_: z_.apply("exp"), lambda z_, r_: z_ * r_ * r_ * r_, "Y")
    bx = xa * sp.diff(xb, z) + ea * sp.diff(xb, r) - xb * sp.diff(xa, z) - eb * sp.diff(xa, r)
    be = xa * sp.diff(eb, z) + ea * sp.diff(eb, r) - xb * sp.diff(ea, z) - eb * sp.diff(ea, r)
    B = bracket(X, Y)
    for p in [(0.3, -0.4), (1.1, 0.9)]:
        subs = {z: p[0], r: p[1]}
        assert B(*p) == pytest.approx((float(bx.subs(subs)), float(be.subs(subs))), rel=1e-13)


def test_chazy_generators_are_pushforwards():
    for X, Y in ((X1, Y1), (X2, Y2), (X3, Y3)):
        Xt = to_chazy_coordinates(X)
        scale = {"X1": 1.5, "X2": 1.0, "X3": 2.0 / 3.0}[X.name]
        for p in GRID:
            assert np.allclose(Xt(*p), np.array(Y(*p)) * scale, atol=1e-13)


# Chazy correspondence -----------------------------------------------------------------


def test_chazy_residual_examples():
    assert chazy_residual(Jet.constant(0.0, 0.3, 3), 4 / 27) == 0.0
    assert chazy_residual(Jet.variable(0.5, 3), 0.0) == 3.0
    y = jet_function("9*z^2/(1 - 2*z^3)")(0.1, 3)
    assert abs(chazy_residual(y, 4 / 27)) < 1e-9
    with pytest.raises(ContractViolation):
        chazy_residual(Jet.variable(0.0, 2), 0.0)


def test_chazy_map_examples():
    assert chazy_map_check("0", 0.4) == (0.0, 0.0)
    lhs, rhs = chazy_map_check("z", 0.0)
    assert lhs == pytest.approx(-3.5) and rhs == pytest.approx(-3.5)
    s = ChazyFamilySpec(0, 1, 1, 0)
    lhs, rhs = chazy_map_check(lambda z0, n: chazy_r(s, z0, n), 0.3)
    assert abs(lhs) < 1e-10 and abs(rhs) < 1e-10


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-2, 2), min_size=4, max_size=4), st.floats(-1, 1))
def test_chazy_map_proportionality(c, z0):
    r_expr = f"{c[0]!r} + {c[1]!r}*sin(z) + {c[2]!r}*z^3 + {c[3]!r}*exp(z/2)"
    lhs, rhs = chazy_map_check(r_expr, z0)
    assert abs(lhs - rhs) <= 1e-9 * max(1.0, abs(lhs))
