import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from isobeam.errors import ContractViolation, SingularPointError
from isobeam.jets import (
    Jet,
    Jet2,
    elementary,
    jet_add,
    jet_div,
    jet_elementary,
    jet_integrate,
    jet_mul,
    jet_shift_derivative,
    lift,
)

Z = sp.Symbol("z")


def sympy_jet(expr, z0, order):
    """Raw derivatives of a sympy expression: the independent oracle."""
    return [float(sp.diff(expr, Z, k).subs(Z, z0)) for k in range(order + 1)]


def poly_jet(coeffs, z0, order):
    return Jet(z0, sympy_jet(sum(c * Z**i for i, c in enumerate(coeffs)), z0, order))


def test_mul_polynomial_identity():
    x = Jet(0.0, [1, 1, 0])
    y = Jet(0.0, [1, -1, 0])
    assert np.allclose(jet_mul(x, y).coeffs, [1, 0, -2])


def test_add_zero_is_identity():
    x = Jet(0.3, [1.5, -2.0, 4.0])
    assert np.array_equal(jet_add(x, Jet.constant(0.0, 0.3, 2)).coeffs, x.coeffs)


def test_div_geometric_series():
    one = Jet.constant(1.0, 0.0, 3)
    assert np.allclose(jet_div(one, Jet(0.0, [1, -1, 0, 0])).coeffs, [1, 1, 2, 6])


def test_exp_of_zero_then_compose():
    e = jet_elementary("exp", Jet.constant(0.0, 0.0, 3))
    assert np.allclose(e.coeffs, [1, 0, 0, 0])
    assert np.allclose(jet_elementary("exp", Jet.variable(0.0, 3)).coeffs, [1, 1, 1, 1])


def test_sin_of_identity():
    assert np.allclose(jet_elementary("sin", Jet.variable(0.0, 3)).coeffs, [0, 1, 0, -1])


def test_cube_root():
    j = jet_elementary("pow", Jet(0.0, [8.0, 1.0]), 1.0 / 3.0)
    assert j.coeffs == pytest.approx([2.0, 1.0 / 12.0], rel=1e-14)


@pytest.mark.parametrize(
    "jet, expected",
    [
        (Jet(0.0, [0, 0, 2, 0]), [0, 2, 0]),
        (Jet(0.0, [5, 0, 0]), [0, 0]),
        (jet_elementary("sin", Jet.variable(0.0, 4)), [1, 0, -1, 0]),
    ],
)
def test_shift_derivative(jet, expected):
    assert np.allclose(jet_shift_derivative(jet).coeffs, expected)


def test_shift_derivative_of_order_zero():
    with pytest.raises(ContractViolation):
        jet_shift_derivative(Jet(0.0, [1.0]))


def test_mismatched_base_or_order():
    with pytest.raises(ContractViolation):
        Jet(0.0, [1, 2]) + Jet(1.0, [1, 2])
    with pytest.raises(ContractViolation):
        Jet(0.0, [1, 2]) * Jet(0.0, [1, 2, 3])


@pytest.mark.parametrize(
    "fn, value", [("log", 0.0), ("log", -1.0), ("sqrt", -1.0), ("pow", -2.0)]
)
def test_domain_errors(fn, value):
    with pytest.raises(SingularPointError):
        jet_elementary(fn, Jet(0.0, [value, 1.0]), 0.5 if fn == "pow" else None)


def test_division_by_vanishing_jet():
    with pytest.raises(SingularPointError):
        Jet.constant(1.0, 0.0, 2) / Jet(0.0, [0.0, 1.0, 0.0])


def test_non_finite_rejected():
    with pytest.raises(SingularPointError):
        Jet(0.0, [1.0, math.inf])


def test_jets_are_immutable():
    j = Jet(0.0, [1.0, 2.0])
    with pytest.raises(ValueError):
        j.coeffs[0] = 3.0


@pytest.mark.parametrize(
    "fn, expr", [("sin", sp.sin), ("cos", sp.cos), ("exp", sp.exp), ("log", sp.log), ("sqrt", sp.sqrt)]
)
def test_elementary_against_symbolic(fn, expr):
    inner = 1 + Z**2 / 3 + sp.sin(Z) / 5
    x = Jet(0.7, sympy_jet(inner, 0.7, 6))
    got = jet_elementary(fn, x).coeffs
    want = sympy_jet(expr(inner), 0.7, 6)
    assert np.allclose(got, want, rtol=1e-11, atol=1e-12)


@pytest.mark.parametrize("p", [-3, -1, 2, 5, 0.5, -1.5, 1.0 / 3.0])
def test_power_against_symbolic(p):
    inner = 2 + Z
    x = Jet(0.4, sympy_jet(inner, 0.4, 6))
    want = sympy_jet(inner ** sp.nsimplify(p), 0.4, 6)
    assert np.allclose(jet_elementary("pow", x, p).coeffs, want, rtol=1e-11)


def test_integrate_inverts_derivative():
    x = jet_elementary("exp", Jet.variable(0.2, 5))
    assert np.allclose(jet_integrate(x.derivative(), x.value).coeffs, x.coeffs)


def test_compose_matches_chain_rule():
    outer = jet_elementary("sin", Jet.variable(0.5, 5))  # sin about 0.5
    inner = Jet(0.1, sympy_jet(0.5 + Z**2, 0.1, 5))
    inner = inner - (inner.value - 0.5)  # shift so inner.value == 0.5
    expr = sp.sin(0.5 + Z**2 - 0.01)
    assert np.allclose(outer.compose(inner).coeffs, sympy_jet(expr, 0.1, 5), rtol=1e-12)


def test_elementary_dispatch_on_floats():
    assert elementary("exp", 0.0) == 1.0
    with pytest.raises(SingularPointError):
        elementary("log", 0.0)


def test_jet2_partials_against_symbolic():
    r = sp.Symbol("r")
    f = sp.exp(Z) * r**2 + sp.sin(Z * r)
    z, rr = Jet2.variables(0.3, 1.2, 4)
    got = rr * rr * z.apply("exp") + (z * rr).apply("sin")
    for i in range(4):
        for j in range(4 - i):
            want = float(sp.diff(f, Z, i, r, j).subs({Z: 0.3, r: 1.2})) if i + j else float(f.subs({Z: 0.3, r: 1.2}))
            assert got.partial(i, j) == pytest.approx(want, rel=1e-11, abs=1e-12)


def test_jet2_along_curve():
    z, r = Jet2.variables(0.2, 0.5, 3)
    g = z * r * r
    zc = Jet.variable(0.2, 3)
    rc = Jet(0.2, [0.5, 2.0, -1.0, 4.0])
    assert np.allclose(g.along(zc, rc).coeffs, (zc * rc * rc).coeffs)


def test_lift_evaluates_derivative_function():
    f = lambda z0, n: jet_elementary("sin", Jet.variable(z0, n))  # noqa: E731
    assert lift(f, 0.3, 1) == pytest.approx(math.cos(0.3))
    j = lift(f, Jet.variable(0.3, 2), 1)
    assert np.allclose(j.coeffs, [math.cos(0.3), -math.sin(0.3), -math.cos(0.3)])


# properties ------------------------------------------------------------------------

coef = st.floats(-3, 3, allow_nan=False)
polys = st.lists(coef, min_size=1, max_size=5)
base = st.floats(-1.5, 1.5, allow_nan=False)


@settings(max_examples=40, deadline=None)
@given(polys, polys, base)
def test_product_of_polynomials(p, q, z0):
    prod = sp.expand(sum(c * Z**i for i, c in enumerate(p)) * sum(c * Z**i for i, c in enumerate(q)))
    want = np.array(sympy_jet(prod, z0, 6))
    got = jet_mul(poly_jet(p, z0, 6), poly_jet(q, z0, 6)).coeffs
    scale = max(1.0, np.abs(want).max())
    assert np.all(np.abs(got - want) <= 1e-12 * scale)


@settings(max_examples=60, deadline=None)
@given(st.lists(coef, min_size=5, max_size=5), st.lists(coef, min_size=5, max_size=5), base)
def test_div_undoes_mul(xc, yc, z0):
    x = Jet(z0, xc)
    y = Jet(z0, [yc[0] + (4.0 if yc[0] >= 0 else -4.0)] + yc[1:])
    back = jet_div(jet_mul(x, y), y).coeffs
    assert np.allclose(back, x.coeffs, rtol=1e-10, atol=1e-10 * max(1.0, np.abs(x.coeffs).max()))


@settings(max_examples=40, deadline=None)
@given(st.lists(coef, min_size=4, max_size=4), base)
def test_derivative_of_exp_is_exp(xc, z0):
    x = Jet(z0, [xc[0], *xc[1:]])
    e = jet_elementary("exp", x)
    # (exp u)' = u' exp u, so shift(exp(x)) = shift(x) * exp(x) truncated
    assert np.allclose(e.derivative().coeffs, (x.derivative() * e.truncate(x.order - 1)).coeffs, rtol=1e-10, atol=1e-9)


@settings(max_examples=30, deadline=None)
@given(base)
def test_shift_of_exp_identity(z0):
    e = jet_elementary("exp", Jet.variable(z0, 6))
    assert np.allclose(e.derivative().coeffs, e.truncate(5).coeffs, rtol=1e-13)
