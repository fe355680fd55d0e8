import math

import numpy as np
import pytest
import scipy.optimize

from isobeam.errors import ContractViolation, DomainError, PoleError
from isobeam.factorization import BeamCoefficients, FactorPair
from isobeam.families import ChazyFamilySpec, LieFamilySpec, chazy_factor_pair, lie_factor_pair
from isobeam.spectral import (
    BoundaryCondition,
    PhysicalBeam,
    assemble,
    barcilon_map,
    clamped_beta,
    isospec_report,
    solve_spectrum,
    spectrum,
)

ZERO = BeamCoefficients.zero()
HINGED = BoundaryCondition("hinged", "hinged")
CLAMPED = BoundaryCondition("clamped", "clamped")


def beta_root(f, lo, hi):
    return scipy.optimize.brentq(f, lo, hi, xtol=1e-15)


def biharmonic(n, h, corner):
    """Pentadiagonal 5-point stencil with the corner diagonal set by the ghost reflection."""
    M = (np.diag(np.full(n, 6.0)) + np.diag(np.full(n - 1, -4.0), 1) + np.diag(np.full(n - 1, -4.0), -1)
         + np.diag(np.ones(n - 2), 2) + np.diag(np.ones(n - 2), -2))
    M[0, 0] = M[-1, -1] = 6.0 + corner
    return M / h**4


def test_boundary_condition_parsing():
    assert BoundaryCondition.parse("hinged") == HINGED
    assert BoundaryCondition.parse("clamped-free") == BoundaryCondition("clamped", "free")
    assert str(BoundaryCondition("clamped", "free")) == "clamped-free"
    for bad in ("glued", "a-b-c"):
        with pytest.raises(ContractViolation):
            BoundaryCondition.parse(bad)


@pytest.mark.parametrize("bc, corner", [(HINGED, -1.0), (CLAMPED, 1.0)])
def test_unit_beam_matrix_is_the_reflected_biharmonic(bc, corner):
    n = 40
    bm = assemble(ZERO, bc, n, 1.0)
    assert np.allclose(bm.toarray(), biharmonic(n, 1 / (n + 1), corner), rtol=1e-14, atol=0)


def test_constant_A_adds_second_difference():
    n = 40
    h = 1 / (n + 1)
    bm = assemble(BeamCoefficients.from_exprs("1", "0"), HINGED, n, 1.0)
    D2 = (np.diag(np.full(n, -2.0)) + np.diag(np.ones(n - 1), 1) + np.diag(np.ones(n - 1), -1)) / h**2
    assert np.allclose(bm.toarray(), biharmonic(n, h, -1.0) + D2, rtol=1e-14, atol=1e-6)


def test_first_order_term_uses_centred_difference():
    n = 40
    h = 1 / (n + 1)
    A = assemble(BeamCoefficients.from_exprs("z", "0"), HINGED, n, 1.0).toarray()
    Z = assemble(BeamCoefficients.zero(), HINGED, n, 1.0).toarray()
    diff = A - Z
    zi = h * np.arange(1, n + 1)
    i = 10
    assert diff[i, i] == pytest.approx(-2 * zi[i] / h**2)
    assert diff[i, i + 1] == pytest.approx(zi[i] / h**2 + 1 / (2 * h))
    assert diff[i, i - 1] == pytest.approx(zi[i] / h**2 - 1 / (2 * h))


@pytest.mark.parametrize("bc", ["hinged", "clamped", "free", "sliding", "clamped-free", "hinged-sliding"])
def test_structured_apply_matches_matrix(bc):
    bm = assemble(BeamCoefficients.from_exprs("1 + z", "cos(z)"), BoundaryCondition.parse(bc), 50, 1.3, start=0.2)
    x = np.random.default_rng(0).normal(size=bm.matrix.shape[0])
    assert np.allclose(bm.apply(x), bm.matrix @ x, rtol=1e-9, atol=1e-9 * np.abs(bm.matrix @ x).max())


def test_free_end_adds_boundary_unknown():
    assert assemble(ZERO, BoundaryCondition("free", "hinged"), 40, 1.0).matrix.shape == (41, 41)
    assert assemble(ZERO, BoundaryCondition("sliding", "free"), 40, 1.0).matrix.shape == (42, 42)


def test_hinged_matrix_symmetric_with_positive_spectrum():
    M = assemble(ZERO, HINGED, 64, 1.0).toarray()
    assert np.allclose(M, M.T)
    assert np.all(np.linalg.eigvalsh(M) > 0)


def test_assembly_preconditions():
    with pytest.raises(ContractViolation):
        assemble(ZERO, HINGED, 31, 1.0)
    with pytest.raises(ContractViolation):
        assemble(ZERO, HINGED, 40, 0.0)
    with pytest.raises(PoleError):
        assemble(BeamCoefficients.from_exprs("1/(z - 0.5)", "0"), HINGED, 40, 1.0)
    with pytest.raises(PoleError):
        assemble(BeamCoefficients.from_exprs("0", "log(z)"), HINGED, 40, 1.0)


def test_poles_between_nodes_are_refused():
    # 0.5 is never a node of these grids; an even-order pole does not change sign either
    for A, B in (("1/(z - 0.5)", "0"), ("0", "1/(z - 0.5)^2"), ("sin(3.1415926535897931*z)/cos(3.1415926535897931*z)", "0")):
        with pytest.raises(PoleError):
            assemble(BeamCoefficients.from_exprs(A, B), HINGED, 40, 1.0)
    # steep but entire, and a complex pole pair off the axis, are accepted
    assemble(BeamCoefficients.from_exprs("exp(20*z)", "sin(30*z)"), HINGED, 32, 1.0)
    assemble(BeamCoefficients.from_exprs("1/(1 + 100*(z - 0.5)^2)", "0"), HINGED, 40, 1.0)


def test_hinged_unit_beam():
    s = solve_spectrum(ZERO, HINGED, 1000, 1.0, 5)
    exact = (np.arange(1, 6) * math.pi) ** 4
    assert np.all(np.abs(s.eigenvalues / exact - 1) < 1e-3)
    assert s.eigenvalues[0] == pytest.approx(97.409, abs=1e-3)
    assert s.eigenvalues[1] == pytest.approx(1558.55, rel=1e-4)
    assert s.converged.all() and not s.reality_warning


def test_clamped_unit_beam():
    beta = clamped_beta(1)
    assert beta == pytest.approx(4.730041, abs=1e-6)
    assert math.cos(beta) * math.cosh(beta) == pytest.approx(1.0, abs=1e-9)
    s = solve_spectrum(ZERO, CLAMPED, 1000, 1.0, 1)
    assert s.eigenvalues[0] == pytest.approx(beta**4, rel=2e-3)
    assert s.eigenvalues[0] == pytest.approx(500.56, abs=0.01)


@pytest.mark.parametrize(
    "bc, equation, bracket",
    [
        ("hinged-clamped", lambda b: math.tan(b) - math.tanh(b), (3.5, 4.5)),
        ("clamped-free", lambda b: math.cos(b) + 1 / math.cosh(b), (1.5, 2.5)),
        ("clamped-sliding", lambda b: math.tan(b) + math.tanh(b), (2.0, 3.0)),
    ],
)
def test_mixed_boundary_conditions_against_frequency_equations(bc, equation, bracket):
    beta = beta_root(equation, *bracket)
    s = solve_spectrum(ZERO, BoundaryCondition.parse(bc), 400, 1.0, 1)
    assert s.eigenvalues[0] == pytest.approx(beta**4, rel=1e-3)


def test_free_and_sliding_rigid_modes():
    free = solve_spectrum(ZERO, BoundaryCondition.parse("free"), 400, 1.0, 3)
    assert np.all(np.abs(free.eigenvalues[:2]) < 1e-5)
    assert free.eigenvalues[2] == pytest.approx(clamped_beta(1) ** 4, rel=1e-3)
    assert free.converged.all()
    sliding = solve_spectrum(ZERO, BoundaryCondition.parse("sliding"), 400, 1.0, 3)
    assert abs(sliding.eigenvalues[0]) < 1e-5
    assert sliding.eigenvalues[1:] == pytest.approx([math.pi**4, (2 * math.pi) ** 4], rel=1e-3)


def test_length_scaling():
    s2 = solve_spectrum(ZERO, HINGED, 400, 2.0, 2)
    assert s2.eigenvalues[0] == pytest.approx((math.pi / 2) ** 4, rel=1e-3)
    s1 = solve_spectrum(ZERO, HINGED, 400, 1.0, 2)
    assert s2.eigenvalues == pytest.approx(s1.eigenvalues / 16, rel=1e-12)


@pytest.mark.parametrize("bc", [HINGED, CLAMPED])
def test_second_order_convergence(bc):
    exact = (np.arange(1, 4) * math.pi) ** 4 if bc == HINGED else np.array([clamped_beta(k) ** 4 for k in (1, 2, 3)])
    e1 = solve_spectrum(ZERO, bc, 250, 1.0, 3, check_convergence=False).eigenvalues - exact
    e2 = solve_spectrum(ZERO, bc, 500, 1.0, 3, check_convergence=False).eigenvalues - exact
    assert np.all((e1 / e2 > 3.5) & (e1 / e2 < 4.5))


def test_variable_coefficients_converge_and_stay_real():
    coeffs = BeamCoefficients.from_exprs("10*sin(3*z)", "5 + z")
    s = solve_spectrum(coeffs, CLAMPED, 300, 1.0, 3)
    assert s.converged.all() and not s.reality_warning
    assert np.all(np.abs(s.eigenvalues - s.refined) <= 1e-3 * np.abs(s.refined))


def test_nonsymmetric_large_grid_uses_sparse_path():
    coeffs = BeamCoefficients.from_exprs("2*z", "1")
    a = solve_spectrum(coeffs, HINGED, 1400, 1.0, 2, check_convergence=False).eigenvalues
    b = solve_spectrum(coeffs, HINGED, 700, 1.0, 2, check_convergence=False).eigenvalues
    assert a == pytest.approx(b, rel=1e-4)


def test_mode_count_limits():
    bm = assemble(ZERO, HINGED, 40, 1.0)
    with pytest.raises(ContractViolation):
        spectrum(bm, 0)
    with pytest.raises(ContractViolation):
        spectrum(bm, 11)


def test_spectrum_serialization():
    d = solve_spectrum(ZERO, HINGED, 64, 1.0, 2).to_dict()
    assert set(d) >= {"eigenvalues", "bc", "grid_n", "converged"}
    assert d["bc"] == "hinged" and d["grid_n"] == 64 and len(d["converged"]) == 2


# iso-spectrality reports --------------------------------------------------------------


def test_trivial_factorization_gives_identical_spectra():
    rep = isospec_report(FactorPair.from_exprs("0", "0"), HINGED, 200, 1.0, 3)
    assert np.array_equal(rep.spectrum_L.eigenvalues, rep.spectrum_hat.eigenvalues)
    assert rep.intertwining_residual == 0.0
    assert np.all(rep.relative_gaps == 0.0)


def test_lie_family_report():
    fp = lie_factor_pair(LieFamilySpec("exp(z)", C=2.0, k=1))
    rep = isospec_report(fp, HINGED, 200, 1.0, 3)
    assert rep.intertwining_residual <= 1e-9
    assert len(rep.spectrum_L.eigenvalues) == len(rep.spectrum_hat.eigenvalues) == 3
    d = rep.to_dict()
    assert [row["mode"] for row in d["modes"]] == [1, 2, 3]


def test_chazy_report_and_grid_independence():
    fp = chazy_factor_pair(ChazyFamilySpec(0, 1, 1, 0))
    a = isospec_report(fp, HINGED, 100, 1.0, 2, start=0.6, check_convergence=False)
    b = isospec_report(fp, HINGED, 200, 1.0, 2, start=0.6, check_convergence=False)
    assert a.intertwining_relative <= 1e-9
    assert a.intertwining_residual == b.intertwining_residual
    # L is the unit beam here, so its spectrum is the hinged one
    assert b.spectrum_L.eigenvalues[0] == pytest.approx(math.pi**4, rel=1e-3)
    assert a.interval == (0.6, 1.6)


def test_report_refuses_poles():
    fp = chazy_factor_pair(ChazyFamilySpec(0, 1, 1, 0))
    with pytest.raises(PoleError):
        isospec_report(fp, HINGED, 100, 1.0, 2, check_convergence=False)


# canonical coordinates ---------------------------------------------------------------


@pytest.mark.parametrize(
    "f, m, x, z, factor",
    [
        ("1", "1", 0.7, 0.7, 1.0),
        ("1", "16", 0.5, 1.0, 2**-1.5),
        ("exp(z)", "exp(z)", 0.8, 0.8, math.exp(-0.4)),
    ],
)
def test_barcilon_examples(f, m, x, z, factor):
    got = barcilon_map(PhysicalBeam(f, m), x)
    assert got == pytest.approx((z, factor), rel=1e-12)


def test_barcilon_quadrature():
    z, _ = barcilon_map(PhysicalBeam("1", "(1+z)^4"), 1.0)
    assert z == pytest.approx(1.5, rel=1e-12)


def test_barcilon_domain():
    with pytest.raises(DomainError):
        barcilon_map(PhysicalBeam("1 - 2*z", "1"), 1.0)
    with pytest.raises(DomainError):
        barcilon_map(PhysicalBeam("1", "-1"), 0.5)
