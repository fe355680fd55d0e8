"""Finite-difference spectra of the canonical beam eigenproblem ``L U = lambda U``.

``L U = U'''' + A U'' + A' U' + B U`` is discretized on a uniform grid with
second-order central differences; boundary conditions are imposed by
eliminating ghost values outside the interval.  Conditions are stated in
canonical coordinates:

============  ==================================
hinged        ``U = 0``, ``U'' = 0``
clamped       ``U = 0``, ``U' = 0``
free          ``U'' = 0``, ``U''' + A U' = 0``
sliding       ``U' = 0``, ``U''' + A U' = 0``
============  ==================================

For hinged and clamped ends the boundary value is zero and only interior
nodes are unknown; free and sliding ends add the boundary node itself.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.optimize
import scipy.sparse as sp
import scipy.sparse.linalg

from .errors import ContractViolation, DomainError, IsobeamError, NumericalFailure, PoleError
from .exprlang import ExprAst, as_ast, evaluate
from .factorization import BeamCoefficients, FactorPair, intertwine_residual
from .families import quadrature

log = logging.getLogger(__name__)

BC_KINDS = ("hinged", "clamped", "free", "sliding")


@dataclass(frozen=True)
class BoundaryCondition:
    left: str = "hinged"
    right: str = "hinged"

    def __post_init__(self):
        for kind in (self.left, self.right):
            if kind not in BC_KINDS:
                raise ContractViolation(f"unknown boundary condition {kind!r}; expected one of {BC_KINDS}")

    @classmethod
    def parse(cls, text: str) -> BoundaryCondition:
        """``"hinged"`` (both ends) or ``"clamped-free"`` (left-right)."""
        parts = text.split("-")
        if len(parts) == 1:
            return cls(parts[0], parts[0])
        if len(parts) == 2:
            return cls(*parts)
        raise ContractViolation(f"cannot parse boundary condition {text!r}")

    def __str__(self) -> str:
        return self.left if self.left == self.right else f"{self.left}-{self.right}"


@dataclass
class BeamMatrix:
    """Assembled operator plus the data needed to apply it structurally and to refine the grid.

    ``prolongation`` maps the unknowns to node values on the extended grid
    (two ghost nodes beyond each end); :meth:`apply` evaluates the stencil by
    repeated differencing of that vector, which keeps the result accurate
    where the stored ``1/h^4`` entries would cancel catastrophically.
    """

    matrix: sp.csr_matrix
    nodes: np.ndarray
    coeffs: BeamCoefficients
    bc: BoundaryCondition
    n: int
    length: float
    start: float
    prolongation: sp.csr_matrix
    rows_at: np.ndarray  # extended-grid index of each equation node
    A: np.ndarray
    dA: np.ndarray
    B: np.ndarray

    @property
    def h(self) -> float:
        return self.length / (self.n + 1)

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()

    def apply(self, x: np.ndarray) -> np.ndarray:
        h = self.h
        ext = self.prolongation @ x
        d2 = np.diff(ext, 2)  # centred at ext index 1..len-2
        d4 = np.diff(d2, 2)  # centred at ext index 2..len-3
        j = self.rows_at
        return d4[j - 2] / h**4 + self.A * d2[j - 1] / h**2 + self.dA * (ext[j + 1] - ext[j - 1]) / (2 * h) + self.B * ext[j]

    def refine(self) -> BeamMatrix:
        return assemble(self.coeffs, self.bc, 2 * self.n, self.length, start=self.start)


@dataclass
class Spectrum:
    eigenvalues: np.ndarray
    bc: BoundaryCondition
    grid_n: int
    length: float
    converged: np.ndarray | None = None
    reality_warning: bool = False
    max_relative_imag: float = 0.0
    refined: np.ndarray | None = None  # same modes on the doubled grid

    def to_dict(self) -> dict:
        return {
            "eigenvalues": [float(v) for v in self.eigenvalues],
            "bc": str(self.bc),
            "grid_n": self.grid_n,
            "length": self.length,
            "converged": None if self.converged is None else [bool(c) for c in self.converged],
            "reality_warning": self.reality_warning,
            "refined": None if self.refined is None else [float(v) for v in self.refined],
        }


def _coefficient_samples(coeffs: BeamCoefficients, zs: np.ndarray):
    """Values of ``A``, ``A'`` and ``B`` at the nodes, refusing coefficients with a pole on the grid.

    Poles that fall between nodes are caught with a root test on the local
    Taylor coefficients: ``(scale/|t_k|)^(1/k)`` estimates the distance to
    the nearest singularity (exactly, for a simple pole), and anything closer
    than about half a cell means the grid straddles a pole.
    """
    h = float(zs[1] - zs[0])
    tA = np.empty((len(zs), 4))
    tB = np.empty((len(zs), 3))
    for i, z in enumerate(zs):
        try:
            Aj = coeffs.A(float(z), 3)
            Bj = coeffs.B(float(z), 2)
        except (IsobeamError, ArithmeticError) as exc:
            raise PoleError(f"assembly refused: coefficients undefined near z={z}: {exc}", _cell(zs, i)) from exc
        tA[i] = Aj.coeffs[:4] / _FACT[:4]
        tB[i] = Bj.coeffs[:3] / _FACT[:3]
    bad = ~np.isfinite(tA).all(axis=1) | ~np.isfinite(tB).all(axis=1)
    if bad.any():
        i = int(np.argmax(bad))
        raise PoleError("assembly refused: non-finite coefficient", _cell(zs, i))
    for t in (tA, tB):
        k = t.shape[1] - 1
        scale = max(1.0, float(np.abs(t[:, 0]).max()))
        with np.errstate(divide="ignore"):
            radius = (scale / np.abs(t[:, k])) ** (1.0 / k)
        if radius.min() < 0.6 * h:
            i = int(np.argmin(radius))
            raise PoleError(
                f"assembly refused: coefficient singularity within {radius[i]:.3g} of z={zs[i]:.6g}", _cell(zs, i)
            )
    return tA[:, 0], tA[:, 1], tB[:, 0]


_FACT = np.array([1.0, 1.0, 2.0, 6.0])


def _cell(zs: np.ndarray, i: int) -> tuple[float, float]:
    return float(zs[max(i - 1, 0)]), float(zs[min(i + 1, len(zs) - 1)])


def assemble(coeffs: BeamCoefficients, bc: BoundaryCondition, n: int, length: float, start: float = 0.0) -> BeamMatrix:
    """Second-order finite-difference matrix of ``L`` on ``[start, start + length]``.

    ``n`` interior nodes with spacing ``h = length/(n+1)``; free and sliding
    ends contribute their boundary node as an extra unknown.
    """
    if n < 32:
        raise ContractViolation("grid needs at least 32 interior nodes")
    if length <= 0:
        raise ContractViolation("length must be positive")
    h = length / (n + 1)
    nodes_all = start + h * np.arange(n + 2)
    A, dA, B = _coefficient_samples(coeffs, nodes_all)

    first = 0 if bc.left in ("free", "sliding") else 1
    last = n + 1 if bc.right in ("free", "sliding") else n
    unknown = list(range(first, last + 1))
    m = len(unknown)
    col = {j: c for c, j in enumerate(unknown)}

    # value of node j (ghosts -2..-1 and n+2..n+3 included) as a sparse row over the unknowns
    vals: dict[int, dict[int, float]] = {}

    def unit(j):
        return {col[j]: 1.0} if j in col else {}

    def lin(*terms):
        out: dict[int, float] = {}
        for c, row in terms:
            for k, v in row.items():
                out[k] = out.get(k, 0.0) + c * v
        return out

    for j in range(0, n + 2):
        vals[j] = unit(j)
    h2 = h * h
    for side, kind in (("left", bc.left), ("right", bc.right)):
        if side == "left":
            b, i1, i2, g1, g2, Ab = 0, 1, 2, -1, -2, A[0]
        else:
            b, i1, i2, g1, g2, Ab = n + 1, n, n - 1, n + 2, n + 3, A[-1]
        if kind in ("hinged", "free"):
            vals[g1] = lin((2.0, vals[b]), (-1.0, vals[i1]))  # U'' = 0
        else:
            vals[g1] = dict(vals[i1])  # U' = 0
        # U''' + A U' = 0 (only reached from rows at free/sliding boundary nodes)
        vals[g2] = lin((1.0, vals[i2]), (-2.0, vals[i1]), (2.0, vals[g1]), (h2 * Ab, vals[i1]), (-h2 * Ab, vals[g1]))

    ext = n + 6  # extended index e holds node e - 2
    P = sp.lil_matrix((ext, m))
    for j, row in vals.items():
        for c, v in row.items():
            P[j + 2, c] = v
    P = P.tocsr()
    rows_at = np.array(unknown) + 2
    Ae, dAe, Be = A[unknown], dA[unknown], B[unknown]

    S = sp.lil_matrix((m, ext))
    w4 = np.array([1.0, -4.0, 6.0, -4.0, 1.0]) / h**4
    for r_idx, e in enumerate(rows_at):
        w = w4.copy()
        w[1:4] += Ae[r_idx] * np.array([1.0, -2.0, 1.0]) / h2
        w[1] -= dAe[r_idx] / (2 * h)
        w[3] += dAe[r_idx] / (2 * h)
        w[2] += Be[r_idx]
        S[r_idx, e - 2 : e + 3] = w
    M = (S.tocsr() @ P).tocsr()
    M.sum_duplicates()
    M.eliminate_zeros()
    return BeamMatrix(M, nodes_all[unknown], coeffs, bc, n, length, start, P, rows_at, Ae, dAe, Be)


def _is_symmetric(M: sp.csr_matrix) -> bool:
    scale = abs(M).max()
    return abs(M - M.T).max() <= 1e-12 * scale


def _smallest_eigenpairs(bm: BeamMatrix, k: int):
    """(values, right vectors, left vectors) of the ``k`` algebraically smallest modes."""
    M = bm.matrix
    m = M.shape[0]
    if _is_symmetric(M):
        band = np.zeros((3, m))
        for d in range(3):
            band[d, : m - d] = M.diagonal(-d)
        w, v = scipy.linalg.eig_banded(band, lower=True, select="i", select_range=(0, k - 1))
        return w, v, v
    if m <= 1200:
        w, vl, vr = scipy.linalg.eig(M.toarray(), left=True, right=True)
        idx = np.argsort(w.real)[:k]
        return w[idx], vr[:, idx], vl[:, idx]
    # shift-invert from just below the spectrum, located on a coarse grid
    coarse = assemble(bm.coeffs, bm.bc, 199, bm.length, bm.start).matrix.toarray()
    lower = float(np.min(scipy.linalg.eigvals(coarse).real))
    sigma = lower - max(1.0, 0.1 * abs(lower))
    nev = min(k + 4, m - 2)
    try:
        w, vr = scipy.sparse.linalg.eigs(M.tocsc(), k=nev, sigma=sigma, which="LM")
        wl, vl = scipy.sparse.linalg.eigs(M.T.tocsc(), k=nev, sigma=sigma, which="LM")
    except scipy.sparse.linalg.ArpackNoConvergence as exc:
        raise NumericalFailure("shift-invert eigen-iteration did not converge", len(exc.eigenvalues)) from exc
    idx, idl = np.argsort(w.real)[:k], np.argsort(wl.real)[:k]
    return w[idx], vr[:, idx], vl[:, idl].conj()


def _smallest_eigenvalues(bm: BeamMatrix, k: int) -> np.ndarray:
    """Eigenvalues with a first-order correction ``y^H (M x - w x) / y^H x``.

    The residual comes from :meth:`BeamMatrix.apply`, so the correction
    removes the rounding that the dense solvers inherit from the ``1/h^4``
    scale of the entries.
    """
    w, vr, vl = _smallest_eigenpairs(bm, k)
    out = np.array(w, dtype=complex)
    for i in range(len(w)):
        x, y = vr[:, i], vl[:, i]
        res = bm.apply(x.real) + 1j * bm.apply(x.imag) if np.iscomplexobj(x) else bm.apply(x)
        res = res - w[i] * x
        denom = np.vdot(y, x)
        if abs(denom) > 1e-8 * np.linalg.norm(x) * np.linalg.norm(y):
            out[i] = w[i] + np.vdot(y, res) / denom
    return out if np.iscomplexobj(w) else out.real


def spectrum(bm: BeamMatrix, n_modes: int, check_convergence: bool = True, rtol: float = 1e-3) -> Spectrum:
    """The ``n_modes`` algebraically smallest eigenvalues of an assembled operator.

    With ``check_convergence`` the operator is re-assembled on the doubled
    grid and each mode is flagged converged when the two agree to ``rtol``.
    """
    m = bm.matrix.shape[0]
    if n_modes < 1 or n_modes > m // 4:
        raise ContractViolation(f"n_modes={n_modes} is not small relative to the grid size {m}")
    ev = np.asarray(_smallest_eigenvalues(bm, n_modes))
    rel_imag = np.abs(ev.imag) / np.maximum(np.abs(ev.real), 1e-300)
    worst = float(rel_imag.max()) if ev.size else 0.0
    warn = worst > 1e-8
    if warn:
        log.warning("spectrum has complex eigenvalues (max |imag|/|real| = %.2e)", worst)
    values = np.sort(ev.real)
    converged = fine = None
    if check_convergence:
        fine = np.sort(np.asarray(_smallest_eigenvalues(bm.refine(), n_modes)).real)
        converged = np.abs(values - fine) <= rtol * np.maximum(np.abs(fine), bm.length**-4)
    return Spectrum(values, bm.bc, bm.n, bm.length, converged, warn, worst, fine)


def solve_spectrum(
    coeffs: BeamCoefficients,
    bc: BoundaryCondition,
    n: int,
    length: float,
    n_modes: int,
    start: float = 0.0,
    check_convergence: bool = True,
) -> Spectrum:
    return spectrum(assemble(coeffs, bc, n, length, start), n_modes, check_convergence)


def clamped_beta(mode: int = 1) -> float:
    """``mode``-th positive root of ``cos(beta) cosh(beta) = 1`` (clamped-clamped unit beam)."""
    f = lambda b: math.cos(b) - 1.0 / math.cosh(b)  # noqa: E731  same roots, no overflow
    guess = (mode + 0.5) * math.pi
    return scipy.optimize.brentq(f, guess - 0.5, guess + 0.5, xtol=1e-15)


@dataclass
class IsospecReport:
    spectrum_L: Spectrum
    spectrum_hat: Spectrum
    relative_gaps: np.ndarray
    intertwining_residual: float
    intertwining_relative: float
    factorization_residual: float
    interval: tuple[float, float]
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        rows = [
            {"mode": i + 1, "L": float(a), "Lhat": float(b), "relative_gap": float(g)}
            for i, (a, b, g) in enumerate(zip(self.spectrum_L.eigenvalues, self.spectrum_hat.eigenvalues, self.relative_gaps))
        ]
        return {
            "interval": list(self.interval),
            "bc": str(self.spectrum_L.bc),
            "grid_n": self.spectrum_L.grid_n,
            "modes": rows,
            "spectrum_L": self.spectrum_L.to_dict(),
            "spectrum_hat": self.spectrum_hat.to_dict(),
            "intertwining_residual": self.intertwining_residual,
            "intertwining_relative": self.intertwining_relative,
            "factorization_residual": self.factorization_residual,
            "notes": self.notes,
        }


TEST_FUNCTIONS = ("exp(z)", "sin(3*z) + z^2", "cos(z)/(2 + z^2)")


def isospec_report(
    fp: FactorPair,
    bc: BoundaryCondition,
    n: int,
    length: float,
    n_modes: int,
    start: float = 0.0,
    samples: int = 21,
    check_convergence: bool = True,
) -> IsospecReport:
    """Spectra of ``L = R* R`` and ``Lhat = R R*`` side by side.

    The report never claims the two spectra agree: boundary conditions are
    not transported by ``U -> R U``.  The analytic gate is the intertwining
    residual, the maximum over sample points and test functions (absolute,
    and relative to the size of the compared values).
    """
    L = BeamCoefficients.from_factors(fp)
    Lhat = BeamCoefficients.swapped(fp)
    s_L = solve_spectrum(L, bc, n, length, n_modes, start, check_convergence)
    s_hat = solve_spectrum(Lhat, bc, n, length, n_modes, start, check_convergence)
    gaps = np.abs(s_L.eigenvalues - s_hat.eigenvalues) / np.maximum(np.abs(s_L.eigenvalues), 1e-300)
    inter = inter_rel = fact = 0.0
    for z in np.linspace(start, start + length, samples):
        for U in TEST_FUNCTIONS:
            f, i = intertwine_residual(fp, U, float(z))
            _, i_rel = intertwine_residual(fp, U, float(z), relative=True)
            fact, inter, inter_rel = max(fact, f), max(inter, i), max(inter_rel, i_rel)
    notes = ["spectra are reported side by side; equality is not asserted (boundary conditions are not mapped by R)"]
    return IsospecReport(s_L, s_hat, gaps, inter, inter_rel, fact, (start, start + length), notes)


@dataclass(frozen=True)
class PhysicalBeam:
    """Flexural rigidity ``f = E I`` and linear mass density ``m = rho * area`` on ``[0, length]``."""

    f: ExprAst
    m: ExprAst
    length: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "f", as_ast(self.f))
        object.__setattr__(self, "m", as_ast(self.m))


def barcilon_map(beam: PhysicalBeam, x: float, tol: float = 1e-12) -> tuple[float, float]:
    """Canonical coordinate ``z = int_0^x (m/f)^(1/4)`` and amplitude factor ``(m^3 f)^(-1/8)`` at ``x``."""

    def ratio(t: float) -> float:
        fv, mv = float(evaluate(beam.f, t)), float(evaluate(beam.m, t))
        if fv <= 0 or mv <= 0:
            raise DomainError(f"f and m must be positive; f({t})={fv}, m({t})={mv}")
        return (mv / fv) ** 0.25

    for t in np.linspace(0.0, x, 33):
        ratio(float(t))
    z = quadrature(ratio, 0.0, x, tol)
    fv, mv = float(evaluate(beam.f, x)), float(evaluate(beam.m, x))
    return z, (mv**3 * fv) ** -0.125

