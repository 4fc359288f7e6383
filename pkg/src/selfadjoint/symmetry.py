"""Rotation invariance of boundary conditions, disk mode spectra and corner singularities.

The boundary space of a rotation-symmetric problem is truncated to Fourier
modes ``n in [-N, N]`` with ``m`` radial components per mode, ordered
mode-major.  ``U(1)`` acts by ``V(alpha) = diag(e^{i n alpha}) (x) I_m``.  A
boundary unitary gives a rotation-invariant extension iff it commutes with
every ``V(alpha)``; in this basis such unitaries are block diagonal,
``U = diag(e^{i beta_n}) (x) u``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import boundary as bd
from .errors import DimensionMismatch, SolverFailure
from .quadform import SpectralResult

COMMUTANT_TOL = 1e-10
DEFAULT_N = 16
DEFAULT_SAMPLES = tuple(2 * math.pi * k / 7 for k in range(7)) + (math.pi / 3, 1.0, -2.5)


@dataclass(frozen=True, eq=False)
class GroupRep:
    sample_elements: tuple
    matrices: tuple
    n_max: int
    multiplicity: int = 1

    @property
    def dim(self) -> int:
        return (2 * self.n_max + 1) * self.multiplicity

    @property
    def modes(self) -> np.ndarray:
        return np.arange(-self.n_max, self.n_max + 1)

    def matrix(self, alpha: float) -> np.ndarray:
        return np.kron(np.diag(np.exp(1j * self.modes * alpha)), np.eye(self.multiplicity))

    def composition_defect(self) -> float:
        """Largest ``|V(a) V(b) - V(a + b)|`` over sampled pairs."""
        worst = 0.0
        for a, Va in zip(self.sample_elements, self.matrices):
            for b, Vb in zip(self.sample_elements, self.matrices):
                worst = max(worst, np.abs(Va @ Vb - self.matrix(a + b)).max())
        return float(worst)


def u1_rep(n_max: int = DEFAULT_N, multiplicity: int = 1, samples=DEFAULT_SAMPLES) -> GroupRep:
    rep = GroupRep(tuple(float(a) for a in samples), (), int(n_max), int(multiplicity))
    return GroupRep(rep.sample_elements, tuple(rep.matrix(a) for a in rep.sample_elements),
                    rep.n_max, rep.multiplicity)


@dataclass(frozen=True, eq=False)
class AdmissibleUnitary:
    radial_factor: np.ndarray
    phases: np.ndarray
    assembled: np.ndarray
    boundary: bd.BoundaryUnitary
    # modes whose block has an eigenvalue within NO_GAP_TOL of -1
    modes_touching_minus_one: tuple = ()

    @property
    def n_max(self) -> int:
        return (len(self.phases) - 1) // 2

    @property
    def gap_ok(self) -> bool:
        return not self.modes_touching_minus_one


class CommutantReport(tuple):
    """``(max_norm, passed)``."""

    def __new__(cls, max_norm: float, passed: bool):
        return super().__new__(cls, (max_norm, passed))

    @property
    def max_norm(self) -> float:
        return self[0]

    @property
    def passed(self) -> bool:
        return self[1]


@dataclass
class InvarianceReport:
    max_defect: float
    domain_defect: float
    passed: bool
    control_violation: float | None = None
    tol: float = COMMUTANT_TOL


def _check_dims(U, rep):
    if U.shape != (rep.dim, rep.dim):
        raise DimensionMismatch(f"unitary of shape {U.shape} for a {rep.dim}-dimensional rep")


def commutant_check(u_matrix, rep: GroupRep, tol: float = COMMUTANT_TOL) -> CommutantReport:
    U = np.asarray(u_matrix, dtype=complex)
    _check_dims(U, rep)
    worst = max(float(np.linalg.norm(U @ V - V @ U, 2)) for V in rep.matrices)
    return CommutantReport(worst, worst <= tol)


def build_admissible(radial_factor, phases) -> AdmissibleUnitary:
    u = np.atleast_2d(np.asarray(radial_factor, dtype=complex))
    beta = np.asarray(phases, dtype=float)
    if len(beta) % 2 == 0:
        raise ValueError("phases must have odd length 2N + 1")
    if bd.unitarity_defect(u) > bd.UNITARY_TOL:
        raise ValueError("radial factor is not unitary")
    U = np.kron(np.diag(np.exp(1j * beta)), u)
    N = (len(beta) - 1) // 2
    u_phases = np.linalg.eigvals(u)
    touching = tuple(int(n) for n, b in zip(range(-N, N + 1), beta)
                     if np.min(np.abs(np.exp(1j * b) * u_phases + 1)) < bd.NO_GAP_TOL)
    return AdmissibleUnitary(u, beta, U, bd.from_matrix(U), touching)


def mode_shift(n_max: int = DEFAULT_N, multiplicity: int = 1) -> np.ndarray:
    """Cyclic shift ``n -> n + 1`` of the Fourier modes, a non-invariant unitary."""
    size = 2 * n_max + 1
    S = np.roll(np.eye(size), 1, axis=0)
    return np.kron(S, np.eye(multiplicity)).astype(complex)


def form_invariance_defect(u_matrix, rep: GroupRep, n_random: int = 20, rng=None):
    """``max |Q(V phi, V psi) - Q(phi, psi)| / (|phi| |psi| max(1, |A_U|))`` and the domain defect.

    ``Q(phi, psi) = -<phi, A_U psi>`` is the boundary part of the form; its
    domain ``{P_W phi = 0}`` is invariant iff ``V`` commutes with ``P_W``.
    """
    U = np.asarray(u_matrix, dtype=complex)
    _check_dims(U, rep)
    bu = bd.from_matrix(U)
    A, P = bu.cayley_full, bu.w_projector
    scale = max(1.0, float(np.linalg.norm(A, 2)))
    rng = np.random.default_rng(rng)
    d = rep.dim
    Pperp = np.eye(d) - P
    worst = 0.0
    for _ in range(n_random):
        phi = Pperp @ (rng.standard_normal(d) + 1j * rng.standard_normal(d))
        psi = Pperp @ (rng.standard_normal(d) + 1j * rng.standard_normal(d))
        q0 = -np.vdot(phi, A @ psi)
        for V in rep.matrices:
            q = -np.vdot(V @ phi, A @ (V @ psi))
            worst = max(worst, abs(q - q0) / (np.linalg.norm(phi) * np.linalg.norm(psi) * scale))
    domain = max(float(np.linalg.norm(V @ P - P @ V, 2)) for V in rep.matrices)
    return float(worst), domain


def invariance_of_form_check(admissible, rep: GroupRep, n_random: int = 20, rng=None,
                             control=True, tol: float = COMMUTANT_TOL) -> InvarianceReport:
    """Form invariance for an admissible (or any) unitary, plus the mode-shift control."""
    U = admissible.assembled if isinstance(admissible, AdmissibleUnitary) else admissible
    rng = np.random.default_rng(rng)
    defect, domain = form_invariance_defect(U, rep, n_random, rng)
    violation = None
    if control:
        S = mode_shift(rep.n_max, rep.multiplicity)
        violation = form_invariance_defect(S, rep, n_random, rng)[0]
    return InvarianceReport(defect, domain, defect <= tol and domain <= tol, violation, tol)


def _radial_matrices(nodes, m):
    """Weighted stiffness, mass and ``m^2/r^2`` matrices of hat functions (weight ``r``)."""
    n = len(nodes)
    K = np.zeros((n, n))
    M = np.zeros((n, n))
    C = np.zeros((n, n))
    g3, w3 = np.polynomial.legendre.leggauss(3)
    g10, w10 = np.polynomial.legendre.leggauss(10)
    for e in range(n - 1):
        a, b = nodes[e], nodes[e + 1]
        h = b - a
        idx = np.ix_([e, e + 1], [e, e + 1])
        K[idx] += (a + b) / (2 * h) * np.array([[1, -1], [-1, 1]])
        r = a + h * (g3 + 1) / 2
        phi = np.array([(b - r) / h, (r - a) / h])
        M[idx] += (phi * (w3 * h / 2 * r)) @ phi.T
        if m:
            if a == 0:
                # only the right hat survives f(0) = 0: int_0^h (r/h)^2 / r dr = 1/2
                C[e + 1, e + 1] += 0.5
            else:
                r = a + h * (g10 + 1) / 2
                phi = np.array([(b - r) / h, (r - a) / h])
                C[idx] += (phi * (w10 * h / 2 / r)) @ phi.T
    return K, M, m * m * C


def disk_mode_spectrum(m: int, robin_c: float = -math.inf, n_elements: int = 400,
                       n_eigs: int = 3) -> SpectralResult:
    """Angular sector ``m`` of the unit-disk Laplacian with ``-df/dn = c f`` at ``r = 1``.

    Form: ``int_0^1 (|f'|^2 + m^2 |f|^2 / r^2) r dr - c |f(1)|^2``.
    ``robin_c = -inf`` imposes Dirichlet as a constraint; ``f(0) = 0`` is
    imposed for ``m != 0``.
    """
    if n_elements < 8:
        raise ValueError("n_elements must be >= 8")
    nodes = np.linspace(0.0, 1.0, n_elements + 1)
    K, M, C = _radial_matrices(nodes, int(m))
    A = K + C
    free = np.ones(len(nodes), dtype=bool)
    if m != 0:
        free[0] = False
    if math.isinf(robin_c) and robin_c < 0:
        free[-1] = False
    elif math.isfinite(robin_c):
        A[-1, -1] -= robin_c
    else:
        raise ValueError("robin_c must be finite or -inf")
    A, M = A[np.ix_(free, free)], M[np.ix_(free, free)]
    if not 1 <= n_eigs <= A.shape[0]:
        raise ValueError("n_eigs out of range")
    try:
        E, V = scipy.linalg.eigh(A, M, subset_by_index=[0, n_eigs - 1])
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise SolverFailure(f"radial eigensolver failed: {exc}")
    res = np.linalg.norm(A @ V - (M @ V) * E, axis=0) / np.linalg.norm(M @ V, axis=0)
    full = np.zeros((len(nodes), n_eigs))
    full[free] = V
    return SpectralResult(E, full, res, n_elements, {"m": int(m), "robin_c": robin_c})


@dataclass
class CornerReport:
    opening: float
    exponent: float
    harmonic_residual: float
    edge_trace: float
    h2_class: str
    value: float | None
    rate: float | None
    epsilons: list = field(default_factory=list)
    integrals: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"opening": self.opening, "exponent": self.exponent,
                "harmonic_residual": self.harmonic_residual, "edge_trace": self.edge_trace,
                "h2_seminorm_class": self.h2_class, "value": self.value, "rate": self.rate,
                "epsilons": list(self.epsilons), "integrals": list(self.integrals)}


def _h2_integral(a, theta_opening, eps, n_quad, n_theta=64):
    """``int int (Phi_xx^2 + 2 Phi_xy^2 + Phi_yy^2) r dr dtheta`` over ``eps < r < 1``.

    ``Phi = Im z^a``, so ``Phi_xx = Im f``, ``Phi_xy = Re f``, ``Phi_yy = -Im f``
    with ``f = a (a - 1) z^{a - 2}``.  Quadrature is Gauss-Legendre in
    ``s = ln r`` and in ``theta``.
    """
    gs, ws = np.polynomial.legendre.leggauss(n_quad)
    lo = math.log(eps)
    s = lo + (gs + 1) * (-lo) / 2
    ws = ws * (-lo) / 2
    gt, wt = np.polynomial.legendre.leggauss(n_theta)
    th = (gt + 1) * theta_opening / 2
    wt = wt * theta_opening / 2
    r = np.exp(s)[:, None]
    f = a * (a - 1) * r ** (a - 2) * np.exp(1j * (a - 2) * th)[None, :]
    dens = 2 * f.imag ** 2 + 2 * f.real ** 2
    # r dr = r^2 ds
    return float(np.sum(ws[:, None] * wt[None, :] * dens * r ** 2))


def corner_singularity(theta_opening: float, epsilon: float = 1e-2,
                       n_quad: int = 1000) -> CornerReport:
    """Harmonic singular function ``r^{pi/Theta} sin(pi theta/Theta)`` on a sector.

    The H^2 seminorm over ``epsilon/100 < r < 1`` is evaluated at three radii
    and classified by the log-log slope in ``epsilon``: ``|slope| < 0.05`` is
    finite (value by Aitken extrapolation), otherwise divergent with rate
    ``-slope``.
    """
    if not 0 < theta_opening < 2 * math.pi:
        raise ValueError("opening must lie in (0, 2 pi)")
    if not 0 < epsilon < 0.1:
        raise ValueError("epsilon must lie in (0, 0.1)")
    if n_quad < 1000:
        raise ValueError("n_quad must be >= 1000")
    a = math.pi / theta_opening

    g, _ = np.polynomial.legendre.leggauss(200)
    r = np.exp(math.log(epsilon) * (g[:, None] + 1) / 2)
    th = (np.linspace(0, 1, 101)[None, :]) * theta_opening
    s, c = np.sin(a * th), r ** (a - 2)
    t_rr = a * (a - 1) * c * s
    t_r = a * c * s
    t_tt = -a * a * c * s
    lap = t_rr + t_r + t_tt
    mag = np.abs(t_rr) + np.abs(t_r) + np.abs(t_tt)
    harmonic = float(np.max(np.abs(lap) / np.where(mag > 0, mag, 1.0)))
    edge = float(max(abs(math.sin(0.0)), abs(math.sin(a * theta_opening))))

    eps = [epsilon, epsilon / 10, epsilon / 100]
    ints = [_h2_integral(a, theta_opening, e, n_quad) for e in eps]
    if all(v == 0 for v in ints) or max(ints) <= 1e-300:
        return CornerReport(theta_opening, a, harmonic, edge, "finite", 0.0, None, eps, ints)
    slope = float(np.polyfit(np.log(eps), np.log(ints), 1)[0])
    if abs(slope) < 0.05:
        d1, d2 = ints[1] - ints[0], ints[2] - ints[1]
        value = ints[2] - d2 * d2 / (d2 - d1) if d2 != d1 else ints[2]
        return CornerReport(theta_opening, a, harmonic, edge, "finite", float(value), None,
                            eps, ints)
    return CornerReport(theta_opening, a, harmonic, edge, "divergent", None, -slope, eps, ints)
