"""Finite element discretization of Laplacian quadratic forms in 1D.

The form of the extension fixed by a boundary unitary ``U`` is

    Q_U(Phi, Psi) = <Phi', Psi'> - <phi, A_U psi>

on ``{Phi in H^1 : P_W phi = 0}``.  Piecewise-linear hat functions are
H^1-conforming, so the discrete eigenvalues are Rayleigh-Ritz
approximations of the spectrum of the represented operator.  The ``W``
constraint is imposed by elimination, never by penalty.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import NamedTuple, Sequence

import numpy as np
import scipy.linalg

from . import boundary as bd
from .errors import DimensionMismatch, NoGap, SolverFailure


@dataclass(frozen=True, eq=False)
class FEMAssembly:
    """Assembled matrices of a (possibly multi-component) 1D problem.

    Degrees of freedom are ordered component-major: dof ``c * len(nodes) + i``
    is component ``c`` at node ``i``.
    """

    nodes: np.ndarray
    stiffness: np.ndarray
    mass: np.ndarray
    boundary_correction: np.ndarray
    constraint: np.ndarray
    basis: np.ndarray
    boundary: bd.BoundaryUnitary
    boundary_dofs: tuple
    potential_matrix: np.ndarray
    n_components: int = 1
    dirichlet_dofs: tuple = ()

    @property
    def n_elements(self) -> int:
        return len(self.nodes) - 1

    @property
    def ndof(self) -> int:
        return self.stiffness.shape[0]

    @property
    def operator(self) -> np.ndarray:
        """Matrix of the full form ``Q`` in the hat-function basis."""
        return self.stiffness + self.potential_matrix + self.boundary_correction

    def reduced(self) -> tuple[np.ndarray, np.ndarray]:
        """Form and mass matrices restricted to the form domain."""
        B = self.basis
        K = B.conj().T @ self.operator @ B
        M = B.conj().T @ self.mass @ B
        return 0.5 * (K + K.conj().T), 0.5 * (M + M.conj().T)

    def form(self, u, v) -> complex:
        return complex(np.vdot(u, self.operator @ v))

    def inner(self, u, v) -> complex:
        return complex(np.vdot(u, self.mass @ v))

    def energy_norm(self, u) -> float:
        return float(np.sqrt(abs(np.vdot(u, (self.stiffness + self.mass) @ u))))

    def trace(self, v) -> np.ndarray:
        return np.asarray(v)[list(self.boundary_dofs)]

    def project(self, v) -> np.ndarray:
        """Orthogonal (Euclidean) projection of a coefficient vector onto the form domain."""
        return self.basis @ (self.basis.conj().T @ v)

    def with_boundary(self, bu: bd.BoundaryUnitary) -> "FEMAssembly":
        correction, basis = _boundary_parts(
            self.ndof, bu, self.boundary_dofs, self.dirichlet_dofs)
        return replace(self, boundary=bu, boundary_correction=correction,
                       basis=basis, constraint=basis @ basis.conj().T)


@dataclass(frozen=True, eq=False)
class SpectralResult:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    residuals: np.ndarray
    mesh_n: int = 0
    meta: dict = field(default_factory=dict)

    def rows(self):
        for i, (e, r) in enumerate(zip(self.eigenvalues, self.residuals)):
            yield i, float(e), float(r)


class SemiboundEstimate(NamedTuple):
    lower_bound_estimate: float
    certified_bound: float


@dataclass
class RepresentationReport:
    max_defect: float
    violations: list
    tol: float

    @property
    def passed(self) -> bool:
        return not self.violations


def p1_matrices(nodes) -> tuple[np.ndarray, np.ndarray]:
    """Exact stiffness and mass matrices of hat functions on ``nodes``."""
    x = np.asarray(nodes, dtype=float)
    h = np.diff(x)
    if np.any(h <= 0):
        raise ValueError("nodes must be strictly increasing")
    n = len(x)
    K = np.zeros((n, n))
    M = np.zeros((n, n))
    idx = np.arange(n - 1)
    K[idx, idx] += 1 / h
    K[idx + 1, idx + 1] += 1 / h
    K[idx, idx + 1] -= 1 / h
    K[idx + 1, idx] -= 1 / h
    M[idx, idx] += h / 3
    M[idx + 1, idx + 1] += h / 3
    M[idx, idx + 1] += h / 6
    M[idx + 1, idx] += h / 6
    return K, M


def trapezoid_weights(nodes) -> np.ndarray:
    x = np.asarray(nodes, dtype=float)
    h = np.diff(x)
    w = np.zeros_like(x)
    w[:-1] += h / 2
    w[1:] += h / 2
    return w


def _boundary_parts(ndof, bu, boundary_dofs, dirichlet_dofs=()):
    if len(boundary_dofs) != bu.dim:
        raise DimensionMismatch(
            f"{len(boundary_dofs)} boundary dofs for a {bu.dim}-dimensional unitary")
    bdofs = list(boundary_dofs)
    if set(bdofs) & set(dirichlet_dofs):
        raise ValueError("a dof cannot be both a boundary and a Dirichlet dof")

    A = bu.cayley_full
    correction = np.zeros((ndof, ndof), dtype=complex)
    correction[np.ix_(bdofs, bdofs)] = -A
    if np.all(correction.imag == 0):
        correction = correction.real

    fixed = set(bdofs) | set(dirichlet_dofs)
    free = [i for i in range(ndof) if i not in fixed]
    P = bu.perp_basis
    basis = np.zeros((ndof, len(free) + P.shape[1]), dtype=complex)
    basis[free, np.arange(len(free))] = 1.0
    if P.shape[1]:
        basis[np.ix_(bdofs, np.arange(len(free), basis.shape[1]))] = P
    if np.all(basis.imag == 0):
        basis = basis.real
    return correction, basis


def assemble_dofs(nodes, bu: bd.BoundaryUnitary, boundary_dofs: Sequence[int],
                  n_components: int = 1, potential=None, coupling=None,
                  dirichlet_dofs: Sequence[int] = ()) -> FEMAssembly:
    """General assembly on a 1D mesh with ``n_components`` field components.

    ``potential`` is sampled at the nodes (one row per component, or a single
    row shared by all) and enters through a lumped trapezoidal mass.
    ``coupling`` is a constant Hermitian ``n_components`` square matrix added
    as ``coupling (x) M`` (e.g. an internal Hamiltonian acting on a spin).
    """
    nodes = np.asarray(nodes, dtype=float)
    K1, M1 = p1_matrices(nodes)
    c = n_components
    K = np.kron(np.eye(c), K1)
    M = np.kron(np.eye(c), M1)
    ndof = K.shape[0]

    V = np.zeros((ndof, ndof))
    if potential is not None:
        pot = np.atleast_2d(np.asarray(potential, dtype=float))
        if pot.shape[1] != len(nodes) or pot.shape[0] not in (1, c):
            raise DimensionMismatch(
                f"potential of shape {pot.shape} for {c} components on {len(nodes)} nodes")
        pot = np.broadcast_to(pot, (c, len(nodes)))
        w = trapezoid_weights(nodes)
        V = np.diag((pot * w).ravel())
    if coupling is not None:
        H = np.asarray(coupling)
        if H.shape != (c, c):
            raise DimensionMismatch(f"coupling must be {c}x{c}")
        V = V + np.kron(H, M1)

    correction, basis = _boundary_parts(ndof, bu, boundary_dofs, dirichlet_dofs)
    return FEMAssembly(
        nodes=nodes, stiffness=K, mass=M, boundary_correction=correction,
        constraint=basis @ basis.conj().T, basis=basis, boundary=bu,
        boundary_dofs=tuple(int(i) for i in boundary_dofs),
        potential_matrix=V, n_components=c,
        dirichlet_dofs=tuple(int(i) for i in dirichlet_dofs))


def assemble(L: float, n_elements: int, bu: bd.BoundaryUnitary,
             potential=None) -> FEMAssembly:
    """Uniform P1 assembly on ``[0, L]`` with a 2x2 unitary coupling both endpoints.

    Boundary data are ordered (left, right) with outward normal traces
    ``(-Phi'(0), Phi'(L))``.
    """
    if n_elements < 4:
        raise ValueError("n_elements must be >= 4")
    if L <= 0:
        raise ValueError("L must be positive")
    if bu.dim != 2:
        raise DimensionMismatch("interval problems need a 2x2 boundary unitary")
    nodes = np.linspace(0.0, L, n_elements + 1)
    if callable(potential):
        potential = potential(nodes)
    return assemble_dofs(nodes, bu, (0, n_elements), potential=potential)


def solve(asm: FEMAssembly, n_eigs: int) -> SpectralResult:
    """Lowest ``n_eigs`` eigenpairs of the discrete representing operator."""
    K, M = asm.reduced()
    dim = K.shape[0]
    if not 1 <= n_eigs <= dim:
        raise ValueError(f"n_eigs must lie in [1, {dim}]")
    try:
        E, C = scipy.linalg.eigh(K, M, subset_by_index=[0, n_eigs - 1])
    except (np.linalg.LinAlgError, ValueError) as exc:
        cond = np.linalg.cond(M)
        raise SolverFailure(f"generalized eigensolver failed (cond(M) = {cond:.3e}): {exc}")
    R = K @ C - (M @ C) * E
    residuals = np.linalg.norm(R, axis=0) / np.linalg.norm(M @ C, axis=0)
    return SpectralResult(eigenvalues=E, eigenvectors=asm.basis @ C,
                          residuals=residuals, mesh_n=asm.n_elements)


def _smooth_samples(asm: FEMAssembly, rng, n_modes=6):
    x = asm.nodes
    L = x[-1] - x[0]
    t = (x - x[0]) / L
    rows = []
    for _ in range(asm.n_components):
        a = rng.standard_normal(n_modes) + 1j * rng.standard_normal(n_modes)
        k = np.arange(n_modes)
        rows.append(np.cos(np.pi * np.outer(t, k)) @ (a / (1 + k) ** 2))
    return np.concatenate(rows)


def random_form_vectors(asm: FEMAssembly, n: int, rng) -> list:
    """Random members of the discrete form domain, half smooth, half rough."""
    out = []
    r = asm.basis.shape[1]
    for i in range(n):
        if i % 2 == 0:
            v = asm.project(_smooth_samples(asm, rng))
        else:
            v = asm.basis @ (rng.standard_normal(r) + 1j * rng.standard_normal(r))
        out.append(v)
    return out


def rayleigh_quotient(asm: FEMAssembly, v) -> float:
    return float(np.real(asm.form(v, v)) / np.real(asm.inner(v, v)))


def certified_bound(asm: FEMAssembly) -> float:
    """Lowest eigenvalue of the comparison problem with ``A = ||A_U|| I`` and no ``W`` constraint.

    Since ``<phi, A_U phi> <= ||A_U|| |phi|^2`` and dropping the constraint
    only enlarges the domain, this bounds the form from below.
    """
    K = asm.boundary.cayley_norm()
    comparison = asm.with_boundary(bd.robin(K, asm.boundary.dim))
    return float(solve(comparison, 1).eigenvalues[0])


def semibound_estimate(asm: FEMAssembly, n_samples: int = 200,
                       rng=None) -> SemiboundEstimate:
    """Sampled minimum of Rayleigh quotients against the certified lower bound."""
    if asm.boundary.no_gap:
        raise NoGap("boundary unitary has spectrum accumulating at -1")
    rng = np.random.default_rng(rng)
    samples = random_form_vectors(asm, n_samples, rng)
    lowest = min(rayleigh_quotient(asm, v) for v in samples)
    bound = certified_bound(asm)
    if lowest < bound - 1e-9:
        raise AssertionError(f"Rayleigh quotient {lowest} below certified bound {bound}")
    return SemiboundEstimate(lowest, bound)


def representing_operator_check(asm: FEMAssembly, result: SpectralResult,
                                n_test: int = 20, tol: float = 1e-8,
                                rng=None) -> RepresentationReport:
    """Check ``Q(u, v) = E <u, v>`` for random ``u`` in the form domain."""
    rng = np.random.default_rng(rng)
    tests = random_form_vectors(asm, n_test, rng)
    worst = 0.0
    violations = []
    for j, (E, v) in enumerate(zip(result.eigenvalues, result.eigenvectors.T)):
        nv = asm.energy_norm(v)
        for u in tests:
            defect = abs(asm.form(u, v) - E * asm.inner(u, v)) / (asm.energy_norm(u) * nv)
            worst = max(worst, defect)
            if defect > tol:
                violations.append((j, defect))
    return RepresentationReport(worst, violations, tol)


def discrete_normal_trace(asm: FEMAssembly, v) -> np.ndarray:
    """One-sided outward derivative at both ends of a scalar interval problem."""
    x = asm.nodes
    v = np.asarray(v)
    return np.array([-(v[1] - v[0]) / (x[1] - x[0]),
                     (v[-1] - v[-2]) / (x[-1] - x[-2])])
