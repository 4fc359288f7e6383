"""Unitary parametrization of boundary conditions.

A self-adjoint extension of a Laplace-type operator is fixed by a unitary
``U`` acting on boundary data through

    phi - i*dphi = U (phi + i*dphi)

where ``phi`` is the boundary trace and ``dphi`` the outward normal
derivative.  Splitting the boundary space into the ``-1`` eigenspace ``W``
of ``U`` and its complement, the condition reads ``P_W phi = 0`` and
``dphi_perp = A_U phi_perp`` with ``A_U = i (U - I)(U + I)^{-1}`` the
partial Cayley transform.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
import scipy.linalg

from .errors import DimensionMismatch, NonUnitary

CONVENTION = "asorey"

UNITARY_TOL = 1e-10
# angular distance from pi below which an eigenvalue is put in W
W_CLUSTER_TOL = 1e-9
# non-W eigenphases this close to pi are flagged as gapless
NO_GAP_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class BoundaryUnitary:
    """A unitary on boundary data together with its spectral split.

    Attributes
    ----------
    matrix : (n, n) complex ndarray
    gap_delta : float
        Angular distance between ``-1`` and the part of the spectrum outside
        ``W``; ``pi`` when that part is empty.
    w_basis : (n, w) ndarray
        Orthonormal basis of the ``-1`` eigenspace.
    perp_basis : (n, n - w) ndarray
        Orthonormal basis of ``W``-perp.  The identity when ``W`` is empty.
    cayley : (n - w, n - w) ndarray
        Hermitian partial Cayley transform written in ``perp_basis``.
    no_gap : bool
        True when some non-``W`` eigenvalue sits numerically on ``-1``.
    """

    matrix: np.ndarray
    gap_delta: float
    w_basis: np.ndarray
    perp_basis: np.ndarray
    cayley: np.ndarray
    no_gap: bool = False
    eigenphases: np.ndarray = field(default=None, repr=False)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def w_dim(self) -> int:
        return self.w_basis.shape[1]

    @property
    def cayley_full(self) -> np.ndarray:
        """``A_U`` embedded in the whole boundary space (zero on ``W``)."""
        P = self.perp_basis
        return P @ self.cayley @ P.conj().T

    @property
    def w_projector(self) -> np.ndarray:
        return self.w_basis @ self.w_basis.conj().T

    def cayley_norm(self) -> float:
        if self.cayley.size == 0:
            return 0.0
        return float(np.max(np.abs(np.linalg.eigvalsh(self.cayley))))

    def to_dict(self) -> dict:
        return unitary_to_dict(self.matrix)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict) -> "BoundaryUnitary":
        return from_matrix(unitary_matrix_from_dict(data))

    @classmethod
    def from_json(cls, text: str) -> "BoundaryUnitary":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class BoundaryData:
    """Boundary trace ``phi`` and outward normal derivative ``dphi``."""

    trace: np.ndarray
    normal_trace: np.ndarray

    def __post_init__(self):
        trace = np.atleast_1d(np.asarray(self.trace, dtype=complex))
        normal = np.atleast_1d(np.asarray(self.normal_trace, dtype=complex))
        if trace.shape != normal.shape or trace.ndim != 1:
            raise DimensionMismatch(
                f"trace {trace.shape} and normal trace {normal.shape} differ")
        object.__setattr__(self, "trace", trace)
        object.__setattr__(self, "normal_trace", normal)


class BoundaryCheck(NamedTuple):
    satisfied: bool
    residual: float


def unitarity_defect(matrix) -> float:
    U = np.asarray(matrix, dtype=complex)
    return float(np.linalg.norm(U.conj().T @ U - np.eye(U.shape[0]), 2))


def from_matrix(matrix) -> BoundaryUnitary:
    """Build a :class:`BoundaryUnitary` from a unitary matrix.

    Raises
    ------
    NonUnitary
        If ``||U^H U - I||_2 > 1e-10``.
    """
    U = np.array(matrix, dtype=complex, copy=True)
    if U.ndim != 2 or U.shape[0] != U.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got {U.shape}")
    n = U.shape[0]
    if n == 0:
        raise DimensionMismatch("boundary space must be nonempty")
    defect = unitarity_defect(U)
    if defect > UNITARY_TOL:
        raise NonUnitary(f"||U^H U - I|| = {defect:.3e}")

    # Complex Schur form of a normal matrix is diagonal with unitary Z, which
    # keeps degenerate eigenvectors orthonormal.
    T, Z = scipy.linalg.schur(U, output="complex")
    theta = np.angle(np.diag(T))
    in_w = (np.pi - np.abs(theta)) <= W_CLUSTER_TOL
    perp_theta = theta[~in_w]

    if perp_theta.size:
        gap = float(np.pi - np.max(np.abs(perp_theta)))
    else:
        gap = float(np.pi)

    w_basis = Z[:, in_w]
    if not in_w.any():
        perp_basis = np.eye(n, dtype=complex)
        A = (Z * (-np.tan(theta / 2))) @ Z.conj().T
    else:
        perp_basis = Z[:, ~in_w]
        A = np.diag(-np.tan(perp_theta / 2)).astype(complex)
    A = 0.5 * (A + A.conj().T)
    if np.all(np.abs(A.imag) == 0):
        A = A.real.astype(complex)

    return BoundaryUnitary(
        matrix=U,
        gap_delta=gap,
        w_basis=w_basis,
        perp_basis=perp_basis,
        cayley=A,
        no_gap=bool(perp_theta.size and gap < NO_GAP_TOL),
        eigenphases=theta,
    )


def cayley(matrix) -> np.ndarray:
    """Full Cayley transform ``i (U - I)(U + I)^{-1}``; needs ``-1`` outside the spectrum."""
    U = np.asarray(matrix, dtype=complex)
    I = np.eye(U.shape[0])
    return 1j * np.linalg.solve((U + I).T, (U - I).T).T


def inverse_cayley(A) -> np.ndarray:
    """Recover ``U = (I - iA)(I + iA)^{-1}`` from a Hermitian ``A``."""
    A = np.asarray(A, dtype=complex)
    I = np.eye(A.shape[0])
    return np.linalg.solve((I + 1j * A).T, (I - 1j * A).T).T


def robin_angle(c: float) -> float:
    """Eigenphase whose Cayley transform equals the Robin constant ``c``."""
    return -2.0 * np.arctan(c)


def dirichlet(n: int = 1) -> BoundaryUnitary:
    return from_matrix(-np.eye(n))


def neumann(n: int = 1) -> BoundaryUnitary:
    return from_matrix(np.eye(n))


def robin(c: float, n: int = 1) -> BoundaryUnitary:
    if not np.isfinite(c):
        raise ValueError("Robin constant must be finite")
    return from_matrix(np.exp(1j * robin_angle(c)) * np.eye(n))


def quasi_periodic(tau: float) -> BoundaryUnitary:
    """Two-endpoint condition ``Phi(L) = e^{i tau} Phi(0)``, ``Phi'(L) = e^{i tau} Phi'(0)``."""
    z = np.exp(1j * tau)
    return from_matrix(np.array([[0, np.conj(z)], [z, 0]]))


def named_condition(kind: str, n: int = 1, **params) -> BoundaryUnitary:
    """Boundary unitary for a classical condition.

    ``kind`` is one of ``dirichlet``, ``neumann``, ``robin`` (needs ``c``) or
    ``quasi_periodic`` (needs ``tau``, and ``n == 2``).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if kind == "dirichlet":
        return dirichlet(n)
    if kind == "neumann":
        return neumann(n)
    if kind == "robin":
        return robin(float(params["c"]), n)
    if kind in ("quasi_periodic", "quasi-periodic", "periodic"):
        if n != 2:
            raise DimensionMismatch("quasi-periodic conditions couple two endpoints")
        return quasi_periodic(float(params.get("tau", 0.0)))
    raise ValueError(f"unknown boundary condition {kind!r}")


def check_boundary_condition(bu: BoundaryUnitary, bd: BoundaryData,
                             tol: float = 1e-10) -> BoundaryCheck:
    """Test ``P_W phi = 0`` and ``dphi_perp = A_U phi_perp``."""
    if bd.trace.shape[0] != bu.dim:
        raise DimensionMismatch(
            f"boundary data has dimension {bd.trace.shape[0]}, unitary {bu.dim}")
    phi, dphi = bd.trace, bd.normal_trace
    r_w = np.linalg.norm(bu.w_basis.conj().T @ phi) if bu.w_dim else 0.0
    P = bu.perp_basis
    r_perp = (np.linalg.norm(P.conj().T @ dphi - bu.cayley @ (P.conj().T @ phi))
              if P.shape[1] else 0.0)
    residual = float(max(r_w, r_perp))
    return BoundaryCheck(residual <= tol, residual)


def asorey_residual(matrix, bd: BoundaryData) -> float:
    """Residual of ``phi - i dphi - U (phi + i dphi)`` without the Cayley split."""
    U = np.asarray(matrix, dtype=complex)
    phi, dphi = bd.trace, bd.normal_trace
    return float(np.linalg.norm(phi - 1j * dphi - U @ (phi + 1j * dphi)))


def random_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary via QR of a complex Ginibre matrix."""
    Z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    Q, R = np.linalg.qr(Z)
    d = np.diag(R)
    return Q * (d / np.abs(d))


def random_gapped_unitary(n: int, rng: np.random.Generator,
                          min_gap: float = 0.05) -> np.ndarray:
    """Random unitary with eigenphases kept ``min_gap`` away from ``pi``."""
    V = random_unitary(n, rng)
    phases = rng.uniform(-np.pi + min_gap, np.pi - min_gap, size=n)
    return (V * np.exp(1j * phases)) @ V.conj().T


def unitary_to_dict(matrix) -> dict:
    U = np.asarray(matrix, dtype=complex)
    return {
        "matrix": [[float(z.real), float(z.imag)] for z in U.ravel()],
        "convention": CONVENTION,
    }


def unitary_matrix_from_dict(data: dict) -> np.ndarray:
    if not isinstance(data, dict):
        raise ValueError("boundary unitary must be a JSON object")
    extra = set(data) - {"matrix", "convention"}
    if extra:
        raise ValueError(f"unknown boundary unitary fields: {sorted(extra)}")
    if data.get("convention") != CONVENTION:
        raise ValueError(f"convention must be {CONVENTION!r}")
    entries = data.get("matrix")
    if not isinstance(entries, list) or not entries:
        raise ValueError("matrix must be a nonempty list of [re, im] pairs")
    n = int(round(np.sqrt(len(entries))))
    if n * n != len(entries):
        raise DimensionMismatch(f"{len(entries)} entries do not form a square matrix")
    try:
        flat = np.array([complex(float(re), float(im)) for re, im in entries])
    except (TypeError, ValueError) as exc:
        raise ValueError("matrix entries must be [re, im] number pairs") from exc
    return flat.reshape(n, n)
