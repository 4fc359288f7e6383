"""One-dimensional Dirac operators and sector-split quadratic forms.

Interval model: ``D = i sigma_1 d/dx`` on C^2 spinors over ``[0, L]``.
Green's formula reads ``<D xi, zeta> - <xi, D zeta> = <J xi, zeta>_bdry`` with
``J(0) = -i sigma_1`` and ``J(L) = +i sigma_1``.  The boundary space is
``C^4 = (spinor at 0) + (spinor at L)``; it splits into the ``+-i``
eigenspaces ``H_+`` and ``H_-`` of ``J``, and every unitary ``U: H_+ -> H_-``
gives the self-adjoint domain ``phi_- = U phi_+``.

Sector splits represent non-semibounded forms that are additive across an
orthogonal pair ``W_+ + W_-``, with ``Q`` bounded below on ``W_+`` and
above on ``W_-``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BracketTooCoarse, DimensionMismatch, NonUnitary, NotAdditive
from .quadform import SpectralResult

SIGMA1 = np.array([[0, 1], [1, 0]], dtype=complex)
SCAN_CELLS = 10_000
ROOT_TOL = 1e-10
MAX_HALVINGS = 6
ADDITIVITY_TOL = 1e-10


def _orthonormal(B, tol=1e-12) -> bool:
    return np.linalg.norm(B.conj().T @ B - np.eye(B.shape[1])) <= tol


@dataclass(frozen=True, eq=False)
class DiracBoundarySetup:
    """Boundary Clifford action ``J`` with polarization bases and ``U: H_+ -> H_-``."""

    j_matrix: np.ndarray
    h_plus_basis: np.ndarray
    h_minus_basis: np.ndarray
    u_map: np.ndarray

    def __post_init__(self):
        J = np.asarray(self.j_matrix, dtype=complex)
        Hp = np.asarray(self.h_plus_basis, dtype=complex)
        Hm = np.asarray(self.h_minus_basis, dtype=complex)
        U = np.atleast_2d(np.asarray(self.u_map, dtype=complex))
        n = J.shape[0]
        if J.shape != (n, n) or Hp.shape[0] != n or Hm.shape[0] != n:
            raise DimensionMismatch("J and the polarization bases disagree in size")
        if Hp.shape[1] + Hm.shape[1] != n or U.shape != (Hm.shape[1], Hp.shape[1]):
            raise DimensionMismatch("u_map must map H_+ onto H_- and the bases must span")
        if np.linalg.norm(J @ J + np.eye(n)) > 1e-12:
            raise ValueError("J must satisfy J^2 = -I")
        if (np.linalg.norm(J @ Hp - 1j * Hp) > 1e-10
                or np.linalg.norm(J @ Hm + 1j * Hm) > 1e-10):
            raise ValueError("polarization bases are not +-i eigenvectors of J")
        if not _orthonormal(np.hstack([Hp, Hm]), 1e-10):
            raise ValueError("polarization bases must be jointly orthonormal")
        if np.linalg.norm(U.conj().T @ U - np.eye(U.shape[1])) > 1e-12:
            raise NonUnitary("u_map is not unitary")
        for name, val in (("j_matrix", J), ("h_plus_basis", Hp),
                          ("h_minus_basis", Hm), ("u_map", U)):
            object.__setattr__(self, name, val)

    @property
    def condition(self) -> np.ndarray:
        """Rows of the boundary condition ``(H_-^dag - U H_+^dag) phi = 0``."""
        return self.h_minus_basis.conj().T - self.u_map @ self.h_plus_basis.conj().T

    def boundary_form(self, phi, psi) -> complex:
        """``<J phi, psi>`` on the boundary space."""
        return complex(np.vdot(self.j_matrix @ np.asarray(phi), np.asarray(psi)))

    def domain_vector(self, a) -> np.ndarray:
        """Boundary vector ``H_+ a + H_- U a`` satisfying the condition."""
        a = np.asarray(a, dtype=complex)
        return self.h_plus_basis @ a + self.h_minus_basis @ (self.u_map @ a)

    def to_dict(self) -> dict:
        pack = lambda A: [[[float(z.real), float(z.imag)] for z in row] for row in A]
        return {"j_matrix": pack(self.j_matrix), "h_plus_basis": pack(self.h_plus_basis),
                "h_minus_basis": pack(self.h_minus_basis), "u_map": pack(self.u_map)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict) -> "DiracBoundarySetup":
        extra = set(data) - {"j_matrix", "h_plus_basis", "h_minus_basis", "u_map"}
        if extra:
            raise ValueError(f"unknown fields: {sorted(extra)}")
        unpack = lambda rows: np.array([[complex(re, im) for re, im in row] for row in rows])
        return cls(*(unpack(data[k]) for k in ("j_matrix", "h_plus_basis",
                                                "h_minus_basis", "u_map")))


def interval_setup(u_map) -> DiracBoundarySetup:
    """Standard setup for ``i sigma_1 d/dx`` on an interval.

    ``H_+`` is spanned by ``(1, -1)/sqrt 2`` at 0 and ``(1, 1)/sqrt 2`` at L;
    ``H_-`` by ``(1, 1)/sqrt 2`` at 0 and ``(1, -1)/sqrt 2`` at L.
    """
    s = 1 / math.sqrt(2)
    J = np.zeros((4, 4), dtype=complex)
    J[:2, :2] = -1j * SIGMA1
    J[2:, 2:] = 1j * SIGMA1
    Hp = np.array([[s, 0], [-s, 0], [0, s], [0, s]], dtype=complex)
    Hm = np.array([[s, 0], [s, 0], [0, s], [0, -s]], dtype=complex)
    return DiracBoundarySetup(J, Hp, Hm, u_map)


def decoupled_setup(tau0: float, tau_l: float) -> DiracBoundarySetup:
    """Each endpoint maps its own ``H_+`` line to its ``H_-`` line with a phase."""
    return interval_setup(np.diag(np.exp(1j * np.array([tau0, tau_l]))))


def decoupled_lattice(tau0: float, tau_l: float, L: float, ks) -> np.ndarray:
    """Closed form ``(k pi + (tau0 + tau_l)/2) / L`` of the decoupled spectrum."""
    return (np.asarray(ks) * math.pi + 0.5 * (tau0 + tau_l)) / L


def circle_dirac_spectrum(n_modes: int) -> SpectralResult:
    """Spectrum of ``i d/dtheta`` on the circle from ``2 n_modes + 1`` Fourier modes."""
    if n_modes < 0:
        raise ValueError("n_modes must be >= 0")
    D = momentum_matrix(2 * n_modes + 1)
    E, V = np.linalg.eigh(D)
    # the exact spectrum is the integer lattice; remove eigensolver rounding
    E = np.round(E)
    R = np.linalg.norm(D @ V - V * E, axis=0)
    return SpectralResult(E, V, R, meta={"operator": "i d/dtheta", "n_modes": n_modes})


def transfer(E, x) -> np.ndarray:
    """Propagator ``exp(-i E x sigma_1)``; ``E`` may be an array."""
    E = np.asarray(E, dtype=float)
    c, s = np.cos(E * x), np.sin(E * x)
    T = np.empty(E.shape + (2, 2), dtype=complex)
    T[..., 0, 0] = T[..., 1, 1] = c
    T[..., 0, 1] = T[..., 1, 0] = -1j * s
    return T


def secular_matrix(setup: DiracBoundarySetup, L: float, E) -> np.ndarray:
    """``M(E) = C [I; T(E)]``: its null vectors are the initial spinors of eigenfunctions."""
    C = setup.condition
    T = transfer(E, L)
    return C[:, :2] + C[:, 2:] @ T


def secular_det(setup: DiracBoundarySetup, L: float, E) -> np.ndarray:
    return np.linalg.det(secular_matrix(setup, L, E))


def _real_secular(setup, L, grid):
    """Constant-phase rotation of ``det M`` that makes it real on the real axis."""
    g = secular_det(setup, L, grid)
    ref = g[np.argmax(np.abs(g))]
    phase = ref / abs(ref)
    return lambda E: np.real(secular_det(setup, L, E) / phase), np.real(g / phase), abs(ref)


def _scan(f, fvals, grid):
    roots, coarse = [], False
    sign = np.sign(fvals)
    mids = np.real(f(0.5 * (grid[:-1] + grid[1:])))
    msign = np.sign(mids)
    for i in range(len(grid) - 1):
        a, b = grid[i], grid[i + 1]
        changes = int(sign[i] * msign[i] < 0) + int(msign[i] * sign[i + 1] < 0)
        if changes >= 2:
            coarse = True
            break
        if sign[i] == 0:
            roots.append(a)
        elif sign[i] * sign[i + 1] < 0:
            roots.append(_bisect(f, a, b, fvals[i]))
    if len(grid) and sign[-1] == 0:
        roots.append(grid[-1])
    return roots, coarse


def _bisect(f, a, b, fa):
    while b - a > ROOT_TOL * max(1.0, abs(a)) * 1e-2:
        m = 0.5 * (a + b)
        fm = float(f(m))
        if fm == 0:
            return m
        if fa * fm < 0:
            b = m
        else:
            a, fa = m, fm
    return 0.5 * (a + b)


def interval_dirac_spectrum(L: float, setup: DiracBoundarySetup, n_eigs: int | None = None,
                            bracket=(-20.0, 20.0), scan_cells: int | None = None,
                            max_halvings: int | None = None) -> SpectralResult:
    """Roots of the real secular function in ``bracket``.

    With ``n_eigs`` the roots of smallest modulus are kept.  Eigenvectors
    hold the initial spinor ``xi(0)`` of each eigenfunction.
    """
    lo, hi = map(float, bracket)
    if not hi > lo:
        raise ValueError("bracket must be increasing")
    if L <= 0:
        raise ValueError("L must be positive")
    cells = SCAN_CELLS if scan_cells is None else int(scan_cells)
    halvings = MAX_HALVINGS if max_halvings is None else int(max_halvings)
    for _ in range(halvings + 1):
        grid = np.linspace(lo, hi, cells + 1)
        f, fvals, scale = _real_secular(setup, L, grid)
        roots, coarse = _scan(f, fvals, grid)
        if not coarse:
            break
        cells *= 2
    else:
        raise BracketTooCoarse(
            f"two sign changes within one cell after {halvings} halvings")
    roots = np.array(sorted(roots))
    if n_eigs is not None:
        roots = np.sort(roots[np.argsort(np.abs(roots), kind="stable")][:n_eigs])
    vecs, res = [], []
    for E in roots:
        M = secular_matrix(setup, L, E)
        _, _, Vh = np.linalg.svd(M)
        vecs.append(Vh[-1].conj())
        res.append(abs(secular_det(setup, L, E)))
    V = np.array(vecs).T if vecs else np.zeros((2, 0), dtype=complex)
    return SpectralResult(roots, V, np.array(res),
                          meta={"L": L, "bracket": (lo, hi), "scan_cells": cells})


def eigenfunction(E: float, xi0, x) -> np.ndarray:
    """Spinor field ``exp(-i E x sigma_1) xi0`` sampled at ``x``; shape ``(len(x), 2)``."""
    return transfer(np.full(len(x), E), np.asarray(x)) @ np.asarray(xi0, dtype=complex)


def momentum_matrix(n_fourier: int) -> np.ndarray:
    """``i d/dtheta`` on ``n_fourier`` equispaced samples, via the unitary DFT."""
    if n_fourier < 1 or n_fourier % 2 == 0:
        raise ValueError("n_fourier must be a positive odd integer")
    F, n = _dft(n_fourier)
    return F.conj().T @ (-n[:, None] * F)


def _dft(n_fourier):
    N = n_fourier // 2
    n = np.arange(-N, N + 1)
    theta = 2 * np.pi * np.arange(n_fourier) / n_fourier
    F = np.exp(-1j * np.outer(n, theta)) / math.sqrt(n_fourier)
    return F, n


@dataclass(frozen=True, eq=False)
class SectorSplit:
    """Orthogonal pair ``W_+ + W_-`` with the blocks of ``Q`` on each sector.

    ``basis_plus`` and ``basis_minus`` have orthonormal columns spanning
    ``ran P_+`` and ``ran P_-``; ``t_plus`` and ``t_minus`` are the
    representing operators in those coordinates.  ``weights`` is the
    diagonal of the discrete L^2 inner product.
    """

    p_plus: np.ndarray
    p_minus: np.ndarray
    q_matrix: np.ndarray
    t_plus: np.ndarray
    t_minus: np.ndarray
    basis_plus: np.ndarray
    basis_minus: np.ndarray
    weights: np.ndarray
    kind: str = "custom"
    meta: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.q_matrix.shape[0]

    def form(self, u, v) -> complex:
        return complex(np.vdot(u, self.q_matrix @ v))

    def inner(self, u, v) -> complex:
        return complex(np.sum(self.weights * np.conj(u) * v))

    def sector_bounds(self) -> tuple[float, float]:
        """``(lambda_min(T_+), lambda_max(T_-))``."""
        lp = np.linalg.eigvalsh(self.t_plus).min() if self.t_plus.size else math.inf
        lm = np.linalg.eigvalsh(self.t_minus).max() if self.t_minus.size else -math.inf
        return float(lp), float(lm)

    def graph_norm_sq(self, phi) -> float:
        """``(1+a)|P_+ phi|^2 + Q_+(phi) + (1+b)|P_- phi|^2 - Q_-(phi)``."""
        lp, lm = self.sector_bounds()
        a, b = max(0.0, -lp), max(0.0, lm)
        u, v = self.p_plus @ phi, self.p_minus @ phi
        return float((1 + a) * self.inner(u, u).real + self.form(u, u).real
                     + (1 + b) * self.inner(v, v).real - self.form(v, v).real)


def _split_basis(P):
    w, V = np.linalg.eigh(0.5 * (P + P.conj().T))
    return V[:, w > 0.5]


def _block(T_full, B):
    t = B.conj().T @ T_full @ B
    return 0.5 * (t + t.conj().T)


def build_sector_split(kind: str, *, grid=None, weights=None, n_fourier: int | None = None,
                       q_matrix=None, p_plus=None) -> SectorSplit:
    """Sector split for ``position``, ``momentum`` or a ``custom`` form.

    Zero modes (``x = 0``, symbol ``0``) go to ``W_-``.  Momentum sectors are
    labelled by the sign of the symbol ``-n`` of ``i d/dtheta``, so ``W_+``
    collects the frequencies ``n < 0``.
    """
    if kind == "position":
        x = np.asarray(grid, dtype=float)
        w = np.ones_like(x) if weights is None else np.asarray(weights, dtype=float)
        if x.ndim != 1 or w.shape != x.shape or np.any(w <= 0):
            raise ValueError("position split needs a 1D grid and positive weights")
        if not np.allclose(np.sort(x), -np.sort(x)[::-1], atol=1e-12):
            raise ValueError("position grid must be symmetric about 0")
        pos = x > 0
        I = np.eye(len(x))
        Bp, Bm = I[:, pos], I[:, ~pos]
        return SectorSplit(np.diag(pos.astype(float)), np.diag((~pos).astype(float)),
                           np.diag(x * w), np.diag(x[pos]), np.diag(x[~pos]),
                           Bp, Bm, w, "position", {"grid": x})
    if kind == "momentum":
        Q = momentum_matrix(int(n_fourier))
        F, n = _dft(int(n_fourier))
        Bp, Bm = F.conj().T[:, n < 0], F.conj().T[:, n >= 0]
        return SectorSplit(Bp @ Bp.conj().T, Bm @ Bm.conj().T, Q,
                           np.diag(-n[n < 0].astype(float)), np.diag(-n[n >= 0].astype(float)),
                           Bp, Bm, np.ones(len(n)), "momentum", {"frequencies": n})
    if kind == "custom":
        Q = np.asarray(q_matrix, dtype=complex)
        P = np.asarray(p_plus, dtype=complex)
        d = Q.shape[0]
        if Q.shape != (d, d) or P.shape != (d, d):
            raise DimensionMismatch("q_matrix and p_plus must be square of equal size")
        if np.linalg.norm(Q - Q.conj().T) > 1e-12:
            raise ValueError("q_matrix must be Hermitian")
        if np.linalg.norm(P @ P - P) > 1e-12 or np.linalg.norm(P - P.conj().T) > 1e-12:
            raise ValueError("p_plus must be an orthogonal projector")
        Pm = np.eye(d) - P
        off = np.linalg.norm(P @ Q @ Pm, 2)
        if off > ADDITIVITY_TOL:
            raise NotAdditive(f"off-diagonal block norm {off:.3e} exceeds {ADDITIVITY_TOL:g}")
        Bp, Bm = _split_basis(P), _split_basis(Pm)
        return SectorSplit(P, Pm, Q, _block(Q, Bp), _block(Q, Bm), Bp, Bm,
                           np.ones(d), "custom")
    raise ValueError(f"unknown split kind {kind!r}")


def reconstruct_operator(split: SectorSplit, n_test: int = 50, rng=None) -> np.ndarray:
    """``T = T_+ P_+ + T_- P_-`` in the full space, checked against ``Q``."""
    if split.kind == "position":
        T = np.diag(split.meta["grid"].astype(float))
    else:
        T = (split.basis_plus @ split.t_plus @ split.basis_plus.conj().T
             + split.basis_minus @ split.t_minus @ split.basis_minus.conj().T)
    if np.linalg.norm(T - T.conj().T) > 1e-12:
        raise AssertionError("reconstructed operator is not Hermitian")
    rng = np.random.default_rng(rng)
    d = split.dim
    for _ in range(n_test):
        u = rng.standard_normal(d) + 1j * rng.standard_normal(d)
        v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
        defect = abs(split.form(u, v) - split.inner(u, T @ v))
        scale = np.linalg.norm(u) * np.linalg.norm(v) * max(1.0, np.abs(T).max())
        if defect > 1e-10 * scale:
            raise AssertionError(f"Q(u, v) != <u, T v>: defect {defect:.3e}")
    return T


def additivity_defect(split: SectorSplit, n_pairs: int = 100, rng=None) -> float:
    """Largest ``|Q(u + v) - Q(u) - Q(v)|`` over normalized cross-sector pairs."""
    rng = np.random.default_rng(rng)
    worst = 0.0
    kp, km = split.basis_plus.shape[1], split.basis_minus.shape[1]
    if not kp or not km:
        return 0.0
    for _ in range(n_pairs):
        u = split.basis_plus @ (rng.standard_normal(kp) + 1j * rng.standard_normal(kp))
        v = split.basis_minus @ (rng.standard_normal(km) + 1j * rng.standard_normal(km))
        u /= math.sqrt(split.inner(u, u).real)
        v /= math.sqrt(split.inner(v, v).real)
        q = lambda z: split.form(z, z).real
        worst = max(worst, abs(q(u + v) - q(u) - q(v)))
    return worst
