"""Deficiency spaces and von Neumann extensions of 1D Laplacians.

``N_+ = ker(T^dagger - i)`` and ``N_- = ker(T^dagger + i)``.  For ``T = -d^2/dx^2``
the defining equations are ``-u'' = +i u`` and ``-u'' = -i u``; on the half
line only the decaying exponentials survive.  Functions are represented by
samples on a uniform grid with composite Simpson weights for the L^2 product.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, GridTooShort, NonUnitary

DECAY_TOL = 1e-8
# minimal-domain functions vanish on this many nodes at each end
EDGE_NODES = 2


@dataclass(frozen=True, eq=False)
class DeficiencyPair:
    """Sampled orthonormal bases of ``N_+`` and ``N_-``.

    ``basis_plus`` has shape ``(n_plus, len(grid) * slots)``; multi-slot
    vectors (bipartite systems) are stored slot-major.
    """

    n_plus: int
    n_minus: int
    basis_plus: np.ndarray
    basis_minus: np.ndarray
    grid: np.ndarray
    weights: np.ndarray
    slots: int = 1
    # eigenvalues of the bulk factor, one per slot; empty for one-body pairs
    shifts: tuple = ()
    kind: str = "half_line"

    def inner(self, u, v) -> complex:
        w = np.tile(self.weights, self.slots)
        return complex(np.sum(w * np.conj(u) * v))

    def gram(self, which: str = "plus") -> np.ndarray:
        B = self.basis_plus if which == "plus" else self.basis_minus
        w = np.tile(self.weights, self.slots)
        return (B.conj() * w) @ B.T

    def to_dict(self) -> dict:
        pairs = lambda B: [[[float(z.real), float(z.imag)] for z in row] for row in B]
        return {
            "n_plus": self.n_plus,
            "n_minus": self.n_minus,
            "grid": [float(x) for x in self.grid],
            "slots": self.slots,
            "basis_plus": pairs(self.basis_plus),
            "basis_minus": pairs(self.basis_minus),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict) -> "DeficiencyPair":
        grid = np.asarray(data["grid"], dtype=float)
        unpack = lambda rows: np.array(
            [[complex(re, im) for re, im in row] for row in rows], dtype=complex
        ).reshape(len(rows), -1)
        slots = int(data.get("slots", 1))
        return cls(n_plus=int(data["n_plus"]), n_minus=int(data["n_minus"]),
                   basis_plus=unpack(data["basis_plus"]),
                   basis_minus=unpack(data["basis_minus"]),
                   grid=grid, weights=simpson_weights(grid), slots=slots)


@dataclass(frozen=True, eq=False)
class VonNeumannExtension:
    """Extension ``T_K`` with domain ``Dom(T) + (I + K) N_+``."""

    k_matrix: np.ndarray
    base_operator: DeficiencyPair
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        K = np.atleast_2d(np.asarray(self.k_matrix, dtype=complex))
        n = self.base_operator.n_plus
        if K.shape != (n, n) or self.base_operator.n_minus != n:
            raise DimensionMismatch(f"K must be {n}x{n} with equal deficiency indices")
        if np.linalg.norm(K.conj().T @ K - np.eye(n)) > 1e-12:
            raise NonUnitary("K is not unitary")
        object.__setattr__(self, "k_matrix", K)


def simpson_weights(grid) -> np.ndarray:
    """Composite Simpson weights; a trailing odd panel falls back to the trapezoid rule."""
    x = np.asarray(grid, dtype=float)
    n = len(x) - 1
    h = x[1] - x[0]
    w = np.zeros(n + 1)
    m = n - (n % 2)
    if m:
        w[0:m + 1:2] += 2 * h / 3
        w[1:m:2] += 4 * h / 3
        w[0] -= h / 3
        w[m] -= h / 3
    if n % 2:
        w[n - 1] += h / 2
        w[n] += h / 2
    return w


def _normalize(f, w):
    f = f / np.sqrt(np.sum(w * np.abs(f) ** 2))
    # fix the free phase: real positive at x = 0, else at the largest sample
    anchor = f[0] if abs(f[0]) > 0 else f[np.argmax(np.abs(f))]
    return f / (anchor / abs(anchor))


def _gram_schmidt(vectors, w):
    out = []
    for v in vectors:
        v = v.astype(complex)
        for u in out:
            v = v - np.sum(w * np.conj(u) * v) * u
        out.append(_normalize(v, w))
    return np.array(out)


def decay_root(z: complex) -> complex:
    """Square root with positive real part, the decaying branch of ``exp(-sqrt(z) x)``."""
    r = np.sqrt(complex(z))
    return r if r.real >= 0 else -r


def half_line_laplacian_deficiency(grid_extent: float = 40.0,
                                   grid_n: int = 4000) -> DeficiencyPair:
    """Deficiency spaces of ``-d^2/dx^2`` on ``C_c^inf(0, inf)``.

    ``N_+`` is spanned by ``exp(-(1 - i) x / sqrt 2)`` and ``N_-`` by
    ``exp(-(1 + i) x / sqrt 2)``.
    """
    if grid_n < 100:
        raise ValueError("grid_n must be >= 100")
    if np.exp(-grid_extent / np.sqrt(2)) >= DECAY_TOL:
        raise GridTooShort(
            f"extent {grid_extent} does not capture decay to {DECAY_TOL:g}")
    x = np.linspace(0.0, grid_extent, grid_n + 1)
    w = simpson_weights(x)
    plus = np.exp(-decay_root(-1j) * x)
    minus = np.exp(-decay_root(1j) * x)
    return DeficiencyPair(1, 1, _normalize(plus, w)[None, :],
                          _normalize(minus, w)[None, :], x, w)


def interval_laplacian_deficiency(length: float = 1.0,
                                  grid_n: int = 2000) -> DeficiencyPair:
    """Deficiency spaces on a finite interval: both exponential branches are L^2."""
    if grid_n < 100:
        raise ValueError("grid_n must be >= 100")
    x = np.linspace(0.0, length, grid_n + 1)
    w = simpson_weights(x)
    bases = []
    for z in (-1j, 1j):
        r = decay_root(z)
        bases.append(_gram_schmidt([np.exp(-r * x), np.exp(-r * (length - x))], w))
    return DeficiencyPair(2, 2, bases[0], bases[1], x, w, kind="interval")


def bipartite_deficiency(def_a: DeficiencyPair, h_b_eigenvalues) -> DeficiencyPair:
    """Deficiency spaces of ``H_A (x) I + I (x) H_B`` with ``H_B`` diagonal.

    For each bulk eigenvalue ``lam_k`` the ``N_+`` vector in slot ``k`` is the
    decaying solution of ``H_A^dagger Phi = (i - lam_k) Phi``, i.e.
    ``exp(-sqrt(lam_k - i) x)`` for the half-line Laplacian.
    """
    if def_a.kind != "half_line" or def_a.slots != 1:
        raise ValueError("bipartite construction needs a one-body half-line pair")
    lams = [float(l) for l in h_b_eigenvalues]
    if any(a < b for a, b in zip(lams, lams[1:])):
        raise ValueError("bulk eigenvalues must be sorted in descending order")
    x, w = def_a.grid, def_a.weights
    m = len(lams)
    npts = len(x)

    def slot_basis(sign):
        B = np.zeros((def_a.n_plus * m, npts * m), dtype=complex)
        for k, lam in enumerate(lams):
            r = decay_root(lam - sign * 1j)
            if np.exp(-r.real * x[-1]) >= DECAY_TOL:
                raise GridTooShort(f"slot {k} decays too slowly for the grid")
            B[k, k * npts:(k + 1) * npts] = _normalize(np.exp(-r * x), w)
        return B

    return DeficiencyPair(def_a.n_plus * m, def_a.n_minus * m, slot_basis(+1),
                          slot_basis(-1), x, w, slots=m, shifts=tuple(lams))


def laplacian_residual(pair: DeficiencyPair, which: str = "plus") -> np.ndarray:
    """Relative residual of ``(H^dagger -+ i) xi`` per basis vector (4th-order differences)."""
    x = pair.grid
    h = x[1] - x[0]
    npts = len(x)
    B = pair.basis_plus if which == "plus" else pair.basis_minus
    target = 1j if which == "plus" else -1j
    shifts = pair.shifts or (0.0,)
    out = []
    for v in B:
        num = den = 0.0
        for k in range(pair.slots):
            f = v[k * npts:(k + 1) * npts]
            if not np.any(f):
                continue
            d2 = (-f[4:] + 16 * f[3:-1] - 30 * f[2:-2] + 16 * f[1:-3] - f[:-4]) / (12 * h * h)
            r = -d2 + shifts[k] * f[2:-2] - target * f[2:-2]
            ww = pair.weights[2:-2]
            num += np.sum(ww * np.abs(r) ** 2)
            den += np.sum(ww * np.abs(f[2:-2]) ** 2)
        out.append(np.sqrt(num / den))
    return np.array(out)


def minimal_domain_operator(pair: DeficiencyPair, phi0) -> np.ndarray:
    """``-phi0''`` for a grid function vanishing on the first and last nodes."""
    f = np.asarray(phi0, dtype=complex)
    if f.shape != pair.grid.shape:
        raise DimensionMismatch("phi0 must be sampled on the pair's grid")
    if np.any(f[:EDGE_NODES]) or np.any(f[-EDGE_NODES:]):
        raise ValueError("phi0 must vanish on the edge nodes (minimal domain)")
    h = pair.grid[1] - pair.grid[0]
    out = np.zeros_like(f)
    g = np.concatenate([np.zeros(2), f, np.zeros(2)])
    out[:] = -(-g[4:] + 16 * g[3:-1] - 30 * g[2:-2] + 16 * g[1:-3] - g[:-4]) / (12 * h * h)
    return out


def apply_von_neumann_extension(ext: VonNeumannExtension, phi0, xi_plus):
    """Return ``(Phi0 + (I + K) xi, T Phi0 + i (I - K) xi)`` sampled on the grid."""
    pair = ext.base_operator
    c = np.atleast_1d(np.asarray(xi_plus, dtype=complex))
    if c.shape != (pair.n_plus,):
        raise DimensionMismatch(f"xi_plus must have length {pair.n_plus}")
    phi0 = np.asarray(phi0, dtype=complex)
    t_phi0 = minimal_domain_operator(pair, phi0)
    xi = c @ pair.basis_plus
    k_xi = (ext.k_matrix @ c) @ pair.basis_minus
    return phi0 + xi + k_xi, t_phi0 + 1j * (xi - k_xi)


def bump(grid, center, width) -> np.ndarray:
    """Smooth compactly supported bump ``exp(-1 / (1 - t^2))``."""
    t = (np.asarray(grid) - center) / width
    out = np.zeros_like(t)
    inside = np.abs(t) < 1
    out[inside] = np.exp(-1.0 / (1.0 - t[inside] ** 2))
    return out
