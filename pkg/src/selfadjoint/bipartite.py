"""Half line times a two-level system: bound states, compatibility curve, entanglement.

The bulk Hamiltonian is ``-d^2/dx^2 (x) I + I (x) diag(lambda1, lambda2)`` on
``L^2([0, inf); C^2)``.  Angles follow the historical per-component
convention ``phi + i dphi = e^{i alpha} (phi - i dphi)`` with
``dphi = -Phi'(0)``, which gives ``dphi = tan(alpha/2) phi``.  In the Asorey
form used by :mod:`selfadjoint.boundary` the same condition has unitary
``diag(e^{-i alpha1}, e^{-i alpha2})``; :func:`asorey_unitary` does the
conversion.

A decaying solution ``e^{-kappa x}`` needs ``kappa = tan(alpha/2) > 0``, so
bound states exist only for ``alpha1`` in ``(0, pi)`` with
``tan^2(alpha1/2) > sigma``.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, replace
from typing import Sequence

import numpy as np

from . import boundary as bd
from . import quadform as qf
from .errors import AlphaSingular, NoBoundState, NoGap

SINGULAR_TOL = 1e-12
EDGE_TOL = 1e-12
SEPARABLE_TOL = 1e-8
CSV_FIELDS = ("s", "alpha1", "alpha2", "E", "kappa1", "kappa2",
              "schmidt1", "schmidt2", "entropy", "flag")


@dataclass(frozen=True)
class BipartiteSystem:
    lambda1: float
    lambda2: float
    boundary: bd.BoundaryUnitary | None = None

    def __post_init__(self):
        if not (np.isfinite(self.lambda1) and np.isfinite(self.lambda2)):
            raise ValueError("energies must be finite")
        # lambda1 == lambda2 is accepted as the degenerate sigma -> 0 limit
        if self.lambda1 < self.lambda2:
            raise ValueError("lambda1 must be >= lambda2")

    @property
    def sigma(self) -> float:
        return self.lambda1 - self.lambda2


@dataclass(frozen=True)
class BipartiteBoundState:
    energy: float
    alpha1: float
    alpha2: float
    kappa1: float
    kappa2: float
    schmidt: tuple
    entropy: float
    amplitudes: tuple = (1.0, 1.0)
    s: float = math.nan
    flag: str = "ok"

    @property
    def exists(self) -> bool:
        return self.flag == "ok"

    def eigenfunction(self, x) -> np.ndarray:
        """Normalized components ``(Phi_1(x), Phi_2(x))``, shape ``(2, len(x))``."""
        x = np.asarray(x, dtype=float)
        k = np.array([self.kappa1, self.kappa2])
        C = _normalized_amplitudes(k, np.asarray(self.amplitudes, dtype=complex))
        return C[:, None] * np.exp(-np.outer(k, x))

    def boundary_data(self) -> bd.BoundaryData:
        C = _normalized_amplitudes(np.array([self.kappa1, self.kappa2]),
                                   np.asarray(self.amplitudes, dtype=complex))
        return bd.BoundaryData(C, np.array([self.kappa1, self.kappa2]) * C)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["schmidt"] = [_json_float(p) for p in self.schmidt]
        d["amplitudes"] = [[float(np.real(c)), float(np.imag(c))] for c in self.amplitudes]
        return {k: _json_float(v) for k, v in d.items()}

    def csv_row(self) -> list:
        s1, s2 = self.schmidt
        return [self.s, self.alpha1, self.alpha2, self.energy, self.kappa1,
                self.kappa2, s1, s2, self.entropy, self.flag]


@dataclass(frozen=True)
class CompatibilityCurve:
    sigma: float
    points: list
    omitted: list

    def __iter__(self):
        return iter(self.points)

    def __len__(self):
        return len(self.points)


@dataclass(frozen=True)
class SeparabilityResult:
    separable: bool
    max_entropy: float
    times: np.ndarray
    entropies: np.ndarray

    @property
    def verdict(self) -> str:
        return "separable" if self.separable else "entangling"


def _json_float(v):
    return None if isinstance(v, float) and math.isnan(v) else v


def asorey_unitary(alpha1: float, alpha2: float) -> np.ndarray:
    return np.diag([np.exp(-1j * alpha1), np.exp(-1j * alpha2)])


def compatibility_residual(sigma: float, alpha1: float, alpha2: float) -> float:
    return sigma - math.tan(alpha1 / 2) ** 2 + math.tan(alpha2 / 2) ** 2


def _wrap(alpha: float) -> float:
    """Representative in ``(-pi, pi]``."""
    a = math.remainder(alpha, 2 * math.pi)
    return math.pi if a == -math.pi else a


def _is_singular(alpha: float) -> bool:
    return abs(abs(_wrap(alpha)) - math.pi) <= SINGULAR_TOL


def alpha2_from_alpha1(sigma: float, alpha1: float) -> float:
    """Principal branch ``2 arctan sqrt(tan^2(alpha1/2) - sigma)`` in ``[0, pi)``."""
    d = math.tan(alpha1 / 2) ** 2 - sigma
    if d < 0:
        raise NoBoundState(f"tan^2(alpha1/2) - sigma = {d:.3e} < 0")
    return 2 * math.atan(math.sqrt(d))


def _normalized_amplitudes(kappa, C):
    G = 1.0 / (kappa[:, None] + kappa[None, :])
    norm2 = np.real(np.conj(C) @ G @ C)
    return C / math.sqrt(norm2)


def schmidt_data(kappa1: float, kappa2: float, amplitudes=(1.0, 1.0)):
    """Squared Schmidt coefficients and entropy of ``C1 e^{-k1 x} r1 + C2 e^{-k2 x} r2``.

    The reduced spin density is ``rho_ab = conj(C_a) C_b <f_a, f_b>`` with
    ``<e^{-k1 x}, e^{-k2 x}> = 1 / (k1 + k2)``.
    """
    k = np.array([kappa1, kappa2], dtype=float)
    C = _normalized_amplitudes(k, np.asarray(amplitudes, dtype=complex))
    G = 1.0 / (k[:, None] + k[None, :])
    rho = np.conj(C)[:, None] * G * C[None, :]
    p = np.clip(np.linalg.eigvalsh(rho)[::-1], 0.0, 1.0)
    p = p / p.sum()
    return (float(p[0]), float(p[1])), entropy(p)


def entropy(p) -> float:
    p = np.asarray(p, dtype=float)
    p = p[p > 0]
    return float(max(0.0, -np.sum(p * np.log(p))))


def bound_state(sys: BipartiteSystem, alpha1: float,
                amplitudes=(1.0, 1.0)) -> BipartiteBoundState:
    if _is_singular(alpha1):
        raise AlphaSingular("alpha1 = pi is the Dirichlet condition: no Robin bound state")
    t1 = math.tan(alpha1 / 2)
    d = t1 * t1 - sys.sigma
    if d <= EDGE_TOL * max(1.0, sys.sigma):
        raise NoBoundState(f"tan^2(alpha1/2) = {t1 * t1!r} does not exceed sigma = {sys.sigma!r}")
    if t1 <= 0:
        raise NoBoundState("alpha1 in (-pi, 0] gives a growing first component")
    alpha2 = 2 * math.atan(math.sqrt(d))
    E = sys.lambda1 - t1 * t1
    k1 = math.sqrt(sys.lambda1 - E)
    k2 = math.sqrt(sys.lambda2 - E)
    schmidt, S = schmidt_data(k1, k2, amplitudes)
    return BipartiteBoundState(E, float(alpha1), alpha2, k1, k2, schmidt, S,
                               tuple(complex(c) for c in amplitudes))


def compatibility_curve(sigma: float, alpha1_samples: Sequence[float]) -> CompatibilityCurve:
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    points, omitted = [], []
    for a1 in alpha1_samples:
        a1 = float(a1)
        if _is_singular(a1):
            omitted.append((a1, "singular: alpha1 = pi"))
            continue
        d = math.tan(a1 / 2) ** 2 - sigma
        if d < 0:
            omitted.append((a1, "inadmissible: tan^2(alpha1/2) < sigma"))
            continue
        points.append((a1, 2 * math.atan(math.sqrt(d))))
    return CompatibilityCurve(float(sigma), points, omitted)


def _missing(s, flag, alpha1=math.nan, alpha2=math.nan) -> BipartiteBoundState:
    nan = math.nan
    return BipartiteBoundState(nan, alpha1, alpha2, nan, nan, (nan, nan), nan,
                               s=s, flag=flag)


def adiabatic_path(sys: BipartiteSystem, s_samples: Sequence[float],
                   amplitudes=(1.0, 1.0)) -> list:
    """Instantaneous bound states along ``U(s) = diag(e^{2is}, e^{2is'})``.

    Flags: ``ok``; ``non_normalizable`` where ``tan s' = 0``;
    ``no_bound_state`` where the compatibility equation has no decaying
    solution; ``singular`` at ``s = pi/2``.
    """
    out = []
    for s in s_samples:
        s = float(s)
        a1 = 2 * s
        if _is_singular(a1):
            out.append(_missing(s, "singular", a1))
            continue
        t = math.tan(s)
        d = t * t - sys.sigma
        if abs(d) <= EDGE_TOL * max(1.0, sys.sigma) and t > 0:
            out.append(_missing(s, "non_normalizable", a1, 0.0))
            continue
        if d < 0 or t <= 0:
            out.append(_missing(s, "no_bound_state", a1))
            continue
        out.append(replace(bound_state(sys, a1, amplitudes), s=s))
    return out


def states_to_csv(states) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    for st in states:
        w.writerow([v if isinstance(v, str) else repr(float(v)) for v in st.csv_row()])
    return buf.getvalue()


def states_to_json(states) -> str:
    return json.dumps([st.to_dict() for st in states])


def half_line_mesh(boundary: bd.BoundaryUnitary, R: float = 12.0, n_elements: int = 400,
                   lambdas=(2.0, 1.0)) -> qf.FEMAssembly:
    """Two-component P1 mesh on ``[0, R]``, spin-indexed boundary at 0, Dirichlet at R."""
    N = int(n_elements)
    nodes = np.linspace(0.0, R, N + 1)
    return qf.assemble_dofs(nodes, boundary, (0, N + 1), n_components=2,
                            coupling=np.diag(np.asarray(lambdas, dtype=float)),
                            dirichlet_dofs=(N, 2 * N + 1))


def spin_entropy(asm: qf.FEMAssembly, v) -> float:
    """Entanglement entropy of a two-component nodal vector."""
    n = len(asm.nodes)
    _, M1 = qf.p1_matrices(asm.nodes)
    comps = np.reshape(v, (2, n))
    rho = np.conj(comps) @ M1 @ comps.T
    rho = 0.5 * (rho + rho.conj().T)
    p = np.clip(np.linalg.eigvalsh(rho).real, 0.0, None)
    return entropy(p / p.sum())


def separability_test(boundary: bd.BoundaryUnitary, evolve_time: float = 2.0,
                      mesh: qf.FEMAssembly | None = None, n_times: int = 20,
                      tol: float = SEPARABLE_TOL) -> SeparabilityResult:
    """Evolve a product state and report the largest spin entanglement entropy.

    The initial state is ``x e^{-x} (1 - x/R)`` times the spin vector
    ``(1, 1)/sqrt 2``; its trace vanishes, so it lies in every form domain.
    """
    if boundary.no_gap:
        raise NoGap("boundary unitary has spectrum accumulating at -1")
    asm = half_line_mesh(boundary) if mesh is None else mesh.with_boundary(boundary)
    x = asm.nodes
    R = x[-1]
    f = x * np.exp(-x) * (1 - x / R)
    v0 = np.kron(np.array([1.0, 1.0]) / math.sqrt(2), f)

    K, M = asm.reduced()
    B = asm.basis
    c0 = np.linalg.lstsq(B, v0.astype(complex), rcond=None)[0]
    L = np.linalg.cholesky(M)
    Linv = np.linalg.inv(L)
    H = Linv @ K @ Linv.conj().T
    E, V = np.linalg.eigh(0.5 * (H + H.conj().T))
    w0 = V.conj().T @ (L.conj().T @ c0)
    times = np.linspace(0.0, evolve_time, n_times)
    ent = []
    for t in times:
        c = Linv.conj().T @ (V @ (np.exp(-1j * E * t) * w0))
        ent.append(spin_entropy(asm, B @ c))
    ent = np.array(ent)
    m = float(ent.max())
    return SeparabilityResult(m <= tol, m, times, ent)
