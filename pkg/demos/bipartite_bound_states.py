"""Bound states of a half-line particle coupled to a two-level system.

With bulk energies lambda1 >= lambda2 and boundary angles (alpha1, alpha2), a
bound state exists only on the compatibility curve
tan^2(alpha1/2) - tan^2(alpha2/2) = lambda1 - lambda2.  Its two decay rates are
generally different, so the state is entangled between position and spin.
"""

import math

import numpy as np

from selfadjoint import bipartite as bp
from selfadjoint import boundary as bd

system = bp.BipartiteSystem(2.0, 1.0)
print(f"sigma = lambda1 - lambda2 = {system.sigma}")

print("\nCompatibility curve (first and last few points)")
curve = bp.compatibility_curve(system.sigma, [k * math.pi / 21 for k in range(1, 21)])
pts = list(curve)
for a1, a2 in pts[:3] + pts[-3:]:
    print(f"  alpha1 = {a1:.4f}  alpha2 = {a2:.4f}")
print(f"  {len(curve.omitted)} samples omitted, e.g. {curve.omitted[0][1]!r}")

print("\nOne bound state")
s = bp.bound_state(system, 2 * math.atan(math.sqrt(2)))
print(f"  E = {s.energy:+.3e}  kappa = ({s.kappa1:.4f}, {s.kappa2:.4f})")
print(f"  Schmidt weights {tuple(round(x, 5) for x in s.schmidt)}  entropy {s.entropy:.5f}")

print("\nAdiabatic path alpha1 = 2s")
for st in bp.adiabatic_path(system, [0.3, 0.6, 0.98, 1.2, 1.4, 1.55]):
    print(f"  s = {st.s:.2f}  flag = {st.flag:15s}  entropy = {st.entropy:.4f}")

print("\nSeparability: does the boundary condition itself entangle?")
for label, U in (("e^{0.7i} I", bd.from_matrix(np.exp(0.7j) * np.eye(2))),
                 ("diag(e^{0.5i}, e^{-i})", bd.from_matrix(np.diag(np.exp([0.5j, -1j]))))):
    r = bp.separability_test(U, evolve_time=2.0)
    print(f"  U = {label:24s} -> {r.verdict:10s} max entropy {r.max_entropy:.2e}")
