"""Rotation symmetry on the disk and the corner singularity.

A boundary unitary on the circle is rotation invariant exactly when it is
diagonal in the Fourier modes.  Then the disk Laplacian splits into radial
problems, one per angular mode.  The second part shows why corners matter: the
harmonic function Im z^{pi/Theta} loses H^2 regularity once the opening
exceeds pi.
"""

import math

import numpy as np

from selfadjoint import symmetry as sy

rep = sy.u1_rep(8)
rng = np.random.default_rng(0)
good = sy.build_admissible(np.eye(1), rng.uniform(-3, 3, 17)).assembled
for label, U in (("mode-diagonal", good), ("mode shift", sy.mode_shift(8))):
    c = sy.commutant_check(U, rep)
    f = sy.invariance_of_form_check(U, rep, 10, rng=1, control=False)
    print(f"{label:14s} commutator {c.max_norm:.1e}  form defect {f.max_defect:.1e}"
          f"  invariant {c.passed and f.passed}")

print("\nDirichlet disk modes against squared Bessel zeros")
known = {0: 5.783186, 1: 14.681971, 2: 26.374616}
for m, z2 in known.items():
    ev = sy.disk_mode_spectrum(m, -math.inf, 400, 1).eigenvalues[0]
    print(f"  m = {m}  FEM {ev:.6f}  j^2 {z2:.6f}")

print("\nCorner sweep")
for k in (2, 3, 4, 5, 6, 7):
    r = sy.corner_singularity(k * math.pi / 4)
    extra = f"value {r.value:.4f}" if r.h2_class == "finite" else f"rate {r.rate:.3f}"
    print(f"  Theta = {k}pi/4  exponent {r.exponent:.3f}  {r.h2_class:9s} {extra}")
