"""Dirac operators on the circle and the interval, and sector-split forms.

On the interval the boundary condition is a unitary map between the +i and -i
eigenspaces of the boundary Clifford action.  Eigenvalues are the roots of a
2x2 secular determinant.  Non-semibounded forms such as <phi, x phi> split into
a positive and a negative sector and add up across them.
"""

import math

import numpy as np

from selfadjoint import dirac as dr

print("Circle: spectrum is the integer lattice")
print("  ", dr.circle_dirac_spectrum(4).eigenvalues)

print("\nInterval [0, 1] with decoupled phases: a shifted lattice of spacing pi")
setup = dr.decoupled_setup(0.3, -1.1)
res = dr.interval_dirac_spectrum(1.0, setup, 6)
print("  ", np.round(res.eigenvalues, 6), " spacing", np.round(np.diff(res.eigenvalues), 6))

print("\nInterval with a coupling unitary")
theta = 0.8
U = np.array([[math.cos(theta), 1j * math.sin(theta)], [1j * math.sin(theta), math.cos(theta)]])
res = dr.interval_dirac_spectrum(1.0, dr.interval_setup(U), 6)
for E, r in zip(res.eigenvalues, res.residuals):
    print(f"  E = {E:+.8f}  |det| = {r:.1e}")

print("\nSector splits")
for kind, split in (("position", dr.build_sector_split("position", grid=np.linspace(-1, 1, 21))),
                    ("momentum", dr.build_sector_split("momentum", n_fourier=15))):
    lp, lm = split.sector_bounds()
    d = dr.additivity_defect(split, 100, rng=0)
    print(f"  {kind:8s} dim {split.dim:2d}  min on + sector {lp:+.3f}"
          f"  max on - sector {lm:+.3f}  additivity defect {d:.1e}")
