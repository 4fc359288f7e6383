"""Spectra of -d^2/dx^2 on [0, pi] as the boundary unitary moves.

The boundary unitary U acts on the two endpoint values.  Dirichlet is U = -I,
Neumann is U = I, and Robin(c) puts the phase e^{-2i arctan c} on both ends.
We walk a one-parameter family from Neumann to Dirichlet and watch the lowest
eigenvalues climb, then check the semibound against sampled Rayleigh quotients.
"""

import math

import numpy as np

from selfadjoint import boundary as bd
from selfadjoint import quadform as qf

L, N = math.pi, 400

print("Classical cases")
for name in ("neumann", "dirichlet"):
    ev = qf.solve(qf.assemble(L, N, bd.named_condition(name, 2)), 4).eigenvalues
    print(f"  {name:9s}", np.round(ev, 5))

print("\nPhase family U = e^{i t} I, t from 0 (Neumann) towards pi (Dirichlet)")
for t in np.linspace(0, math.pi, 7)[:-1]:
    bu = bd.from_matrix(np.exp(1j * t) * np.eye(2))
    ev = qf.solve(qf.assemble(L, N, bu), 3).eigenvalues
    print(f"  t = {t:5.3f}  A = {bd.cayley(np.array([[np.exp(1j * t)]]))[0, 0].real:+9.3f}"
          f"  lowest = {np.round(ev, 4)}")

print("\nRobin c = 1 on both ends: a bound state below zero")
asm = qf.assemble(L, N, bd.robin(1.0, 2))
est = qf.semibound_estimate(asm, 200, rng=0)
print(f"  ground state       {qf.solve(asm, 1).eigenvalues[0]:+.6f}")
print(f"  certified bound    {est.certified_bound:+.6f}")
print(f"  lowest sampled RQ  {est.lower_bound_estimate:+.6f}")

print("\nQuasi-periodic conditions phi(L) = e^{i tau} phi(0)")
for tau in (0.0, math.pi / 2, math.pi):
    ev = qf.solve(qf.assemble(L, N, bd.quasi_periodic(tau)), 3).eigenvalues
    exact = sorted(((tau + 2 * math.pi * k) / L) ** 2 for k in range(-2, 3))[:3]
    print(f"  tau = {tau:5.3f}  FEM {np.round(ev, 4)}  exact {np.round(exact, 4)}")
