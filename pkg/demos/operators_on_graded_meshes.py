"""Psi-Riemann-Liouville integrals and Psi-Hilfer derivatives on graded meshes.

Run with ``python demos/operators_on_graded_meshes.py``.
"""

import math

import numpy as np

from psihilfer import FractionalOrder, GradedMesh, GridFunction, hilfer_derivative, make_preset, psi_rl_integral

CAPUTO = FractionalOrder(0.5, 1.0)

# The power rule I^mu (dPsi)^(delta-1) = Gamma(delta)/Gamma(mu+delta) (dPsi)^(mu+delta-1)
# holds for every clock Psi. Product integration in u = dPsi is exact for
# integrands linear in u, so the error only comes from delta = 1.5.
print("power rule, mu = 0.5, delta = 1.5: max relative error on [0.1, 1]")
for kind, rho in (("identity", None), ("power", 2.0), ("shifted_log", None)):
    psi = make_preset(kind, rho)
    errs = []
    for N in (256, 512, 1024, 2048):
        mesh = GradedMesh(1.0, N)
        h = GridFunction.power(mesh, psi, CAPUTO, 0.5)
        u = h.increments
        exact = math.gamma(1.5) / math.gamma(2.0) * u**1.0
        sel = mesh.nodes >= 0.1
        errs.append(np.max(np.abs(psi_rl_integral(h, 0.5)[sel] / exact[sel] - 1)))
    rates = [a / b for a, b in zip(errs, errs[1:])]
    print(f"  {kind:12s} " + "  ".join(f"{e:.2e}" for e in errs)
          + "   ratios " + " ".join(f"{r:.1f}" for r in rates))

# The Hilfer derivative annihilates the weighted-space kernel (dPsi)^(xi-1)
# for every type nu, but not constants unless nu = 1.
print("\nannihilation and the derivative of a constant (mu = 0.4, identity clock)")
mesh = GradedMesh(1.0, 1024)
psi = make_preset("identity")
sel = mesh.nodes >= 0.2
for nu in (0.0, 0.5, 1.0):
    order = FractionalOrder(0.4, nu)
    kernel = GridFunction.power(mesh, psi, order, order.xi - 1.0)
    one = GridFunction.from_callable(lambda t: 1.0 + 0 * t, mesh, psi, order)
    print(f"  nu = {nu:3.1f}: max |D kernel| = {np.max(np.abs(hilfer_derivative(kernel)[sel])):.1e}, "
          f"D 1 at t = 1 is {hilfer_derivative(one)[-1]:.6f}")
print(f"  expected D 1 for nu < 1: 1/Gamma(0.6) = {1 / math.gamma(0.6):.6f}")
