"""Maximal and minimal solutions from perturbation ladders, and comparison.

The maximal solution is the limit of solutions with data (g + eps, y0 + eps)
as eps -> 0 from above; the minimal one uses -eps. Any sub-solution whose
initial value lies below y0 stays below the maximal solution.

For nu < 1 the solution is unbounded at t = 0, so f is chosen with a slope
in y that decays; otherwise Picard iteration slows down under refinement.
"""

import math

import numpy as np

from psihilfer import (
    ExtremalConfig,
    FractionalOrder,
    GradedMesh,
    GridFunction,
    HybridProblem,
    SolverConfig,
    comparison_bound,
    make_preset,
    maximal_solution,
    minimal_solution,
    solve_picard,
)

identity = make_preset("identity")
order = FractionalOrder(0.5, 0.5)
p = HybridProblem("1 + 0.1/(1 + y^2)", "0.3*y + t", 0.5, 1.0, identity, order)
scfg = SolverConfig(N=512)
ecfg = ExtremalConfig(0.1, q=0.5, stop_tol=1e-6, max_levels=20)

y, _ = solve_picard(p, scfg)
r = maximal_solution(p, ecfg, scfg, compare_base=True)
q = minimal_solution(p, ecfg, scfg)
print("ladder differences (maximal):", " ".join(f"{d:.1e}" for d in r.report.diffs))
print(f"maximal: monotone {r.report.monotone}, converged {r.report.converged}, "
      f"{len(r.ladder)} levels, maximal {r.report.base_order} the base solution")
gap = np.max(r.solution.weighted - q.solution.weighted)
print(f"max weighted gap between maximal and minimal solutions: {gap:.1e}")
print(f"base solution inside the band: {bool(np.all(q.solution.weighted <= y.weighted + 1e-8))}"
      f" and {bool(np.all(y.weighted <= r.solution.weighted + 1e-8))}")

# Comparison on the homogeneous problem, whose solutions are c (dPsi)^(xi-1).
h = HybridProblem("1", "0", 1.0, 1.0, identity, order)
mesh = GradedMesh(1.0, 512)
u = identity.increment(mesh.nodes)
e = order.mu + 1 - order.xi
print("\ncomparison with the maximal solution of D y = 0, y0 = 1")
cases = {
    "0.5 (dPsi)^(xi-1)": GridFunction.power(mesh, identity, order, order.xi - 1, 0.5),
    "1.5 (dPsi)^(xi-1)": GridFunction.power(mesh, identity, order, order.xi - 1, 1.5),
    "crossing sub-solution": GridFunction.from_weighted(
        mesh, identity, order, 1.2 - u**e / math.gamma(order.mu + 1)),
}
for name, sub in cases.items():
    v = comparison_bound(sub, h, "lower", ecfg, scfg)
    nodes = v.violating_nodes
    where = f"violated at nodes {nodes[0]}..{nodes[-1]}" if nodes else "holds"
    print(f"  {name:22s} passed={v.passed}, {where}")
