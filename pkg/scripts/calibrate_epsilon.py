"""Sweep the deflation weight eps on MP1B and pick the default.

Rule: fewest GMRES iterations; ties broken by the smallest relative
residual one step before convergence.
"""
import numpy as np

from igahelm.assembly import build_system
from igahelm.precond.compose import solve
from igahelm.precond.deflation import DeflationSpec
from igahelm.problems import mp1b, resolution_for

k, p = 1e3, 2
system = build_system(mp1b(k), resolution_for(k, 0.625), p)

rows = []
for eps in np.round(np.arange(-0.05, 0.4001, 0.025), 3):
    rep = solve(system, DeflationSpec(float(eps)), None)
    rows.append((rep.iterations, eps, rep.relative_residuals))
    print(f"eps={eps:+.3f}  iterations={rep.iterations}")

best_it = min(r[0] for r in rows)
# residual at the last iteration before convergence, among the tied runs
tied = [(hist[best_it - 1], eps) for it, eps, hist in rows if it == best_it]
res, eps = min(tied)
print(f"\nfewest iterations: {best_it}, reached for {len(tied)} values of eps")
print(f"tie-break residual minimum {res:.3e} at eps = {eps}")
