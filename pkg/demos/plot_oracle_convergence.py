"""
Checking the closed form with discrete dynamic programming
==========================================================

A backward Riccati recursion solves the time-discretised problem exactly.
As the grid is refined and the terminal penalty grows, its gains approach
the continuous gain.
"""

import numpy as np

from liquidex import ModelParams, binomial_tree_dp, characteristic_roots, nu_offset, scalar_riccati
from liquidex.oracle import fitted_order, gain_convergence_report

p = ModelParams(lam=0.2, kappa=0.2, sigma=0.1, T=20.0, theta0=1.0)

for a in (1e4, 1e6, 1e8):
    rows = gain_convergence_report(p, [500, 1000, 2500, 5000], a=a)
    errs = "  ".join(f"{r.max_rel_error:.2e}" for r in rows)
    print(f"a = {a:.0e}: max relative gain error {errs}  (order {fitted_order(rows):.2f})")

# The affine term follows the drift offset.
c = characteristic_roots(p)
sol = scalar_riccati(p, 5000, alpha=lambda t: np.full_like(t, 0.05), a=1e8)
print(f"\nh_0 = {sol.h[0]:.5f}   nu(0) = {nu_offset(c, p, 0.0, 0.05, 0.05):.5f}")

# On a small binomial tree, full backward induction gives the same value.
small = ModelParams(lam=0.3, kappa=0.5, sigma=0.25, T=2.0, theta0=1.5, a=4.0)
for depth in (2, 6, 12):
    tree = binomial_tree_dp(small, depth).value
    ric = scalar_riccati(small, depth).value(small.theta0)
    print(f"depth {depth:2d}: tree {tree:.15f}  riccati {ric:.15f}")
