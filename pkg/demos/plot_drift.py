"""
Trading with a price drift
==========================

With a drift the control gains an affine term. Starting flat, a trader
facing a positive constant drift buys, rides the drift, then unwinds by T.
"""

import numpy as np

from liquidex import DriftSpec, ModelParams, TimeGrid, characteristic_roots, simulate_optimal

p = ModelParams(lam=0.2, kappa=0.2, sigma=0.1, T=20.0, theta0=0.0)
c = characteristic_roots(p)
grid = TimeGrid(p.T, 1000)

b = simulate_optimal(p, c, grid, 100.0, seed=2024, drift=DriftSpec.constant(0.05))
for k in range(0, 1001, 100):
    print(f"t = {grid.times[k]:5.1f}  theta = {b.theta[k]:12.2f}  u = {b.u[k]:10.2f}")

# A drift expected to have faded by T leaves nothing to wait for at the end,
# so the trader builds a larger position early.
fading = DriftSpec("deterministic", alpha_fn=lambda t: 0.05 * (1 - np.asarray(t) / p.T))
f = simulate_optimal(p, c, grid, 100.0, seed=2024, drift=fading)
print(f"\npeak position, constant drift {b.theta.max():.1f}, fading drift {f.theta.max():.1f}")
