"""
Two correlated assets
=====================

Gains for a two-asset book from the linear boundary-value system, next to
the matrix Riccati recursion.
"""

import numpy as np

from liquidex import MultiAssetParams, characteristic_roots, gain_schedule, gamma_rate, matrix_riccati
from liquidex import ModelParams, solve_feedback_gain

# One asset: the system reproduces the scalar gain.
one = MultiAssetParams([0.1], [[1.0]], 0.2, 0.2, 20.0, a=1e8)
c = characteristic_roots(ModelParams(0.2, 0.2, 0.1, 20.0))
for t in (0.0, 10.0, 19.0):
    print(f"t = {t:4}: system {solve_feedback_gain(one, t).G[0, 0]:.8f}  closed form {gamma_rate(c, t):.8f}")

# Two assets. Positive correlation makes selling one asset part of the
# hedge for the other, so the cross gains are negative; they flip sign with rho.
times = np.array([0.0, 10.0, 19.0])
for rho in (0.5, -0.5, 0.0):
    R = np.array([[1.0, rho], [rho, 1.0]])
    mp = MultiAssetParams([0.1, 0.2], R, 0.2, 0.2, 20.0, a=1e6)
    G = gain_schedule(mp, times)
    ric = matrix_riccati([0.1, 0.2], R, 0.2, 0.2, 20.0, 1e6, 5000).G[0]
    print(f"\nrho = {rho:+.1f}")
    print("  system  G(0) =", np.round(G[0], 5).tolist())
    print("  Riccati G(0) =", np.round(ric, 5).tolist())
