"""
Simulated liquidations against two benchmarks
=============================================

The optimal schedule is compared with selling at a constant share rate and
with a share-based schedule that ignores the lognormal price.
"""

import numpy as np

from liquidex import ModelParams, TimeGrid, characteristic_roots, objective_mc, simulate_optimal
from liquidex.paths import gatheral_benchmark, gatheral_strategy, optimal_strategy, twap_strategy

S0 = 100.0
p = ModelParams(lam=0.2, kappa=0.2, sigma=0.1, T=20.0, theta0=1e5)
c = characteristic_roots(p)
grid = TimeGrid(p.T, 1000)

# One path: cash, control and shares. When the price rallies the trader
# sells harder, because the position is worth more.
b = simulate_optimal(p, c, grid, S0, seed=2024)
for k in range(0, 1001, 200):
    print(f"t = {grid.times[k]:5.1f}  S = {b.S[k]:7.2f}  theta = {b.theta[k]:10.1f}  u = {b.u[k]:10.1f}  q = {b.q[k]:7.2f}")

# At high volatility the share-based schedule can go short before T,
# while the optimal share path never does.
hot = ModelParams(lam=0.2, kappa=0.2, sigma=0.4, T=20.0, theta0=1e5)
hc = characteristic_roots(hot)
for seed in range(2024, 2124):
    hb = simulate_optimal(hot, hc, grid, S0, seed)
    q_g = gatheral_benchmark(1000.0, hot.kappa, hot.T, grid.times, hb.S)
    if q_g.min() < 0:
        print(f"\nsigma = 0.4, seed {seed}: benchmark bottoms at {q_g.min():.1f} shares, optimal at {hb.q[:-1].min():.3g}")
        break

# Expected objective under common random numbers.
n = 5000
for name, strategy in (("optimal", optimal_strategy), ("constant rate", twap_strategy),
                       ("share schedule", gatheral_strategy(S0))):
    mean, se = objective_mc(p, c, grid, strategy, n, master_seed=1)
    print(f"{name:15s} {mean: .4e} +- {se:.1e}")
