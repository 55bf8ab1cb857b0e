"""
The liquidation gain in closed form
===================================

A trader holding 1000 shares at 100$ wants out within 20 days. We look at
the feedback gain that tells them how fast to sell.
"""

import numpy as np

from liquidex import ModelParams, characteristic_roots, gamma_rate, nu_offset, position_factor

p = ModelParams(lam=0.2, kappa=0.2, sigma=0.1, T=20.0, theta0=1e5)
c = characteristic_roots(p)
print(f"roots: g1 = {c.gamma1:.7f}, g2 = {c.gamma2:.7f}")

# Far from the horizon the gain sits at g1; it then dives to -infinity,
# roughly like -1/(T - t), which forces the position to zero at T.
for t in (0.0, 10.0, 18.0, 19.9, 19.999):
    print(f"t = {t:7.3f}   Gamma = {gamma_rate(c, t):12.5f}   (T - t) Gamma = {(p.T - t) * gamma_rate(c, t):8.5f}")

# Without noise the cash position follows the deterministic factor D(t)/D(0).
t = np.linspace(0, p.T, 11)
print("\nremaining fraction:", np.round(position_factor(c, t), 4))

# More risk aversion means faster selling.
for kappa in (0.05, 0.2, 0.8):
    ck = characteristic_roots(ModelParams(lam=0.2, kappa=kappa, sigma=0.1, T=20.0))
    print(f"kappa = {kappa:4}: half-way factor {position_factor(ck, 10.0):.4f}")

# A positive drift shifts the control up (sell slower); a high expected
# terminal drift pulls it down again.
print(f"\nnu(0) with alpha = E[alpha_T] = 0.05: {nu_offset(c, p, 0.0, 0.05, 0.05):.4f}")
print(f"nu(0) with alpha = 0.05, E[alpha_T] = 0: {nu_offset(c, p, 0.0, 0.05, 0.0):.4f}")
