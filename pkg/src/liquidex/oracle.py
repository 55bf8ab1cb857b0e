"""
Discrete-time dynamic-programming oracles.

Nothing here uses the closed forms. The discrete problem is: on a grid with
step dt,

    theta_{k+1} = theta_k (1 + sigma dW_k) + u_k dt,   E[dW] = 0, E[dW^2] = dt

reward per step  alpha_k theta_k dt - (lam/2) u_k^2 dt - (kappa sigma^2/2) theta_k^2 dt
(left endpoints), terminal reward -(a/2) theta_n^2.

Writing the value as V_k(theta) = -p_k theta^2 / 2 + b_k theta + c_k, the
first-order condition in u gives

    u_k = g_k theta + h_k,  g_k = -p_{k+1} / (lam + p_{k+1} dt),
                            h_k =  b_{k+1} / (lam + p_{k+1} dt)

and substituting back (the cross terms in lam g + p (1 + g dt) cancel):

    p_k = kappa sigma^2 dt + p_{k+1} (1 + sigma^2 dt) + g_k p_{k+1} dt
    b_k = alpha_k dt + b_{k+1} (1 + g_k dt)
    c_k = c_{k+1} + b_{k+1} h_k dt - (lam + p_{k+1} dt) h_k^2 dt / 2

with p_n = a, b_n = c_n = 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .closed_form import ModelParams, characteristic_roots, gamma_rate
from .errors import DomainError, NumericError, ParameterError

__all__ = [
    "OracleSolution",
    "MatrixOracleSolution",
    "scalar_riccati",
    "matrix_riccati",
    "one_step_grid_search",
    "TreeSolution",
    "binomial_tree_dp",
    "tree_value",
    "ConvergenceRow",
    "gain_convergence_report",
    "fitted_order",
]


@dataclass
class OracleSolution:
    """Backward-recursion coefficients; value V_k = -p_k th^2/2 + b_k th + c_k."""

    n: int
    dt: float
    p: np.ndarray
    b: np.ndarray
    c: np.ndarray
    g: np.ndarray
    h: np.ndarray

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n + 1) * self.dt

    def value(self, theta0: float, k: int = 0) -> float:
        return -0.5 * self.p[k] * theta0 ** 2 + self.b[k] * theta0 + self.c[k]


def _finite_a(a: float) -> float:
    if not math.isfinite(a) or a < 0:
        raise ParameterError(f"the discrete oracle needs a finite a >= 0, got {a!r}")
    return float(a)


def scalar_riccati(p: ModelParams, n: int, alpha: Optional[Callable] = None, *,
                   a: Optional[float] = None, kappa: Optional[float] = None) -> OracleSolution:
    """Scalar LQ recursion with multiplicative noise and optional deterministic drift.

    Args:
        p: model parameters; ``p.a`` must be finite unless ``a`` is given.
        n: number of steps.
        alpha: deterministic drift ``alpha(t)``, evaluated at left endpoints.
        a: overrides ``p.a`` (``0`` is allowed here, unlike in ModelParams).
        kappa: overrides ``p.kappa`` (``0`` is allowed here).
    """
    if n < 1:
        raise DomainError("n must be >= 1")
    a = _finite_a(p.a if a is None else a)
    kappa = p.kappa if kappa is None else float(kappa)
    lam, s2, dt = p.lam, p.sigma ** 2, p.T / n
    alphas = np.zeros(n) if alpha is None else np.asarray(alpha(np.arange(n) * dt), dtype=float) * np.ones(n)

    P = np.empty(n + 1)
    B = np.empty(n + 1)
    C = np.empty(n + 1)
    g = np.empty(n)
    h = np.empty(n)
    P[n], B[n], C[n] = a, 0.0, 0.0
    for k in range(n - 1, -1, -1):
        pn, bn = P[k + 1], B[k + 1]
        denom = lam + pn * dt
        g[k] = -pn / denom
        h[k] = bn / denom
        P[k] = kappa * s2 * dt + pn * (1.0 + s2 * dt) + g[k] * pn * dt
        B[k] = alphas[k] * dt + bn * (1.0 + g[k] * dt)
        C[k] = C[k + 1] + bn * h[k] * dt - 0.5 * denom * h[k] ** 2 * dt
    return OracleSolution(n=n, dt=dt, p=P, b=B, c=C, g=g, h=h)


def one_step_grid_search(p: ModelParams, theta0: float, points: int = 10_000_001,
                         chunk: int = 1_000_000) -> float:
    """Brute-force minimiser of the single-step cost (n = 1, dt = T).

    Minimises (lam/2) u^2 dt + (a/2) E[(theta0 (1 + sigma dW) + u dt)^2] over a
    uniform grid u in [-10|theta0|/dt, 10|theta0|/dt], then polishes with a
    parabola through the best point and its neighbours. The expectation is
    taken over the two-point law dW = +-sqrt(dt), which has the same first two
    moments as the Gaussian increment.
    """
    a = _finite_a(p.a)
    dt = p.T
    span = 10.0 * abs(theta0) / dt
    sq = math.sqrt(dt)
    up, dn = theta0 * (1 + p.sigma * sq), theta0 * (1 - p.sigma * sq)

    def cost(u):
        return 0.5 * p.lam * u ** 2 * dt + 0.25 * a * ((up + u * dt) ** 2 + (dn + u * dt) ** 2)

    step = 2 * span / (points - 1)
    best_i, best_v = 0, math.inf
    for lo in range(0, points, chunk):
        idx = np.arange(lo, min(lo + chunk, points))
        vals = cost(-span + idx * step)
        j = int(np.argmin(vals))
        if vals[j] < best_v:
            best_v, best_i = float(vals[j]), int(idx[j])
    i = min(max(best_i, 1), points - 2)
    u0 = -span + i * step
    fm, f0, fp = cost(u0 - step), cost(u0), cost(u0 + step)
    curv = fm - 2 * f0 + fp
    return u0 if curv <= 0 else u0 + 0.5 * step * (fm - fp) / curv


@dataclass
class MatrixOracleSolution:
    n: int
    dt: float
    P: np.ndarray  # (n + 1, N, N)
    G: np.ndarray  # (n, N, N)


def matrix_riccati(sigma: Sequence[float], rho: np.ndarray, lam: float, kappa: float, T: float,
                   a: float, n: int) -> MatrixOracleSolution:
    """Multi-asset LQ recursion with correlated multiplicative noise.

    Value V_k(th) = -th' P_k th / 2. With Sigma = (sigma_i sigma_j rho_ij),
    E[(sigma o th o dW)(sigma o th o dW)'] = (Sigma o th th') dt, whose quadratic
    form is th' (P o Sigma) th dt. The recursion is

        G_k = -(lam I + P_{k+1} dt)^{-1} P_{k+1}
        A_k = I + G_k dt
        P_k = kappa Sigma dt + lam G_k' G_k dt + A_k' P_{k+1} A_k + (P_{k+1} o Sigma) dt

    Raises:
        NumericError: if some P_k is not symmetric positive definite.
    """
    sig = np.asarray(sigma, dtype=float)
    N = sig.size
    rho = np.asarray(rho, dtype=float)
    Sigma = np.outer(sig, sig) * rho
    a = _finite_a(a)
    dt = T / n
    eye = np.eye(N)
    P = np.empty((n + 1, N, N))
    G = np.empty((n, N, N))
    P[n] = a * eye
    for k in range(n - 1, -1, -1):
        Pn = P[k + 1]
        Gk = -np.linalg.solve(lam * eye + Pn * dt, Pn)
        A = eye + Gk * dt
        Pk = kappa * Sigma * dt + lam * Gk.T @ Gk * dt + A.T @ Pn @ A + Pn * Sigma * dt
        Pk = 0.5 * (Pk + Pk.T)
        if np.linalg.eigvalsh(Pk)[0] <= 0:
            raise NumericError(f"value matrix lost positive definiteness at step {k}")
        G[k] = Gk
        P[k] = Pk
    return MatrixOracleSolution(n=n, dt=dt, P=P, G=G)


@dataclass
class TreeSolution:
    """Exact DP on the full binary tree of +-sqrt(dt) shocks.

    Node ``j`` at level ``k`` has children ``2j`` (down) and ``2j + 1`` (up).
    ``value`` is the optimal expected reward from the root; ``controls[k]``
    holds u at every level-k node along the optimal policy and ``theta[k]``
    the corresponding positions.
    """

    value: float
    controls: list
    theta: list
    quad: list  # per level: (P, B, C) arrays with V(th) = P th^2 + B th + C


def binomial_tree_dp(p: ModelParams, depth: int, theta0: Optional[float] = None,
                     alpha: Optional[Callable] = None) -> TreeSolution:
    """Backward induction over the 2^depth-leaf tree.

    Each node's value is a quadratic in the position, built by explicitly
    composing both children's quadratics with theta' = theta m + u dt
    (m = 1 +- sigma sqrt(dt)), averaging, adding the stage reward and
    maximising the resulting concave quadratic in u.
    """
    if not 1 <= depth <= 16:
        raise DomainError("depth must be between 1 and 16")
    a = _finite_a(p.a)
    th0 = p.theta0 if theta0 is None else float(theta0)
    dt = p.T / depth
    sq = math.sqrt(dt)
    mult = np.array([1.0 - p.sigma * sq, 1.0 + p.sigma * sq])
    alphas = np.zeros(depth) if alpha is None else np.asarray(alpha(np.arange(depth) * dt), dtype=float) * np.ones(depth)

    # V(th) = Pq th^2 + Bq th + Cq at leaves: -(a/2) th^2
    Pq = np.full(2 ** depth, -0.5 * a)
    Bq = np.zeros(2 ** depth)
    Cq = np.zeros(2 ** depth)
    quad = [None] * (depth + 1)
    quad[depth] = (Pq, Bq, Cq)
    gains = [None] * depth
    for k in range(depth - 1, -1, -1):
        # quadratic in (th, u): Xtt th^2 + Xtu th u + Xuu u^2 + Xt th + Xu u + X0
        Xtt = np.zeros(2 ** k)
        Xtu = np.zeros(2 ** k)
        Xuu = np.zeros(2 ** k)
        Xt = np.zeros(2 ** k)
        Xu = np.zeros(2 ** k)
        X0 = np.zeros(2 ** k)
        for side in (0, 1):
            m = mult[side]
            cp, cb, cc = Pq[side::2], Bq[side::2], Cq[side::2]
            Xtt += 0.5 * cp * m * m
            Xtu += 0.5 * cp * 2 * m * dt
            Xuu += 0.5 * cp * dt * dt
            Xt += 0.5 * cb * m
            Xu += 0.5 * cb * dt
            X0 += 0.5 * cc
        Xuu += -0.5 * p.lam * dt
        Xtt += -0.5 * p.kappa * p.sigma ** 2 * dt
        Xt += alphas[k] * dt
        if np.any(Xuu >= 0):
            raise NumericError(f"non-concave stage problem at level {k}")
        # argmax_u: u = gk th + hk
        gk = -Xtu / (2 * Xuu)
        hk = -Xu / (2 * Xuu)
        Pq = Xtt + Xtu * gk + Xuu * gk * gk
        Bq = Xt + Xtu * hk + Xu * gk + 2 * Xuu * gk * hk
        Cq = X0 + Xu * hk + Xuu * hk * hk
        gains[k] = (gk, hk)
        quad[k] = (Pq, Bq, Cq)

    value = float(Pq[0] * th0 ** 2 + Bq[0] * th0 + Cq[0])
    theta = [np.array([th0])]
    controls = []
    for k in range(depth):
        gk, hk = gains[k]
        uk = gk * theta[k] + hk
        controls.append(uk)
        nxt = np.empty(2 ** (k + 1))
        nxt[0::2] = theta[k] * mult[0] + uk * dt
        nxt[1::2] = theta[k] * mult[1] + uk * dt
        theta.append(nxt)
    return TreeSolution(value=value, controls=controls, theta=theta, quad=quad)


def tree_value(p: ModelParams, depth: int, controls: Sequence[np.ndarray], theta0: Optional[float] = None,
               alpha: Optional[Callable] = None) -> float:
    """Expected reward of an arbitrary node-indexed control tree, by forward enumeration."""
    a = _finite_a(p.a)
    th0 = p.theta0 if theta0 is None else float(theta0)
    dt = p.T / depth
    sq = math.sqrt(dt)
    alphas = np.zeros(depth) if alpha is None else np.asarray(alpha(np.arange(depth) * dt), dtype=float) * np.ones(depth)
    theta = np.array([th0])
    total = 0.0
    for k in range(depth):
        uk = np.asarray(controls[k], dtype=float)
        weight = 0.5 ** k
        stage = alphas[k] * theta - 0.5 * p.lam * uk ** 2 - 0.5 * p.kappa * p.sigma ** 2 * theta ** 2
        total += weight * dt * stage.sum()
        nxt = np.empty(2 ** (k + 1))
        nxt[0::2] = theta * (1 - p.sigma * sq) + uk * dt
        nxt[1::2] = theta * (1 + p.sigma * sq) + uk * dt
        theta = nxt
    total -= 0.5 ** depth * 0.5 * a * (theta ** 2).sum()
    return float(total)


@dataclass
class ConvergenceRow:
    n: int
    a: float
    max_rel_error: float
    t_at_max: float


def gain_convergence_report(p: ModelParams, n_list: Sequence[int], a: float,
                            t_max_frac: float = 0.9) -> list:
    """max_k |g_k - Gamma(t_k)| / |Gamma(t_k)| over t_k <= t_max_frac T, per n."""
    c = characteristic_roots(p)
    rows = []
    for n in n_list:
        sol = scalar_riccati(p, n, a=a)
        t = np.arange(n) * sol.dt
        mask = t <= t_max_frac * p.T + 1e-12
        target = gamma_rate(c, t[mask])
        err = np.abs(sol.g[mask] - target) / np.abs(target)
        j = int(np.argmax(err))
        rows.append(ConvergenceRow(n=int(n), a=float(a), max_rel_error=float(err[j]), t_at_max=float(t[mask][j])))
    return rows


def fitted_order(rows: Sequence[ConvergenceRow]) -> float:
    """Least-squares slope of -log(error) against log(n)."""
    n = np.log([r.n for r in rows])
    e = np.log([r.max_rel_error for r in rows])
    if len(rows) < 2:
        return math.nan
    return float(-np.polyfit(n, e, 1)[0])
