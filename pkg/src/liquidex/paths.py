"""
Brownian and GBM path generation, exact simulation of the optimal strategy,
benchmark strategies and Monte-Carlo evaluation of the objective.

Randomness is keyed per path: path ``i`` under master seed ``m`` always draws
from ``SeedSequence(m, spawn_key=(i,))``, so results never depend on how the
paths are batched or distributed across workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np

from .closed_form import (
    CoefBundle,
    DriftSpec,
    ModelParams,
    denominator_derivative,
    gamma_rate,
    log_denominator,
    nu_offset,
    position_factor,
)
from .errors import AdmissibilityError, DomainError, InputError

__all__ = [
    "TimeGrid",
    "PathBundle",
    "path_rng",
    "sample_brownian",
    "sample_brownian_paths",
    "gbm_price_path",
    "optimal_position_path",
    "optimal_control_path",
    "optimal_position_path_drift",
    "optimal_control_path_drift",
    "euler_position_path",
    "simulate_optimal",
    "gatheral_benchmark",
    "shares_to_cash_control",
    "StrategyPaths",
    "optimal_strategy",
    "gatheral_strategy",
    "twap_strategy",
    "idle_strategy",
    "path_objective",
    "objective_mc",
    "MCResult",
]


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid of ``n_steps + 1`` points on [0, T]."""

    T: float
    n_steps: int

    def __post_init__(self):
        if not (isinstance(self.n_steps, (int, np.integer)) and self.n_steps >= 1):
            raise DomainError(f"n_steps must be a positive integer, got {self.n_steps!r}")
        if not (math.isfinite(self.T) and self.T > 0):
            raise DomainError(f"T must be positive, got {self.T!r}")

    @property
    def dt(self) -> float:
        return self.T / self.n_steps

    @property
    def times(self) -> np.ndarray:
        t = np.arange(self.n_steps + 1, dtype=float) * self.dt
        t[-1] = self.T
        return t


@dataclass
class PathBundle:
    grid: TimeGrid
    seed: int
    W: np.ndarray
    S: np.ndarray
    theta: np.ndarray
    u: np.ndarray
    q: np.ndarray


def path_rng(master_seed: int, index: int) -> np.random.Generator:
    """Generator for path ``index`` under ``master_seed``."""
    return np.random.default_rng(np.random.SeedSequence(int(master_seed), spawn_key=(int(index),)))


def sample_brownian(grid: TimeGrid, seed: int) -> np.ndarray:
    """One Brownian path on ``grid`` with W[0] = 0. Same seed, same path."""
    rng = np.random.default_rng(np.random.SeedSequence(int(seed)))
    return _brownian_from(rng, grid)


def _brownian_from(rng: np.random.Generator, grid: TimeGrid, dim: Optional[int] = None) -> np.ndarray:
    shape = (grid.n_steps,) if dim is None else (grid.n_steps, dim)
    dW = rng.standard_normal(shape) * math.sqrt(grid.dt)
    W = np.zeros((grid.n_steps + 1,) + shape[1:])
    np.cumsum(dW, axis=0, out=W[1:])
    return W


def sample_brownian_paths(grid: TimeGrid, master_seed: int, n_paths: int, start: int = 0) -> np.ndarray:
    """Brownian paths ``start .. start + n_paths - 1``, shape (n_paths, n_steps + 1)."""
    out = np.empty((n_paths, grid.n_steps + 1))
    for row, idx in enumerate(range(start, start + n_paths)):
        out[row] = _brownian_from(path_rng(master_seed, idx), grid)
    return out


def gbm_price_path(S0: float, sigma: float, W: np.ndarray, times: np.ndarray) -> np.ndarray:
    """Exact driftless GBM: S_t = S0 exp(sigma W_t - sigma^2 t / 2)."""
    if not S0 > 0:
        raise DomainError(f"S0 must be positive, got {S0!r}")
    return S0 * np.exp(sigma * np.asarray(W) - 0.5 * sigma ** 2 * np.asarray(times))


def _martingale(p: ModelParams, W, times):
    return np.exp(p.sigma * np.asarray(W) - 0.5 * p.sigma ** 2 * times)


def optimal_position_path(p: ModelParams, c: CoefBundle, grid: TimeGrid, W: np.ndarray) -> np.ndarray:
    """Exact zero-drift optimal cash position theta0 (D(t)/D(0)) exp(sigma W_t - sigma^2 t / 2).

    ``W`` may hold one path or a stack of paths along the leading axis. The
    last column is exactly zero.
    """
    times = grid.times
    theta = p.theta0 * position_factor(c, times) * _martingale(p, W, times)
    theta[..., -1] = 0.0
    return theta


def optimal_control_path(p: ModelParams, c: CoefBundle, grid: TimeGrid, W: np.ndarray,
                         theta: np.ndarray) -> np.ndarray:
    """Zero-drift optimal control along an exact position path.

    u_k = theta_k Gamma(t_k) for k < n - 1. The last two points use the
    product form theta0 D'(t)/D(0) exp(sigma W_t - sigma^2 t / 2), which stays
    finite at t = T.
    """
    times = grid.times
    u = np.empty_like(np.asarray(theta, dtype=float))
    n = grid.n_steps
    u[..., : n - 1] = theta[..., : n - 1] * gamma_rate(c, times[: n - 1])
    tail = times[n - 1:]
    d0 = math.exp(log_denominator(c, 0.0))
    u[..., n - 1:] = (p.theta0 * np.asarray(denominator_derivative(c, tail)) / d0
                      * _martingale(p, np.asarray(W)[..., n - 1:], tail))
    return u


def _drift_terms(p, c, grid, drift):
    alpha, cond = drift.on_grid(grid.times, p.T)
    n = grid.n_steps
    nu = np.zeros(alpha.shape)
    nu[..., :n] = nu_offset(c, p, grid.times[:n], alpha[..., :n], cond[..., :n])
    return nu


def optimal_position_path_drift(p: ModelParams, c: CoefBundle, grid: TimeGrid, drift: DriftSpec,
                                W: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Optimal position under drift by variation of constants.

    theta_t = H_t (theta0 + int_0^t H_s^{-1} nu(s) ds) with
    H_t = (D(t)/D(0)) exp(sigma W_t - sigma^2 t / 2). The trapezoid integral is
    carried in ratio form,

        theta_{k+1} = (H_{k+1}/H_k)(theta_k + nu_k dt/2) + nu_{k+1} dt/2,

    so H^{-1} is never formed. theta_n = 0 because H_T = 0.

    Returns:
        (theta, nu) arrays shaped like ``W``; nu is 0 in the last column
        (it is not evaluated at the horizon).
    """
    W = np.asarray(W, dtype=float)
    if drift.mode == "scripted" and np.shape(drift.alpha_path)[-1] != W.shape[-1]:
        raise InputError("scripted drift path length does not match W")
    nu = _drift_terms(p, c, grid, drift)
    nu = np.broadcast_to(nu, W.shape)
    times, dt, n = grid.times, grid.dt, grid.n_steps
    logH = np.asarray(log_denominator(c, times[:n]))[None, :] + (
        p.sigma * W[..., :n].reshape(-1, n) - 0.5 * p.sigma ** 2 * times[:n])
    ratio = np.exp(np.diff(logH, axis=1))
    flat_nu = nu.reshape(-1, n + 1)
    theta = np.zeros((logH.shape[0], n + 1))
    theta[:, 0] = p.theta0
    for k in range(n - 1):
        theta[:, k + 1] = ratio[:, k] * (theta[:, k] + 0.5 * dt * flat_nu[:, k]) + 0.5 * dt * flat_nu[:, k + 1]
    theta[:, n] = 0.0
    return theta.reshape(W.shape), np.array(nu)


def optimal_control_path_drift(p: ModelParams, c: CoefBundle, grid: TimeGrid, W: np.ndarray,
                               theta: np.ndarray, nu: np.ndarray) -> np.ndarray:
    """u_k = theta_k Gamma(t_k) + nu_k for k < n.

    With a non-zero drift the true control diverges logarithmically at T, so
    u_n is reported as the average rate implied by the last step,
    (theta_n - theta_{n-1} - sigma theta_{n-1} dW_{n-1}) / dt.
    """
    n = grid.n_steps
    u = np.empty_like(theta)
    u[..., :n] = theta[..., :n] * gamma_rate(c, grid.times[:n]) + nu[..., :n]
    dW = np.asarray(W)[..., n] - np.asarray(W)[..., n - 1]
    u[..., n] = (theta[..., n] - theta[..., n - 1] - p.sigma * theta[..., n - 1] * dW) / grid.dt
    return u


def euler_position_path(p: ModelParams, c: CoefBundle, grid: TimeGrid, W: np.ndarray,
                        nu: Optional[np.ndarray] = None) -> np.ndarray:
    """Euler-Maruyama for d theta = (Gamma theta + nu) dt + sigma theta dW.

    The gain is evaluated at left endpoints only, so the pole at T is never
    touched.
    """
    W = np.asarray(W, dtype=float)
    n, dt = grid.n_steps, grid.dt
    gains = gamma_rate(c, grid.times[:n])
    dW = np.diff(W, axis=-1)
    theta = np.empty_like(W)
    theta[..., 0] = p.theta0
    for k in range(n):
        drift = gains[k] * theta[..., k]
        if nu is not None:
            drift = drift + nu[..., k]
        theta[..., k + 1] = theta[..., k] + drift * dt + p.sigma * theta[..., k] * dW[..., k]
    return theta


def simulate_optimal(p: ModelParams, c: CoefBundle, grid: TimeGrid, S0: float, seed: int,
                     drift: Optional[DriftSpec] = None) -> PathBundle:
    """Single-seed optimal path bundle (price, cash, control, shares)."""
    W = sample_brownian(grid, seed)
    S = gbm_price_path(S0, p.sigma, W, grid.times)
    if drift is None or drift.is_zero:
        theta = optimal_position_path(p, c, grid, W)
        u = optimal_control_path(p, c, grid, W, theta)
    else:
        theta, nu = optimal_position_path_drift(p, c, grid, drift, W)
        u = optimal_control_path_drift(p, c, grid, W, theta, nu)
    return PathBundle(grid=grid, seed=seed, W=W, S=S, theta=theta, u=u, q=theta / S)


def gatheral_benchmark(q0: float, kappa: float, T: float, times: np.ndarray, S: np.ndarray) -> np.ndarray:
    """Share path ((T - t)/T)(q0 - (kappa T / 4) int_0^t S_u du), trapezoid integral."""
    S = np.asarray(S, dtype=float)
    dt = np.diff(times)
    integral = np.zeros_like(S)
    np.cumsum(0.5 * (S[..., 1:] + S[..., :-1]) * dt, axis=-1, out=integral[..., 1:])
    q = (T - times) / T * (q0 - 0.25 * kappa * T * integral)
    q[..., -1] = 0.0
    return q


def shares_to_cash_control(theta: np.ndarray, W: np.ndarray, sigma: float, dt: float) -> np.ndarray:
    """Cash control implied by a cash path: u_k = (dtheta_k - sigma theta_k dW_k) / dt.

    Approximate at finite dt. The final point repeats u_{n-1}.
    """
    dtheta = np.diff(theta, axis=-1)
    dW = np.diff(W, axis=-1)
    u = np.empty_like(theta)
    u[..., :-1] = (dtheta - sigma * theta[..., :-1] * dW) / dt
    u[..., -1] = u[..., -2]
    return u


@dataclass
class StrategyPaths:
    theta: np.ndarray
    u: np.ndarray


Strategy = Callable[[ModelParams, CoefBundle, TimeGrid, np.ndarray], StrategyPaths]


def optimal_strategy(p, c, grid, W) -> StrategyPaths:
    theta = optimal_position_path(p, c, grid, W)
    return StrategyPaths(theta, optimal_control_path(p, c, grid, W, theta))


def gatheral_strategy(S0: float) -> Strategy:
    """Gatheral-Schied share schedule converted to cash via theta = q S."""

    def run(p, c, grid, W):
        S = gbm_price_path(S0, p.sigma, W, grid.times)
        q = gatheral_benchmark(p.theta0 / S0, p.kappa, p.T, grid.times, S)
        theta = q * S
        return StrategyPaths(theta, shares_to_cash_control(theta, W, p.sigma, grid.dt))

    return run


def twap_strategy(p, c, grid, W) -> StrategyPaths:
    """Linear-in-time schedule: theta_t = theta0 (1 - t/T) M_t, u_t = -theta0 M_t / T.

    Equivalent to selling the initial share count at a constant rate.
    """
    M = _martingale(p, W, grid.times)
    theta = p.theta0 * (1.0 - grid.times / p.T) * M
    theta[..., -1] = 0.0
    return StrategyPaths(theta, -p.theta0 / p.T * M)


def idle_strategy(p, c, grid, W) -> StrategyPaths:
    """Never trade: u = 0, theta = theta0 M_t."""
    theta = p.theta0 * _martingale(p, W, grid.times)
    return StrategyPaths(theta, np.zeros_like(theta))


def _trapezoid(y, dt):
    return dt * (y[..., 1:].sum(axis=-1) + y[..., :-1].sum(axis=-1)) * 0.5


def path_objective(p: ModelParams, grid: TimeGrid, theta: np.ndarray, u: np.ndarray,
                   alpha: Optional[np.ndarray] = None) -> np.ndarray:
    """Realised objective per path, trapezoid in time.

    Raises:
        AdmissibilityError: a = inf but some terminal position is non-zero.
    """
    running = -(0.5 * p.lam * u ** 2 + 0.5 * p.kappa * p.sigma ** 2 * theta ** 2)
    if alpha is not None:
        running = running + alpha * theta
    value = _trapezoid(running, grid.dt)
    terminal = theta[..., -1]
    if p.a_is_infinite:
        if np.any(terminal != 0):
            raise AdmissibilityError("strategy leaves a non-zero terminal position with a = inf")
    else:
        value = value - 0.5 * p.a * terminal ** 2
    return value


@dataclass
class MCResult:
    mean: float
    std_error: float
    values: np.ndarray

    def __iter__(self):
        yield self.mean
        yield self.std_error


def objective_mc(p: ModelParams, c: CoefBundle, grid: TimeGrid, strategy: Strategy, n_paths: int,
                 master_seed: int, drift: Optional[DriftSpec] = None, batch: int = 2000,
                 start: int = 0) -> MCResult:
    """Monte-Carlo estimate of the objective for ``strategy``.

    Using the same ``master_seed`` for two strategies gives common random
    numbers; ``values`` keeps the per-path objectives for paired comparisons.
    """
    alpha = None
    if drift is not None and not drift.is_zero:
        alpha, _ = drift.on_grid(grid.times, p.T)
    values = np.empty(n_paths)
    for lo in range(0, n_paths, batch):
        hi = min(lo + batch, n_paths)
        W = sample_brownian_paths(grid, master_seed, hi - lo, start=start + lo)
        sp = strategy(p, c, grid, W)
        values[lo:hi] = path_objective(p, grid, sp.theta, sp.u, alpha)
    mean = float(values.mean())
    se = float(values.std(ddof=1) / math.sqrt(n_paths)) if n_paths > 1 else math.nan
    return MCResult(mean, se, values)
