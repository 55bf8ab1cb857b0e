"""
Portfolio liquidation: the N-asset linear ODE boundary-value system.

For asset i, with v^i the (conditional) control, z^i its position and
z^{i,j} (j != i) the cross terms, the system is

    v^i'     = (kappa sigma_i^2 / lam) z^i + (kappa / lam) sum_{j != i} rho_ij sigma_i sigma_j z^{i,j}
    z^i'     = sigma_i^2 z^i + v^i
    z^{i,j}' = sigma_i sigma_j rho_ij z^{i,j} + v^j

with v^i(T) = -(a/lam) z^i(T), z^i(t0) = theta^i, z^{i,j}(t0) = theta^j.
Because everything is linear in theta(t0), v(t0) = G(t0) theta(t0) for a
gain matrix G obtained from one matrix exponential and an N x N solve.

Packed state layout (dimension N^2 + N):
    [0, N)        v^0 .. v^{N-1}
    [N, 2N)       z^0 .. z^{N-1}
    [2N, N^2+N)   z^{i,j} for i = 0..N-1, then j = 0..N-1 skipping j = i
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.linalg

from .errors import ConditioningError, DomainError, InputError, NumericError, ParameterError
from .paths import TimeGrid, path_rng

__all__ = [
    "MultiAssetParams",
    "OdeState",
    "GainMatrix",
    "cross_index",
    "build_system_matrix",
    "matrix_exponential",
    "solve_feedback_gain",
    "gain_schedule",
    "bvp_trajectory",
    "first_order_residual",
    "correlated_increments",
    "simulate_multi",
    "feedback_objective",
]

COND_LIMIT = 1e12


@dataclass(frozen=True)
class MultiAssetParams:
    sigma: np.ndarray
    rho: np.ndarray
    lam: float
    kappa: float
    T: float
    a: Optional[float] = None
    theta0: Optional[np.ndarray] = None

    def __post_init__(self):
        sigma = np.atleast_1d(np.asarray(self.sigma, dtype=float))
        N = sigma.size
        rho = np.asarray(self.rho, dtype=float).reshape(N, N) if np.size(self.rho) == N * N else None
        if rho is None:
            raise ParameterError(f"rho must be {N}x{N}")
        if np.any(sigma <= 0) or not np.all(np.isfinite(sigma)):
            raise ParameterError("every sigma_i must be positive")
        if not np.allclose(rho, rho.T, atol=1e-14):
            raise ParameterError("rho must be symmetric")
        if not np.allclose(np.diag(rho), 1.0, atol=1e-14):
            raise ParameterError("rho must have a unit diagonal")
        if np.any(np.abs(rho) > 1):
            raise ParameterError("correlations must lie in [-1, 1]")
        for name in ("lam", "kappa", "T"):
            if not getattr(self, name) > 0:
                raise ParameterError(f"{name} must be positive")
        a = 1e8 * self.lam / self.T if self.a is None else float(self.a)
        if not (math.isfinite(a) and a > 0):
            raise ParameterError("a must be positive and finite")
        try:
            np.linalg.cholesky(np.outer(sigma, sigma) * rho)
        except np.linalg.LinAlgError:
            raise ParameterError("covariance matrix is singular or not positive definite") from None
        theta0 = np.zeros(N) if self.theta0 is None else np.asarray(self.theta0, dtype=float).reshape(N)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "theta0", theta0)

    @property
    def N(self) -> int:
        return self.sigma.size

    @property
    def covariance(self) -> np.ndarray:
        return np.outer(self.sigma, self.sigma) * self.rho

    def permuted(self, perm: Sequence[int]) -> "MultiAssetParams":
        perm = np.asarray(perm)
        return MultiAssetParams(self.sigma[perm], self.rho[np.ix_(perm, perm)], self.lam, self.kappa,
                                self.T, self.a, self.theta0[perm])


def cross_index(N: int, i: int, j: int) -> int:
    """Packed position of z^{i,j} (j != i)."""
    if i == j:
        raise InputError("z^{i,i} is z^i and is not stored separately")
    return 2 * N + i * (N - 1) + (j if j < i else j - 1)


@dataclass
class OdeState:
    v: np.ndarray
    z: np.ndarray
    zx: np.ndarray  # (N, N - 1), row i lists z^{i,j} for j != i in increasing j

    @property
    def N(self) -> int:
        return self.v.size

    def pack(self) -> np.ndarray:
        return np.concatenate([self.v, self.z, self.zx.ravel()])

    @classmethod
    def unpack(cls, x: np.ndarray, N: int) -> "OdeState":
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != N * N + N:
            raise InputError(f"packed state must have length {N * N + N}")
        return cls(v=x[:N].copy(), z=x[N:2 * N].copy(), zx=x[2 * N:].reshape(N, N - 1).copy())


@dataclass
class GainMatrix:
    t: float
    G: np.ndarray
    condition: float = field(default=1.0)


def build_system_matrix(mp: MultiAssetParams) -> np.ndarray:
    """Constant coefficient matrix M of X' = M X for the packed state."""
    N = mp.N
    s, rho = mp.sigma, mp.rho
    M = np.zeros((N * N + N, N * N + N))
    k = mp.kappa / mp.lam
    for i in range(N):
        M[i, N + i] = k * s[i] ** 2
        M[N + i, N + i] = s[i] ** 2
        M[N + i, i] = 1.0
        for j in range(N):
            if j == i:
                continue
            col = cross_index(N, i, j)
            M[i, col] = k * rho[i, j] * s[i] * s[j]
            M[col, col] = s[i] * s[j] * rho[i, j]
            M[col, j] = 1.0
    return M


def matrix_exponential(M: np.ndarray, s: float = 1.0) -> np.ndarray:
    """exp(M s) by scaling and squaring with a Pade kernel.

    Raises:
        NumericError: if the input is not finite or the result overflows.
    """
    A = np.asarray(M, dtype=float) * s
    if not np.all(np.isfinite(A)):
        raise NumericError("matrix exponential of a non-finite matrix")
    norm = float(np.linalg.norm(A, 1))
    with np.errstate(over="ignore", invalid="ignore"):
        E = scipy.linalg.expm(A)
    if not np.all(np.isfinite(E)):
        raise NumericError(f"matrix exponential overflowed: ||M s||_1 = {norm:.3e}")
    return E


def _boundary_parts(mp: MultiAssetParams):
    N = mp.N
    # rows pick v(T) + (a/lam) z(T), scaled so both blocks are O(1)
    scale = 1.0 / (1.0 + mp.a / mp.lam)
    L = np.zeros((N, N * N + N))
    L[:, :N] = np.eye(N) * scale
    L[:, N:2 * N] = np.eye(N) * (mp.a / mp.lam) * scale
    # theta(t0) -> (z, zx)(t0)
    B = np.zeros((N * N, N))
    B[:N] = np.eye(N)
    for i in range(N):
        for j in range(N):
            if j != i:
                B[cross_index(N, i, j) - N, j] = 1.0
    return L, B


def _solve_gain(mp, E, L, B, t0):
    N = mp.N
    LE = L @ E
    A = LE[:, :N]
    rhs = LE[:, N:] @ B
    cond = float(np.linalg.cond(A)) if N > 1 else 1.0
    if not math.isfinite(cond) or cond > COND_LIMIT:
        raise ConditioningError(f"reduced boundary system at t0={t0} is ill-conditioned", cond)
    return GainMatrix(t=float(t0), G=-np.linalg.solve(A, rhs), condition=cond)


def solve_feedback_gain(mp: MultiAssetParams, t0: float, M: Optional[np.ndarray] = None) -> GainMatrix:
    """Gain G(t0) with u(t0) = G(t0) theta(t0).

    Propagates the packed state with E = exp(M (T - t0)), imposes
    v(T) + (a/lam) z(T) = 0 and solves the N x N system for v(t0) against
    each unit vector theta(t0) = e_k at once.

    Raises:
        ConditioningError: when the reduced system's condition number exceeds 1e12.
    """
    if not 0 <= t0 <= mp.T:
        raise DomainError(f"t0 must lie in [0, {mp.T}]")
    M = build_system_matrix(mp) if M is None else M
    L, B = _boundary_parts(mp)
    return _solve_gain(mp, matrix_exponential(M, mp.T - t0), L, B, t0)


def gain_schedule(mp: MultiAssetParams, times: np.ndarray) -> np.ndarray:
    """G(t) at each time, shape (len(times), N, N). Reuses M and the boundary maps."""
    M = build_system_matrix(mp)
    L, B = _boundary_parts(mp)
    out = np.empty((len(times), mp.N, mp.N))
    for k, t in enumerate(times):
        if not 0 <= t <= mp.T:
            raise DomainError(f"time {t} outside [0, {mp.T}]")
        out[k] = _solve_gain(mp, matrix_exponential(M, mp.T - t), L, B, t).G
    return out


def bvp_trajectory(mp: MultiAssetParams, t0: float, theta: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Packed state X(s) for s >= t0 of the boundary-value solution started at theta."""
    theta = np.asarray(theta, dtype=float).reshape(mp.N)
    M = build_system_matrix(mp)
    G = solve_feedback_gain(mp, t0, M).G
    L, B = _boundary_parts(mp)
    X0 = np.concatenate([G @ theta, B @ theta])
    return np.stack([matrix_exponential(M, si - t0) @ X0 for si in np.atleast_1d(s)])


def first_order_residual(mp: MultiAssetParams, t0: float, theta: np.ndarray, n_quad: int = 4001) -> float:
    """Max violation of the integral optimality condition along the BVP solution.

    Checks, for s on a fine grid in [t0, T],

        v^i(s) + (kappa sigma_i^2/lam) int_s^T z^i + (kappa/lam) sum_j rho_ij sigma_i sigma_j int_s^T z^{i,j}
               + (a/lam) z^i(T) = 0

    using Simpson-accurate cumulative integrals. Returned relative to the
    largest term.
    """
    N = mp.N
    s = np.linspace(t0, mp.T, n_quad)
    X = bvp_trajectory(mp, t0, theta, s)
    k = mp.kappa / mp.lam
    # weights w[:, c] so that drift_i = sum_c w[i, c] X[:, c]
    W = np.zeros((N, N * N + N))
    for i in range(N):
        W[i, N + i] = k * mp.sigma[i] ** 2
        for j in range(N):
            if j != i:
                W[i, cross_index(N, i, j)] = k * mp.rho[i, j] * mp.sigma[i] * mp.sigma[j]
    f = X @ W.T  # (n_quad, N)
    tail = _reverse_cumulative_simpson(f, s)
    terminal = (mp.a / mp.lam) * X[-1, N:2 * N]
    resid = X[:, :N] + tail + terminal
    scale = max(np.abs(X[:, :N]).max(), np.abs(tail).max(), np.abs(terminal).max(), 1e-300)
    return float(np.abs(resid).max() / scale)


def _reverse_cumulative_simpson(f, s):
    from scipy.integrate import cumulative_simpson

    cum = cumulative_simpson(f, x=s, axis=0, initial=0.0)
    return cum[-1] - cum


def correlated_increments(grid: TimeGrid, rho: np.ndarray, master_seed: int, n_paths: int,
                          start: int = 0) -> np.ndarray:
    """Brownian increments with correlation rho, shape (n_paths, n_steps, N).

    Uses the lower Cholesky factor of rho on independent normals; path ``i``
    draws from its own stream.
    """
    Lc = np.linalg.cholesky(np.asarray(rho, dtype=float))
    N = Lc.shape[0]
    out = np.empty((n_paths, grid.n_steps, N))
    sq = math.sqrt(grid.dt)
    for row, idx in enumerate(range(start, start + n_paths)):
        Z = path_rng(master_seed, idx).standard_normal((grid.n_steps, N))
        out[row] = Z @ Lc.T * sq
    return out


def simulate_multi(mp: MultiAssetParams, grid: TimeGrid, gains: np.ndarray, dW: np.ndarray):
    """Euler-Maruyama: theta_{k+1} = theta_k + G(t_k) theta_k dt + sigma o theta_k o dW_k.

    Args:
        gains: (n_steps, N, N) or (n_steps + 1, N, N); only the first n_steps are used.
        dW: (n_paths, n_steps, N) correlated increments.

    Returns:
        (theta, u) with shapes (n_paths, n_steps + 1, N); u at the final point
        uses the last gain entry when ``gains`` has n_steps + 1 rows, else NaN.
    """
    gains = np.asarray(gains, dtype=float)
    dW = np.asarray(dW, dtype=float)
    n, N = grid.n_steps, mp.N
    if gains.shape[0] not in (n, n + 1) or gains.shape[1:] != (N, N):
        raise InputError(f"gain schedule shape {gains.shape} does not match grid ({n} steps, N={N})")
    if dW.ndim != 3 or dW.shape[1:] != (n, N):
        raise InputError(f"increment shape {dW.shape} does not match grid ({n} steps, N={N})")
    theta = np.empty((dW.shape[0], n + 1, N))
    u = np.empty_like(theta)
    theta[:, 0] = mp.theta0
    for k in range(n):
        u[:, k] = theta[:, k] @ gains[k].T
        theta[:, k + 1] = theta[:, k] + u[:, k] * grid.dt + mp.sigma * theta[:, k] * dW[:, k]
    u[:, n] = theta[:, n] @ gains[n].T if gains.shape[0] == n + 1 else np.nan
    return theta, u


def feedback_objective(mp: MultiAssetParams, grid: TimeGrid, gains: np.ndarray) -> float:
    """Exact expected objective of the linear feedback u = G(t) theta, by second moments.

    Q = E[theta theta'] solves Q' = G Q + Q G' + Sigma o Q; the running reward is
    -(lam/2) tr(G Q G') - (kappa/2) tr(Sigma Q), plus -(a/2) tr Q(T). G is held
    piecewise constant on the grid and Q is propagated exactly on each step
    through the vectorised linear operator. With a large penalty the grid
    must resolve the steep gain near T, or the residual terminal position
    dominates the value.
    """
    N = mp.N
    S = mp.covariance
    eye = np.eye(N)
    Q = np.outer(mp.theta0, mp.theta0)
    total = 0.0
    dt = grid.dt
    for k in range(grid.n_steps):
        G = gains[k]
        # vec(G Q + Q G' + S o Q) = (I (x) G + G (x) I + diag(vec S)) vec Q
        A = np.kron(eye, G) + np.kron(G, eye) + np.diag(S.ravel(order="F"))
        # augment with the running reward so one exponential integrates both
        r = -(0.5 * mp.lam * (G.T @ G) + 0.5 * mp.kappa * S).ravel(order="F")
        aug = np.zeros((N * N + 1, N * N + 1))
        aug[:N * N, :N * N] = A
        aug[N * N, :N * N] = r
        y = np.concatenate([Q.ravel(order="F"), [0.0]])
        y = scipy.linalg.expm(aug * dt) @ y
        Q = y[:N * N].reshape(N, N, order="F")
        total += y[-1]
    return float(total - 0.5 * mp.a * np.trace(Q))
