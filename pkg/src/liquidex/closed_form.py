"""
Closed-form optimal liquidation in cash under geometric Brownian motion.

The trader holds a dollar position theta and trades at rate u (dollars per
unit time):

    d theta = u dt + sigma * theta dW

and maximises

    E[ int_0^T alpha_t theta_t - (lam/2) u^2 - (kappa sigma^2/2) theta^2 dt
       - (a/2) theta_T^2 ]

in the limit a -> infinity. The optimal control is affine in the position,
u* = Gamma(t) theta + nu(t), with

    D(t)     = exp(g1 t + g2 T) - exp(g1 T + g2 t)
    Gamma(t) = D'(t) / D(t)

where g1 < 0 < g2 are the roots of g^2 + sigma^2 g - kappa sigma^2 / lam = 0.

Everything here is evaluated through log D so that neither large horizons
nor the pole at t = T produce overflow or cancellation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import DomainError, InputError, ParameterError, PoleError

__all__ = [
    "ModelParams",
    "CoefBundle",
    "DriftSpec",
    "characteristic_roots",
    "denominator_D",
    "log_denominator",
    "denominator_derivative",
    "beta_inf",
    "gamma_rate",
    "integrated_gamma",
    "position_factor",
    "nu_offset",
    "optimal_control",
    "expected_control_and_z",
]

INFINITE = math.inf


@dataclass(frozen=True)
class ModelParams:
    """Single-asset market, cost and risk parameters.

    ``a = math.inf`` (the default) selects the liquidation-constrained limit.
    """

    lam: float
    kappa: float
    sigma: float
    T: float
    theta0: float = 0.0
    a: float = INFINITE

    def __post_init__(self):
        for name in ("lam", "kappa", "sigma", "T"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ParameterError(f"{name} must be a positive finite number, got {value!r}")
        if not math.isfinite(self.theta0):
            raise ParameterError(f"theta0 must be finite, got {self.theta0!r}")
        if math.isnan(self.a) or self.a <= 0:
            raise ParameterError(f"a must be positive or math.inf, got {self.a!r}")

    @property
    def a_is_infinite(self) -> bool:
        return math.isinf(self.a)


@dataclass(frozen=True)
class CoefBundle:
    """Characteristic roots and discriminant, plus the horizon they refer to."""

    gamma1: float
    gamma2: float
    delta: float
    T: float

    @property
    def spread(self) -> float:
        """gamma2 - gamma1 = sqrt(delta)."""
        return self.gamma2 - self.gamma1

    @property
    def sigma2(self) -> float:
        """sigma^2 recovered from the root sum."""
        return -(self.gamma1 + self.gamma2)


def characteristic_roots(p: ModelParams) -> CoefBundle:
    """Roots of g^2 + sigma^2 g - kappa sigma^2 / lam = 0.

    Raises:
        ParameterError: if the parameters are invalid.
    """
    if not isinstance(p, ModelParams):
        raise ParameterError("expected ModelParams")
    s2 = p.sigma ** 2
    delta = s2 * (s2 + 4.0 * p.kappa / p.lam)
    root = math.sqrt(delta)
    gamma1 = (-s2 - root) / 2.0
    # product / gamma1 avoids cancellation in (-s2 + root) when kappa/lam is tiny
    gamma2 = (-p.kappa * s2 / p.lam) / gamma1
    return CoefBundle(gamma1=gamma1, gamma2=gamma2, delta=delta, T=p.T)


def _check_time(c: CoefBundle, t, allow_T=True):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0) or np.any(t > c.T) or np.any(~np.isfinite(t)):
        raise DomainError(f"time must lie in [0, {c.T}]")
    if not allow_T and np.any(t == c.T):
        raise PoleError(f"evaluation at the horizon T={c.T} hits the pole of D(t)^-1")
    return t


def _scalar_or_array(x):
    return float(x) if np.ndim(x) == 0 else x


def _log1mexp(x):
    """log(1 - exp(-x)) for x >= 0, accurate at both ends."""
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore"):
        small = np.log(-np.expm1(-np.minimum(x, math.log(2.0))))
        large = np.log1p(-np.exp(-np.maximum(x, math.log(2.0))))
    return np.where(x < math.log(2.0), small, large)


def log_denominator(c: CoefBundle, t):
    """log D(t); returns -inf at t = T."""
    t = _check_time(c, t)
    out = c.gamma1 * t + c.gamma2 * c.T + _log1mexp(c.spread * (c.T - t))
    return _scalar_or_array(out)


def denominator_D(c: CoefBundle, t):
    """D(t) = exp(g1 t + g2 T) - exp(g1 T + g2 t).

    Positive on [0, T) and exactly zero at T. Computed as
    exp(g1 t + g2 T) * (1 - exp(-(g2 - g1)(T - t))) so the leading factor is
    never the difference of two large exponentials.
    """
    t = _check_time(c, t)
    out = np.exp(c.gamma1 * t + c.gamma2 * c.T) * (-np.expm1(-c.spread * (c.T - t)))
    return _scalar_or_array(out)


def denominator_derivative(c: CoefBundle, t):
    """D'(t) = g1 exp(g1 t + g2 T) - g2 exp(g1 T + g2 t); finite at T."""
    t = _check_time(c, t)
    lead = np.exp(c.gamma1 * t + c.gamma2 * c.T)
    out = lead * (c.gamma1 - c.gamma2 * np.exp(-c.spread * (c.T - t)))
    return _scalar_or_array(out)


def beta_inf(c: CoefBundle, t):
    """1 / D(t). Raises PoleError at t = T."""
    t = _check_time(c, t, allow_T=False)
    return _scalar_or_array(np.exp(-np.asarray(log_denominator(c, t))))


def gamma_rate(c: CoefBundle, t):
    """Feedback gain Gamma(t) = D'(t) / D(t).

    Written as g1 - (g2 - g1) r / (1 - r) with r = exp(-(g2 - g1)(T - t)),
    which makes the -1/(T - t) behaviour near the horizon explicit.

    Raises:
        PoleError: at t = T.
    """
    t = _check_time(c, t, allow_T=False)
    x = c.spread * (c.T - t)
    # r / (1 - r) = 1 / expm1(x); inf for huge x gives the exact limit g1
    with np.errstate(over="ignore"):
        out = c.gamma1 - c.spread / np.expm1(x)
    return _scalar_or_array(out)


def integrated_gamma(c: CoefBundle, t0, t1):
    """int_{t0}^{t1} Gamma(s) ds = log(D(t1) / D(t0)); -inf when t1 = T."""
    t0a = _check_time(c, t0)
    t1a = _check_time(c, t1)
    if np.any(t1a < t0a):
        raise DomainError("integrated_gamma requires t0 <= t1")
    if np.any(t0a == c.T):
        raise PoleError("lower limit at the horizon")
    x0 = c.spread * (c.T - t0a)
    x1 = c.spread * (c.T - t1a)
    out = c.gamma1 * (t1a - t0a) + _log1mexp(x1) - _log1mexp(x0)
    out = np.where(t1a == t0a, 0.0, out)
    return _scalar_or_array(out)


def position_factor(c: CoefBundle, t):
    """Deterministic liquidation factor D(t) / D(0), from 1 at t=0 down to 0 at T."""
    t = _check_time(c, t)
    return _scalar_or_array(np.exp(np.asarray(log_denominator(c, t)) - log_denominator(c, 0.0)))


def nu_offset(c: CoefBundle, p: ModelParams, t, alpha_t, exp_alpha_T):
    """Drift-induced affine term of the optimal control.

    Args:
        c: roots for ``p``.
        p: model parameters.
        t: time(s) in [0, T).
        alpha_t: realised drift at ``t``.
        exp_alpha_T: E^Q[alpha_T | F_t].

    The closed form collapses (using g1 + g2 = -sigma^2) to

        nu = -c_t Gamma(t) - c_T (g2 - g1) exp(-sigma^2 T) / D(t) - alpha_t / kappa

    with c_t = alpha_t / (kappa sigma^2), c_T = exp_alpha_T / (kappa sigma^2).
    """
    t = _check_time(c, t, allow_T=False)
    ks2 = p.kappa * p.sigma ** 2
    ct = np.asarray(alpha_t, dtype=float) / ks2
    cT = np.asarray(exp_alpha_T, dtype=float) / ks2
    tail = c.spread * np.exp(-p.sigma ** 2 * c.T - np.asarray(log_denominator(c, t)))
    out = -ct * gamma_rate(c, t) - cT * tail - np.asarray(alpha_t, dtype=float) / p.kappa
    return _scalar_or_array(out)


def optimal_control(c: CoefBundle, p: ModelParams, t, theta_t, alpha_t=0.0, exp_alpha_T=0.0):
    """u*(t) = theta_t Gamma(t) + nu(t). Raises PoleError at t = T."""
    gain = np.asarray(gamma_rate(c, t))
    out = np.asarray(theta_t, dtype=float) * gain
    if np.any(np.asarray(alpha_t) != 0) or np.any(np.asarray(exp_alpha_T) != 0):
        out = out + np.asarray(nu_offset(c, p, t, alpha_t, exp_alpha_T))
    return _scalar_or_array(out)


def expected_control_and_z(c: CoefBundle, s0: float, theta_s0: float, s):
    """Zero-drift (v, z) pair seen from time s0.

    v(s) = E^Q[u_s | F_s0] and z(s) = E^Q[theta_s | F_s0] under the optimal
    control, for s in [s0, T]:

        z(s) = theta_s0 exp(sigma^2 (s - s0)) D(s) / D(s0)
        v(s) = theta_s0 exp(sigma^2 (s - s0)) D'(s) / D(s0)

    These solve v' = (kappa sigma^2 / lam) z, z' = sigma^2 z + v with
    z(s0) = theta_s0 and z(T) = 0, and v(s0) = Gamma(s0) theta_s0.
    """
    s = _check_time(c, s)
    if np.any(s < s0):
        raise DomainError("s must not precede s0")
    grow = np.exp(c.sigma2 * (s - s0) - log_denominator(c, s0))
    z = theta_s0 * grow * np.asarray(denominator_D(c, s))
    v = theta_s0 * grow * np.asarray(denominator_derivative(c, s))
    return _scalar_or_array(v), _scalar_or_array(z)


@dataclass
class DriftSpec:
    """Price-drift model feeding the affine control term.

    Modes:
        ``zero``: no drift.
        ``deterministic``: ``alpha_fn(t)``; E^Q[alpha_T | F_t] is alpha_fn(T).
        ``scripted``: a realised path ``alpha_path`` on the simulation grid plus
            ``cond_exp_T``, either an array on the same grid or a callable
            ``(t, alpha_t) -> E^Q[alpha_T | F_t]``.
    """

    mode: str = "zero"
    alpha_fn: Optional[Callable[[np.ndarray], np.ndarray]] = None
    alpha_path: Optional[np.ndarray] = None
    cond_exp_T: object = None
    label: str = field(default="", compare=False)

    def __post_init__(self):
        if self.mode not in ("zero", "deterministic", "scripted"):
            raise InputError(f"unknown drift mode {self.mode!r}")
        if self.mode == "deterministic" and self.alpha_fn is None:
            raise InputError("deterministic drift needs alpha_fn")
        if self.mode == "scripted" and (self.alpha_path is None or self.cond_exp_T is None):
            raise InputError("scripted drift needs alpha_path and cond_exp_T")

    @classmethod
    def zero(cls) -> "DriftSpec":
        return cls("zero")

    @classmethod
    def constant(cls, alpha: float) -> "DriftSpec":
        return cls("deterministic", alpha_fn=lambda t: np.full_like(np.asarray(t, dtype=float), alpha),
                   label=f"constant({alpha})")

    @property
    def is_zero(self) -> bool:
        return self.mode == "zero"

    def on_grid(self, times: np.ndarray, T: float):
        """Realised drift and E^Q[alpha_T | F_t] at each grid time."""
        times = np.asarray(times, dtype=float)
        if self.mode == "zero":
            z = np.zeros_like(times)
            return z, z.copy()
        if self.mode == "deterministic":
            alpha = np.asarray(self.alpha_fn(times), dtype=float) * np.ones_like(times)
            end = float(np.asarray(self.alpha_fn(np.array([T]))).ravel()[0])
            return alpha, np.full_like(times, end)
        alpha = np.asarray(self.alpha_path, dtype=float)
        if alpha.shape[-1] != times.size:
            raise InputError(
                f"scripted drift has {alpha.shape[-1]} points, grid has {times.size}")
        if callable(self.cond_exp_T):
            cond = np.asarray(self.cond_exp_T(times, alpha), dtype=float)
        else:
            cond = np.asarray(self.cond_exp_T, dtype=float)
        if cond.shape != alpha.shape:
            raise InputError("cond_exp_T does not match alpha_path")
        return alpha, cond
