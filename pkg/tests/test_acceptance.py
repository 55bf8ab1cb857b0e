"""Acceptance criteria at their stated tolerances and runtime budgets.

Each test records one PASS/FAIL line, printed in the terminal summary.
"""

import contextlib
import json
import math
import time

import numpy as np
import pytest
from scipy.integrate import quad

from liquidex import ModelParams, characteristic_roots, gamma_rate, integrated_gamma, nu_offset
from liquidex.experiments import resolve_config, run
from liquidex.multi_asset import MultiAssetParams, solve_feedback_gain
from liquidex.oracle import binomial_tree_dp, gain_convergence_report, matrix_riccati, scalar_riccati
from liquidex.paths import (
    TimeGrid,
    gatheral_benchmark,
    gatheral_strategy,
    objective_mc,
    optimal_position_path,
    optimal_strategy,
    sample_brownian_paths,
    simulate_optimal,
    twap_strategy,
)

from conftest import ACCEPTANCE_LINES

CANON = dict(lam=0.2, kappa=0.2, sigma=0.1, T=20.0)
S0, Q0 = 100.0, 1000.0


@contextlib.contextmanager
def criterion(number, title, budget):
    """Run a criterion body, enforce its runtime budget and record the outcome."""
    start = time.perf_counter()
    detail = {}
    try:
        yield detail
        elapsed = time.perf_counter() - start
        assert elapsed < budget, f"runtime {elapsed:.2f}s exceeds {budget}s"
    except BaseException as exc:
        elapsed = time.perf_counter() - start
        ACCEPTANCE_LINES.append(f"criterion {number}: FAIL {title} ({elapsed:.2f}s) {exc}".splitlines()[0])
        raise
    extra = " ".join(f"{k}={v}" for k, v in detail.items())
    ACCEPTANCE_LINES.append(f"criterion {number}: PASS {title} ({elapsed:.2f}s) {extra}".rstrip())


def draw_params(rng, theta0=1.0):
    return ModelParams(lam=float(rng.uniform(0.01, 5)), kappa=float(rng.uniform(0.01, 5)),
                       sigma=float(rng.uniform(0.01, 1.0)), T=float(rng.uniform(0.5, 50)), theta0=theta0)


def test_criterion_01_root_identities():
    with criterion(1, "root identities", 1.0) as d:
        rng = np.random.default_rng(101)
        worst = 0.0
        for _ in range(1000):
            p = draw_params(rng)
            c = characteristic_roots(p)
            s = abs((c.gamma1 + c.gamma2) / -p.sigma ** 2 - 1)
            m = abs((c.gamma1 * c.gamma2) / (-p.kappa * p.sigma ** 2 / p.lam) - 1)
            worst = max(worst, s, m)
        d["worst_rel"] = f"{worst:.2e}"
        assert worst < 1e-12


def test_criterion_02_integrated_gain_vs_quadrature():
    with criterion(2, "integrated gain vs quadrature", 10.0) as d:
        rng = np.random.default_rng(202)
        configs = [ModelParams(**CANON)] + [draw_params(rng) for _ in range(100)]
        worst = 0.0
        for p in configs:
            c = characteristic_roots(p)
            for frac in (0.05, 0.25, 0.5, 0.75, 0.9, 0.99):
                t = frac * p.T
                ref, _ = quad(lambda s: gamma_rate(c, s), 0.0, t, epsabs=0, epsrel=1e-13, limit=200)
                worst = max(worst, abs(integrated_gamma(c, 0.0, t) / ref - 1))
        d["worst_rel"] = f"{worst:.2e}"
        assert worst < 1e-8


def test_criterion_03_pole_law():
    with criterion(3, "pole law", 1.0) as d:
        c = characteristic_roots(ModelParams(**CANON))
        eps = 1e-6
        r = abs(eps * gamma_rate(c, c.T - eps) + 1)
        d["residual"] = f"{r:.2e}"
        assert r < 1e-4


def test_criterion_04_terminal_liquidation():
    with criterion(4, "terminal liquidation", 10.0) as d:
        p = ModelParams(**CANON, theta0=S0 * Q0)
        c = characteristic_roots(p)
        g = TimeGrid(p.T, 1000)
        worst_end, min_inner = 0.0, math.inf
        for start in range(0, 10_000, 2000):
            W = sample_brownian_paths(g, 404, 2000, start=start)
            th = optimal_position_path(p, c, g, W)
            worst_end = max(worst_end, float(np.abs(th[:, -1]).max()))
            min_inner = min(min_inner, float(th[:, :-1].min()))
        d["max_abs_theta_T"] = worst_end
        assert worst_end <= 1e-10 * abs(p.theta0)
        assert min_inner > 0


def test_criterion_05_oracle_convergence():
    with criterion(5, "oracle gain convergence", 30.0) as d:
        p = ModelParams(**CANON)
        rows = gain_convergence_report(p, [500, 1000, 2500, 5000], a=1e8)
        errs = [r.max_rel_error for r in rows]
        d["errors"] = ",".join(f"{e:.3e}" for e in errs)
        assert errs[-1] < 0.01
        assert all(e2 < e1 for e1, e2 in zip(errs, errs[1:]))


def test_criterion_06_drift_offset():
    with criterion(6, "drift offset vs affine oracle", 30.0) as d:
        p = ModelParams(**CANON)
        c = characteristic_roots(p)
        sol = scalar_riccati(p, 5000, alpha=lambda t: np.full_like(t, 0.05), a=1e8)
        nu0 = nu_offset(c, p, 0.0, 0.05, 0.05)
        rel = abs(sol.h[0] - nu0) / abs(nu0)
        d["rel_error"] = f"{rel:.2e}"
        assert rel < 0.01


def test_criterion_07_tree_vs_riccati():
    with criterion(7, "binomial tree vs Riccati", 30.0) as d:
        rng = np.random.default_rng(707)
        worst = 0.0
        for _ in range(50):
            p = ModelParams(lam=float(rng.uniform(0.05, 2)), kappa=float(rng.uniform(0.05, 2)),
                            sigma=float(rng.uniform(0.02, 0.6)), T=float(rng.uniform(0.5, 5)),
                            theta0=float(rng.uniform(-2, 2)), a=float(rng.uniform(0.1, 100)))
            drift = float(rng.uniform(-0.1, 0.1))
            alpha = lambda t, v=drift: np.full_like(t, v)
            for depth in range(1, 13):
                tree = binomial_tree_dp(p, depth, alpha=alpha).value
                ric = scalar_riccati(p, depth, alpha=alpha).value(p.theta0)
                worst = max(worst, abs(tree - ric) / abs(ric))
        d["worst_rel"] = f"{worst:.2e}"
        assert worst < 1e-12


def test_criterion_08_multi_asset_reduction():
    with criterion(8, "multi-asset reduction", 60.0) as d:
        c = characteristic_roots(ModelParams(**CANON))
        one = MultiAssetParams([0.1], [[1.0]], 0.2, 0.2, 20.0, a=1e8)
        red = max(abs(solve_feedback_gain(one, t).G[0, 0] / gamma_rate(c, t) - 1)
                  for t in (0.0, 5.0, 10.0, 15.0, 19.0))
        d["n1_rel"] = f"{red:.2e}"
        assert red < 1e-6

        flat = MultiAssetParams([0.1, 0.2], np.eye(2), 0.2, 0.2, 20.0, a=1e6)
        off = max(np.abs(solve_feedback_gain(flat, t).G[[0, 1], [1, 0]]).max() for t in np.linspace(0, 19.9, 50))
        d["rho0_offdiag"] = f"{off:.1e}"
        assert off < 1e-10

        rho = np.array([[1.0, 0.5], [0.5, 1.0]])
        mp = MultiAssetParams([0.1, 0.2], rho, 0.2, 0.2, 20.0, a=1e6)
        G_bvp = solve_feedback_gain(mp, 0.0).G
        G_ric = matrix_riccati([0.1, 0.2], rho, 0.2, 0.2, 20.0, 1e6, 5000).G[0]
        rel = float(np.max(np.abs(G_bvp - G_ric) / np.abs(G_ric)))
        d["n2_vs_riccati"] = f"{rel:.3e}"
        assert rel < 0.01, f"N=2 gain at t=0 differs from matrix Riccati by {rel:.3%} (entrywise max)"


def test_criterion_09_mc_optimality():
    with criterion(9, "Monte-Carlo optimality", 300.0) as d:
        p = ModelParams(**CANON, theta0=S0 * Q0)
        c = characteristic_roots(p)
        g = TimeGrid(p.T, 1000)
        n = 100_000
        opt = objective_mc(p, c, g, optimal_strategy, n, 909).values
        for name, strat in (("twap", twap_strategy), ("gatheral", gatheral_strategy(S0))):
            other = objective_mc(p, c, g, strat, n, 909).values
            pooled = math.sqrt(opt.var(ddof=1) / n + other.var(ddof=1) / n)
            margin = (opt.mean() - other.mean()) / pooled
            d[f"margin_{name}_se"] = f"{margin:.1f}"
            assert margin > 2


def test_criterion_10_figure_shapes(tmp_path):
    with criterion(10, "figure shapes", 60.0) as d:
        for param in ("kappa", "lambda", "sigma"):
            cfg = resolve_config({"model": {"sigma": 0.1}, "sweep": {"parameter": param}})
            if param == "sigma":
                cfg["sweep"]["values"] = [0.1, 0.4]
            checks = {ch.name: ch for ch in run("sweep", cfg, tmp_path / param)}
            if param == "kappa":
                assert checks["det_factor_decreasing_in_kappa"].passed
            elif param == "lambda":
                assert checks["abs_u0_decreasing_in_lambda"].passed
            else:
                w = checks["gatheral_negative_witness_seed"]
                assert w.passed
                seed = int(w.value)
                d["witness_seed"] = seed
                # the recorded seed reproduces the sign change on its own
                p = ModelParams(lam=0.2, kappa=0.2, sigma=0.4, T=20.0, theta0=S0 * Q0)
                g = TimeGrid(p.T, cfg["grid"]["n_steps"])
                b = simulate_optimal(p, characteristic_roots(p), g, S0, seed)
                q_g = gatheral_benchmark(Q0, p.kappa, p.T, g.times, b.S)
                assert q_g.min() < 0 and b.q[:-1].min() > 0


def test_criterion_11_determinism(tmp_path):
    with criterion(11, "oracle-check determinism", 120.0):
        outputs = []
        for workers, name in ((1, "serial"), (4, "parallel")):
            cfg = resolve_config({})
            cfg["workers"] = workers
            run("oracle-check", cfg, tmp_path / name)
            outputs.append(tmp_path / name)
        m1 = json.loads((outputs[0] / "manifest.json").read_text())
        m2 = json.loads((outputs[1] / "manifest.json").read_text())
        assert m1 == m2
        for f in m1["files"]:
            assert (outputs[0] / f).read_bytes() == (outputs[1] / f).read_bytes(), f
