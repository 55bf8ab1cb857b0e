import numpy as np
import pytest

from liquidex import ModelParams, characteristic_roots


@pytest.fixture
def canon():
    """Canonical parameter set: S0=100, q0=1000, T=20, lam=kappa=0.2, sigma=0.1."""
    p = ModelParams(lam=0.2, kappa=0.2, sigma=0.1, T=20.0, theta0=1e5)
    return p, characteristic_roots(p)


def random_params(rng, n, theta0=1.0):
    out = []
    for _ in range(n):
        out.append(ModelParams(lam=float(rng.uniform(0.01, 5)), kappa=float(rng.uniform(0.01, 5)),
                               sigma=float(rng.uniform(0.01, 1.0)), T=float(rng.uniform(0.5, 50)),
                               theta0=theta0))
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
