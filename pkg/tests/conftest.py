import numpy as np
import pytest

from metasmooth.bench import BenchmarkConfig, run_benchmark

# Criterion lines recorded by test_acceptance, printed after the run.
ACCEPTANCE_LINES = {}


def rel_fro(a, b):
    return float(np.linalg.norm(np.asarray(a) - np.asarray(b)) / np.linalg.norm(b))


def random_pd(n, rng, scale=1.0):
    A = rng.standard_normal((n, n))
    return scale * (A @ A.T + 0.5 * n * np.eye(n))


def simulate_ma1(psi, sigma, T, rng):
    """x_t = v_t - psi v_{t-1} with a stationary start."""
    v = rng.standard_normal(T + 1) * np.sqrt(sigma)
    return v[1:] - psi * v[:-1]


@pytest.fixture(scope="session")
def meta_sweep():
    """META on every preset at T in {200, 400, 1000}, 100 replications."""
    cfg = BenchmarkConfig(models=[1, 2, 3, 4], sample_sizes=[200, 400, 1000], replications=100,
                          estimators=["meta"], master_seed=20240611, jobs=1)
    return run_benchmark(cfg)


@pytest.fixture(scope="session")
def ml_sweep():
    """Paired META/ML runs on Models 1 and 2 at T = 1000."""
    cfg = BenchmarkConfig(models=[1, 2], sample_sizes=[1000], replications=100,
                          estimators=["meta", "ml"], master_seed=20240611, jobs=1)
    return run_benchmark(cfg)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
