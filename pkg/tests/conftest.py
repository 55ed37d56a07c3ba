import numpy as np
import pytest

from fkea.io import MixtureSpec, gen_mixture

ACCEPTANCE_LINES = []


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def two_clusters():
    spec = MixtureSpec(t=2, n_per_cluster=100, d=2, center_separation=50.0, cluster_std=1.0, seed=7)
    return gen_mixture(spec)


@pytest.fixture
def acceptance_log():
    def log(criterion, passed, detail):
        line = f"[{'PASS' if passed else 'FAIL'}] criterion {criterion}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)

    return log


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
