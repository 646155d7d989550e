import math

import numpy as np
import pytest

from mbas.systems import build_system


def dense_A(s):
    """Complex block matrix assembled entry by entry from M and K."""
    M, K = s.M.to_dense(), s.K.to_dense()
    sn, w = math.sqrt(s.nu), s.omega
    return np.block([[M, sn * (K - 1j * w * M)], [sn * (K + 1j * w * M), -M]])


def dense_Areal(s):
    M, K = s.M.to_dense(), s.K.to_dense()
    sn, w = math.sqrt(s.nu), s.omega
    Z = np.zeros_like(M)
    return np.block([
        [M, Z, sn * K, w * sn * M],
        [Z, M, -w * sn * M, sn * K],
        [sn * K, -w * sn * M, -M, Z],
        [w * sn * M, sn * K, Z, -M],
    ])


def crandn(rng, n):
    return rng.standard_normal(n) + 1j * rng.standard_normal(n)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def small():
    """k=2 bundle at a mid-range parameter pair."""
    return build_system(2, 1e-4, 10.0)


# acceptance lines are gathered here and echoed after the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
