import numpy as np
import pytest

from coopcast.channel_model import NetworkConfig


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def paper_cfg():
    """Baseline cell: N=5, R=2, alpha=2, 1 bit/s/Hz, 3 dB."""
    return NetworkConfig.from_snr_db(3.0, n_nodes=5, radius=2.0)


def uniform_disk(n, radius, rng):
    """Independent of the package sampler: polar inverse-CDF in the plane."""
    r = radius * np.sqrt(rng.random(n))
    phi = rng.uniform(0.0, 2.0 * np.pi, n)
    return np.column_stack([r * np.cos(phi), r * np.sin(phi)])


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
