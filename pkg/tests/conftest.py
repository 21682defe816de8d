import numpy as np
import pytest

from narrowescape.geometry import HeadDomain
from narrowescape.neumann import NeumannKernel

ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(ACCEPTANCE):
        terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def disk_kernel():
    return NeumannKernel(HeadDomain.unit_disk())


@pytest.fixture(scope="session")
def ellipse_kernel():
    return NeumannKernel(HeadDomain.ellipse(2.0, 1.0))


@pytest.fixture(scope="session")
def star_kernel():
    return NeumannKernel(HeadDomain.star(0.2, 3))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
