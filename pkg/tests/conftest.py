import numpy as np
import pytest

from cnpick.kernels import KernelSpec

CNP_SPECS = [
    KernelSpec("szego"),
    KernelSpec("power", t=0.5),
    KernelSpec("dirichlet"),
    KernelSpec("drury_arveson", d=2),
    KernelSpec("kaluza", alpha=1.0),
]

_LINES = []


def ball_points(rng, n, d=1, radius=0.9):
    """``n`` points uniform in the ball of the given radius in C^d."""
    g = rng.normal(size=(n, d)) + 1j * rng.normal(size=(n, d))
    g /= np.linalg.norm(g, axis=1)[:, None]
    return radius * g * rng.random((n, 1)) ** (1.0 / (2 * d))


def disc_values(rng, n, radius=1.0):
    return radius * np.sqrt(rng.random(n)) * np.exp(2j * np.pi * rng.random(n))


def record(line):
    """Queue a line for the end-of-run acceptance summary."""
    _LINES.append(line)
    print(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in _LINES:
            terminalreporter.write_line(line)
