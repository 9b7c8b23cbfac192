import numpy as np
import pytest

from coarse_medial.geometry import SiteSet

ACCEPTANCE_LINES = []


def random_rotation(rng, k):
    q, r = np.linalg.qr(rng.standard_normal((k, k)))
    return q * np.sign(np.diag(r))


def random_scene(rng, k, n_lo=10, n_hi=200):
    n = int(rng.integers(n_lo, n_hi + 1))
    return SiteSet(rng.random((n, k)))


def point_near_axis(rng, K, jitter=0.01):
    """A point on the bisector of its two nearest sites, optionally jittered."""
    x = rng.random(K.dim)
    _, idx = K.tree.query(x, k=2)
    a, b = K.sites[idx]
    nrm = (b - a) / np.linalg.norm(b - a)
    x = x - np.dot(x - 0.5 * (a + b), nrm) * nrm
    if rng.random() < 0.5:
        x = x + jitter * rng.standard_normal(K.dim)
    return x


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def two_points():
    return SiteSet([[-1.0, 0.0], [1.0, 0.0]])


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
