import numpy as np
import pytest

from multihardy.geometry import Ball, HalfSpace, pole_metrics


def circle_poles(n, radius=1.0):
    t = 2 * np.pi * np.arange(n) / n
    return np.c_[radius * np.cos(t), radius * np.sin(t)]


def triangle_3d(scale=1.0):
    s = np.sqrt(3) / 2
    return scale * np.array([[1.0, 0, 0], [-0.5, s, 0], [-0.5, -s, 0]])


@pytest.fixture
def unit_disc():
    return Ball(np.zeros(2), 1.0)


@pytest.fixture
def unit_ball():
    return Ball(np.zeros(3), 1.0)


@pytest.fixture
def disc_tripole(unit_disc):
    return pole_metrics(unit_disc, circle_poles(3))


@pytest.fixture
def ball_bipole(unit_ball):
    return pole_metrics(unit_ball, [[0.4, 0, 0], [-0.4, 0, 0]])


@pytest.fixture
def halfplane_tripole():
    return pole_metrics(HalfSpace(2), [[-1.0, 0], [0, 0], [1.0, 0]])


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for k in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[k])
