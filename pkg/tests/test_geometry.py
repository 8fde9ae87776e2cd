import numpy as np
import pytest

from multihardy.errors import ConfigInvalid, DimensionMismatch, DimensionRestriction, DuplicatePole, MixedPlacement
from multihardy.geometry import Ball, Box, Ellipse2D, ExteriorBall, HalfSpace, boundary_distance, inside, pole_metrics


def test_inside_examples():
    assert inside(Ball(np.zeros(3), 1.0), np.zeros(3))
    assert not inside(HalfSpace(3), [0.3, 0.2, -1.0])
    assert inside(ExteriorBall(np.zeros(3), 1.0), [2.0, 0, 0])


def test_boundary_distance_examples():
    ball = Ball(np.zeros(3), 1.0)
    assert boundary_distance(ball, np.zeros(3)) == pytest.approx(1.0)
    assert boundary_distance(ball, [0.5, 0, 0]) == pytest.approx(0.5)
    assert boundary_distance(HalfSpace(3), [0.1, 0.7, 0.25]) == pytest.approx(0.25)


def test_constructor_validation():
    with pytest.raises(ConfigInvalid):
        Ball(np.zeros(2), 0.0)
    with pytest.raises(ConfigInvalid):
        ExteriorBall(np.zeros(2), -1.0)
    with pytest.raises(ConfigInvalid):
        Ellipse2D(2.0, 0.0)
    with pytest.raises(ConfigInvalid):
        Box([0, 0], [1, 0])


def test_boundary_consistency():
    rng = np.random.default_rng(3)
    for dom in (Ball(np.zeros(2), 1.5), ExteriorBall(np.ones(3), 0.5), Box([0, 0], [1, 2]), Ellipse2D(2.0, 1.0)):
        if isinstance(dom, Ellipse2D):
            pts = dom.boundary_point(rng.uniform(0, 2 * np.pi, 50))
        elif isinstance(dom, Box):
            pts = rng.uniform(dom.lower, dom.upper, (50, 2))
            pts[:, 0] = dom.lower[0]
        else:
            d = rng.standard_normal((50, dom.dim))
            pts = dom.center + dom.radius * d / np.linalg.norm(d, axis=1, keepdims=True)
        assert np.all(dom.on_boundary(pts, tol=1e-9))
        assert np.allclose(dom.boundary_distance(pts), 0.0, atol=1e-9)


def test_ellipse_distance_matches_dense_sampling():
    ell = Ellipse2D(2.0, 1.0)
    x = np.array([[0.3, 0.2], [1.5, -0.4], [3.0, 1.0]])
    bp = ell.boundary_point(np.linspace(0, 2 * np.pi, 400001))
    brute = np.min(np.linalg.norm(x[:, None] - bp[None], axis=-1), axis=1)
    assert np.allclose(ell.boundary_distance(x), brute, atol=1e-8)
    assert list(ell.inside(x)) == [True, True, False]


def test_pole_metrics_interior_example():
    cfg = pole_metrics(Ball(np.zeros(3), 1.0), [[-0.5, 0, 0], [0.5, 0, 0]])
    assert cfg.placement == "interior"
    assert (cfg.d, cfg.d_gamma, cfg.M) == pytest.approx((1.0, 0.5, 0.5))


def test_pole_metrics_boundary_example():
    cfg = pole_metrics(Ball(np.zeros(2), 1.0), [[1.0, 0], [-1.0, 0]])
    assert cfg.placement == "boundary"
    assert cfg.d == pytest.approx(2.0)


def test_pole_metrics_errors():
    disc = Ball(np.zeros(2), 1.0)
    with pytest.raises(MixedPlacement):
        pole_metrics(disc, [[0.0, 0], [1.0, 0]])
    with pytest.raises(DimensionRestriction):
        pole_metrics(disc, [[0.1, 0], [-0.1, 0]])
    with pytest.raises(DuplicatePole):
        pole_metrics(disc, [[1.0, 0], [1.0, 0]])
    with pytest.raises(DimensionMismatch):
        pole_metrics(disc, [[1.0, 0, 0], [-1.0, 0, 0]])
    with pytest.raises(ConfigInvalid):
        pole_metrics(disc, [[1.0, 0]])
    with pytest.raises(ConfigInvalid):
        pole_metrics(disc, [[2.0, 0], [-1.0, 0]])


def test_ray_intervals_ball():
    ball = Ball(np.zeros(3), 1.0)
    dirs = np.eye(3)
    lo, hi = ball.ray_intervals(np.array([0.5, 0, 0]), dirs)
    assert np.allclose(lo[:, 0], 0.0)
    assert hi[0, 0] == pytest.approx(0.5)
    assert hi[1, 0] == pytest.approx(np.sqrt(0.75))
