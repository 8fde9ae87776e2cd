import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from multihardy.geometry import Ball, pole_metrics
from multihardy.potential import PotentialField, comparability_radius, evaluate
from multihardy.trialfn import boundary_pole_weight, cutoff, interior_weight, pairwise_gradient_gap

coords = st.floats(-2, 2, allow_nan=False, allow_infinity=False)
SETTINGS = settings(max_examples=60, deadline=None)


def _separated(poles, tol=0.05):
    d = np.linalg.norm(poles[:, None] - poles[None], axis=-1)
    return d[np.triu_indices(len(poles), 1)].min() > tol


def _config(poles):
    return pole_metrics(Ball(np.zeros(poles.shape[1]), 10.0), poles)


pole_sets = arrays(float, st.tuples(st.integers(2, 5), st.just(3)), elements=coords).filter(_separated)
points = arrays(float, (20, 3), elements=st.floats(-3, 3, allow_nan=False))


@SETTINGS
@given(pole_sets, points, st.randoms(use_true_random=False))
def test_permutation_invariance(poles, x, rnd):
    cfg = _config(poles)
    perm = list(range(len(poles)))
    rnd.shuffle(perm)
    V1 = evaluate(PotentialField(cfg, delta=1e-3), x)
    V2 = evaluate(PotentialField(_config(poles[perm]), delta=1e-3), x)
    assert np.allclose(V1, V2, rtol=1e-12)


@SETTINGS
@given(pole_sets, points, st.floats(0.1, 10))
def test_scaling_law(poles, x, lam):
    V1 = evaluate(PotentialField(_config(poles / 5)), x / 5 + 1e-3)
    V2 = evaluate(PotentialField(pole_metrics(Ball(np.zeros(3), 10.0 * lam), lam * poles / 5)), lam * (x / 5 + 1e-3))
    assert np.allclose(V2, V1 / lam**2, rtol=1e-10)


@SETTINGS
@given(pole_sets, points, st.floats(1e-4, 1.0), st.floats(1.01, 10.0))
def test_regularization_monotone(poles, x, d1, factor):
    cfg = _config(poles)
    assert np.all(evaluate(PotentialField(cfg, delta=d1), x) >= evaluate(PotentialField(cfg, delta=d1 * factor), x))


@SETTINGS
@given(pole_sets, st.floats(0.01, 0.5), st.integers(0, 2**16))
def test_comparability_window(poles, eta, seed):
    cfg = _config(poles)
    V = PotentialField(cfg)
    r = comparability_radius(V, 0, eta)
    rng = np.random.default_rng(seed)
    d = rng.standard_normal((200, 3))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    x = cfg.poles[0] + r * rng.uniform(1e-4, 1, (200, 1)) * d
    s2 = ((x - cfg.poles[0]) ** 2).sum(-1)
    assert np.all(np.abs(evaluate(V, x) * s2 - (cfg.n - 1)) <= eta * (1 + 1e-9))


@SETTINGS
@given(pole_sets, points)
def test_interior_gradient_identity(poles, x):
    cfg = _config(poles)
    phis = [interior_weight(cfg, i) for i in range(cfg.n)]
    x = x + 1e-3
    assert np.allclose(pairwise_gradient_gap(phis, x), evaluate(PotentialField(cfg), x), rtol=1e-9)


@SETTINGS
@given(st.lists(st.floats(0, 2 * np.pi, allow_nan=False), min_size=2, max_size=4, unique=True),
       arrays(float, (20, 2), elements=st.floats(-0.7, 0.7)))
def test_boundary_gradient_identity(angles, x):
    disc = Ball(np.zeros(2), 1.0)
    poles = np.c_[np.cos(angles), np.sin(angles)]
    if not _separated(poles, 0.05):
        return
    cfg = pole_metrics(disc, poles)
    phis = [boundary_pole_weight(disc, cfg, i) for i in range(cfg.n)]
    lhs = pairwise_gradient_gap(phis, x)
    assert np.allclose(lhs, 4 * evaluate(PotentialField(cfg), x), rtol=1e-8)


@SETTINGS
@given(st.floats(1e-6, 0.06), arrays(float, (50, 3), elements=st.floats(-1, 1)))
def test_cutoff_bounds_and_continuity(eps, x):
    ball = Ball(np.zeros(3), 1.0)
    cfg = pole_metrics(ball, [[0.5, 0, 0], [-0.5, 0, 0]])
    th = cutoff(ball, cfg, eps)
    v = th(x)
    assert np.all((v >= 0) & (v <= 1))
    a = cfg.poles[0]
    e = np.array([0.0, 0.6, 0.8])
    for r in (eps**2, eps, np.sqrt(eps)):
        inner, outer = th(a + r * (1 - 1e-13) * e), th(a + r * (1 + 1e-13) * e)
        assert abs(inner - outer) <= 1e-11
