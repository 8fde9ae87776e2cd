import numpy as np
import pytest

from multihardy.errors import ConfigInvalid, EvaluationAtPole
from multihardy.geometry import Ball, pole_metrics
from multihardy.potential import (
    PotentialField,
    Shell,
    as_scalar_field,
    comparability_radius,
    evaluate,
    infimum_over_region,
    local_limit,
    local_limit_numeric,
)

from conftest import circle_poles


@pytest.fixture
def bipole():
    return pole_metrics(Ball(np.zeros(3), 3.0), [[-1.0, 0, 0], [1.0, 0, 0]])


def test_pairwise_examples(bipole):
    V = PotentialField(bipole)
    assert evaluate(V, np.zeros(3)) == pytest.approx(4.0)
    assert evaluate(V, [0.0, 1.0, 0]) == pytest.approx(1.0)
    assert evaluate(PotentialField(bipole, "sum-inverse-square"), np.zeros(3)) == pytest.approx(2.0)


def test_pole_evaluation_raises(bipole):
    with pytest.raises(EvaluationAtPole):
        evaluate(PotentialField(bipole), [1.0, 0, 0])
    assert np.isfinite(evaluate(PotentialField(bipole, delta=0.1), [1.0, 0, 0]))


def test_invalid_kind(bipole):
    with pytest.raises(ConfigInvalid):
        PotentialField(bipole, "cubic")
    with pytest.raises(ConfigInvalid):
        PotentialField(bipole, delta=-1.0)


def test_regularized_below_exact_and_bounded():
    cfg = pole_metrics(Ball(np.zeros(3), 3.0), [[1.0, 0, 0], [0, 1.0, 0], [0, 0, -1.0]])
    rng = np.random.default_rng(1)
    x = rng.uniform(-2, 2, (2000, 3))
    exact = evaluate(PotentialField(cfg), x)
    for delta in (1e-3, 0.1, 1.0):
        reg = evaluate(PotentialField(cfg, delta=delta), x)
        assert np.all(reg < exact)
        a = cfg.poles
        bound = sum(np.sum((a[i] - a[j]) ** 2) for i in range(3) for j in range(i + 1, 3)) / delta**4
        assert np.all(reg <= bound)


@pytest.mark.parametrize("n, expected", [(2, 1.0), (3, 2.0), (5, 4.0)])
def test_local_limit(n, expected):
    cfg = pole_metrics(Ball(np.zeros(2), 1.0), circle_poles(n))
    V = PotentialField(cfg)
    assert local_limit(V, 0) == pytest.approx(expected)
    _, vals = local_limit_numeric(V, 0)
    assert vals[-1] == pytest.approx(expected, rel=1e-5)


def test_comparability_radius_is_sound(bipole):
    V = PotentialField(bipole)
    r = comparability_radius(V, 0, 0.1)
    rng = np.random.default_rng(0)
    d = rng.standard_normal((5000, 3))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    x = bipole.poles[0] + r * rng.uniform(1e-3, 1, (5000, 1)) * d
    s2 = ((x - bipole.poles[0]) ** 2).sum(-1)
    assert np.all(np.abs(evaluate(V, x) * s2 - 1.0) <= 0.1 + 1e-12)


def test_shell_infimum_matches_oracles(bipole):
    V = PotentialField(bipole)
    est = infimum_over_region(V, Shell(np.zeros(3), 0.9, 1.1), samples=10_000)
    # closed form: the minimum sits on |x| = 1.1 in the plane x1 = 0
    assert est.value == pytest.approx(4 / 2.21**2, rel=1e-6)
    # dense brute force over 1e6 uniform shell samples
    assert est.value <= 0.8190436674296955
    assert est.value >= 0


def test_infimum_vanishes_for_huge_delta(bipole):
    est = infimum_over_region(PotentialField(bipole, delta=1e6), Shell(np.zeros(3), 0.9, 1.1))
    assert est.value < 1e-20


def test_infimum_grows_on_shrinking_balls(bipole):
    V = PotentialField(bipole)
    vals = [infimum_over_region(V, Shell(bipole.poles[0], 0.0, r)).value for r in (0.5, 0.1, 0.01, 0.001)]
    assert np.all(np.diff(vals) > 0)
    assert vals[-1] > 1e5


def test_scalar_field_profile(bipole):
    f = as_scalar_field(PotentialField(bipole))
    assert np.allclose(f.profile.exponents, -2.0)
    assert f.profile.tail == -4.0
    g = as_scalar_field(PotentialField(bipole, delta=0.1))
    assert np.allclose(g.profile.exponents, 0.0)
    x = np.array([[0.0, 0.5, 0.0], [0.2, 0.1, 0.3]])
    assert np.allclose(f(x), evaluate(PotentialField(bipole), x))
