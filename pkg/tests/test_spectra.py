import numpy as np
import pytest
import scipy.linalg as la
import scipy.sparse as sp

from multihardy.errors import ConfigInvalid, DimensionRestriction, GridTooCoarse, InconclusiveTrend
from multihardy.geometry import Ball, Box, pole_metrics
from multihardy.potential import PotentialField
from multihardy.spectra import (
    _fv_matrices,
    assemble,
    axisymmetric_grid,
    default_grid_factory,
    discrete_quotient,
    graded_axis,
    graded_grid,
    mu_star_eigen,
    negative_count,
    richardson_log,
    smallest_generalized_eigenvalue,
    spectral_lower_bound,
    threshold_scan,
    trend_verdict,
    uniform_grid,
)
from multihardy.trialfn import exact_minimizer

from conftest import circle_poles

UNIT_SQUARE = Box([0.0, 0.0], [1.0, 1.0])


def _discrete_dirichlet(h):
    return 2 * (2 / h**2) * (1 - np.cos(np.pi * h))


def test_unit_square_stencil():
    g = uniform_grid(UNIT_SQUARE, 0.25)
    assert g.unknowns == 9
    K, M = _fv_matrices(g)
    assert abs(K - K.T).max() == 0
    lam = la.eigh(K.toarray(), np.diag(M), eigvals_only=True)[0]
    assert lam == pytest.approx(_discrete_dirichlet(0.25), rel=1e-12)


def test_second_order_refinement():
    errs = []
    for h in (1 / 8, 1 / 16, 1 / 32):
        K, M = _fv_matrices(uniform_grid(UNIT_SQUARE, h))
        lam = la.eigh(K.toarray(), np.diag(M), eigvals_only=True, subset_by_index=[0, 0])[0]
        errs.append(abs(lam - 2 * np.pi**2))
    rates = np.log2(np.array(errs[:-1]) / errs[1:])
    assert np.allclose(rates, 2.0, atol=0.05)


@pytest.fixture
def disc_bipole(unit_disc):
    return pole_metrics(unit_disc, [[1.0, 0], [-1.0, 0]])


def test_graded_axis_properties():
    a = graded_axis(-1, 1, 0.1, foci=[0.3], hmin=1e-3)
    h = np.diff(a)
    assert np.all(h > 0) and h.max() <= 0.1 + 1e-12
    assert h.min() == pytest.approx(1e-3)
    assert np.any(np.isclose(a, 0.3))
    with pytest.raises(ConfigInvalid):
        graded_axis(0, 1, 0.0)


def test_assembly_symmetry_and_huge_delta(unit_disc, disc_bipole):
    g = graded_grid(unit_disc, disc_bipole, 1e-2, 0.1)
    asm = assemble(unit_disc, disc_bipole, PotentialField(disc_bipole, delta=1e-2), g)
    assert abs(asm.K - asm.K.T).max() == 0
    assert np.all(asm.MV > 0)
    big = assemble(unit_disc, disc_bipole, PotentialField(disc_bipole, delta=1e8), g)
    assert big.MV.max() < 1e-30


def test_assembly_preconditions(unit_disc, disc_bipole):
    g = uniform_grid(unit_disc, 0.1)
    with pytest.raises(GridTooCoarse):
        assemble(unit_disc, disc_bipole, PotentialField(disc_bipole, delta=1e-3), g)
    with pytest.raises(ConfigInvalid):
        assemble(unit_disc, disc_bipole, PotentialField(disc_bipole), g)


def test_interior_poles_in_plane_rejected():
    with pytest.raises(DimensionRestriction):
        pole_metrics(UNIT_SQUARE, [[0.3, 0.5], [0.7, 0.5]])


def test_mu_zero_is_dirichlet_eigenvalue():
    cfg = pole_metrics(UNIT_SQUARE, [[0.0, 0.5], [1.0, 0.5]])
    g = uniform_grid(UNIT_SQUARE, 1 / 16)
    asm = assemble(UNIT_SQUARE, cfg, PotentialField(cfg, delta=0.5), g)
    est = spectral_lower_bound(asm, 0.0)
    assert est.value == pytest.approx(_discrete_dirichlet(1 / 16), rel=1e-7)
    assert est.value > 0


@pytest.fixture
def disc_asm(unit_disc):
    cfg = pole_metrics(unit_disc, circle_poles(3))
    g = graded_grid(unit_disc, cfg, 1e-3, 0.08)
    return cfg, g, assemble(unit_disc, cfg, PotentialField(cfg, delta=1e-3), g)


def test_monotone_in_mu(disc_asm):
    _, _, asm = disc_asm
    vals = [spectral_lower_bound(asm, mu).value for mu in (0.0, 0.2, 0.4, 0.6)]
    assert np.all(np.diff(vals) <= 1e-9 * np.abs(vals[:-1]).max())


def test_lower_bound_matches_dense_solver(unit_disc):
    cfg = pole_metrics(unit_disc, circle_poles(3))
    g = graded_grid(unit_disc, cfg, 0.05, 0.1)
    asm = assemble(unit_disc, cfg, PotentialField(cfg, delta=0.05), g)
    A = asm.K.toarray() - 0.3 * np.diag(asm.MV)
    dense = la.eigh(A, np.diag(asm.M), eigvals_only=True)[0]
    assert spectral_lower_bound(asm, 0.3).value == pytest.approx(dense, rel=1e-7)
    B = asm.K - sp.diags(50 * asm.MV)
    assert negative_count(B) == int((la.eigvalsh(B.toarray()) < 0).sum()) > 0


def test_delta_monotonicity(disc_asm):
    cfg, g, asm = disc_asm
    dom = cfg.domain
    mus = [smallest_generalized_eigenvalue(assemble(dom, cfg, PotentialField(cfg, delta=d), g)).value
           for d in (1e-3, 1e-2, 1e-1)]
    assert np.all(np.diff(mus) >= 0)


def test_discrete_rayleigh_consistency(disc_asm):
    cfg, g, asm = disc_asm
    mu = smallest_generalized_eigenvalue(asm)
    u = exact_minimizer(cfg.domain, cfg)
    assert mu.value <= discrete_quotient(asm, u(g.points())) * (1 + 1e-8)
    assert mu.residual <= 1e-6 * mu.value


def test_axisymmetric_matches_full_grid():
    ball = Ball(np.zeros(3), 1.0)
    cfg = pole_metrics(ball, [[0, 0, 1.0], [0, 0, -1.0]])
    delta = 0.05
    V = PotentialField(cfg, delta=delta)
    axi = smallest_generalized_eigenvalue(assemble(ball, cfg, V, axisymmetric_grid(ball, cfg, delta, 0.02))).value
    full = smallest_generalized_eigenvalue(assemble(ball, cfg, V, graded_grid(ball, cfg, delta, 0.08))).value
    assert axi == pytest.approx(full, rel=0.05)


def test_axisymmetric_requires_collinear_poles():
    ball = Ball(np.zeros(3), 1.0)
    cfg = pole_metrics(ball, [[1.0, 0, 0], [0, 1.0, 0]])
    with pytest.raises(ConfigInvalid):
        axisymmetric_grid(ball, cfg, 0.1, 0.1)


def test_trend_verdict_cases():
    assert trend_verdict([0.6, 0.55, 0.557, 0.56]) == "bounded"
    assert trend_verdict([-2.0, -3.5, -57.0, -6000.0, -7e5]) == "diverging"
    assert trend_verdict([1.0, 0.5, 0.1, -0.4]) == "inconclusive"


def test_richardson_log_exact_on_linear_model():
    deltas = np.array([1e-2, 1e-4, 1e-6])
    vals = 0.7 + 2.0 / np.log(1 / deltas)
    assert richardson_log(deltas, vals) == pytest.approx(0.7)


def test_scan_validation(unit_disc, disc_bipole):
    with pytest.raises(ConfigInvalid):
        threshold_scan(unit_disc, disc_bipole, [], [1e-2])
    with pytest.raises(ConfigInvalid):
        threshold_scan(unit_disc, disc_bipole, [0.5, 0.4], [1e-2])
    with pytest.raises(ConfigInvalid):
        mu_star_eigen(unit_disc, disc_bipole, [])


def test_inconclusive_scan_keeps_rows(unit_disc, disc_bipole):
    with pytest.raises(InconclusiveTrend) as info:
        threshold_scan(unit_disc, disc_bipole, [0.5], [1e-1, 5e-2], default_grid_factory(unit_disc, disc_bipole, 0.1))
    assert len(info.value.scan.rows) == 1


def test_mu_star_disc_bipole_coarse(unit_disc, disc_bipole):
    res = mu_star_eigen(unit_disc, disc_bipole, [1e-2, 1e-3, 1e-4], default_grid_factory(unit_disc, disc_bipole, 0.08))
    vals = [e.value for e in res.estimates]
    assert np.all(np.diff(vals) < 0)
    assert res.extrapolated == pytest.approx(1.0, rel=0.1)
