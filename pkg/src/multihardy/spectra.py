"""Discrete spectra of ``-Laplace - mu V_delta`` on masked tensor grids.

A vertex-centred finite-volume scheme on a (possibly graded) tensor grid
gives a symmetric stiffness matrix ``K`` and lumped diagonal masses ``M``
and ``M_V = V_delta M``; nodes outside the domain are Dirichlet and carry no
unknowns.  Ball domains with poles on one line through the centre can be
reduced to the meridian half-plane, where the radial coordinate enters as a
cylindrical weight.

Smallest eigenvalues of ``K - mu M_V`` against ``M`` are bracketed by
Sylvester inertia counts (sparse LDL^T obtained from an unpivoted LU) and
then polished by shift-invert Lanczos.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as sla

from .errors import ConfigInvalid, GridTooCoarse, InconclusiveTrend, NoConvergence, UnsupportedDomain
from .geometry import Ball, Box, Domain, PoleConfiguration
from .potential import PotentialField, evaluate


# ---------------------------------------------------------------------------
# grids


@dataclass(frozen=True, eq=False)
class Grid:
    """Tensor grid with a Dirichlet mask.

    Attributes
    ----------
    axes : tuple of ndarray
        Sorted node coordinates per axis.
    mask : ndarray of bool
        True at nodes carrying an unknown.
    radial : tuple of bool
        Axes carrying a cylindrical weight (the distance to the symmetry line).
    embed : callable or None
        Maps grid coordinates to points of the physical space (identity when None).
    """

    axes: tuple
    mask: np.ndarray
    radial: tuple
    embed: Callable | None = None
    kind: str = "uniform"

    @property
    def shape(self):
        return tuple(len(a) for a in self.axes)

    @property
    def unknowns(self) -> int:
        return int(self.mask.sum())

    @property
    def h(self) -> float:
        """Largest cell width."""
        return float(max(np.diff(a).max() for a in self.axes))

    @property
    def h_min(self) -> float:
        return float(min(np.diff(a).min() for a in self.axes))

    def nodes(self) -> np.ndarray:
        """Grid coordinates of the unknowns, shape ``(unknowns, len(axes))``."""
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.stack([m[self.mask] for m in mesh], -1)

    def points(self) -> np.ndarray:
        """Physical coordinates of the unknowns."""
        x = self.nodes()
        return x if self.embed is None else self.embed(x)


def graded_axis(lo: float, hi: float, h0: float, foci: Sequence[float] = (), hmin: float | None = None,
                ratio: float = 1.2) -> np.ndarray:
    """Nodes on ``[lo, hi]`` with spacing ``<= h0``, graded geometrically toward ``foci``.

    Around each focus the spacing starts at ``hmin`` and grows by ``ratio``
    per cell until it reaches ``h0``.
    """
    if not h0 > 0:
        raise ConfigInvalid("grid.h", "must be positive")
    pts = [lo, hi]
    if hmin is not None and hmin < h0:
        for c in foci:
            for sgn in (-1, 1):
                off, h = 0.0, hmin
                while h < h0:
                    pts.append(c + sgn * off)
                    off += h
                    h *= ratio
                pts.append(c + sgn * off)
    pts = np.unique(np.array([p for p in pts if lo <= p <= hi]))
    tiny = 0.5 * (hmin if hmin is not None else h0)
    out = [pts[0]]
    for p in pts[1:]:
        gap = p - out[-1]
        if gap < tiny:
            continue
        k = int(np.ceil(gap / h0 - 1e-9))
        out.extend(np.linspace(out[-1], p, k + 1)[1:])
    return np.array(out)


def _bounding_box(domain: Domain):
    if isinstance(domain, Box):
        return domain.lo, domain.hi
    if not domain.bounded:
        raise UnsupportedDomain("spectral grids need a bounded domain")
    R = domain.bounding_radius()
    return domain.center - R, domain.center + R


def uniform_grid(domain: Domain, h: float) -> Grid:
    """Uniform tensor grid of spacing ``<= h`` over the bounding box, masked to the domain."""
    lo, hi = _bounding_box(domain)
    axes = tuple(np.linspace(a, b, int(np.ceil((b - a) / h - 1e-9)) + 1) for a, b in zip(lo, hi))
    return _masked(domain, axes, "uniform")


def graded_grid(domain: Domain, config: PoleConfiguration, delta: float, h0: float, ratio: float = 1.2,
                hmin: float | None = None) -> Grid:
    """Tensor grid graded toward every pole coordinate down to ``hmin = delta / 4``."""
    lo, hi = _bounding_box(domain)
    hmin = delta / 4 if hmin is None else hmin
    foci = [np.unique(np.round(config.poles[:, k], 14)) for k in range(domain.dim)]
    axes = tuple(graded_axis(a, b, h0, f, hmin, ratio) for a, b, f in zip(lo, hi, foci))
    return _masked(domain, axes, "graded")


def _masked(domain, axes, kind):
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), -1)
    mask = domain.inside(mesh)
    return Grid(axes, mask, (False,) * len(axes), None, kind)


def axisymmetric_grid(domain: Ball, config: PoleConfiguration, delta: float, h0: float, ratio: float = 1.2,
                      hmin: float | None = None) -> Grid:
    """Meridian grid ``(rho, z)`` for a ball whose poles lie on one line through its centre.

    ``z`` runs along the line, ``rho >= 0`` is the distance to it; the axis
    ``rho = 0`` carries unknowns (a symmetry line, not a boundary).
    """
    if not isinstance(domain, Ball):
        raise UnsupportedDomain("axisymmetric reduction is implemented for balls")
    c, R = domain.center, domain.radius
    rel = config.poles - c
    k = int(np.argmax(np.linalg.norm(rel, axis=1)))
    e = rel[k] / np.linalg.norm(rel[k]) if np.linalg.norm(rel[k]) > 0 else np.eye(domain.dim)[0]
    z = rel @ e
    if np.linalg.norm(rel - np.outer(z, e)) > 1e-12 * R:
        raise ConfigInvalid("poles", "axisymmetric grids need poles on a line through the centre")
    perp = np.linalg.svd(e[None])[2][1]
    hmin = delta / 4 if hmin is None else hmin
    a_rho = graded_axis(0.0, R, h0, [0.0], hmin, ratio)
    a_z = graded_axis(-R, R, h0, np.unique(np.round(z, 14)), hmin, ratio)
    P, Z = np.meshgrid(a_rho, a_z, indexing="ij")
    mask = P**2 + Z**2 < R**2 * (1 - 1e-12)

    def embed(x):
        return c + x[:, 1:2] * e + x[:, 0:1] * perp

    return Grid((a_rho, a_z), mask, (True, False), embed, "axisymmetric")


# ---------------------------------------------------------------------------
# assembly


@dataclass
class Assembly:
    """Stiffness ``K`` with diagonal mass ``M`` and potential mass ``MV``."""

    K: sp.csr_matrix
    M: np.ndarray
    MV: np.ndarray
    grid: Grid
    delta: float


def _fv_matrices(grid: Grid):
    axes, mask, radial = grid.axes, grid.mask, grid.radial
    shp = grid.shape
    D = len(axes)
    duals, faces = [], []
    for a, r in zip(axes, radial):
        mid = 0.5 * (a[1:] + a[:-1])
        lo, hi = np.r_[a[0], mid], np.r_[mid, a[-1]]
        duals.append((hi**2 - lo**2) / 2 if r else hi - lo)
        faces.append(mid if r else np.ones_like(mid))
    idx = -np.ones(shp, dtype=np.int64)
    idx[mask] = np.arange(mask.sum())
    vol = np.ones(shp)
    for k, d in enumerate(duals):
        s = [1] * D
        s[k] = -1
        vol = vol * d.reshape(s)
    rows, cols, vals = [], [], []
    diag = np.zeros(int(mask.sum()))
    for k, a in enumerate(axes):
        h = np.diff(a)
        w = np.ones(shp[:k] + (shp[k] - 1,) + shp[k + 1 :])
        for j, d in enumerate(duals):
            s = [1] * D
            s[j] = -1
            w = w * ((faces[k] / h) if j == k else d).reshape(s)
        sl0 = [slice(None)] * D
        sl1 = list(sl0)
        sl0[k], sl1[k] = slice(0, -1), slice(1, None)
        i0, i1 = idx[tuple(sl0)], idx[tuple(sl1)]
        m0, m1 = i0 >= 0, i1 >= 0
        np.add.at(diag, i0[m0], w[m0])
        np.add.at(diag, i1[m1], w[m1])
        both = m0 & m1
        rows += [i0[both], i1[both]]
        cols += [i1[both], i0[both]]
        vals += [-w[both], -w[both]]
    n = int(mask.sum())
    K = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)).tocsr()
    K = (K + sp.diags(diag)).tocsr()
    return K, vol[mask]


def _check_resolution(grid: Grid, config: PoleConfiguration, delta: float):
    """Every pole must sit in cells no wider than ``delta / 2`` along each axis."""
    x = config.poles
    if grid.kind == "axisymmetric":
        c = grid.embed(np.zeros((1, 2)))[0]
        e = grid.embed(np.array([[0.0, 1.0]]))[0] - c
        coords = np.c_[np.zeros(len(x)), (x - c) @ e]
    else:
        coords = x
    for p in coords:
        for k, a in enumerate(grid.axes):
            j = np.searchsorted(a, p[k])
            near = np.diff(a)[max(j - 1, 0) : j + 1]
            if len(near) and near.max() > delta / 2 * (1 + 1e-9):
                raise GridTooCoarse(f"cell width {near.max():.3g} near a pole exceeds delta/2 = {delta / 2:.3g}")


def assemble(domain: Domain, config: PoleConfiguration, V: PotentialField, grid: Grid) -> Assembly:
    """Finite-volume ``K``, ``M`` and ``M_V = V_delta M`` on ``grid``.

    Raises
    ------
    GridTooCoarse
        A pole lies in a cell wider than ``delta / 2``.
    """
    if not V.delta > 0:
        raise ConfigInvalid("potential.delta", "spectral assembly needs delta > 0")
    _check_resolution(grid, config, V.delta)
    K, M = _fv_matrices(grid)
    Vn = np.asarray(evaluate(V, grid.points()), dtype=float)
    return Assembly(K, M, Vn * M, grid, V.delta)


# ---------------------------------------------------------------------------
# eigenvalues


@dataclass
class SpectralEstimate:
    """One discrete eigenvalue with solver diagnostics."""

    value: float
    kind: str
    h: float
    delta: float
    iterations: int
    residual: float
    unknowns: int
    mu: float | None = None
    extrapolated: float | None = None


def negative_count(A: sp.spmatrix) -> int:
    """Number of negative eigenvalues of symmetric ``A`` (Sylvester inertia).

    The LU factors are computed without row pivoting under a symmetric
    ordering, so ``U`` carries the pivots of ``L D L^T``.
    """
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", sla.MatrixRankWarning)
        lu = sla.splu(A.tocsc(), permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.0,
                      options=dict(SymmetricMode=True))
    if not np.array_equal(lu.perm_r, lu.perm_c):
        raise NoConvergence("inertia count needed row pivoting")
    return int((lu.U.diagonal() < 0).sum())


def _residual(A, B, v, theta):
    Av = A @ v
    return float(np.linalg.norm(Av - theta * (B @ v)) / max(np.linalg.norm(Av), np.linalg.norm(v), 1e-300))


def spectral_lower_bound(asm: Assembly, mu: float, tol: float = 1e-8, max_steps: int = 200) -> SpectralEstimate:
    """Smallest eigenvalue ``lambda`` of ``K - mu M_V`` against ``M``.

    ``lambda >= -mu max V_delta`` because ``K`` is positive semidefinite;
    bisection on inertia counts narrows ``[lo, hi]`` to 5% before the
    shift-invert solve.
    """
    Md = sp.diags(asm.M)
    A = (asm.K - mu * sp.diags(asm.MV)).tocsc()
    lo = -mu * float(np.max(asm.MV / asm.M)) if mu > 0 else 0.0
    lo -= 1e-9 * max(1.0, abs(lo))
    hi = 1.0
    steps = 0
    while negative_count(A - hi * Md) == 0:
        hi *= 4
        steps += 1
        if steps > max_steps:
            raise NoConvergence("no upper bracket for the smallest eigenvalue")
    while hi - lo > 0.05 * max(abs(lo), abs(hi), 1.0):
        if lo < -1 and hi < -1:
            mid = -np.sqrt(lo * hi)
        elif lo < -1 < hi:
            mid = -1.0
        else:
            mid = 0.5 * (lo + hi)
        if not lo < mid < hi:
            mid = 0.5 * (lo + hi)
        if negative_count(A - mid * Md) == 0:
            lo = mid
        else:
            hi = mid
        steps += 1
        if steps > max_steps:
            raise NoConvergence("inertia bisection did not narrow the bracket")
    sigma = lo - 0.01 * max(1.0, abs(lo))
    try:
        w, v = sla.eigsh(A, k=1, M=Md.tocsc(), sigma=sigma, which="LM", tol=tol)
    except sla.ArpackNoConvergence as exc:
        raise NoConvergence(f"shift-invert Lanczos did not converge: {exc}") from exc
    lam = float(w[0])
    return SpectralEstimate(lam, "lambda", asm.grid.h_min, asm.delta, steps, _residual(A, Md, v[:, 0], lam),
                            asm.grid.unknowns, mu)


def smallest_generalized_eigenvalue(asm: Assembly, tol: float = 1e-8) -> SpectralEstimate:
    """Smallest ``mu`` with ``K v = mu M_V v`` (the discrete Hardy constant)."""
    B = sp.diags(asm.MV).tocsc()
    try:
        w, v = sla.eigsh(asm.K.tocsc(), k=1, M=B, sigma=0.0, which="LM", tol=tol)
    except sla.ArpackNoConvergence as exc:
        raise NoConvergence(f"shift-invert Lanczos did not converge: {exc}") from exc
    mu = float(w[0])
    return SpectralEstimate(mu, "mu", asm.grid.h_min, asm.delta, 1, _residual(asm.K, B, v[:, 0], mu), asm.grid.unknowns)


def discrete_quotient(asm: Assembly, values: np.ndarray) -> float:
    """``<K v, v> / <M_V v, v>`` for nodal values ``v``."""
    v = np.asarray(values, dtype=float)
    return float(v @ (asm.K @ v) / (v @ (asm.MV * v)))


# ---------------------------------------------------------------------------
# studies over a regularization schedule


GridFactory = Callable[[float], Grid]


def default_grid_factory(domain: Domain, config: PoleConfiguration, h0: float = 0.04, ratio: float = 1.2,
                         axisymmetric: bool = False) -> GridFactory:
    """``delta -> grid`` graded toward the poles with ``hmin = delta / 4``."""
    if axisymmetric:
        return lambda delta: axisymmetric_grid(domain, config, delta, h0, ratio)
    return lambda delta: graded_grid(domain, config, delta, h0, ratio)


@dataclass
class MuStarEstimate:
    """Discrete constants along a ``delta`` schedule and their extrapolation."""

    estimates: list
    extrapolated: float


def richardson_log(deltas, values) -> float:
    """Linear extrapolation to ``x = 0`` in ``x = 1 / log(1/delta)`` from the last two points."""
    x = 1.0 / np.log(1.0 / np.asarray(deltas, dtype=float))
    y = np.asarray(values, dtype=float)
    if len(y) < 2:
        return float(y[-1])
    return float(y[-1] - x[-1] * (y[-1] - y[-2]) / (x[-1] - x[-2]))


def mu_star_eigen(domain: Domain, config: PoleConfiguration, deltas: Sequence[float],
                  grids: GridFactory | None = None, kind: str = "pairwise", tol: float = 1e-8) -> MuStarEstimate:
    """Smallest generalized eigenvalue for each ``delta`` and its extrapolation to ``delta -> 0``."""
    if not len(deltas):
        raise ConfigInvalid("deltas", "must be nonempty")
    grids = grids or default_grid_factory(domain, config)
    out = []
    for d in deltas:
        asm = assemble(domain, config, PotentialField(config, kind, d), grids(d))
        out.append(smallest_generalized_eigenvalue(asm, tol))
    ext = richardson_log(deltas, [e.value for e in out])
    for e in out:
        e.extrapolated = ext
    return MuStarEstimate(out, ext)


def trend_verdict(values: Sequence[float], window: int = 3, tol: float = 0.05) -> str:
    """Classify a refinement sequence of smallest eigenvalues.

    ``diverging``: ``window`` consecutive drops with
    ``lam[k+1] <= min(2 lam[k], lam[k] - 1)``.  ``bounded``: the last two
    increments are each at most ``tol * max(1, |lam|)``.  Otherwise
    ``inconclusive``.
    """
    lam = np.asarray(values, dtype=float)
    drops = lam[1:] <= np.minimum(2 * lam[:-1], lam[:-1] - 1)
    run = 0
    for d in drops:
        run = run + 1 if d else 0
        if run >= window:
            return "diverging"
    if len(lam) >= 3:
        inc = np.abs(np.diff(lam[-3:]))
        if np.all(inc <= tol * np.maximum(1.0, np.abs(lam[-3:-1]))):
            return "bounded"
    return "inconclusive"


@dataclass
class ThresholdScan:
    """Verdicts per ``mu`` and the bracket of the bounded/diverging transition."""

    rows: list = field(default_factory=list)
    bracket: tuple = (np.nan, np.nan)

    @property
    def crossover(self) -> float:
        return 0.5 * (self.bracket[0] + self.bracket[1])


def threshold_scan(domain: Domain, config: PoleConfiguration, mu_grid: Sequence[float], deltas: Sequence[float],
                   grids: GridFactory | None = None, kind: str = "pairwise") -> ThresholdScan:
    """Follow ``lambda(mu)`` along the refinement schedule for each ``mu``.

    Raises
    ------
    InconclusiveTrend
        No bounded ``mu`` lies below the smallest diverging ``mu``.
    """
    mus = np.asarray(mu_grid, dtype=float)
    if not len(mus):
        raise ConfigInvalid("mu_grid", "must be nonempty")
    if np.any(np.diff(mus) <= 0):
        raise ConfigInvalid("mu_grid", "must be strictly increasing")
    grids = grids or default_grid_factory(domain, config)
    asms = [assemble(domain, config, PotentialField(config, kind, d), grids(d)) for d in deltas]
    scan = ThresholdScan()
    for mu in mus:
        ests = [spectral_lower_bound(a, float(mu)) for a in asms]
        scan.rows.append((float(mu), [e.value for e in ests], trend_verdict([e.value for e in ests]), ests))
    div = [r[0] for r in scan.rows if r[2] == "diverging"]
    bnd = [r[0] for r in scan.rows if r[2] == "bounded" and (not div or r[0] < min(div))]
    if not div or not bnd:
        exc = InconclusiveTrend("the scan has no bounded mu below a diverging mu")
        exc.scan = scan
        raise exc
    scan.bracket = (max(bnd), min(div))
    return scan
