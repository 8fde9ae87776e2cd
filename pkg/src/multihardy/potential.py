"""Multipolar inverse-square potentials and sampled infima over regions."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Literal

import numpy as np
from scipy import optimize, special
from scipy.stats import qmc

from . import kernels
from .errors import ConfigInvalid, EmptyRegion, EvaluationAtPole
from .fields import Profile, ScalarField
from .geometry import Domain, PoleConfiguration

PotentialKind = Literal["pairwise", "sum-inverse-square", "single"]


@dataclass(frozen=True, eq=False)
class PotentialField:
    """An inverse-square potential attached to a pole configuration.

    Parameters
    ----------
    config : PoleConfiguration
    kind : {"pairwise", "sum-inverse-square", "single"}
        ``pairwise`` is ``sum_{i<j} |a_i-a_j|^2 / (|x-a_i|^2 |x-a_j|^2)``;
        ``single`` keeps only the pole ``index``.
    delta : float
        Regularization length; every ``|x-a_i|^2`` becomes ``|x-a_i|^2 + delta^2``.
    index : int
        Pole used by the ``single`` kind.
    """

    config: PoleConfiguration
    kind: PotentialKind = "pairwise"
    delta: float = 0.0
    index: int = 0

    def __post_init__(self):
        if self.kind not in ("pairwise", "sum-inverse-square", "single"):
            raise ConfigInvalid("potential.kind", f"unknown kind {self.kind!r}")
        if self.delta < 0:
            raise ConfigInvalid("potential.delta", "must be nonnegative")

    @property
    def poles(self) -> np.ndarray:
        return self.config.poles

    @property
    def tail_exponent(self) -> float:
        """Decay exponent of the field at infinity."""
        return -4.0 if self.kind == "pairwise" else -2.0

    def __call__(self, x):
        return evaluate(self, x)


def evaluate(field: PotentialField, x):
    """Evaluate the potential at points ``x`` of shape ``(..., N)``."""
    x = np.asarray(x, dtype=float)
    flat = x.reshape(-1, x.shape[-1])
    if field.delta == 0.0:
        r = np.linalg.norm(flat[:, None, :] - field.poles[None], axis=-1)
        if np.any(r <= 1e-14 * field.config.domain.scale):
            raise EvaluationAtPole("potential evaluated at a pole with delta = 0")
    if field.kind == "pairwise":
        out = kernels.pairwise_potential(flat, field.poles, field.delta)
    elif field.kind == "sum-inverse-square":
        out = kernels.sum_inverse_square(flat, field.poles, field.delta)
    else:
        out = kernels.sum_inverse_square(flat, field.poles[field.index : field.index + 1], field.delta)
    return out.reshape(x.shape[:-1]) if x.ndim > 1 else float(out[0])


def as_scalar_field(field: PotentialField) -> ScalarField:
    """Wrap a potential as a :class:`ScalarField` with its singular profile."""
    poles = field.poles if field.kind != "single" else field.poles[field.index : field.index + 1]
    exps = np.full(len(poles), -2.0 if field.delta == 0 else 0.0)
    # a regularized pole still varies on the scale delta: keep it as a break
    breaks = [(field.delta,) if field.delta > 0 else () for _ in poles]
    prof = Profile.at_poles(poles, exps, breaks=breaks, tail=field.tail_exponent)

    def value(x):
        return np.asarray(evaluate(field, x), dtype=float).reshape(len(x))

    return ScalarField(field.config.dim, value, profile=prof, scale=field.config.domain.scale, name=f"V[{field.kind}]")


def local_limit(field: PotentialField, i: int) -> float:
    """``lim V(x)|x-a_i|^2`` as ``x -> a_i`` for the exact pairwise potential.

    Every other pole contributes ``|a_i-a_j|^2 / |a_i-a_j|^2 = 1``.
    """
    if field.kind != "pairwise" or field.delta != 0.0:
        raise ConfigInvalid("potential", "local limit is defined for the exact pairwise potential")
    a = field.poles
    others = np.delete(np.arange(len(a)), i)
    return float(sum(np.sum((a[i] - a[j]) ** 2) / np.sum((a[i] - a[j]) ** 2) for j in others))


def local_limit_numeric(field: PotentialField, i: int, radii=None, seed=0):
    """Values of ``V(x)|x-a_i|^2`` along a shrinking sequence towards ``a_i``."""
    if radii is None:
        radii = np.logspace(-1, -7, 7) * field.config.d
    rng = np.random.default_rng(seed)
    direction = rng.standard_normal(field.config.dim)
    direction /= np.linalg.norm(direction)
    if field.config.placement == "boundary":
        nrm = field.config.domain.inward_normal(field.poles[i])
        direction = nrm + 0.5 * (direction - (direction @ nrm) * nrm)
        direction /= np.linalg.norm(direction)
    pts = field.poles[i] + np.outer(radii, direction)
    return np.asarray(radii), evaluate(field, pts) * np.asarray(radii) ** 2


def comparability_radius(field: PotentialField, i: int, eta: float) -> float:
    """A radius ``r`` such that ``|V(x)|x-a_i|^2 - (n-1)| <= eta`` on ``B_r(a_i)``.

    With ``D_j = |a_i-a_j|`` and ``s = |x-a_i|`` one has
    ``V s^2 = sum_j D_j^2/|x-a_j|^2 + s^2 sum_{j<k} |a_j-a_k|^2/(|x-a_j|^2 |x-a_k|^2)``
    (indices ``j, k != i``), and ``D_j - s <= |x-a_j| <= D_j + s``.  Both
    resulting one-sided bounds are monotone in ``s``; the radius is found by
    bisection.
    """
    a = field.poles
    others = [j for j in range(len(a)) if j != i]
    D = np.array([np.linalg.norm(a[i] - a[j]) for j in others])
    pairs = [(p, q, np.sum((a[others[p]] - a[others[q]]) ** 2)) for p in range(len(others)) for q in range(p + 1, len(others))]
    n1 = len(others)

    def worst(s):
        up = np.sum((D / (D - s)) ** 2) - n1
        up += s * s * sum(w / ((D[p] - s) ** 2 * (D[q] - s) ** 2) for p, q, w in pairs)
        lo = n1 - np.sum((D / (D + s)) ** 2)
        return max(up, lo)

    lo, hi = 0.0, 0.999 * D.min()
    if worst(hi) <= eta:
        return float(hi)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if worst(mid) <= eta:
            lo = mid
        else:
            hi = mid
    return float(lo)


# ---------------------------------------------------------------------------
# regions and sampled infima


class Region:
    """A sampling region: maps points of the unit cube onto itself."""

    dim: int
    param_dim: int

    def from_unit(self, u):
        raise NotImplementedError

    def contains(self, x):
        raise NotImplementedError


def _unit_to_sphere(u, dim):
    """Map ``u`` in the open unit cube of dimension ``dim`` onto the unit sphere."""
    g = special.ndtri(np.clip(u, 1e-12, 1 - 1e-12))
    return g / np.linalg.norm(g, axis=-1, keepdims=True)


@dataclass(frozen=True, eq=False)
class Shell(Region):
    """Spherical shell ``r_in <= |x - center| <= r_out``."""

    center: np.ndarray
    r_in: float
    r_out: float

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))
        if not (0 <= self.r_in <= self.r_out):
            raise EmptyRegion("shell radii must satisfy 0 <= r_in <= r_out")

    @property
    def dim(self):
        return len(self.center)

    @property
    def param_dim(self):
        return self.dim + 1

    def from_unit(self, u):
        N = self.dim
        r = (self.r_in**N + u[:, 0] * (self.r_out**N - self.r_in**N)) ** (1.0 / N)
        return self.center + r[:, None] * _unit_to_sphere(u[:, 1:], N)

    def contains(self, x):
        r = np.linalg.norm(np.asarray(x) - self.center, axis=-1)
        return (r >= self.r_in * (1 - 1e-12)) & (r <= self.r_out * (1 + 1e-12))


@dataclass(frozen=True, eq=False)
class DomainRegion(Region):
    """A bounded domain with optional balls of radius ``margin`` removed around points."""

    domain: Domain
    exclude: np.ndarray | None = None
    margin: float = 0.0

    def __post_init__(self):
        if not self.domain.bounded:
            raise EmptyRegion("sampling needs a bounded domain")

    @property
    def dim(self):
        return self.domain.dim

    @property
    def param_dim(self):
        return self.dim

    def from_unit(self, u):
        c, R = self.domain.center, self.domain.bounding_radius()
        return c + R * (2 * u - 1)

    def contains(self, x):
        ok = self.domain.inside(x)
        if self.exclude is not None and self.margin > 0:
            r = np.linalg.norm(np.asarray(x)[..., None, :] - self.exclude, axis=-1)
            ok &= (r > self.margin).all(-1)
        return ok


@dataclass
class SampledInfimum:
    value: float
    point: np.ndarray
    samples: int


def sampled_infimum(
    func: Callable[[np.ndarray], np.ndarray],
    region: Region,
    samples: int = 4096,
    seed: int = 0,
    polish: int = 4,
) -> SampledInfimum:
    """Estimate ``inf func`` over ``region`` by Sobol sampling plus Nelder-Mead polish.

    The result is an upper estimate of the true infimum; ``polish`` best
    samples are refined locally in the region's unit-cube parametrization.
    """
    sob = qmc.Sobol(region.param_dim, scramble=True, seed=seed)
    m = 1 << int(np.ceil(np.log2(max(samples, 2))))
    u = sob.random(m)[:samples]
    x = region.from_unit(u)
    keep = region.contains(x)
    if not keep.any():
        raise EmptyRegion("no sample fell inside the region")
    u, x = u[keep], x[keep]
    vals = np.asarray(func(x), dtype=float)
    order = np.argsort(vals)
    best_v, best_x = float(vals[order[0]]), x[order[0]]

    def obj(p):
        p = np.clip(p, 1e-9, 1 - 1e-9)[None]
        y = region.from_unit(p)
        if not region.contains(y)[0]:
            return np.inf
        return float(np.asarray(func(y))[0])

    for k in order[:polish]:
        res = optimize.minimize(obj, u[k], method="Nelder-Mead", options=dict(xatol=1e-10, fatol=1e-14, maxiter=400))
        if np.isfinite(res.fun) and res.fun < best_v:
            best_v = float(res.fun)
            best_x = region.from_unit(np.clip(res.x, 1e-9, 1 - 1e-9)[None])[0]
    return SampledInfimum(best_v, np.asarray(best_x), int(keep.sum()))


def infimum_over_region(field: PotentialField, region: Region, samples: int = 4096, seed: int = 0) -> SampledInfimum:
    """Sampled lower estimate of ``inf V`` over ``region`` with its minimizer."""
    def f(x):
        with np.errstate(divide="ignore"):
            try:
                return evaluate(field, x)
            except EvaluationAtPole:
                return np.full(len(x), np.inf)

    return sampled_infimum(f, region, samples=samples, seed=seed)
