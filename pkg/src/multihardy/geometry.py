"""Domains, pole configurations and the metric quantities derived from them.

All domains are immutable and their methods accept stacked points of shape
``(..., N)``.  Each domain has a natural length ``scale`` (radius, longest
side, largest semi-axis, or 1 for a half-space) that sets every tolerance
used downstream.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .errors import (
    ConfigInvalid,
    DimensionMismatch,
    DimensionRestriction,
    DuplicatePole,
    MixedPlacement,
    UnsupportedDomain,
)

BOUNDARY_TOL = 1e-9


def _as_points(x, dim):
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != dim:
        raise DimensionMismatch(f"expected points of dimension {dim}, got shape {x.shape}")
    return x


def _frozen_array(obj, name, value):
    arr = np.array(value, dtype=float)
    arr.setflags(write=False)
    object.__setattr__(obj, name, arr)


def _sphere_hits(origin, dirs, center, radius):
    """Parameters t at which rays origin + t*dir meet a sphere (nan if missed)."""
    w = origin - center
    b = dirs @ w
    c = w @ w - radius**2
    disc = b * b - c
    root = np.sqrt(np.where(disc > 0, disc, np.nan))
    return -b - root, -b + root


class Domain:
    """Common interface; concrete kinds are frozen dataclasses below."""

    dim: int
    bounded: bool
    center: np.ndarray

    @property
    def scale(self) -> float:
        raise NotImplementedError

    def signed_distance(self, x):
        """Distance to the boundary, positive inside and negative outside."""
        raise NotImplementedError

    def inside(self, x):
        return self.signed_distance(x) > BOUNDARY_TOL * self.scale

    def boundary_distance(self, x):
        return np.abs(self.signed_distance(x))

    def on_boundary(self, x, tol=BOUNDARY_TOL):
        return np.abs(self.signed_distance(x)) <= tol * self.scale

    def inward_normal(self, p):
        raise UnsupportedDomain(f"{type(self).__name__} has no normal field")

    def ray_intervals(self, origin, dirs):
        """Parameter intervals ``[t0, t1]``, ``t >= 0``, where rays lie inside.

        Returns two arrays of shape ``(k, J)``; an interval with ``t0 >= t1``
        is empty.  ``t1`` may be ``inf`` for unbounded domains.
        """
        raise UnsupportedDomain(f"{type(self).__name__} does not support ray casting")

    def bounding_radius(self) -> float:
        """Radius of a ball about ``center`` containing the domain (inf if unbounded)."""
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class Ball(Domain):
    center: np.ndarray
    radius: float
    bounded: bool = field(default=True, init=False)

    def __post_init__(self):
        _frozen_array(self, "center", self.center)
        if not self.radius > 0:
            raise ConfigInvalid("domain.radius", "must be positive")

    @property
    def dim(self):
        return len(self.center)

    @property
    def scale(self):
        return float(self.radius)

    def signed_distance(self, x):
        x = _as_points(x, self.dim)
        return self.radius - np.linalg.norm(x - self.center, axis=-1)

    def inward_normal(self, p):
        v = self.center - np.asarray(p, dtype=float)
        return v / np.linalg.norm(v)

    def ray_intervals(self, origin, dirs):
        origin = np.asarray(origin, dtype=float)
        t0, t1 = _sphere_hits(origin, dirs, self.center, self.radius)
        lo = np.nan_to_num(np.maximum(t0, 0.0), nan=0.0)
        hi = np.nan_to_num(np.maximum(t1, 0.0), nan=0.0)
        return lo[:, None], hi[:, None]

    def bounding_radius(self):
        return float(self.radius)


@dataclass(frozen=True, eq=False)
class ExteriorBall(Domain):
    center: np.ndarray
    radius: float
    bounded: bool = field(default=False, init=False)

    def __post_init__(self):
        _frozen_array(self, "center", self.center)
        if not self.radius > 0:
            raise ConfigInvalid("domain.radius", "must be positive")

    @property
    def dim(self):
        return len(self.center)

    @property
    def scale(self):
        return float(self.radius)

    def signed_distance(self, x):
        x = _as_points(x, self.dim)
        return np.linalg.norm(x - self.center, axis=-1) - self.radius

    def inward_normal(self, p):
        v = np.asarray(p, dtype=float) - self.center
        return v / np.linalg.norm(v)

    def ray_intervals(self, origin, dirs):
        origin = np.asarray(origin, dtype=float)
        k = len(dirs)
        t0, t1 = _sphere_hits(origin, dirs, self.center, self.radius)
        clear = np.isnan(t0) | (t1 <= 0)
        lo = np.zeros((k, 2))
        hi = np.zeros((k, 2))
        # before entering the excluded ball, and after leaving it
        hi[:, 0] = np.where(clear, np.inf, np.maximum(np.nan_to_num(t0), 0.0))
        lo[:, 1] = np.where(clear, 0.0, np.nan_to_num(t1))
        hi[:, 1] = np.where(clear, 0.0, np.inf)
        return lo, hi

    def bounding_radius(self):
        return np.inf


@dataclass(frozen=True)
class HalfSpace(Domain):
    """``{x : x[axis] > offset}`` in dimension ``dim``."""

    dim: int
    axis: int = -1
    offset: float = 0.0
    bounded: bool = field(default=False, init=False)

    def __post_init__(self):
        if self.dim < 1:
            raise ConfigInvalid("domain.dim", "must be positive")
        if not -self.dim <= self.axis < self.dim:
            raise ConfigInvalid("domain.axis", "out of range")

    @property
    def normal(self):
        e = np.zeros(self.dim)
        e[self.axis] = 1.0
        return e

    @property
    def center(self):
        c = np.zeros(self.dim)
        c[self.axis] = self.offset
        return c

    @property
    def scale(self):
        return 1.0

    def signed_distance(self, x):
        x = _as_points(x, self.dim)
        return x[..., self.axis] - self.offset

    def inward_normal(self, p):
        return self.normal

    def ray_intervals(self, origin, dirs):
        origin = np.asarray(origin, dtype=float)
        h = origin[self.axis] - self.offset
        s = dirs[:, self.axis]
        with np.errstate(divide="ignore", invalid="ignore"):
            tc = np.where(s != 0, -h / s, np.inf)
        if h > 0:
            lo = np.zeros(len(s))
            hi = np.where(s < 0, tc, np.inf)
        else:
            lo = np.where(s > 0, tc, 0.0)
            hi = np.where(s > 0, np.inf, 0.0)
        return lo[:, None], hi[:, None]

    def bounding_radius(self):
        return np.inf


@dataclass(frozen=True, eq=False)
class Box(Domain):
    lower: np.ndarray
    upper: np.ndarray
    bounded: bool = field(default=True, init=False)

    def __post_init__(self):
        _frozen_array(self, "lower", self.lower)
        _frozen_array(self, "upper", self.upper)
        if self.lower.shape != self.upper.shape or not np.all(self.lower < self.upper):
            raise ConfigInvalid("domain.upper", "lower < upper must hold componentwise")

    @property
    def dim(self):
        return len(self.lower)

    @property
    def lo(self):
        return self.lower

    @property
    def hi(self):
        return self.upper

    @property
    def center(self):
        return 0.5 * (self.lo + self.hi)

    @property
    def scale(self):
        return float(np.max(self.hi - self.lo))

    def signed_distance(self, x):
        x = _as_points(x, self.dim)
        inner = np.minimum(x - self.lo, self.hi - x).min(axis=-1)
        gap = np.maximum(np.maximum(self.lo - x, x - self.hi), 0.0)
        return np.where(inner >= 0, inner, -np.linalg.norm(gap, axis=-1))

    def inward_normal(self, p):
        p = np.asarray(p, dtype=float)
        d = np.concatenate([p - self.lo, self.hi - p])
        k = int(np.argmin(d))
        e = np.zeros(self.dim)
        e[k % self.dim] = 1.0 if k < self.dim else -1.0
        return e

    def ray_intervals(self, origin, dirs):
        origin = np.asarray(origin, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            ta = (self.lo - origin) / dirs
            tb = (self.hi - origin) / dirs
        tmin = np.where(dirs == 0, np.where((origin >= self.lo) & (origin <= self.hi), -np.inf, np.inf), np.minimum(ta, tb))
        tmax = np.where(dirs == 0, np.where((origin >= self.lo) & (origin <= self.hi), np.inf, -np.inf), np.maximum(ta, tb))
        lo = np.maximum(tmin.max(axis=1), 0.0)
        hi = np.maximum(tmax.min(axis=1), 0.0)
        return lo[:, None], hi[:, None]

    def bounding_radius(self):
        return float(0.5 * np.linalg.norm(self.hi - self.lo))


@dataclass(frozen=True)
class Ellipse2D(Domain):
    """Centered ellipse ``x1^2/a^2 + x2^2/b^2 < 1``; inside test and boundary only."""

    a: float
    b: float
    bounded: bool = field(default=True, init=False)

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0):
            raise ConfigInvalid("domain.semi_axes", "must be positive")

    @property
    def dim(self):
        return 2

    @property
    def center(self):
        return np.zeros(2)

    @property
    def scale(self):
        return float(max(self.a, self.b))

    def boundary_point(self, t):
        t = np.asarray(t, dtype=float)
        return np.stack([self.a * np.cos(t), self.b * np.sin(t)], axis=-1)

    def implicit(self, x):
        x = _as_points(x, 2)
        return 1.0 - x[..., 0] ** 2 / self.a**2 - x[..., 1] ** 2 / self.b**2

    def signed_distance(self, x):
        x = _as_points(x, 2)
        flat = x.reshape(-1, 2)
        # coarse parameter scan, then Newton on the squared distance
        ts = np.linspace(0, 2 * np.pi, 257)[:-1]
        bp = self.boundary_point(ts)
        d2 = ((flat[:, None, :] - bp[None]) ** 2).sum(-1)
        t = ts[np.argmin(d2, axis=1)]
        a, b = self.a, self.b
        for _ in range(30):
            c, s = np.cos(t), np.sin(t)
            px, py = a * c - flat[:, 0], b * s - flat[:, 1]
            g = -a * s * px + b * c * py
            h = (a * s) ** 2 + (b * c) ** 2 - a * c * px - b * s * py
            t = t - g / np.where(np.abs(h) > 1e-300, h, 1.0)
        dist = np.linalg.norm(self.boundary_point(t) - flat, axis=-1)
        sign = np.where(self.implicit(flat) >= 0, 1.0, -1.0)
        return (sign * dist).reshape(x.shape[:-1])

    def inward_normal(self, p):
        p = np.asarray(p, dtype=float)
        g = -np.array([2 * p[0] / self.a**2, 2 * p[1] / self.b**2])
        return g / np.linalg.norm(g)

    def ray_intervals(self, origin, dirs):
        o = np.asarray(origin, dtype=float)
        D = np.array([1 / self.a**2, 1 / self.b**2])
        A = (dirs**2) @ D
        B = 2 * (dirs * o) @ D
        C = o**2 @ D - 1.0
        disc = B * B - 4 * A * C
        root = np.sqrt(np.maximum(disc, 0.0))
        t0 = np.where(disc > 0, np.maximum((-B - root) / (2 * A), 0.0), 0.0)
        t1 = np.where(disc > 0, np.maximum((-B + root) / (2 * A), 0.0), 0.0)
        return t0[:, None], t1[:, None]

    def bounding_radius(self):
        return self.scale


def inside(domain: Domain, x) -> np.ndarray | bool:
    """True where ``x`` lies strictly inside ``domain``."""
    out = domain.inside(x)
    return bool(out) if np.ndim(out) == 0 else out


def boundary_distance(domain: Domain, x):
    """Distance from ``x`` to the boundary of ``domain`` (0 on the boundary)."""
    out = domain.boundary_distance(x)
    return float(out) if np.ndim(out) == 0 else out


Placement = Literal["interior", "boundary"]


@dataclass(frozen=True, eq=False)
class PoleConfiguration:
    """Poles together with their placement and derived separations.

    Attributes
    ----------
    domain : Domain
    poles : ndarray, shape (n, N)
    placement : {"interior", "boundary"}
    d : float
        Minimal pairwise distance between poles.
    d_gamma : float
        Minimal distance of a pole to the boundary (0 for boundary placement).
    M : float
        ``min(d, d_gamma)``.
    """

    domain: Domain
    poles: np.ndarray
    placement: Placement
    d: float
    d_gamma: float
    M: float

    @property
    def n(self) -> int:
        return len(self.poles)

    @property
    def dim(self) -> int:
        return self.poles.shape[1]

    def distances(self, x):
        """``|x - a_i|`` for every pole, shape ``(..., n)``."""
        x = np.asarray(x, dtype=float)
        return np.linalg.norm(x[..., None, :] - self.poles, axis=-1)


def pole_metrics(domain: Domain, poles) -> PoleConfiguration:
    """Classify the poles and compute ``d``, ``d_gamma`` and ``M``."""
    poles = np.array(poles, dtype=float, ndmin=2)
    if poles.shape[1] != domain.dim:
        raise DimensionMismatch(f"poles have dimension {poles.shape[1]}, domain has {domain.dim}")
    n = len(poles)
    if n < 2:
        raise ConfigInvalid("poles", "at least two poles are required")
    pair = np.linalg.norm(poles[:, None] - poles[None], axis=-1)
    iu = np.triu_indices(n, 1)
    d = float(pair[iu].min())
    if d <= 1e-12 * domain.scale:
        raise DuplicatePole("two poles coincide")
    on_bd = domain.on_boundary(poles)
    interior = domain.inside(poles)
    outside = ~(on_bd | interior)
    if outside.any():
        raise ConfigInvalid(f"poles[{int(np.argmax(outside))}]", "lies outside the domain")
    if on_bd.any() and not on_bd.all():
        raise MixedPlacement("some poles are interior and some lie on the boundary")
    if on_bd.all():
        placement, d_gamma = "boundary", 0.0
    else:
        if domain.dim < 3:
            raise DimensionRestriction("interior poles require dimension N >= 3")
        placement = "interior"
        d_gamma = float(domain.boundary_distance(poles).min())
    return PoleConfiguration(domain, poles, placement, d, d_gamma, min(d, d_gamma))
