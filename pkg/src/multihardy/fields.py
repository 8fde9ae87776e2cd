"""Evaluatable scalar fields carrying a description of their singular structure.

A :class:`ScalarField` bundles a value function with an optional closed-form
gradient and Laplacian (central finite differences otherwise) and a
:class:`Profile`.  The profile lists, for each pole, the leading power
``|x-a|^alpha``, the radius inside which the field vanishes, and the radii
of spheres across which it is only piecewise smooth.  It also records where
the support ends.  The quadrature engine reads nothing else, so every
algebraic operation below propagates the profile alongside the values.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .errors import NonpositiveField

FD_STEP = 1e-5
FD_STEP_LAPLACIAN = 1e-4
_MATCH_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class Profile:
    """Singular and support structure of a field.

    Attributes
    ----------
    poles : ndarray, shape (m, N)
    exponents : ndarray, shape (m,)
        Leading exponent ``alpha`` with ``field = O(|x-a|^alpha)`` at each pole.
        A listed pole is never assumed smooth, so ``alpha = 0`` means bounded.
    inner : ndarray, shape (m,)
        The field vanishes on ``|x-a| < inner`` (0 when it does not).
    breaks : tuple of tuple of float
        Radii about each pole where the field is only piecewise smooth.
    reach : float
        The field vanishes outside the union of ``B(a_i, reach)``.
    far_center : ndarray or None
        Center of far-field spheres listed in ``far_breaks`` and ``outer``.
    far_breaks : tuple of float
    outer : float
        The field vanishes for ``|x - far_center| > outer``.
    tail : float
        Growth exponent at infinity: ``field = O(|x|^tail)``.
    support : tuple (center, radius) or None
        A ball containing the support.
    """

    poles: np.ndarray
    exponents: np.ndarray
    inner: np.ndarray
    breaks: tuple
    reach: float = np.inf
    far_center: Optional[np.ndarray] = None
    far_breaks: tuple = ()
    outer: float = np.inf
    tail: float = 0.0
    support: Optional[tuple] = None

    @classmethod
    def regular(cls, dim: int, tail: float = 0.0, support=None) -> "Profile":
        return cls(np.zeros((0, dim)), np.zeros(0), np.zeros(0), (), tail=tail, support=support)

    @classmethod
    def at_poles(cls, poles, exponents, inner=None, breaks=None, **kw) -> "Profile":
        poles = np.asarray(poles, dtype=float).reshape(-1, np.shape(poles)[-1])
        m = len(poles)
        exps = np.broadcast_to(np.asarray(exponents, dtype=float), (m,)).copy()
        inner = np.zeros(m) if inner is None else np.broadcast_to(np.asarray(inner, float), (m,)).copy()
        breaks = tuple(() for _ in range(m)) if breaks is None else tuple(tuple(b) for b in breaks)
        return cls(poles, exps, inner, breaks, **kw)

    @property
    def dim(self) -> int:
        return self.poles.shape[1]

    def _aligned(self, other: "Profile"):
        """Union of both pole lists with per-profile data laid out on it."""
        pts = list(self.poles)
        idx_other = []
        for p in other.poles:
            hit = [k for k, q in enumerate(pts) if np.linalg.norm(p - q) <= _MATCH_TOL * (1 + np.linalg.norm(p))]
            if hit:
                idx_other.append(hit[0])
            else:
                pts.append(p)
                idx_other.append(len(pts) - 1)
        m = len(pts)
        poles = np.array(pts).reshape(m, self.dim)

        def lay(prof, idx):
            e = np.zeros(m)
            inn = np.zeros(m)
            br = [()] * m
            present = np.zeros(m, bool)
            for k, j in enumerate(idx):
                e[j], inn[j], br[j] = prof.exponents[k], prof.inner[k], prof.breaks[k]
                present[j] = True
            return e, inn, br, present

        return poles, lay(self, range(len(self.poles))), lay(other, idx_other)

    def _far(self, other):
        center = self.far_center if self.far_center is not None else other.far_center
        breaks = tuple(sorted(set(self.far_breaks) | set(other.far_breaks)))
        return center, breaks

    def times(self, other: "Profile") -> "Profile":
        poles, (ea, ia, ba, _), (eb, ib, bb, _) = self._aligned(other)
        center, fb = self._far(other)
        support = _smaller_ball(self.support, other.support)
        return Profile(
            poles,
            ea + eb,
            np.maximum(ia, ib),
            tuple(tuple(sorted(set(x) | set(y))) for x, y in zip(ba, bb)),
            reach=min(self.reach, other.reach),
            far_center=center,
            far_breaks=fb,
            outer=min(self.outer, other.outer),
            tail=self.tail + other.tail,
            support=support,
        )

    def plus(self, other: "Profile") -> "Profile":
        poles, (ea, ia, ba, pa), (eb, ib, bb, pb) = self._aligned(other)
        center, fb = self._far(other)
        inner = np.where(pa & pb, np.minimum(ia, ib), 0.0)
        return Profile(
            poles,
            np.minimum(ea, eb),
            inner,
            tuple(tuple(sorted(set(x) | set(y))) for x, y in zip(ba, bb)),
            reach=max(self.reach, other.reach),
            far_center=center,
            far_breaks=fb,
            outer=max(self.outer, other.outer),
            tail=max(self.tail, other.tail),
            support=_enclosing_ball(self.support, other.support),
        )

    def power(self, p: float) -> "Profile":
        return replace(self, exponents=self.exponents * p, tail=self.tail * p)

    def gradient_energy(self) -> "Profile":
        """Profile of ``|grad f|^2``."""
        return replace(self, exponents=2 * (self.exponents - 1), tail=2 * (self.tail - 1))

    def with_poles(self, poles) -> "Profile":
        """Same profile with extra (regular) poles appended so lists line up."""
        return self.times(Profile.at_poles(poles, 0.0))


def _smaller_ball(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return a if a[1] <= b[1] else b


def _enclosing_ball(a, b):
    if a is None or b is None:
        return None
    ca, ra = np.asarray(a[0]), a[1]
    cb, rb = np.asarray(b[0]), b[1]
    dist = np.linalg.norm(cb - ca)
    if dist + rb <= ra:
        return a
    if dist + ra <= rb:
        return b
    r = 0.5 * (dist + ra + rb)
    c = ca + (cb - ca) * ((r - ra) / dist)
    return (c, r)


Func = Callable[[np.ndarray], np.ndarray]


class ScalarField:
    """A scalar field ``x -> value`` on ``R^N`` with optional derivatives.

    Parameters
    ----------
    dim : int
    value : callable
        Maps points of shape ``(m, N)`` to values of shape ``(m,)``.
    gradient, laplacian : callable, optional
        Closed forms with shapes ``(m, N)`` and ``(m,)``.  When absent,
        central finite differences with step ``1e-5 * scale`` (gradient)
        and ``1e-4 * scale`` (Laplacian) are used.
    profile : Profile, optional
    scale : float
        Length scale for finite-difference steps.
    """

    def __init__(self, dim, value: Func, gradient: Func | None = None, laplacian: Func | None = None,
                 profile: Profile | None = None, scale: float = 1.0, name: str = ""):
        self.dim = int(dim)
        self._value = value
        self._gradient = gradient
        self._laplacian = laplacian
        self.profile = profile if profile is not None else Profile.regular(self.dim)
        self.scale = float(scale)
        self.name = name

    def __repr__(self):
        return f"ScalarField({self.name or 'anonymous'}, dim={self.dim})"

    @property
    def has_gradient(self) -> bool:
        return self._gradient is not None

    @property
    def has_laplacian(self) -> bool:
        return self._laplacian is not None

    @staticmethod
    def _flat(x, dim):
        x = np.asarray(x, dtype=float)
        return x.reshape(-1, dim), x.shape[:-1]

    def __call__(self, x):
        flat, shp = self._flat(x, self.dim)
        out = np.asarray(self._value(flat), dtype=float)
        return out.reshape(shp) if shp else float(out[0])

    def grad(self, x):
        flat, shp = self._flat(x, self.dim)
        g = self._gradient(flat) if self._gradient is not None else fd_gradient(self._value, flat, FD_STEP * self.scale)
        return np.asarray(g).reshape(shp + (self.dim,))

    def lap(self, x):
        flat, shp = self._flat(x, self.dim)
        if self._laplacian is not None:
            out = self._laplacian(flat)
        else:
            out = fd_laplacian(self._value, flat, FD_STEP_LAPLACIAN * self.scale)
        out = np.asarray(out)
        return out.reshape(shp) if shp else float(out[0])

    # -- algebra -----------------------------------------------------------

    def __mul__(self, other):
        if np.isscalar(other):
            return self.scaled(float(other))
        return multiply(self, other)

    __rmul__ = __mul__

    def __add__(self, other):
        return add(self, other)

    def scaled(self, c: float) -> "ScalarField":
        f = self
        return ScalarField(
            self.dim,
            lambda x: c * f._value(x),
            (lambda x: c * f.grad(x)) if f.has_gradient else None,
            (lambda x: c * f.lap(x)) if f.has_laplacian else None,
            self.profile,
            self.scale,
            f"{c}*{self.name}",
        )

    def power(self, p: float) -> "ScalarField":
        return power(self, p)

    def with_profile(self, profile: Profile) -> "ScalarField":
        return ScalarField(self.dim, self._value, self._gradient, self._laplacian, profile, self.scale, self.name)

    def renamed(self, name: str) -> "ScalarField":
        return ScalarField(self.dim, self._value, self._gradient, self._laplacian, self.profile, self.scale, name)


def fd_gradient(func: Func, x: np.ndarray, h: float) -> np.ndarray:
    m, N = x.shape
    g = np.empty((m, N))
    for k in range(N):
        e = np.zeros(N)
        e[k] = h
        g[:, k] = (func(x + e) - func(x - e)) / (2 * h)
    return g


def fd_laplacian(func: Func, x: np.ndarray, h: float) -> np.ndarray:
    m, N = x.shape
    c = func(x)
    out = np.zeros(m)
    for k in range(N):
        e = np.zeros(N)
        e[k] = h
        out += (func(x + e) - 2 * c + func(x - e)) / (h * h)
    return out


def constant(dim: int, c: float = 1.0) -> ScalarField:
    return ScalarField(
        dim,
        lambda x: np.full(len(x), c),
        lambda x: np.zeros_like(x),
        lambda x: np.zeros(len(x)),
        Profile.regular(dim),
        name=f"const({c})",
    )


def multiply(f: ScalarField, g: ScalarField) -> ScalarField:
    grad = None
    lap = None
    if f.has_gradient and g.has_gradient:
        def grad(x):
            return f._value(x)[:, None] * g.grad(x) + g._value(x)[:, None] * f.grad(x)

        if f.has_laplacian and g.has_laplacian:
            def lap(x):
                return f._value(x) * g.lap(x) + g._value(x) * f.lap(x) + 2 * np.einsum("ij,ij->i", f.grad(x), g.grad(x))

    return ScalarField(
        f.dim, lambda x: f._value(x) * g._value(x), grad, lap,
        f.profile.times(g.profile), min(f.scale, g.scale), f"({f.name})*({g.name})",
    )


def add(f: ScalarField, g: ScalarField) -> ScalarField:
    grad = (lambda x: f.grad(x) + g.grad(x)) if (f.has_gradient and g.has_gradient) else None
    lap = (lambda x: f.lap(x) + g.lap(x)) if (f.has_laplacian and g.has_laplacian) else None
    return ScalarField(
        f.dim, lambda x: f._value(x) + g._value(x), grad, lap,
        f.profile.plus(g.profile), min(f.scale, g.scale), f"({f.name})+({g.name})",
    )


def power(f: ScalarField, p: float) -> ScalarField:
    """``f**p`` for a field that is positive wherever it is evaluated."""

    def value(x):
        v = f._value(x)
        if np.any(v <= 0):
            raise NonpositiveField(f"power {p} of a field with nonpositive values")
        return v**p

    grad = lap = None
    if f.has_gradient:
        def grad(x):
            v = f._value(x)
            return (p * v ** (p - 1))[:, None] * f.grad(x)

        if f.has_laplacian:
            def lap(x):
                v = f._value(x)
                g = f.grad(x)
                return p * v ** (p - 1) * f.lap(x) + p * (p - 1) * v ** (p - 2) * (g * g).sum(-1)

    return ScalarField(f.dim, value, grad, lap, f.profile.power(p), f.scale, f"({f.name})^{p}")


def gradient_energy(f: ScalarField) -> ScalarField:
    """The scalar field ``|grad f|^2`` (value only)."""

    def value(x):
        g = f.grad(x)
        return (g * g).sum(-1)

    return ScalarField(f.dim, value, profile=f.profile.gradient_energy(), scale=f.scale, name=f"|grad {f.name}|^2")


def from_function(dim: int, value: Func, profile: Profile, scale: float = 1.0, name: str = "") -> ScalarField:
    """Value-only field, typically an integrand assembled from other fields."""
    return ScalarField(dim, value, profile=profile, scale=scale, name=name)


def smooth_step(t):
    """C-infinity step: 1 for ``t <= 0``, 0 for ``t >= 1``."""
    t = np.asarray(t, dtype=float)
    a = np.where(t < 1, np.exp(-1.0 / np.maximum(1.0 - t, 1e-300)), 0.0)
    b = np.where(t > 0, np.exp(-1.0 / np.maximum(t, 1e-300)), 0.0)
    a = np.where(t <= 0, 1.0, a)
    return np.where(t >= 1, 0.0, np.where(t <= 0, 1.0, a / (a + b)))
