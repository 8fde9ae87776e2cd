"""Weights, supersolution residuals, exact minimizers, cutoffs and test functions.

Every constructor returns a :class:`~multihardy.fields.ScalarField` with
closed-form gradient (and Laplacian where it is cheap) and a profile that
declares the behaviour at each pole for the quadrature engine.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Literal, Sequence

import numpy as np

from . import kernels
from .errors import EpsTooLarge, NonpositiveField, NotAttained, UnsupportedDomain
from .fields import Profile, ScalarField, multiply
from .geometry import Ball, Domain, Ellipse2D, ExteriorBall, HalfSpace, PoleConfiguration


def pole_power_product(poles, exps, scale: float = 1.0, name: str = "") -> ScalarField:
    """``prod_i |x - a_i|^{e_i}`` with closed-form gradient and Laplacian."""
    poles = np.atleast_2d(np.asarray(poles, dtype=float))
    exps = np.broadcast_to(np.asarray(exps, dtype=float), (len(poles),)).copy()
    N = poles.shape[1]
    active = exps != 0
    P, E = poles[active], exps[active]

    def value(x):
        if not len(E):
            return np.ones(len(x))
        return kernels.power_product(x, P, E)[0]

    def grad(x):
        if not len(E):
            return np.zeros_like(x)
        return kernels.power_product(x, P, E)[1]

    def lap(x):
        if not len(E):
            return np.zeros(len(x))
        v, g = kernels.power_product(x, P, E)
        r2 = ((x[:, None, :] - P[None]) ** 2).sum(-1)
        loglap = ((N - 2) * E / r2).sum(-1)
        return (g * g).sum(-1) / v + v * loglap

    prof = Profile.at_poles(poles, exps, tail=float(exps.sum()))
    return ScalarField(N, value, grad, lap, prof, scale, name or "prod|x-a|^e")


def interior_weight(config: PoleConfiguration, i: int) -> ScalarField:
    """Fundamental-solution weight ``|x - a_i|^{-(N-2)}`` centred at pole ``i``."""
    N = config.dim
    exps = np.zeros(config.n)
    exps[i] = -(N - 2)
    return pole_power_product(config.poles, exps, config.domain.scale, f"phi_{i}")


@dataclass(frozen=True, eq=False)
class BoundaryWeight:
    """A weight ``f`` vanishing on the boundary, positive inside.

    Attributes
    ----------
    f : ScalarField
    kind : str
        Domain kind the weight is built for.
    domain : Domain
    """

    f: ScalarField
    kind: str
    domain: Domain

    def __call__(self, x):
        return self.f(x)


def boundary_weight(domain: Domain) -> BoundaryWeight:
    """The canonical boundary weight of ``domain``.

    Ball: ``r^2 - |x-x0|^2``; exterior ball: ``|x-x0|^2 - r^2``; half-space:
    the height above the boundary plane; ellipse: ``1 - x1^2/a^2 - x2^2/b^2``.
    """
    N = domain.dim
    if isinstance(domain, (Ball, ExteriorBall)):
        c, r = domain.center, domain.radius
        sgn = 1.0 if isinstance(domain, Ball) else -1.0
        f = ScalarField(
            N,
            lambda x: sgn * (r * r - ((x - c) ** 2).sum(-1)),
            lambda x: -2.0 * sgn * (x - c),
            lambda x: np.full(len(x), -2.0 * N * sgn),
            Profile.regular(N, tail=2.0),
            r,
            "f_ball" if sgn > 0 else "f_exterior",
        )
        return BoundaryWeight(f, type(domain).__name__, domain)
    if isinstance(domain, HalfSpace):
        e = domain.normal
        off = domain.offset
        ax = domain.axis
        f = ScalarField(
            N,
            lambda x: x[:, ax] - off,
            lambda x: np.broadcast_to(e, x.shape).copy(),
            lambda x: np.zeros(len(x)),
            Profile.regular(N, tail=1.0),
            1.0,
            "f_halfspace",
        )
        return BoundaryWeight(f, "HalfSpace", domain)
    if isinstance(domain, Ellipse2D):
        a2, b2 = domain.a**2, domain.b**2
        scal = np.array([1 / a2, 1 / b2])
        f = ScalarField(
            2,
            lambda x: 1.0 - (x * x * scal).sum(-1),
            lambda x: -2.0 * x * scal,
            lambda x: np.full(len(x), -2.0 * scal.sum()),
            Profile.regular(2, tail=2.0),
            domain.scale,
            "f_ellipse",
        )
        return BoundaryWeight(f, "Ellipse2D", domain)
    raise UnsupportedDomain(f"no canonical boundary weight for {type(domain).__name__}")


def boundary_pole_weight(domain: Domain, config: PoleConfiguration, i: int) -> ScalarField:
    """``f |x - a_i|^{-N}`` with the canonical boundary weight ``f``.

    Harmonic away from ``a_i`` exactly when ``S(f, a_i)`` vanishes.
    """
    N = config.dim
    exps = np.zeros(config.n)
    exps[i] = -N
    f = boundary_weight(domain).f
    return multiply(f, pole_power_product(config.poles, exps, domain.scale)).renamed(f"phi_{i}")


def supersolution_residual(f, pole, x, N: int | None = None):
    """``S(f, a) = -lap f |x-a|^2 + 2N grad f . (x-a) - 2N f`` at points ``x``."""
    fld = f.f if isinstance(f, BoundaryWeight) else f
    N = fld.dim if N is None else N
    x = np.asarray(x, dtype=float)
    flat = x.reshape(-1, fld.dim)
    diff = flat - np.asarray(pole, dtype=float)
    out = -fld.lap(flat) * (diff**2).sum(-1) + 2 * N * (fld.grad(flat) * diff).sum(-1) - 2 * N * fld(flat)
    return out.reshape(x.shape[:-1]) if x.ndim > 1 else float(out[0])


def _check_attained(domain: Domain, config: PoleConfiguration):
    n, N = config.n, config.dim
    if isinstance(domain, (Ball, HalfSpace)) and n < 3:
        raise NotAttained(f"the constant is not attained for n = {n} < 3 on {type(domain).__name__}")
    if isinstance(domain, ExteriorBall) and (n < 3 or N < 3):
        raise NotAttained("the exterior-ball constant is attained only for n >= 3 and N >= 3")


def exact_minimizer(domain: Domain, config: PoleConfiguration) -> ScalarField:
    """``f prod_i |x - a_i|^{-N/n}`` for boundary poles on a ball, exterior ball or half-space.

    The boundary weight vanishes linearly at every boundary pole, so the
    declared exponent at each pole is ``1 - N/n``.
    """
    if config.placement != "boundary":
        raise NotAttained("exact minimizers exist only for boundary poles")
    if not isinstance(domain, (Ball, ExteriorBall, HalfSpace)):
        raise UnsupportedDomain(f"no exact minimizer on {type(domain).__name__}")
    _check_attained(domain, config)
    n, N = config.n, config.dim
    w = boundary_weight(domain).f
    u = multiply(w, pole_power_product(config.poles, -N / n, domain.scale))
    prof = u.profile
    exps = np.full(len(prof.poles), 1.0 - N / n)
    return u.with_profile(replace(prof, exponents=exps)).renamed("exact_minimizer")


# ---------------------------------------------------------------------------
# cutoffs

CutoffVariant = Literal["InteriorBipolar", "BoundaryBall", "ExteriorOrHalfSpace"]


def default_cutoff_variant(domain: Domain, config: PoleConfiguration) -> str:
    if config.placement == "interior":
        return "InteriorBipolar"
    if isinstance(domain, (ExteriorBall, HalfSpace)):
        return "ExteriorOrHalfSpace"
    return "BoundaryBall"


def _ramp_pieces(r, eps):
    """Inner log ramp: 0 below eps^2, log(r/eps^2)/log(1/eps) up to eps, 1 beyond.

    Returns value and radial derivative; interfaces take the inner piece.
    """
    L = np.log(1.0 / eps)
    lo, hi = eps * eps, eps
    on = (r > lo) & (r <= hi)
    val = np.where(r <= lo, 0.0, np.where(on, np.log(np.maximum(r, lo) / lo) / L, 1.0))
    der = np.where(on, 1.0 / (np.maximum(r, lo) * L), 0.0)
    return val, der


def cutoff(domain: Domain, config: PoleConfiguration, eps: float, variant: str | None = None) -> ScalarField:
    """Logarithmic cutoff ``theta_eps`` vanishing near the poles.

    ``InteriorBipolar`` rises on ``[eps^2, eps]`` and falls back to zero on
    ``[eps, sqrt(eps)]`` around each pole.  ``BoundaryBall`` rises on
    ``[eps^2, eps]`` and stays 1 elsewhere.  ``ExteriorOrHalfSpace`` also
    decays logarithmically on ``[1/eps, 1/eps^2]`` about the far centre
    (ball centre, or the origin for a half-space).
    """
    variant = variant or default_cutoff_variant(domain, config)
    N, a = config.dim, config.poles
    if not 0 < eps < 1:
        raise EpsTooLarge("eps must lie in (0, 1)")
    L = np.log(1.0 / eps)

    def dists(x):
        diff = x[:, None, :] - a[None]
        return diff, np.sqrt((diff**2).sum(-1))

    if variant == "InteriorBipolar":
        if config.placement != "interior" or not eps < min(1.0, config.M**2 / 4):
            raise EpsTooLarge(f"need eps < min(1, M^2/4) = {min(1.0, config.M ** 2 / 4):.3g} with interior poles")
        lo, mid, hi = eps * eps, eps, np.sqrt(eps)

        def pieces(r):
            up = (r > lo) & (r <= mid)
            down = (r > mid) & (r <= hi)
            val = np.where(up, np.log(np.maximum(r, lo) / lo) / L, 0.0)
            val = np.where(down, 2 * np.log(hi / np.maximum(r, lo)) / L, val)
            der = np.where(up, 1 / (np.maximum(r, lo) * L), np.where(down, -2 / (np.maximum(r, lo) * L), 0.0))
            der2 = np.where(up, -1 / (np.maximum(r, lo) ** 2 * L), np.where(down, 2 / (np.maximum(r, lo) ** 2 * L), 0.0))
            return val, der, der2

        def value(x):
            return pieces(dists(x)[1])[0].sum(-1)

        def grad(x):
            diff, r = dists(x)
            der = pieces(r)[1]
            return (der[..., None] * diff / np.maximum(r, lo)[..., None]).sum(1)

        def lap(x):
            _, r = dists(x)
            _, der, der2 = pieces(r)
            return (der2 + (N - 1) * der / np.maximum(r, lo)).sum(-1)

        prof = Profile.at_poles(a, 0.0, inner=lo, breaks=[(lo, mid, hi)] * config.n, reach=hi)
        return ScalarField(N, value, grad, lap, prof, domain.scale, f"theta_int({eps:g})")

    if config.placement != "boundary":
        raise EpsTooLarge(f"{variant} cutoff needs boundary poles")
    if not eps < min(1.0, config.d / 2):
        raise EpsTooLarge(f"need eps < min(1, d/2) = {min(1.0, config.d / 2):.3g}")
    lo = eps * eps
    far = variant == "ExteriorOrHalfSpace"
    if far:
        if isinstance(domain, ExteriorBall):
            center = domain.center
        elif isinstance(domain, HalfSpace):
            center = np.zeros(N)
        else:
            raise UnsupportedDomain("far-field cutoff applies to exterior balls and half-spaces")
        if np.any(np.linalg.norm(a - center, axis=-1) > 1 / (2 * eps)):
            raise EpsTooLarge("poles must lie within distance 1/(2 eps) of the far centre")
    elif variant != "BoundaryBall":
        raise UnsupportedDomain(f"unknown cutoff variant {variant!r}")

    R1, R2 = 1 / eps, 1 / eps**2

    def far_piece(x):
        diff = x - center
        R = np.sqrt((diff**2).sum(-1))
        on = (R > R1) & (R <= R2)
        val = np.where(R <= R1, 1.0, np.where(on, np.log(1 / (eps * eps * np.maximum(R, R1))) / L, 0.0))
        der = np.where(on, -1 / (np.maximum(R, R1) * L), 0.0)
        return val, der[:, None] * diff / np.maximum(R, R1)[:, None]

    def value(x):
        v = _ramp_pieces(dists(x)[1], eps)[0].prod(-1)
        if far:
            v = v * far_piece(x)[0]
        return v

    def grad(x):
        diff, r = dists(x)
        h, dh = _ramp_pieces(r, eps)
        n = h.shape[1]
        g = np.zeros_like(x)
        for i in range(n):
            others = np.prod(np.delete(h, i, axis=1), axis=1)
            g += (others * dh[:, i])[:, None] * diff[:, i] / np.maximum(r[:, i], lo)[:, None]
        if far:
            fv, fg = far_piece(x)
            g = g * fv[:, None] + h.prod(-1)[:, None] * fg
        return g

    kw = {}
    if far:
        kw = dict(far_center=center, far_breaks=(R1, R2), outer=R2, tail=0.0)
    prof = Profile.at_poles(a, 0.0, inner=lo, breaks=[(lo, eps)] * config.n, **kw)
    return ScalarField(N, value, grad, None, prof, domain.scale, f"theta_{variant}({eps:g})")


def minimizing_sequence_element(domain: Domain, config: PoleConfiguration, eps: float,
                                variant: str | None = None) -> ScalarField:
    """Truncated minimizer used to approach the optimal constant.

    Interior poles: ``prod |x-a_i|^{-(N-2)/n} * theta_eps``.  Boundary poles:
    ``theta_eps * f * prod |x-a_i|^{-N/n}`` with the canonical weight ``f``.
    """
    n, N = config.n, config.dim
    theta = cutoff(domain, config, eps, variant)
    if config.placement == "interior":
        base = pole_power_product(config.poles, -(N - 2) / n, domain.scale)
        return multiply(base, theta).renamed(f"u_int({eps:g})")
    w = boundary_weight(domain).f
    base = multiply(w, pole_power_product(config.poles, -N / n, domain.scale))
    return multiply(theta, base).renamed(f"u_bd({eps:g})")


def product_weight(fields: Sequence[ScalarField]) -> ScalarField:
    """Geometric mean ``(phi_1 ... phi_n)^{1/n}`` of positive fields."""
    n = len(fields)
    dim = fields[0].dim

    def logs(x):
        vals = np.stack([f._value(x) for f in fields])
        if np.any(vals <= 0):
            raise NonpositiveField("product weight of a nonpositive field")
        return vals

    def value(x):
        return np.exp(np.log(logs(x)).mean(0))

    def loggrads(x):
        vals = logs(x)
        return np.stack([f.grad(x) / v[:, None] for f, v in zip(fields, vals)]), vals

    def grad(x):
        lg, vals = loggrads(x)
        return np.exp(np.log(vals).mean(0))[:, None] * lg.mean(0)

    lap = None
    if all(f.has_laplacian for f in fields):
        def lap(x):
            lg, vals = loggrads(x)
            phi = np.exp(np.log(vals).mean(0))
            loglap = np.mean([f.lap(x) / v - (g * g).sum(-1) for f, v, g in zip(fields, vals, lg)], axis=0)
            m = lg.mean(0)
            return phi * ((m * m).sum(-1) + loglap)

    prof = fields[0].profile.power(1.0 / n)
    for f in fields[1:]:
        prof = prof.times(f.profile.power(1.0 / n))
    return ScalarField(dim, value, grad, lap, prof, min(f.scale for f in fields), "product_weight")


def pairwise_gradient_gap(fields: Sequence[ScalarField], x) -> np.ndarray:
    """``sum_{i<j} |grad phi_i/phi_i - grad phi_j/phi_j|^2`` at points ``x``."""
    x = np.asarray(x, dtype=float)
    flat = x.reshape(-1, fields[0].dim)
    lg = [f.grad(flat) / f(flat)[:, None] for f in fields]
    out = np.zeros(len(flat))
    for i in range(len(lg)):
        for j in range(i + 1, len(lg)):
            out += ((lg[i] - lg[j]) ** 2).sum(-1)
    return out.reshape(x.shape[:-1])


# ---------------------------------------------------------------------------
# compactly supported test functions


def bump(center, radius: float) -> ScalarField:
    """Radial bump ``exp(1 - 1/(1 - t^2))``, ``t = |x - center| / radius``."""
    c = np.asarray(center, dtype=float)
    s = float(radius)
    N = len(c)

    def parts(x):
        d = x - c
        t2 = (d * d).sum(-1) / (s * s)
        q = 1.0 - t2
        inside = q > 0
        qs = np.where(inside, q, 1.0)
        b = np.where(inside, np.exp(1.0 - 1.0 / qs), 0.0)
        return d, qs, b

    def value(x):
        return parts(x)[2]

    def grad(x):
        d, q, b = parts(x)
        return (b * (-2.0 / (s * s * q * q)))[:, None] * d

    def lap(x):
        d, q, b = parts(x)
        gq = -2.0 * d / (s * s)
        gpsi = gq / (q * q)[:, None]
        dpsi = (-2.0 * N / (s * s)) / (q * q) - 2.0 * (gq * gq).sum(-1) / q**3
        return b * ((gpsi * gpsi).sum(-1) + dpsi)

    prof = Profile.regular(N, support=(c, s))
    return ScalarField(N, value, grad, lap, prof, s, "bump")


def random_bump(rng: np.random.Generator, config: PoleConfiguration, margin: float | None = None) -> ScalarField:
    """Product of two nested bumps, inside the domain and away from the poles.

    The outer bump's ball contains the inner one, so the support is the inner
    ball; the product is smooth but not radial.  The inner ball stays at least
    ``margin`` (default ``2e-8 * scale``) away from every pole.
    """
    domain = config.domain
    scale = domain.scale
    margin = 2e-8 * scale if margin is None else margin
    a = config.poles
    for _ in range(1000):
        k = rng.integers(len(a))
        step = rng.standard_normal(config.dim)
        step *= rng.uniform(0.2, 1.0) * config.d / np.linalg.norm(step)
        c = a[k] + step
        if config.placement == "boundary":
            c = c + rng.uniform(0.05, 0.5) * config.d * domain.inward_normal(a[k])
        if not domain.inside(c):
            continue
        room = min(np.linalg.norm(a - c, axis=-1).min() - margin, domain.boundary_distance(c))
        if room <= 1e-3 * scale:
            continue
        s1 = rng.uniform(0.3, 0.95) * room
        off = rng.standard_normal(config.dim)
        off *= rng.uniform(0, 0.3) * s1 / np.linalg.norm(off)
        s2 = s1 + np.linalg.norm(off) + rng.uniform(0.2, 1.0) * s1
        f = multiply(bump(c, s1), bump(c + off, s2))
        return f.with_profile(replace(f.profile, support=(c, s1))).renamed("random_bump")
    raise EpsTooLarge("could not place a bump inside the domain away from the poles")
