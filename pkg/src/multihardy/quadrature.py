"""Quadrature for integrands with power-type singularities at a few points.

The domain is split with a smooth partition of unity.  Around every pole
``a_i`` a C-infinity bump ``chi_i`` (1 on ``B(a_i, rho1)``, 0 outside
``B(a_i, rho2)``) isolates the singular part, which is integrated in polar
coordinates centred at the pole: geometric radial panels with Gauss-Legendre
nodes down to ``r_min`` plus an analytic tail from the declared exponent, and
a tensor rule on the sphere of directions.  The smooth remainder
``(1 - sum chi_i) g`` is integrated in polar coordinates about a centre of
the domain (or of the integrand's support), or by a tensor Gauss rule on a
box.  Every piece is refined by halving panels and doubling angular points;
the difference between consecutive levels is the error estimate.

A Monte Carlo oracle with a mixture importance density provides an
independent check.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import gamma, pi

import numpy as np

from .errors import BudgetExceeded, ConfigInvalid, DegenerateImportanceDensity, NonIntegrable
from .fields import Profile, ScalarField, gradient_energy, smooth_step
from .geometry import Box, Domain


@dataclass(frozen=True)
class QuadratureSpec:
    """Accuracy and discretization parameters.

    Lengths ``r_min`` and ``R_max`` are relative to the domain scale.
    """

    rtol: float = 1e-7
    atol: float = 0.0
    max_cells: int = 4_000_000
    q: float = 0.5
    r_min: float = 1e-8
    R_max: float = 1e4
    order: int = 10
    max_level: int = 5
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.q < 1:
            raise ConfigInvalid("quadrature.q", "must lie in (0, 1)")
        if not self.r_min > 0:
            raise ConfigInvalid("quadrature.r_min", "must be positive")
        if not self.R_max > 1:
            raise ConfigInvalid("quadrature.R_max", "must exceed the domain scale")
        if not self.rtol > 0 or self.atol < 0:
            raise ConfigInvalid("quadrature.rtol", "tolerances must be positive")


@dataclass
class QuadratureResult:
    value: float
    error: float
    cells: int
    method: str
    tail: float = 0.0
    pieces: list = field(default_factory=list, repr=False)

    def __add__(self, other):
        return QuadratureResult(self.value + other.value, self.error + other.error,
                                self.cells + other.cells, self.method, self.tail + other.tail)

    def __sub__(self, other):
        return QuadratureResult(self.value - other.value, self.error + other.error,
                                self.cells + other.cells, self.method, self.tail + other.tail)


def sphere_area(N: int) -> float:
    """Surface measure of the unit sphere in ``R^N``."""
    return 2 * pi ** (N / 2) / gamma(N / 2)


# ---------------------------------------------------------------------------
# one-dimensional building blocks


def _gl(order):
    x, w = np.polynomial.legendre.leggauss(order)
    return x, w


def _panel_rule(edges, order):
    """Composite Gauss-Legendre nodes/weights on consecutive ``edges``."""
    x, w = _gl(order)
    a, b = edges[:-1, None], edges[1:, None]
    return (0.5 * (a + b) + 0.5 * (b - a) * x).ravel(), (0.5 * (b - a) * w).ravel()


def _graded_edges(a, b, k, q=0.5):
    """Edges on [a, b] accumulating geometrically toward ``b``."""
    t = 1.0 - q ** np.arange(k + 1)
    return np.r_[a + (b - a) * t, b]


def _refine(edges, factor, geometric=False):
    if factor == 1:
        return edges
    out = [edges[:1]]
    for a, b in zip(edges[:-1], edges[1:]):
        if geometric and a > 0:
            out.append(a * (b / a) ** (np.arange(1, factor + 1) / factor))
        else:
            out.append(a + (b - a) * np.arange(1, factor + 1) / factor)
    return np.concatenate(out)


def _geometric_edges(lo, hi, ratio):
    if hi <= lo:
        return np.array([lo, hi])
    m = max(1, int(np.ceil(np.log(hi / lo) / np.log(ratio) - 1e-9)))
    return lo * (hi / lo) ** (np.arange(m + 1) / m)


# ---------------------------------------------------------------------------
# direction rules


def _orthonormal_complement(e):
    N = len(e)
    M = np.eye(N)
    M[:, 0] = e
    Q, _ = np.linalg.qr(M)
    if Q[:, 0] @ e < 0:
        Q = -Q
    return Q[:, 1:]


def direction_rule(N: int, axis=None, psi_max: float = pi, level: int = 1, grade: bool = False, base: int = 1):
    """Directions and weights for the part of the unit sphere within ``psi_max`` of ``axis``.

    For a full sphere in two dimensions the periodic trapezoid rule is used;
    otherwise a Gauss rule in the polar angle (graded toward ``psi_max``
    when ``grade``) times a full-sphere rule on the orthogonal sphere.
    """
    f = base * 2 ** (level - 1)
    if axis is None:
        axis = np.eye(N)[0]
    axis = np.asarray(axis, dtype=float)
    full = psi_max >= pi - 1e-14
    if N == 1:
        return np.array([[1.0], [-1.0]]), np.array([1.0, 1.0])
    perp = _orthonormal_complement(axis)
    if N == 2:
        if full:
            m = 24 * f
            th = 2 * pi * np.arange(m) / m
            return np.c_[np.cos(th), np.sin(th)], np.full(m, 2 * pi / m)
        half = _graded_edges(0.0, psi_max, 3 + 2 * level) if grade else np.linspace(0, psi_max, 3)
        half = _refine(half, f)
        p, w = _panel_rule(half, 8)
        psi = np.r_[-p[::-1], p]
        w = np.r_[w[::-1], w]
        dirs = np.cos(psi)[:, None] * axis + np.sin(psi)[:, None] * perp[:, 0]
        return dirs, w
    if full:
        edges = _refine(np.linspace(0, pi, 4), f)
    elif grade:
        edges = _refine(_graded_edges(0.0, psi_max, 3 + 2 * level), f)
    else:
        edges = _refine(np.linspace(0, psi_max, 3), f)
    psi, wpsi = _panel_rule(edges, 8)
    sub, wsub = direction_rule(N - 1, None, pi, level, base=base)
    sub = sub @ perp.T
    dirs = (np.cos(psi)[:, None, None] * axis + np.sin(psi)[:, None, None] * sub[None]).reshape(-1, N)
    wts = (wpsi * np.sin(psi) ** (N - 2))[:, None] * wsub[None]
    return dirs, wts.ravel()


# ---------------------------------------------------------------------------
# ray integration


def _ray_sum(func, origin, dirs, wdir, lo, hi, edges, order, N, chunk=250_000):
    """Sum over directions of ``int func(origin + r w) r^{N-1} dr`` on clipped panels.

    ``lo``/``hi`` have shape ``(k, J)``; panels are the consecutive ``edges``
    intersected with each interval.
    """
    x, w = _gl(order)
    a_e, b_e = edges[:-1], edges[1:]
    k = len(dirs)
    total = 0.0
    cells = 0
    per_dir = max(1, len(a_e) * order * lo.shape[1])
    step = max(1, chunk // per_dir)
    for s in range(0, k, step):
        d = dirs[s : s + step]
        L, H = lo[s : s + step], hi[s : s + step]
        a = np.maximum(a_e[None, None, :], L[:, :, None])
        b = np.minimum(b_e[None, None, :], H[:, :, None])
        ok = b > a
        if not ok.any():
            continue
        di, ji, pi_ = np.nonzero(ok)
        aa, bb = a[di, ji, pi_], b[di, ji, pi_]
        r = 0.5 * (aa + bb)[:, None] + 0.5 * (bb - aa)[:, None] * x
        wr = 0.5 * (bb - aa)[:, None] * w * r ** (N - 1)
        pts = origin + r[..., None] * d[di][:, None, :]
        vals = func(pts.reshape(-1, N)).reshape(r.shape)
        total += float(((vals * wr).sum(1) * wdir[s : s + step][di]).sum())
        cells += len(di)
    return total, cells


def _chi(x, poles, rho1, rho2):
    r = np.linalg.norm(x[:, None, :] - poles[None], axis=-1)
    return smooth_step((r - rho1) / (rho2 - rho1))


@dataclass
class _Piece:
    name: str
    evaluate: callable  # level -> (value, cells, tail)
    level: int = 1
    values: list = field(default_factory=list)
    cells: int = 0
    tail: float = 0.0

    def advance(self):
        v, c, t = self.evaluate(self.level)
        self.values.append(v)
        self.cells += c
        self.tail = t
        self.level += 1

    @property
    def value(self):
        return self.values[-1]

    @property
    def error(self):
        if len(self.values) < 2:
            return np.inf
        return abs(self.values[-1] - self.values[-2])


def _ball_chord(origin, dirs, center, radius):
    """Interval of t >= 0 where origin + t*dir lies in the ball (empty if missed)."""
    w = origin - center
    b = dirs @ w
    c = w @ w - radius**2
    disc = b * b - c
    root = np.sqrt(np.maximum(disc, 0.0))
    lo = np.where(disc > 0, np.maximum(-b - root, 0.0), 0.0)
    hi = np.where(disc > 0, np.maximum(-b + root, 0.0), 0.0)
    return lo, hi


class _Plan:
    """Decomposition of one integral into pole pieces and a remainder."""

    def __init__(self, integrand: ScalarField, domain: Domain, spec: QuadratureSpec):
        self.g = integrand
        self.domain = domain
        self.spec = spec
        self.N = domain.dim
        self.scale = domain.scale
        prof: Profile = integrand.profile
        self.prof = prof
        self.support = prof.support
        on_closure = np.array([domain.inside(a) or domain.on_boundary(a) for a in prof.poles], dtype=bool) \
            if len(prof.poles) else np.zeros(0, bool)
        keep = []
        for i, a in enumerate(prof.poles):
            if not on_closure[i]:
                continue
            if prof.exponents[i] == 0 and prof.inner[i] == 0 and not prof.breaks[i]:
                continue
            if self.support is not None:
                c, s = self.support
                if np.linalg.norm(a - c) >= s + 0.49 * self._separation(prof.poles):
                    continue
            keep.append(i)
        self.idx = np.array(keep, dtype=int)
        self.poles = prof.poles[self.idx] if len(keep) else np.zeros((0, self.N))
        self._check_integrability()
        self._radii()

    def _separation(self, poles):
        if len(poles) < 2:
            return self.scale
        d = np.linalg.norm(poles[:, None] - poles[None], axis=-1)
        return float(d[np.triu_indices(len(poles), 1)].min())

    def _check_integrability(self):
        prof, N = self.prof, self.N
        for i in self.idx:
            if prof.inner[i] > 0:
                continue
            a = prof.poles[i]
            if self.support is not None and np.linalg.norm(a - self.support[0]) >= self.support[1]:
                continue
            if prof.exponents[i] + N <= 0:
                raise NonIntegrable(
                    f"integrand ~ |x-a|^{prof.exponents[i]:g} near pole {np.round(a, 6).tolist()} "
                    f"is not integrable in dimension {N}"
                )
        if not self.domain.bounded and self.support is None and not np.isfinite(prof.outer) \
                and not np.isfinite(prof.reach) and prof.tail + N >= 0:
            raise NonIntegrable(f"integrand ~ |x|^{prof.tail:g} at infinity is not integrable in dimension {N}")

    def _radii(self):
        P = self.poles
        m = len(P)
        prof = self.prof
        self.local = bool(m) and np.isfinite(prof.reach) and prof.reach <= 0.5 * self._separation(P)
        d = self._separation(P) if m else self.scale
        rho2 = np.full(m, 0.45 * d)
        for k, a in enumerate(P):
            if self.domain.inside(a):
                rho2[k] = min(rho2[k], 0.9 * self.domain.boundary_distance(a))
        rho1 = 0.35 * rho2
        for k, i in enumerate(self.idx):
            br = [b for b in prof.breaks[i] if b < rho2[k]]
            top = max(br + [prof.inner[i]]) if (br or prof.inner[i] > 0) else 0.0
            if self.local:
                rho2[k] = rho1[k] = prof.reach
            elif top >= 0.8 * rho2[k]:
                rho2[k] = min(1.25 * top, 0.49 * d)
                rho1[k] = 1.02 * top
            else:
                rho1[k] = max(rho1[k], 1.05 * top)
        self.rho1, self.rho2 = rho1, rho2

    # -- pieces ------------------------------------------------------------

    def pieces(self):
        out = []
        for k in range(len(self.poles)):
            out.append(_Piece(f"pole{k}", self._pole_piece(k)))
        if not self.local:
            out.append(_Piece("remainder", self._remainder_piece()))
        return out

    def _pole_piece(self, k):
        a = self.poles[k]
        i = self.idx[k]
        prof, spec, N, g = self.prof, self.spec, self.N, self.g
        rho1, rho2 = self.rho1[k], self.rho2[k]
        inner = prof.inner[i]
        alpha = prof.exponents[i]
        r_start = inner if inner > 0 else spec.r_min * self.scale
        cuts = sorted({b for b in prof.breaks[i] if r_start < b < rho2} | ({rho1} if rho1 < rho2 else set()))
        pts = [r_start] + cuts + [rho2]
        base = np.concatenate([_geometric_edges(u, v, 1 / spec.q)[:-1] for u, v in zip(pts[:-1], pts[1:])] + [[rho2]])
        axis, psi_max, grade = None, pi, False
        if self.support is not None:
            c, s = self.support
            dist = np.linalg.norm(c - a)
            if dist > s:
                axis, psi_max, grade = (c - a) / dist, float(np.arcsin(s / dist)), True
        if axis is None and self.domain.on_boundary(a):
            axis, psi_max, grade = self.domain.inward_normal(a), pi / 2, True
        sharp = rho1 >= rho2

        def mult(x):
            v = g._value(x)
            if not sharp:
                v = v * smooth_step((np.linalg.norm(x - a, axis=-1) - rho1) / (rho2 - rho1))
            return v

        def evaluate(level):
            dirs, wd = direction_rule(N, axis, psi_max, level, grade)
            lo, hi = self.domain.ray_intervals(a, dirs)
            hi = np.minimum(hi, rho2)
            if self.support is not None:
                slo, shi = _ball_chord(a, dirs, *self.support)
                lo = np.maximum(lo, slo[:, None])
                hi = np.minimum(hi, shi[:, None])
            edges = _refine(base, 2 ** (level - 1), geometric=True)
            val, cells = _ray_sum(mult, a, dirs, wd, lo, hi, edges, spec.order, N)
            tail = 0.0
            if inner == 0:
                open_ = (lo[:, 0] <= 0) & (hi[:, 0] > r_start)
                if open_.any():
                    x0 = a + r_start * dirs[open_]
                    F = mult(x0) * r_start ** (N - 1)
                    tail = float((F * wd[open_]).sum() * r_start / (alpha + N))
            return val + tail, cells, 0.0

        return evaluate

    def _remainder_piece(self):
        spec, N, g, dom = self.spec, self.N, self.g, self.domain
        P, rho1, rho2 = self.poles, self.rho1, self.rho2

        def mult(x):
            v = g._value(x)
            if len(P):
                v = v * (1.0 - _chi(x, P, rho1, rho2).sum(-1))
            return v

        if isinstance(dom, Box) and self.support is None:
            return self._box_remainder(mult)

        prof = self.prof
        if self.support is not None:
            center, R_hi = np.asarray(self.support[0]), self.support[1]
        elif prof.far_center is not None:
            center = np.asarray(prof.far_center)
            R_hi = dom.bounding_radius() + np.linalg.norm(center - dom.center)
        else:
            center = dom.center
            R_hi = dom.bounding_radius()
        R_hi = min(R_hi, prof.outer + (np.linalg.norm(center - prof.far_center) if prof.far_center is not None else 0))
        axis, psi_max = None, pi
        if dom.on_boundary(center) and self.support is None:
            axis, psi_max = dom.inward_normal(center), pi / 2
        unbounded = not np.isfinite(R_hi)
        spread = max([np.linalg.norm(p - center) for p in P] + [0.0]) + (rho2.max() if len(P) else 0)
        feat = 0.5 * min(rho2.min() if len(P) else self.scale, self.scale)
        if self.support is not None:
            feat = min(feat, 0.5 * self.support[1])
        width = (rho2 - rho1).min() if len(P) and not self.local else feat
        ang = max(1, int(round(min(spread, R_hi) / (1.5 * min(width, feat)))))
        if unbounded:
            R_c = max(2 * spread, self.scale)
            R_top = spec.R_max * self.scale
            near = np.linspace(0.0, R_c, max(4, int(np.ceil(R_c / feat))) + 1)
            far_edges = _geometric_edges(R_c, R_top, 2.0)
            base = np.r_[near, far_edges[1:]]
        else:
            R_top = R_hi
            base = np.linspace(0.0, R_hi, max(6, int(np.ceil(2 * R_hi / feat))) + 1)
        cuts = [b for b in prof.far_breaks if 0 < b < R_top] if prof.far_center is not None and \
            np.allclose(center, prof.far_center) else []
        base = np.unique(np.r_[base, cuts])
        if cuts:
            # geometric panels between far-field breakpoints
            segs = []
            for u, v in zip(base[:-1], base[1:]):
                segs.append(_geometric_edges(u, v, 2.0)[:-1] if u > 0 else np.array([u]))
            base = np.r_[np.concatenate(segs), base[-1]]
        tail_exp = prof.tail

        def evaluate(level):
            dirs, wd = direction_rule(N, axis, psi_max, level, grade=axis is not None, base=ang)
            lo, hi = dom.ray_intervals(center, dirs)
            if self.support is not None:
                slo, shi = _ball_chord(center, dirs, *self.support)
                lo = np.maximum(lo, slo[:, None])
                hi = np.minimum(hi, shi[:, None])
            if np.isfinite(prof.outer) and prof.far_center is not None:
                olo, ohi = _ball_chord(center, dirs, prof.far_center, prof.outer)
                lo = np.maximum(lo, olo[:, None])
                hi = np.minimum(hi, ohi[:, None])
            hi_c = np.minimum(hi, R_top)
            edges = _refine(base, 2 ** (level - 1), geometric=False)
            val, cells = _ray_sum(mult, center, dirs, wd, lo, hi_c, edges, spec.order, N)
            tail = 0.0
            open_ = np.isinf(hi).any(axis=1)
            if unbounded and open_.any():
                x0 = center + R_top * dirs[open_]
                F = mult(x0) * R_top ** (N - 1)
                tail = float((F * wd[open_]).sum() * R_top / (-(tail_exp + N)))
            return val + tail, cells, abs(tail)

        return evaluate

    def _box_remainder(self, mult):
        dom, spec, N = self.domain, self.spec, self.N
        feat = 0.5 * min(self.rho2.min() if len(self.poles) else dom.scale, dom.scale)

        def evaluate(level):
            nodes, weights = [], []
            for k in range(N):
                m = max(4, int(np.ceil((dom.hi[k] - dom.lo[k]) / feat))) * 2 ** (level - 1)
                e = np.linspace(dom.lo[k], dom.hi[k], m + 1)
                x, w = _panel_rule(e, spec.order)
                nodes.append(x)
                weights.append(w)
            grids = np.meshgrid(*nodes, indexing="ij")
            pts = np.stack([gr.ravel() for gr in grids], -1)
            W = weights[0]
            for w in weights[1:]:
                W = np.multiply.outer(W, w)
            vals = np.concatenate([mult(pts[s : s + 250_000]) for s in range(0, len(pts), 250_000)])
            return float((vals * W.ravel()).sum()), len(pts) // spec.order, 0.0

        return evaluate


def integrate(integrand: ScalarField, domain: Domain, spec: QuadratureSpec | None = None) -> QuadratureResult:
    """Integrate ``integrand`` over ``domain`` to the tolerance in ``spec``.

    Raises
    ------
    NonIntegrable
        The declared exponents make the integral divergent.
    BudgetExceeded
        The cell budget ran out before the error estimate met the tolerance.
    """
    spec = spec or QuadratureSpec()
    plan = _Plan(integrand, domain, spec)
    pieces = plan.pieces()
    for p in pieces:
        p.advance()
        p.advance()

    def total():
        return sum(p.value for p in pieces), sum(p.error for p in pieces), sum(p.cells for p in pieces)

    val, err, cells = total()
    while err > max(spec.atol, spec.rtol * abs(val)):
        worst = max(pieces, key=lambda p: p.error)
        if worst.level > spec.max_level or cells > spec.max_cells:
            raise BudgetExceeded(
                f"quadrature error {err:.3g} above tolerance after {cells} cells (value {val:.6g})"
            )
        worst.advance()
        val, err, cells = total()
    tail = sum(p.tail for p in pieces)
    err += 1e-2 * tail
    return QuadratureResult(val, err, cells, "annular-radial", 2 * tail,
                            [(p.name, p.value, p.error, p.level - 1) for p in pieces])


def integrate_gradient_energy(u: ScalarField, domain: Domain, spec: QuadratureSpec | None = None) -> QuadratureResult:
    """``int |grad u|^2`` over ``domain``."""
    return integrate(gradient_energy(u), domain, spec)


# ---------------------------------------------------------------------------
# Monte Carlo oracle


class _Component:
    weight: float

    def sample(self, rng, m):
        raise NotImplementedError

    def density(self, x):
        raise NotImplementedError


class _RadialPower(_Component):
    """Density proportional to ``|x-c|^{gamma-N}`` on ``B(c, R)``."""

    def __init__(self, center, R, gamma_, N):
        if not gamma_ > 0:
            raise DegenerateImportanceDensity("radial sampling exponent must be positive")
        self.c, self.R, self.g, self.N = np.asarray(center, float), float(R), float(gamma_), N
        self.norm = self.g / (sphere_area(N) * self.R**self.g)

    def sample(self, rng, m):
        r = self.R * rng.random(m) ** (1.0 / self.g)
        d = rng.standard_normal((m, self.N))
        d /= np.linalg.norm(d, axis=1, keepdims=True)
        return self.c + r[:, None] * d

    def density(self, x):
        r = np.linalg.norm(x - self.c, axis=-1)
        with np.errstate(divide="ignore"):
            return np.where(r < self.R, self.norm * r ** (self.g - self.N), 0.0)


class _UniformBox(_Component):
    def __init__(self, lo, hi):
        self.lo, self.hi = np.asarray(lo, float), np.asarray(hi, float)
        self.vol = float(np.prod(self.hi - self.lo))

    def sample(self, rng, m):
        return self.lo + (self.hi - self.lo) * rng.random((m, len(self.lo)))

    def density(self, x):
        ok = np.all((x >= self.lo) & (x <= self.hi), axis=-1)
        return np.where(ok, 1.0 / self.vol, 0.0)


class _Pareto(_Component):
    """Radial density ``kappa R0^kappa r^{-kappa-1}`` for ``r > R0`` about ``c``."""

    def __init__(self, center, R0, kappa, N):
        if not kappa > 0:
            raise DegenerateImportanceDensity("far-field sampling exponent must be positive")
        self.c, self.R0, self.k, self.N = np.asarray(center, float), float(R0), float(kappa), N

    def sample(self, rng, m):
        r = self.R0 * (1.0 - rng.random(m)) ** (-1.0 / self.k)
        d = rng.standard_normal((m, self.N))
        d /= np.linalg.norm(d, axis=1, keepdims=True)
        return self.c + r[:, None] * d

    def density(self, x):
        r = np.linalg.norm(x - self.c, axis=-1)
        rr = np.maximum(r, self.R0)
        return np.where(r > self.R0, self.k * self.R0**self.k * rr ** (-self.k - 1) / (sphere_area(self.N) * rr ** (self.N - 1)), 0.0)


def _mixture(integrand: ScalarField, domain: Domain):
    prof = integrand.profile
    N = domain.dim
    plan = _Plan(integrand, domain, QuadratureSpec())
    comps = []
    for k, i in enumerate(plan.idx):
        if prof.inner[i] > 0 and prof.inner[i] >= plan.rho2[k]:
            continue
        gam = min(0.9 * (prof.exponents[i] + N), N) if prof.exponents[i] + N > 0 else 0.0
        if prof.inner[i] > 0:
            gam = min(max(0.9 * (prof.exponents[i] + N), 0.5), N)
        comps.append(_RadialPower(plan.poles[k], 2 * plan.rho2[k], gam, N))
    if prof.support is not None:
        c, s = prof.support
        bulk = _UniformBox(np.asarray(c) - s, np.asarray(c) + s)
        far = None
    elif domain.bounded:
        if isinstance(domain, Box):
            bulk = _UniformBox(domain.lo, domain.hi)
        else:
            R = domain.bounding_radius()
            bulk = _UniformBox(domain.center - R, domain.center + R)
        far = None
    else:
        center = prof.far_center if prof.far_center is not None else domain.center
        spread = max([np.linalg.norm(p - center) for p in plan.poles] + [domain.scale])
        R0 = 2 * spread
        bulk = _UniformBox(center - R0, center + R0)
        kappa = -(prof.tail + N)
        if np.isfinite(prof.outer):
            kappa = max(kappa, 0.5)
        if not kappa > 0:
            raise DegenerateImportanceDensity("integrand does not decay at infinity")
        far = _Pareto(center, R0, 0.5 * kappa, N)
    parts = [(c, 0.5 / len(comps)) for c in comps] if comps else []
    rest = 1.0 - sum(w for _, w in parts)
    if far is not None:
        parts += [(bulk, 0.7 * rest), (far, 0.3 * rest)]
    else:
        parts.append((bulk, rest))
    return parts


def monte_carlo_oracle(integrand: ScalarField, domain: Domain, spec: QuadratureSpec | None = None,
                       samples: int = 200_000, seed: int | None = None) -> QuadratureResult:
    """Importance-sampled estimate with a 95% confidence half-width as error.

    The proposal is a mixture of radial power laws ``|x-a_i|^{gamma-N}``
    matched to the declared exponents at the poles, a uniform box over the
    domain or support, and for unbounded domains a Pareto far-field law.
    """
    spec = spec or QuadratureSpec()
    rng = np.random.default_rng(spec.seed if seed is None else seed)
    parts = _mixture(integrand, domain)
    weights = np.array([w for _, w in parts])
    counts = rng.multinomial(samples, weights / weights.sum())
    xs = np.concatenate([c.sample(rng, m) for (c, _), m in zip(parts, counts)])
    dens = sum(w * c.density(xs) for c, w in parts)
    inside = domain.inside(xs)
    vals = np.zeros(len(xs))
    ok = inside & (dens > 0)
    if not ok.any():
        raise DegenerateImportanceDensity("no proposal sample fell inside the domain")
    vals[ok] = integrand._value(xs[ok]) / dens[ok]
    mean = float(vals.mean())
    half = 1.96 * float(vals.std(ddof=1)) / np.sqrt(samples)
    return QuadratureResult(mean, half, samples, "monte-carlo")
