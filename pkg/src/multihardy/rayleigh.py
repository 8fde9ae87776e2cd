"""Rayleigh quotients, integral identities, inequality checks and the interior gap bound."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Literal, Sequence

import numpy as np
from scipy import stats

from .errors import ConfigInvalid, DimensionRestriction, UnsupportedDomain, ZeroDenominator
from .fields import Profile, ScalarField, gradient_energy, multiply, power
from .geometry import Domain, PoleConfiguration
from .potential import DomainRegion, PotentialField, as_scalar_field, sampled_infimum
from .quadrature import QuadratureResult, QuadratureSpec, integrate
from .trialfn import boundary_weight, pole_power_product, product_weight

RESIDUAL_FLOOR = 1e-30

Identity = Literal["Gen", "Buni", "OptInt", "ImpCon"]
Inequality = Literal["ClassicalHardy", "BoundaryLocalHardy", "BDE", "WholeSpace", "WeightedLemma"]


def _as_field(V) -> ScalarField:
    return as_scalar_field(V) if isinstance(V, PotentialField) else V


def _integral(g: ScalarField, domain: Domain, spec: QuadratureSpec, atol: float = 0.0) -> QuadratureResult:
    if atol > spec.atol:
        spec = QuadratureSpec(**{**spec.__dict__, "atol": atol})
    return integrate(g, domain, spec)


# ---------------------------------------------------------------------------
# quotients


@dataclass
class RayleighReport:
    """``int |grad u|^2 / int V u^2`` with propagated error.

    ``excess`` is ``quotient - reference`` when a reference is given.
    """

    numerator: QuadratureResult
    denominator: QuadratureResult
    quotient: float
    error: float
    reference: float | None = None
    residual: float | None = None

    @property
    def excess(self) -> float | None:
        return None if self.reference is None else self.quotient - self.reference


def rayleigh_quotient(u: ScalarField, V, domain: Domain, spec: QuadratureSpec | None = None,
                      reference: float | None = None) -> RayleighReport:
    """Rayleigh quotient of ``u`` for the potential ``V`` on ``domain``.

    Raises
    ------
    ZeroDenominator
        ``int V u^2`` is not distinguishable from zero.
    """
    spec = spec or QuadratureSpec()
    num = integrate(gradient_energy(u), domain, spec)
    den = integrate(multiply(_as_field(V), multiply(u, u)), domain, spec)
    if not den.value > den.error:
        raise ZeroDenominator(f"int V u^2 = {den.value:.3g} +- {den.error:.3g}")
    q = num.value / den.value
    err = abs(q) * (num.error / max(abs(num.value), RESIDUAL_FLOOR) + den.error / den.value)
    return RayleighReport(num, den, q, err, reference)


# ---------------------------------------------------------------------------
# identities


@dataclass
class IdentityCheck:
    which: str
    lhs: float
    rhs: float
    residual: float
    error: float

    def __float__(self):
        return self.residual


def _relative(lhs: float, rhs: float, err: float, which: str) -> IdentityCheck:
    scale = max(abs(lhs), abs(rhs), RESIDUAL_FLOOR)
    return IdentityCheck(which, lhs, rhs, abs(lhs - rhs) / scale, err / scale)


def _weighted_gradient(u: ScalarField, w: ScalarField, weight: ScalarField) -> ScalarField:
    """``|grad(u w)|^2 * weight``."""
    return multiply(gradient_energy(multiply(u, w)), weight)


def identity_residual(which: Identity, u: ScalarField, weights, domain: Domain,
                      spec: QuadratureSpec | None = None) -> IdentityCheck:
    """Relative gap between the two sides of an integral identity.

    ``weights`` depends on ``which``:

    * ``Gen``: a positive field ``phi``;
      ``int |grad u|^2 + (lap phi/phi) u^2 = int |grad u - (grad phi/phi) u|^2``.
    * ``Buni``: harmonic positive fields ``phi_1..phi_n``;
      ``int |grad u|^2 - n^-2 sum_{i<j} int |g_i - g_j|^2 u^2
      = int |grad(u prod phi_i^{-1/n})|^2 prod phi_i^{2/n}`` with ``g_i = grad log phi_i``.
    * ``OptInt``: an interior :class:`PoleConfiguration`;
      ``int |grad u|^2 - (N-2)^2/n^2 int V u^2
      = int |grad(u prod r_i^{(N-2)/n})|^2 prod r_i^{-2(N-2)/n}``.
    * ``ImpCon``: a boundary :class:`PoleConfiguration` on a ball, exterior
      ball or half-space; ``int |grad u|^2 = N^2/n^2 int V u^2
      + int |grad(u/w)|^2 w^2`` with ``w = f prod r_i^{-N/n}``.

    Each integral is computed separately.
    """
    spec = spec or QuadratureSpec()
    N = domain.dim
    energy = integrate(gradient_energy(u), domain, spec)
    atol = spec.rtol * abs(energy.value)
    uu = multiply(u, u)

    def I(g):
        return _integral(g, domain, spec, atol)

    if which == "Gen":
        phi: ScalarField = weights
        log_sq = Profile.at_poles(phi.profile.poles, -2.0) if len(phi.profile.poles) else Profile.regular(N)
        ratio = ScalarField(N, lambda x: phi.lap(x) / phi._value(x), profile=log_sq, scale=phi.scale)
        pot = I(multiply(ratio, uu))

        def shifted(x):
            v = phi._value(x)
            g = u.grad(x) - (phi.grad(x) / v[:, None]) * u._value(x)[:, None]
            return (g * g).sum(-1)

        prof = u.profile.gradient_energy().plus(u.profile.power(2.0).times(log_sq))
        rhs = I(ScalarField(N, shifted, profile=prof, scale=u.scale))
        return _relative(energy.value + pot.value, rhs.value, energy.error + pot.error + rhs.error, which)

    if which == "Buni":
        phis: Sequence[ScalarField] = list(weights)
        n = len(phis)

        def gap(x):
            lg = [p.grad(x) / p._value(x)[:, None] for p in phis]
            s = np.zeros(len(x))
            for i in range(n):
                for j in range(i + 1, n):
                    s += ((lg[i] - lg[j]) ** 2).sum(-1)
            return s

        gprof = Profile.at_poles(np.unique(np.concatenate([p.profile.poles for p in phis]), axis=0), -2.0)
        pot = I(multiply(ScalarField(N, gap, profile=gprof, scale=u.scale), uu))
        inv = power(product_weight(phis), -1.0)
        wt = power(product_weight(phis), 2.0)
        rhs = I(_weighted_gradient(u, inv, wt))
        return _relative(energy.value - pot.value / n**2, rhs.value, energy.error + pot.error / n**2 + rhs.error, which)

    config: PoleConfiguration = weights
    n = config.n
    V = as_scalar_field(PotentialField(config))
    pot = I(multiply(V, uu))
    if which == "OptInt":
        if config.placement != "interior":
            raise ConfigInvalid("weights", "OptInt needs interior poles")
        c = (N - 2) ** 2 / n**2
        w = pole_power_product(config.poles, (N - 2) / n, domain.scale)
        wt = pole_power_product(config.poles, -2 * (N - 2) / n, domain.scale)
        rhs = I(_weighted_gradient(u, w, wt))
        return _relative(energy.value - c * pot.value, rhs.value, energy.error + c * pot.error + rhs.error, which)
    if which == "ImpCon":
        if config.placement != "boundary":
            raise ConfigInvalid("weights", "ImpCon needs boundary poles")
        c = N**2 / n**2
        f = boundary_weight(domain).f
        inv = multiply(power(f, -1.0), pole_power_product(config.poles, N / n, domain.scale))
        wt = multiply(multiply(f, f), pole_power_product(config.poles, -2 * N / n, domain.scale))
        rest = I(_weighted_gradient(u, inv, wt))
        return _relative(energy.value, c * pot.value + rest.value, energy.error + c * pot.error + rest.error, which)
    raise ConfigInvalid("identity", f"unknown identity {which!r}")


# ---------------------------------------------------------------------------
# inequalities


@dataclass
class InequalityVerdict:
    """Outcome of one inequality check; ``violated`` only if ``margin + error < 0``."""

    which: str
    lhs: float
    rhs: float
    margin: float
    error: float
    holds: bool
    witness: str = ""

    @property
    def violated(self) -> bool:
        return not self.holds


def check_inequality(which: Inequality, u: ScalarField, params: dict, domain: Domain,
                     spec: QuadratureSpec | None = None) -> InequalityVerdict:
    """Evaluate ``LHS - RHS`` of a Hardy-type inequality for a test function.

    ``params`` carries ``config`` (a :class:`PoleConfiguration`) and, per
    inequality, ``pole`` (index), ``lam`` (coefficient) or ``l2`` (an
    ``L^2`` remainder coefficient for ``BoundaryLocalHardy``).  ``domain``
    must contain the support of ``u``.

    * ``ClassicalHardy``: ``int |grad u|^2 >= lam int u^2/|x-a|^2``, default ``lam = (N-2)^2/4``.
    * ``BoundaryLocalHardy``: same with a boundary pole, default ``lam = N^2/4``,
      minus ``l2 int u^2`` on the right.
    * ``BDE``: ``int |grad u|^2 >= (N-2)^2/(4n^2) int V u^2 + (N-2)^2/(4n) sum_i int u^2/|x-a_i|^2``.
    * ``WholeSpace``: ``int |grad u|^2 >= (N-2)^2/n^2 int V u^2``.
    * ``WeightedLemma``: ``int |grad u|^2 r_i^{-2(N-2)/n} >= (N-2)^2 (1-2/n)^2/4 int u^2 r_i^{-2(N-2)/n-2}``.
    """
    spec = spec or QuadratureSpec()
    config: PoleConfiguration = params["config"]
    N, n = config.dim, config.n
    a = config.poles
    uu = multiply(u, u)
    i = int(params.get("pole", 0))
    scale = domain.scale

    def inv_sq(k):
        return pole_power_product(a[k : k + 1], -2.0, scale)

    if which == "WeightedLemma":
        p = 2 * (N - 2) / n
        lhs = integrate(multiply(gradient_energy(u), pole_power_product(a[i : i + 1], -p, scale)), domain, spec)
        lam = params.get("lam", (N - 2) ** 2 * (1 - 2 / n) ** 2 / 4)
        rhs_int = _integral(multiply(uu, pole_power_product(a[i : i + 1], -p - 2, scale)), domain, spec,
                            spec.rtol * abs(lhs.value))
        rhs, err = lam * rhs_int.value, lhs.error + lam * rhs_int.error
    else:
        lhs = integrate(gradient_energy(u), domain, spec)
        atol = spec.rtol * abs(lhs.value)
        if which in ("ClassicalHardy", "BoundaryLocalHardy"):
            default = (N - 2) ** 2 / 4 if which == "ClassicalHardy" else N**2 / 4
            lam = params.get("lam", default)
            r = _integral(multiply(uu, inv_sq(i)), domain, spec, atol)
            rhs, err = lam * r.value, lhs.error + lam * r.error
            l2 = params.get("l2", 0.0)
            if l2:
                m = _integral(uu, domain, spec, atol)
                rhs, err = rhs - l2 * m.value, err + l2 * m.error
        elif which in ("BDE", "WholeSpace"):
            V = as_scalar_field(PotentialField(config))
            pot = _integral(multiply(V, uu), domain, spec, atol)
            if which == "WholeSpace":
                c = params.get("lam", (N - 2) ** 2 / n**2)
                rhs, err = c * pot.value, lhs.error + c * pot.error
            else:
                c1 = (N - 2) ** 2 / (4 * n**2)
                c2 = (N - 2) ** 2 / (4 * n)
                rhs, err = c1 * pot.value, lhs.error + c1 * pot.error
                for k in range(n):
                    r = _integral(multiply(uu, inv_sq(k)), domain, spec, atol)
                    rhs += c2 * r.value
                    err += c2 * r.error
        else:
            raise ConfigInvalid("inequality", f"unknown inequality {which!r}")
    margin = lhs.value - rhs
    holds = margin + err >= 0
    witness = "" if holds else f"{u.name}: LHS {lhs.value:.6g} < RHS {rhs:.6g}"
    return InequalityVerdict(which, lhs.value, rhs, margin, err, holds, witness)


# ---------------------------------------------------------------------------
# interior gap bound


@dataclass
class GapBound:
    """Sampled infima ``kappa1``, ``kappa2`` and the resulting lower bound."""

    kappa1: float
    kappa2: float
    point1: np.ndarray
    point2: np.ndarray
    pole_limits1: np.ndarray
    pole_limits2: np.ndarray
    bound: float
    baseline: float
    samples: int


def gap_bound(domain: Domain, config: PoleConfiguration, V: PotentialField | None = None,
              samples: int = 4096, seed: int = 0) -> GapBound:
    """``L = (N-2)^2/n^2 + kappa1 kappa2 (N-2)^2 (1-2/n)^2 / 4`` for interior poles.

    With ``p = 2(N-2)/n`` and ``r_i = |x - a_i|``,
    ``kappa1 = inf prod r_i^-p / sum r_i^-p`` and
    ``kappa2 = inf sum r_i^(-p-2) / (V prod r_i^-p)``.  Both ratios extend
    continuously to the poles; those limits are included analytically.
    The infima are sampled, so ``L`` is an estimate from above of the
    bound obtained with the exact infima.
    """
    if config.placement != "interior":
        raise ConfigInvalid("poles", "the gap bound needs interior poles")
    if config.dim < 3:
        raise DimensionRestriction("the gap bound needs N >= 3")
    if not domain.bounded:
        raise UnsupportedDomain("the gap bound needs a bounded domain")
    V = V or PotentialField(config)
    N, n = config.dim, config.n
    a = config.poles
    p = 2 * (N - 2) / n

    def radii(x):
        return np.linalg.norm(np.asarray(x)[:, None, :] - a[None], axis=-1)

    def ratio1(x):
        r = radii(x)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.prod(r**-p, -1) / np.sum(r**-p, -1)

    def ratio2(x):
        r = radii(x)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.sum(r ** (-p - 2), -1) / (V(x) * np.prod(r**-p, -1))

    D = np.linalg.norm(a[:, None] - a[None], axis=-1)
    lim1 = np.array([np.prod(np.delete(D[k], k) ** -p) for k in range(n)])
    lim2 = np.array([np.prod(np.delete(D[k], k) ** p) / (n - 1) for k in range(n)])
    region = DomainRegion(domain, exclude=a, margin=1e-9 * domain.scale)
    s1 = sampled_infimum(ratio1, region, samples, seed)
    s2 = sampled_infimum(ratio2, region, samples, seed + 1)
    k1, x1 = (s1.value, s1.point) if s1.value <= lim1.min() else (float(lim1.min()), a[lim1.argmin()])
    k2, x2 = (s2.value, s2.point) if s2.value <= lim2.min() else (float(lim2.min()), a[lim2.argmin()])
    base = (N - 2) ** 2 / n**2
    L = base + k1 * k2 * (N - 2) ** 2 * (1 - 2 / n) ** 2 / 4
    return GapBound(k1, k2, np.asarray(x1), np.asarray(x2), lim1, lim2, L, base, s1.samples)


# ---------------------------------------------------------------------------
# convergence of minimizing sequences


@dataclass
class ConvergenceRow:
    eps: float
    quotient: float
    error: float
    residual: float
    scaled: float


@dataclass
class ConvergenceStudy:
    """Quotients along an ``eps`` grid and a power-law fit of the residual.

    The fit is ``quotient - target ~ C log(1/eps)^-exponent``; ``scaled``
    in each row is ``residual * log(1/eps)^rate`` for the declared rate
    (or the fitted exponent when none is declared).
    """

    target: float
    rows: list
    exponent: float
    exponent_ci: tuple
    constant: float
    rate: float
    reports: list = field(default_factory=list, repr=False)


def fit_log_rate(eps, residual, level: float = 0.95):
    """Least-squares fit of ``log residual = log C - p log log(1/eps)``.

    Returns ``(p, (lo, hi), C)``; the interval uses Student's t with
    ``len(eps) - 2`` degrees of freedom and is infinite for two points.
    """
    x = np.log(np.log(1.0 / np.asarray(eps, dtype=float)))
    y = np.log(np.asarray(residual, dtype=float))
    fit = stats.linregress(x, y)
    p = -fit.slope
    dof = len(x) - 2
    half = stats.t.ppf(0.5 + level / 2, dof) * fit.stderr if dof > 0 else np.inf
    return float(p), (float(p - half), float(p + half)), float(np.exp(fit.intercept))


def convergence_study(sequence: Callable[[float], ScalarField], eps_grid, target: float, V, domain: Domain,
                      spec: QuadratureSpec | None = None, rate: float | None = None) -> ConvergenceStudy:
    """Rayleigh quotients of ``sequence(eps)`` for each ``eps`` and their approach to ``target``."""
    reports = [rayleigh_quotient(sequence(e), V, domain, spec, target) for e in eps_grid]
    eps = np.asarray(eps_grid, dtype=float)
    res = np.array([r.quotient - target for r in reports])
    if np.all(res > 0) and len(eps) >= 2:
        p, ci, C = fit_log_rate(eps, res)
    else:
        p, ci, C = np.nan, (np.nan, np.nan), np.nan
    use = rate if rate is not None else p
    rows = [ConvergenceRow(float(e), r.quotient, r.error, float(d), float(d * np.log(1 / e) ** use))
            for e, r, d in zip(eps, reports, res)]
    return ConvergenceStudy(target, rows, p, ci, C, use, reports)
