"""Experiment runner: ``multihardy run <config.json>``, ``presets``, ``version``.

A run reads one JSON document, dispatches to the numerical modules and
writes a CSV table (columns ``experiment, param, value, error, reference,
margin``), an optional SVG line chart and a JSON manifest.

Exit codes: 0 success, 2 configuration error, 3 numerical non-convergence,
4 a checked inequality was violated.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import platform
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__, kernels
from .errors import ConfigInvalid, InequalityViolation, MultiHardyError
from .geometry import Ball, Box, Domain, Ellipse2D, ExteriorBall, HalfSpace, PoleConfiguration, pole_metrics
from .potential import PotentialField
from .quadrature import QuadratureSpec
from .trialfn import (
    boundary_pole_weight,
    boundary_weight,
    exact_minimizer,
    interior_weight,
    minimizing_sequence_element,
    product_weight,
    random_bump,
    supersolution_residual,
)

EXPERIMENTS = (
    "identity-suite",
    "inequality-suite",
    "minimizer-check",
    "convergence-study",
    "gap-bound",
    "mu-star-eigen",
    "threshold-scan",
    "ellipse-counterexample",
)
COLUMNS = ("experiment", "param", "value", "error", "reference", "margin")

PRESETS = {
    "antipodal": "n=2 boundary poles at center -/+ radius*e1 (half-space: -/+ e1 on the plane)",
    "equispaced-on-circle(n)": "n poles at angles 2*pi*k/n on the circle of `radius` "
                               "(default: the ball radius, i.e. boundary poles) in the x1-x2 plane",
    "simplex-vertices(n, shrink)": "vertices of a regular (n-1)-simplex about the center with "
                                   "circumradius shrink*radius, for interior placements (needs N >= n-1)",
}


# ---------------------------------------------------------------------------
# configuration


def _get(cfg: dict, key: str, path: str, kind=None, default: Any = ...):
    if key not in cfg:
        if default is ...:
            raise ConfigInvalid(f"{path}.{key}".lstrip("."), "is required")
        return default
    val = cfg[key]
    if kind is not None and not isinstance(val, kind):
        raise ConfigInvalid(f"{path}.{key}".lstrip("."), f"expected {getattr(kind, '__name__', kind)}")
    return val


def _vector(val, path):
    try:
        arr = np.asarray(val, dtype=float)
    except (TypeError, ValueError):
        raise ConfigInvalid(path, "expected a list of numbers") from None
    if arr.ndim != 1 or not np.all(np.isfinite(arr)):
        raise ConfigInvalid(path, "expected a finite list of numbers")
    return arr


def build_domain(spec: dict) -> Domain:
    kind = _get(spec, "kind", "domain", str)
    try:
        if kind == "ball":
            return Ball(_vector(_get(spec, "center", "domain"), "domain.center"), float(_get(spec, "radius", "domain")))
        if kind == "exterior-ball":
            return ExteriorBall(_vector(_get(spec, "center", "domain"), "domain.center"),
                                float(_get(spec, "radius", "domain")))
        if kind == "half-space":
            return HalfSpace(int(_get(spec, "dim", "domain")))
        if kind == "box":
            return Box(_vector(_get(spec, "lower", "domain"), "domain.lower"),
                       _vector(_get(spec, "upper", "domain"), "domain.upper"))
        if kind == "ellipse":
            a, b = _vector(_get(spec, "semi_axes", "domain"), "domain.semi_axes")
            return Ellipse2D(float(a), float(b))
    except (TypeError, ValueError) as exc:
        raise ConfigInvalid("domain", str(exc)) from None
    raise ConfigInvalid("domain.kind", f"unknown domain kind {kind!r}")


def simplex_vertices(n: int, dim: int) -> np.ndarray:
    """Vertices of a regular ``(n-1)``-simplex with circumradius 1, centred at 0, in ``R^dim``."""
    if n - 1 > dim:
        raise ConfigInvalid("poles.n", f"a regular simplex with {n} vertices needs dimension >= {n - 1}")
    E = np.eye(n) - 1.0 / n
    U, S, _ = np.linalg.svd(E)
    coords = E @ U[:, : n - 1]
    coords /= np.linalg.norm(coords[0])
    out = np.zeros((n, dim))
    out[:, : n - 1] = coords
    return out


def resolve_poles(spec: dict, domain: Domain) -> np.ndarray:
    """Explicit ``coordinates`` or a named ``preset``."""
    if "coordinates" in spec:
        pts = np.asarray(spec["coordinates"], dtype=float)
        if pts.ndim != 2:
            raise ConfigInvalid("poles.coordinates", "expected a list of points")
        return pts
    preset = _get(spec, "preset", "poles", str)
    N = domain.dim
    center = np.asarray(domain.center, dtype=float)
    R = domain.scale
    if preset == "antipodal":
        e = np.eye(N)[0]
        if isinstance(domain, HalfSpace):
            return np.stack([center - e, center + e])
        return np.stack([center - R * e, center + R * e])
    if preset == "equispaced-on-circle":
        n = int(_get(spec, "n", "poles"))
        if n < 2:
            raise ConfigInvalid("poles.n", "at least two poles are required")
        if N < 2:
            raise ConfigInvalid("poles.preset", "circles need N >= 2")
        rad = float(spec.get("radius", R))
        t = 2 * np.pi * np.arange(n) / n
        out = np.tile(center, (n, 1))
        out[:, 0] += rad * np.cos(t)
        out[:, 1] += rad * np.sin(t)
        return out
    if preset == "simplex-vertices":
        n = int(_get(spec, "n", "poles"))
        shrink = float(_get(spec, "shrink", "poles"))
        if not 0 < shrink < 1:
            raise ConfigInvalid("poles.shrink", "must lie in (0, 1)")
        return center + shrink * R * simplex_vertices(n, N)
    raise ConfigInvalid("poles.preset", f"unknown preset {preset!r}")


def _grid(cfg: dict, key: str, path: str | None = None, required: bool = True):
    path = path or key
    if key not in cfg:
        if required:
            raise ConfigInvalid(path, "is required")
        return None
    vals = cfg[key]
    if not isinstance(vals, list) or not vals:
        raise ConfigInvalid(path, "must be a nonempty list")
    arr = _vector(vals, path)
    return arr


def _quadrature(cfg: dict) -> QuadratureSpec:
    q = cfg.get("quadrature", {})
    if not isinstance(q, dict):
        raise ConfigInvalid("quadrature", "expected an object")
    allowed = set(QuadratureSpec.__dataclass_fields__)
    extra = set(q) - allowed
    if extra:
        raise ConfigInvalid(f"quadrature.{sorted(extra)[0]}", "unknown field")
    try:
        return QuadratureSpec(**q)
    except (TypeError, ValueError) as exc:
        raise ConfigInvalid("quadrature", str(exc)) from None


@dataclass
class Experiment:
    """A validated experiment configuration."""

    kind: str
    raw: dict
    domain: Domain
    config: PoleConfiguration | None
    quadrature: QuadratureSpec
    seed: int
    outputs: dict = field(default_factory=dict)


def load_config(raw: dict) -> Experiment:
    """Validate a configuration document.

    Raises
    ------
    ConfigInvalid
        With the dotted path of the offending field.
    """
    if not isinstance(raw, dict):
        raise ConfigInvalid("", "the configuration must be a JSON object")
    kind = _get(raw, "experiment", "", str)
    if kind not in EXPERIMENTS:
        raise ConfigInvalid("experiment", f"unknown experiment {kind!r}")
    domain = build_domain(_get(raw, "domain", "", dict))
    config = None
    if kind != "ellipse-counterexample":
        config = pole_metrics(domain, resolve_poles(_get(raw, "poles", "", dict), domain))
    seed = _get(raw, "seed", "", int, 0)
    outputs = _get(raw, "output", "", dict, {})
    for key in outputs:
        if key not in ("csv", "svg", "manifest"):
            raise ConfigInvalid(f"output.{key}", "unknown output")
    pot = raw.get("potential", {})
    if pot.get("kind", "pairwise") not in ("pairwise", "sum-inverse-square", "single"):
        raise ConfigInvalid("potential.kind", f"unknown kind {pot.get('kind')!r}")
    if kind in ("convergence-study",):
        _check_sorted(_grid(raw, "eps_grid"), "eps_grid", descending=True)
    if kind == "threshold-scan":
        _check_sorted(_grid(raw, "mu_grid"), "mu_grid")
        _check_sorted(_grid(raw, "delta_grid"), "delta_grid", descending=True)
    if kind == "mu-star-eigen":
        _check_sorted(_grid(raw, "delta_grid"), "delta_grid", descending=True)
    return Experiment(kind, raw, domain, config, _quadrature(raw), seed, outputs)


def _check_sorted(arr, path, descending=False):
    d = np.diff(arr)
    if np.any(d >= 0 if descending else d <= 0):
        raise ConfigInvalid(path, "must be strictly " + ("decreasing" if descending else "increasing"))


# ---------------------------------------------------------------------------
# experiments

Row = tuple


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("MULTIHARDY_THREADS", "1")))
    except ValueError:
        return 1


def _map(func, items):
    """Ordered map, concurrent when ``MULTIHARDY_THREADS > 1``."""
    n = _threads()
    if n == 1:
        return [func(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(func, items))


def _bumps(exp: Experiment, trials: int):
    rng = np.random.default_rng(exp.seed)
    return [random_bump(rng, exp.config) for _ in range(trials)]


def _identity_weights(which: str, exp: Experiment):
    cfg, dom = exp.config, exp.domain
    if cfg.placement == "interior":
        phis = [interior_weight(cfg, i) for i in range(cfg.n)]
    else:
        phis = [boundary_pole_weight(dom, cfg, i) for i in range(cfg.n)]
    if which == "Gen":
        return product_weight(phis)
    if which == "Buni":
        return phis
    if which == "OptInt" and cfg.placement != "interior":
        raise ConfigInvalid("identities", "OptInt needs interior poles")
    if which == "ImpCon" and cfg.placement != "boundary":
        raise ConfigInvalid("identities", "ImpCon needs boundary poles")
    return cfg


def run_identity_suite(exp: Experiment) -> list:
    from .rayleigh import identity_residual

    default = ["Gen", "Buni", "OptInt"] if exp.config.placement == "interior" else ["Gen", "Buni", "ImpCon"]
    names = exp.raw.get("identities", default)
    for w in names:
        if w not in ("Gen", "Buni", "OptInt", "ImpCon"):
            raise ConfigInvalid("identities", f"unknown identity {w!r}")
    weights = {w: _identity_weights(w, exp) for w in names}
    bumps = _bumps(exp, int(exp.raw.get("trials", 20)))
    tasks = [(w, k, u) for w in names for k, u in enumerate(bumps)]
    res = _map(lambda t: identity_residual(t[0], t[2], weights[t[0]], exp.domain, exp.quadrature), tasks)
    return [("identity-suite", f"{w}#{k}", r.residual, r.error, 0.0, r.residual) for (w, k, _), r in zip(tasks, res)]


def run_inequality_suite(exp: Experiment) -> list:
    from .rayleigh import check_inequality

    default = ["ClassicalHardy", "BDE", "WholeSpace", "WeightedLemma"]
    names = exp.raw.get("inequalities", default)
    bumps = _bumps(exp, int(exp.raw.get("trials", 50)))
    tasks = [(w, k, u) for w in names for k, u in enumerate(bumps)]
    params = {"config": exp.config, **exp.raw.get("params", {})}
    res = _map(lambda t: check_inequality(t[0], t[2], dict(params, pole=t[1] % exp.config.n), exp.domain,
                                          exp.quadrature), tasks)
    rows = [("inequality-suite", f"{w}#{k}", v.lhs, v.error, v.rhs, v.margin) for (w, k, _), v in zip(tasks, res)]
    bad = [v for v in res if v.violated]
    if bad:
        exc = InequalityViolation(f"{bad[0].which} violated: {bad[0].witness}")
        exc.rows = rows
        raise exc
    return rows


def _boundary_constant(cfg: PoleConfiguration) -> float:
    return cfg.dim**2 / cfg.n**2


def run_minimizer_check(exp: Experiment) -> list:
    from .rayleigh import rayleigh_quotient

    u = exact_minimizer(exp.domain, exp.config)
    ref = _boundary_constant(exp.config)
    rep = rayleigh_quotient(u, _potential(exp), exp.domain, exp.quadrature, ref)
    return [("minimizer-check", f"n={exp.config.n},N={exp.config.dim}", rep.quotient, rep.error, ref,
             rep.quotient - ref)]


def _potential(exp: Experiment, delta: float | None = None) -> PotentialField:
    pot = exp.raw.get("potential", {})
    return PotentialField(exp.config, pot.get("kind", "pairwise"), float(pot.get("delta", 0.0) if delta is None else delta))


def run_convergence_study(exp: Experiment) -> list:
    from .rayleigh import convergence_study

    cfg = exp.config
    interior = cfg.placement == "interior"
    target = float(exp.raw.get("target", (cfg.dim - 2) ** 2 / 4 if interior else _boundary_constant(cfg)))
    rate = float(exp.raw.get("rate", 2.0 if interior else 1.0))
    eps = _grid(exp.raw, "eps_grid")
    variant = exp.raw.get("cutoff")
    study = convergence_study(lambda e: minimizing_sequence_element(exp.domain, cfg, e, variant), eps, target,
                              _potential(exp), exp.domain, exp.quadrature, rate)
    rows = [("convergence-study", f"eps={r.eps:g}", r.quotient, r.error, target, r.residual) for r in study.rows]
    rows += [("convergence-study", f"scaled_residual@eps={r.eps:g}", r.scaled, np.nan, np.nan, np.nan)
             for r in study.rows]
    lo, hi = study.exponent_ci
    rows.append(("convergence-study", "fit_exponent", study.exponent, 0.5 * (hi - lo), rate, study.exponent - rate))
    rows.append(("convergence-study", "fit_constant", study.constant, np.nan, np.nan, np.nan))
    return rows


def run_gap_bound(exp: Experiment) -> list:
    from .rayleigh import gap_bound, rayleigh_quotient

    g = gap_bound(exp.domain, exp.config, samples=int(exp.raw.get("samples", 4096)), seed=exp.seed)
    rows = [
        ("gap-bound", "kappa1", g.kappa1, np.nan, np.nan, np.nan),
        ("gap-bound", "kappa2", g.kappa2, np.nan, np.nan, np.nan),
        ("gap-bound", "L", g.bound, np.nan, g.baseline, g.bound - g.baseline),
    ]
    bumps = _bumps(exp, int(exp.raw.get("trials", 10)))
    reps = _map(lambda u: rayleigh_quotient(u, _potential(exp), exp.domain, exp.quadrature, g.bound), bumps)
    rows += [("gap-bound", f"quotient#{k}", r.quotient, r.error, g.bound, r.quotient - g.bound)
             for k, r in enumerate(reps)]
    return rows


def _grid_factory(exp: Experiment):
    from .spectra import default_grid_factory

    gcfg = exp.raw.get("grid", {})
    return default_grid_factory(exp.domain, exp.config, float(gcfg.get("h0", 0.04)), float(gcfg.get("ratio", 1.2)),
                                bool(gcfg.get("axisymmetric", False)))


def run_mu_star_eigen(exp: Experiment) -> list:
    from .spectra import mu_star_eigen

    cfg = exp.config
    ref = _boundary_constant(cfg) if cfg.placement == "boundary" else (cfg.dim - 2) ** 2 / cfg.n**2
    deltas = _grid(exp.raw, "delta_grid")
    kind = exp.raw.get("potential", {}).get("kind", "pairwise")
    res = mu_star_eigen(exp.domain, cfg, deltas, _grid_factory(exp), kind)
    rows = [("mu-star-eigen", f"delta={e.delta:g}", e.value, e.residual, ref, e.value - ref) for e in res.estimates]
    rows.append(("mu-star-eigen", "extrapolated", res.extrapolated, abs(res.extrapolated - res.estimates[-1].value),
                 ref, res.extrapolated - ref))
    return rows


def run_threshold_scan(exp: Experiment) -> list:
    from .errors import InconclusiveTrend
    from .spectra import threshold_scan

    cfg = exp.config
    n, N = cfg.n, cfg.dim
    ref = (N - 2) ** 2 / (4 * n - 4) if cfg.placement == "interior" else N**2 / (4 * n - 4)
    kind = exp.raw.get("potential", {}).get("kind", "pairwise")
    try:
        scan = threshold_scan(exp.domain, cfg, _grid(exp.raw, "mu_grid"), _grid(exp.raw, "delta_grid"),
                              _grid_factory(exp), kind)
        bracket = scan.bracket
    except InconclusiveTrend as exc:
        scan, bracket = exc.scan, (np.nan, np.nan)
    rows = []
    for mu, lams, verdict, ests in scan.rows:
        rows += [("threshold-scan", f"lambda@mu={mu:g},delta={e.delta:g}", e.value, e.residual, ref, mu - ref)
                 for e in ests]
        rows.append(("threshold-scan", f"verdict@mu={mu:g}", verdict, np.nan, ref, mu - ref))
    rows.append(("threshold-scan", "bracket_lo", bracket[0], np.nan, ref, bracket[0] - ref))
    rows.append(("threshold-scan", "bracket_hi", bracket[1], np.nan, ref, bracket[1] - ref))
    return rows


def run_ellipse_counterexample(exp: Experiment) -> list:
    dom = exp.domain
    if not isinstance(dom, Ellipse2D):
        raise ConfigInvalid("domain.kind", "the ellipse counterexample needs an ellipse")
    pole = np.asarray(exp.raw.get("pole", [dom.a, 0.0]), dtype=float)
    default = [[0.0, 0.5 * dom.b], [0.95 * dom.a, 0.3 * dom.b]]
    pts = np.asarray(exp.raw.get("points", default), dtype=float)
    if pts.shape != (2, 2):
        raise ConfigInvalid("points", "expected two points in the plane")
    f = boundary_weight(dom)
    vals = supersolution_residual(f, pole, pts)
    rows = [("ellipse-counterexample", f"S@({p[0]:g},{p[1]:g})", float(v), 0.0, 0.0, float(v))
            for p, v in zip(pts, vals)]
    rows.append(("ellipse-counterexample", "sign_change", int(vals[0] * vals[1] < 0), 0.0, 1, int(vals[0] * vals[1] < 0) - 1))
    return rows


RUNNERS = {
    "identity-suite": run_identity_suite,
    "inequality-suite": run_inequality_suite,
    "minimizer-check": run_minimizer_check,
    "convergence-study": run_convergence_study,
    "gap-bound": run_gap_bound,
    "mu-star-eigen": run_mu_star_eigen,
    "threshold-scan": run_threshold_scan,
    "ellipse-counterexample": run_ellipse_counterexample,
}


# ---------------------------------------------------------------------------
# output


def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    if v is None or (isinstance(v, float) and np.isnan(v)):
        return ""
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def write_csv(rows: list, path) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for r in rows:
        w.writerow([_fmt(x) for x in r])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text, encoding="utf-8", newline="")
    return text


def _series(kind: str, rows: list):
    """``{label: (x, y)}`` for plotting, and whether x is logarithmic."""
    out = {}
    if kind == "convergence-study":
        pts = [(float(r[1].split("=")[1]), r[2]) for r in rows if r[1].startswith("eps=")]
        out["quotient"] = pts
        ref = [(x, rows[0][4]) for x, _ in pts]
        out["target"] = ref
        return out, True, "eps", "Rayleigh quotient"
    if kind == "mu-star-eigen":
        out["mu_hat"] = [(float(r[1].split("=")[1]), r[2]) for r in rows if r[1].startswith("delta=")]
        return out, True, "delta", "smallest generalized eigenvalue"
    if kind == "threshold-scan":
        for r in rows:
            if r[1].startswith("lambda@"):
                mu, d = r[1][len("lambda@mu="):].split(",delta=")
                out.setdefault(f"mu={mu}", []).append((float(d), r[2]))
        return out, True, "delta", "smallest eigenvalue"
    return None, False, "", ""


def write_svg(kind: str, rows: list, path) -> bool:
    series, logx, xlabel, ylabel = _series(kind, rows)
    if not series:
        return False
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "multihardy"
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, pts in series.items():
        xs, ys = zip(*pts)
        ax.plot(xs, ys, marker="o", label=label)
    if logx:
        ax.set_xscale("log")
    if kind == "threshold-scan":
        ax.set_yscale("symlog")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(kind)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return True


def config_hash(raw: dict) -> str:
    return hashlib.sha256(json.dumps(raw, sort_keys=True, separators=(",", ":")).encode()).hexdigest()


def write_manifest(raw: dict, path, status: int, wall: float, rows: int, message: str = ""):
    import scipy

    doc = {
        "config_sha256": config_hash(raw),
        "experiment": raw.get("experiment"),
        "seed": raw.get("seed", 0),
        "exit_code": status,
        "message": message,
        "rows": rows,
        "wall_time_s": round(wall, 3),
        "versions": {
            "multihardy": __version__,
            "kernels": kernels.BACKEND,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
        "threads": _threads(),
    }
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# entry points


def run(raw: dict, base: Path | None = None) -> tuple[int, list]:
    """Run one experiment; returns ``(exit_code, rows)`` and writes the outputs."""
    t0 = time.perf_counter()
    rows: list = []
    status, message = 0, ""
    base = base or Path.cwd()
    exp = None
    try:
        exp = load_config(raw)
        rows = RUNNERS[exp.kind](exp)
    except MultiHardyError as exc:
        status, message = exc.exit_code, str(exc)
        rows = getattr(exc, "rows", rows)
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
    outputs = exp.outputs if exp is not None else (raw.get("output", {}) if isinstance(raw, dict) else {})
    if isinstance(outputs, dict):
        if rows and "csv" in outputs:
            write_csv(rows, base / outputs["csv"])
        if rows and "svg" in outputs and exp is not None:
            write_svg(exp.kind, rows, base / outputs["svg"])
        if "manifest" in outputs:
            write_manifest(raw, base / outputs["manifest"], status, time.perf_counter() - t0, len(rows), message)
    return status, rows


def list_presets() -> str:
    return "\n".join(f"{name}: {desc}" for name, desc in PRESETS.items())


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="multihardy", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="verb", required=True)
    p_run = sub.add_parser("run", help="run an experiment from a JSON configuration")
    p_run.add_argument("config", type=Path)
    p_run.add_argument("--stdout", action="store_true", help="also print the CSV table")
    sub.add_parser("presets", help="list named pole layouts")
    sub.add_parser("version", help="print the package version")
    args = parser.parse_args(argv)
    if args.verb == "version":
        print(f"multihardy {__version__} ({kernels.BACKEND} kernels)")
        return 0
    if args.verb == "presets":
        print(list_presets())
        return 0
    try:
        raw = json.loads(args.config.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: ConfigInvalid: {exc}", file=sys.stderr)
        return 2
    status, rows = run(raw, args.config.parent)
    if args.stdout and rows:
        sys.stdout.write(write_csv(rows, None))
    return status
