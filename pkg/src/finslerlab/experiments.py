"""Scripted experiments: non-self-intersection of N-parallels and the corner-angle bound.

``hadamard_scan`` integrates a batch of N-parallels on a certified Landsberg
surface with K <= 0 and looks for transverse self-crossings.  Any crossing
found is diagnosed by evaluating the Gauss-Bonnet total of the loop it
closes, which must equal 1 if the crossing were real.

``corner_bound_scan`` samples random pairs of unit vectors and checks that
the normalized Landsberg angle stays in [0, 1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp, trapezoid

from ._util import ordered_map
from .connection import invariants_batch
from .curves import integrate_n_parallels, lift_data, normalize_direction, self_intersections
from .domain import DomainSpec, Line, triangulate
from .errors import CertificationError, ConvergenceError, FinslerError, GeometryError, ParameterError
from .gauss_bonnet import certify_landsberg, landsberg_density
from .indicatrix import TWO_PI, indicatrix_length, indicatrix_lengths, landsberg_angle, solve_normal
from .metric import MetricSpec

DEFAULT_SEED = 20240601
DETECTORS = ("self-intersections", "oracle", "diagnosis")


def negative_curvature_metric(a: float = 0.25) -> MetricSpec:
    """Conformal factor e^(a |x|^2); Gauss curvature -4a exp(-2a |x|^2) < 0."""
    if a <= 0:
        raise ParameterError("the negative-curvature factor needs a > 0")
    return MetricSpec.conformal(c20=a, c02=a)


@dataclass(frozen=True)
class ExperimentConfig:
    metric: MetricSpec
    initial: tuple = ()  # explicit (x0, direction) pairs; random rays when empty
    n_rays: int = 32
    horizon: float = 100.0
    detectors: tuple = DETECTORS
    seed: int = DEFAULT_SEED
    box: float = 1.0  # random base points in [-box, box]^2
    n_samples: int = 2001
    side: int = 1
    probe_half_width: float = 2.0
    probe_n: int = 9
    probe_dirs: int = 8
    k_tol: float = 1e-7
    n_pairs: int = 1000
    rtol: float = 1e-9
    atol: float = 1e-12
    oracle_tol: float = 1e-5

    def __post_init__(self):
        if not self.horizon > 0:
            raise ParameterError("horizon must be positive")
        if self.n_rays < 1 and not self.initial:
            raise ParameterError("need at least one ray")
        if self.n_samples < 4:
            raise ParameterError("n_samples must be at least 4")
        if self.side not in (1, -1):
            raise ParameterError("side must be +1 (left) or -1 (right)")
        unknown = sorted(set(self.detectors) - set(DETECTORS))
        if unknown:
            raise ParameterError(f"unknown detector(s) {unknown}; expected a subset of {DETECTORS}")
        object.__setattr__(self, "initial", tuple((tuple(map(float, x)), tuple(map(float, v)))
                                                  for x, v in self.initial))
        object.__setattr__(self, "detectors", tuple(self.detectors))


def initial_data(config: ExperimentConfig) -> tuple[np.ndarray, np.ndarray]:
    """Base points and unit tangents: the explicit list, else seeded random rays."""
    if config.initial:
        x0 = np.array([p for p, _ in config.initial], dtype=float)
        v = np.array([d for _, d in config.initial], dtype=float)
    else:
        rng = np.random.default_rng(config.seed)
        x0 = rng.uniform(-config.box, config.box, size=(config.n_rays, 2))
        th = rng.uniform(0.0, TWO_PI, size=config.n_rays)
        v = np.stack([np.cos(th), np.sin(th)], axis=1)
    T0 = np.stack([normalize_direction(config.metric, x, d)[0] for x, d in zip(x0, v)])
    return x0, T0


# -- certification --------------------------------------------------------------------

def certify_nonpositive(metric: MetricSpec, half_width: float = 2.0, n: int = 9, n_dirs: int = 8,
                        k_tol: float = 1e-7) -> dict:
    """Landsberg certification plus max K <= k_tol over a grid x direction probe."""
    s = np.linspace(-half_width, half_width, n)
    P = np.stack(np.meshgrid(s, s, indexing="ij"), axis=-1).reshape(-1, 2)
    landsberg = certify_landsberg(metric, P, n_dirs=n_dirs)
    # half-step offset keeps the probe off the coordinate axes (degenerate for p-norms)
    th = TWO_PI * (np.arange(n_dirs) + 0.5) / n_dirs
    X = np.repeat(P, n_dirs, axis=0)
    Y = np.tile(np.stack([np.cos(th), np.sin(th)], axis=1), (P.shape[0], 1))
    maxK = float(np.max(invariants_batch(metric, X, Y)[2]))
    if maxK > k_tol:
        raise CertificationError(f"Gauss curvature is positive on the probe set: max K = {maxK:.3e}")
    return {**landsberg, "max_K": maxK, "probe_half_width": half_width, "probe_grid": n}


# -- classical oracles ------------------------------------------------------------------

def _conformal_log_factor(metric: MetricSpec, x: np.ndarray):
    """u and grad u for F = e^u |y| (closed form, independent of the jet code)."""
    p = metric.params
    x1, x2 = x[..., 0], x[..., 1]
    u = (p["c00"] + p["c10"] * x1 + p["c01"] * x2
         + p["c20"] * x1**2 + p["c11"] * x1 * x2 + p["c02"] * x2**2)
    du = np.stack([p["c10"] + 2 * p["c20"] * x1 + p["c11"] * x2,
                   p["c01"] + p["c11"] * x1 + 2 * p["c02"] * x2], axis=-1)
    if p["kappa"] is not None:
        k = p["kappa"]
        q = 1.0 + k * (x1**2 + x2**2)
        u = u + np.log(2.0 / q)
        du = du - (2.0 * k / q)[..., None] * x
    return u, du


def oracle_available(metric: MetricSpec) -> bool:
    return metric.family == "riemannian-conformal" or metric.is_x_independent


def oracle_curve(metric: MetricSpec, x0, T0, ts, rtol: float = 1e-10, atol: float = 1e-12) -> np.ndarray:
    """Reference trajectory for the scan.

    Riemannian conformal metrics: geodesics of e^(2u) delta from the
    Christoffel symbols, x'' = -2 (du . x') x' + |x'|^2 grad u.
    x-independent metrics: straight lines.
    """
    x0 = np.asarray(x0, dtype=float)
    T0 = np.asarray(T0, dtype=float)
    if metric.is_x_independent:
        return x0[None, :] + ts[:, None] * T0[None, :]
    if metric.family != "riemannian-conformal":
        raise GeometryError("no classical oracle for this metric family")

    def rhs(t, z):
        x, v = z[:2], z[2:]
        _, du = _conformal_log_factor(metric, x)
        return np.concatenate([v, -2.0 * (du @ v) * v + (v @ v) * du])

    sol = solve_ivp(rhs, (ts[0], ts[-1]), np.concatenate([x0, T0]), method="RK45",
                    rtol=rtol, atol=atol, dense_output=True)
    if not sol.success:
        raise ConvergenceError(f"oracle integration failed: {sol.message}")
    return sol.sol(ts).T[:, :2]


# -- loop diagnosis ------------------------------------------------------------------

def _resample(P: np.ndarray, n_max: int) -> np.ndarray:
    if P.shape[0] <= n_max:
        return P
    idx = np.unique(np.linspace(0, P.shape[0] - 1, n_max).round().astype(int))
    return P[idx]


def _signed_area(P: np.ndarray) -> float:
    x, y = P[:, 0], P[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def diagnose_loop(metric: MetricSpec, trace_, t_a: float, t_b: float, point, n_max: int = 200,
                  min_triangles: int = 4000) -> dict:
    """Gauss-Bonnet terms of the loop a trace closes between crossing parameters t_a < t_b.

    For an N-parallel boundary the boundary term vanishes and the total
    reduces to (1/L) int K sqrt(g) + (1/L) angle(N-, N+).  It is reported
    anyway so the diagnosis also applies to arbitrary curves.
    """
    ts = trace_.ts
    inside = (ts > t_a) & (ts < t_b)
    if np.count_nonzero(inside) < 3:
        raise GeometryError("loop has too few samples to diagnose")
    p0 = np.asarray(point, dtype=float)
    area = _signed_area(np.vstack([p0, trace_.xs[inside]]))
    orient = 1 if area > 0 else -1
    # boundary: trapezoid on samples joined with the crossing point
    x_in = trace_.xs[inside]
    Ls = indicatrix_lengths(metric, x_in)
    d = lift_data(metric, x_in, trace_.Ts[inside], trace_.dT[inside], orient)
    f = d["kTN"] / d["sigma"] * trace_.speed[inside] / Ls
    boundary = float(trapezoid(f, ts[inside]))
    # corner: outgoing tangent at t_a, incoming tangent at t_b
    T_plus = np.array([np.interp(t_a, ts, trace_.Ts[:, k]) for k in range(2)])
    T_minus = np.array([np.interp(t_b, ts, trace_.Ts[:, k]) for k in range(2)])
    T_plus = normalize_direction(metric, p0, T_plus)[0]
    T_minus = normalize_direction(metric, p0, T_minus)[0]
    N_plus = solve_normal(metric, p0, T_plus, side=orient)
    N_minus = solve_normal(metric, p0, T_minus, side=orient)
    # a clockwise loop is a counter-clockwise one in the mirrored chart
    X, Y = (N_minus, N_plus) if orient > 0 else (N_plus, N_minus)
    L0 = indicatrix_length(metric, p0)
    corner = landsberg_angle(metric, p0, X, Y).value / L0
    poly = _resample(np.vstack([p0, x_in]), n_max)
    if orient < 0:
        poly = poly[::-1]
    segs = tuple(Line(tuple(poly[k]), tuple(poly[(k + 1) % len(poly)])) for k in range(len(poly)))
    tri = triangulate(DomainSpec((segs,), name="loop"), min_triangles=min_triangles)
    pts, w = tri.quadrature()
    interior = tri.integrate(landsberg_density(metric, pts), w)
    return {"t_a": t_a, "t_b": t_b, "point": p0.tolist(), "orientation": orient,
            "interior": interior, "boundary": boundary, "corner": corner,
            "total": interior + boundary + corner}


# -- scans ------------------------------------------------------------------------

@dataclass
class ScanReport:
    task: str
    status: str  # "pass" | "fail" | "inconclusive"
    summary: dict
    details: list = field(default_factory=list)
    certification: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"task": self.task, "status": self.status, "summary": self.summary,
                "certification": self.certification, "details": self.details}


def _scan_ray(config: ExperimentConfig, k: int, x0, T0) -> dict:
    entry = {"ray": k, "x0": x0.tolist(), "T0": T0.tolist()}
    try:
        tr = integrate_n_parallels(config.metric, x0, T0, (0.0, config.horizon), config.n_samples,
                                   side=config.side, rtol=config.rtol, atol=config.atol)[0]
    except (FinslerError, ArithmeticError, np.linalg.LinAlgError) as exc:
        # integrator failure is treated as inconclusive, never as a pass
        return {**entry, "status": "inconclusive", "error": f"{type(exc).__name__}: {exc}"}
    entry["status"] = "ok"
    entry["end"] = tr.xs[-1].tolist()
    entry["max_abs_DN"] = float(np.max(np.linalg.norm(tr.DN, axis=1)))
    if "self-intersections" in config.detectors:
        hits = self_intersections(tr)
        entry["crossings"] = [{"t_a": a, "t_b": b, "point": p.tolist()} for a, b, p in hits]
        if hits and "diagnosis" in config.detectors:
            diag = []
            for a, b, p in hits:
                try:
                    diag.append(diagnose_loop(config.metric, tr, a, b, p))
                except FinslerError as exc:
                    diag.append({"t_a": a, "t_b": b, "error": f"{type(exc).__name__}: {exc}"})
            entry["diagnosis"] = diag
    if "oracle" in config.detectors and oracle_available(config.metric):
        try:
            ref = oracle_curve(config.metric, x0, T0, tr.ts)
        except FinslerError as exc:
            entry["oracle"] = {"error": f"{type(exc).__name__}: {exc}"}
        else:
            entry["oracle"] = {"max_deviation": float(np.max(np.linalg.norm(ref - tr.xs, axis=1))),
                               "crossings": len(self_intersections(ref, tr.ts))}
    return entry


def hadamard_scan(config: ExperimentConfig) -> ScanReport:
    """N-parallels to the horizon on a certified Landsberg surface with K <= 0."""
    cert = certify_nonpositive(config.metric, config.probe_half_width, config.probe_n,
                               config.probe_dirs, config.k_tol)
    x0, T0 = initial_data(config)
    rays = ordered_map(lambda k: _scan_ray(config, k, x0[k], T0[k]), range(x0.shape[0]))
    n_inc = sum(r["status"] == "inconclusive" for r in rays)
    n_cross = sum(len(r.get("crossings", [])) for r in rays)
    summary = {"rays": len(rays), "horizon": config.horizon, "seed": config.seed,
               "self_intersections": n_cross, "inconclusive": n_inc}
    oracle = [r["oracle"] for r in rays if "max_deviation" in r.get("oracle", {})]
    oracle_ok = True
    if oracle:
        dev = max(o["max_deviation"] for o in oracle)
        o_cross = sum(o["crossings"] for o in oracle)
        oracle_ok = o_cross == n_cross and dev <= config.oracle_tol
        summary["oracle"] = {"rays": len(oracle), "max_deviation": dev,
                             "self_intersections": o_cross, "agrees": oracle_ok}
    if n_cross or not oracle_ok:
        status = "fail"
    elif n_inc:
        status = "inconclusive"
    else:
        status = "pass"
    return ScanReport("hadamard", status, summary, rays, cert)


def corner_bound_scan(config: ExperimentConfig) -> ScanReport:
    """Normalized Landsberg angles of random unit pairs at random points lie in [0, 1)."""
    rng = np.random.default_rng(config.seed)
    metric = config.metric
    n = config.n_pairs
    xs = rng.uniform(-config.box, config.box, size=(n, 2))
    angles = rng.uniform(0.0, TWO_PI, size=(n, 2))
    L_const = indicatrix_length(metric, xs[0]) if metric.is_x_independent else None

    def one(k):
        x = xs[k]
        X = normalize_direction(metric, x, [math.cos(angles[k, 0]), math.sin(angles[k, 0])])[0]
        Y = normalize_direction(metric, x, [math.cos(angles[k, 1]), math.sin(angles[k, 1])])[0]
        L = L_const if L_const is not None else indicatrix_length(metric, x)
        return landsberg_angle(metric, x, X, Y).value / L

    vals = np.array(ordered_map(one, range(n)))
    worst = int(np.argmax(vals))
    bad = int(np.count_nonzero((vals >= 1.0) | (vals < 0.0)))
    summary = {"pairs": n, "seed": config.seed, "max_normalized": float(vals[worst]),
               "min_normalized": float(vals.min()), "margin": float(1.0 - vals[worst]),
               "violations": bad, "worst_point": xs[worst].tolist()}
    return ScanReport("corner-bound", "fail" if bad else "pass", summary)
