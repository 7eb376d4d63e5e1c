"""Geodesics, N-parallels and curvature quantities along curves.

Along a curve with unit Finsler speed ``T = dx/ds`` the Shen normal
``N(x, T)`` is transported with two covariant derivatives:

* reference vector N: ``D_T^(N) U = dU/ds + Gamma(x, N) T U``;
* reference vector T: ``D_T^(T) U = dU/ds + Gamma(x, T) T U``.

An N-parallel has ``D_T^(N) N = 0``.  It is integrated as the first order
system in (x, T)

    x' = T,   T' = -Gamma(x, N) T T + lam T,

where the tangential multiplier ``lam`` keeps ``F(x, T) = 1``.  A curve whose
``D_T^(N) T`` is tangential automatically has a parallel normal, because
``D_T^(N) N`` is g_N-orthogonal to both N and T.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp, trapezoid
from scipy.interpolate import CubicSpline

from ._util import chunked
from .connection import geometry, spray_coefficients
from .errors import ConvergenceError, GeometryError
from .indicatrix import normal_with_derivative, solve_normals
from .metric import MetricSpec, _as_points, f2_taylor, fundamental_tensor
from .reports import write_csv

KINDS = ("geodesic", "n-parallel", "explicit")
SIGMA_FLOOR = 1e-8


@dataclass(frozen=True)
class CurveSpec:
    """What to trace.

    ``param`` (explicit curves only) maps an array of times to
    ``(x, dx/dt, d2x/dt2)``, each of shape (n, 2); the parameter need not be
    the Finsler arc length.
    """

    kind: str
    x0: tuple = (0.0, 0.0)
    T0: tuple = (1.0, 0.0)
    t_span: tuple = (0.0, 1.0)
    side: int = 1
    n_samples: int = 201
    param: Callable | None = field(default=None, compare=False)
    closed: bool = False

    def __post_init__(self):
        if self.kind not in KINDS:
            raise GeometryError(f"unknown curve kind {self.kind!r}; expected one of {KINDS}")
        if self.side not in (1, -1):
            raise GeometryError("side must be +1 or -1")
        if not self.t_span[1] > self.t_span[0]:
            raise GeometryError("t_span must be an increasing interval")
        if self.kind == "explicit" and self.param is None:
            raise GeometryError("explicit curves need a param callback")
        if self.n_samples < 2:
            raise GeometryError("a trace needs at least two samples")


@dataclass(frozen=True)
class CurveTrace:
    """Samples of a curve with its Shen normal and curvature data.

    All derivative quantities refer to the Finsler arc length s; ``speed`` is
    ds/dt for the stored times (1 for integrated curves).
    """

    ts: np.ndarray
    xs: np.ndarray
    Ts: np.ndarray
    Ns: np.ndarray
    sigmas: np.ndarray
    kTN: np.ndarray
    mu: np.ndarray
    kVT: np.ndarray
    speed: np.ndarray
    dT: np.ndarray
    dN: np.ndarray
    DN: np.ndarray
    DNT: np.ndarray
    DTT: np.ndarray
    V: np.ndarray
    side: int = 1
    closed: bool = False

    def __len__(self) -> int:
        return self.ts.size

    def to_csv(self, path) -> None:
        """Write t, x1, x2, T1, T2, N1, N2, sigma, kTN columns."""
        rows = np.column_stack([self.ts, self.xs, self.Ts, self.Ns, self.sigmas, self.kTN])
        write_csv(path, ["t", "x1", "x2", "T1", "T2", "N1", "N2", "sigma", "kTN"], rows)


@dataclass(frozen=True)
class RefCovDeriv:
    value: np.ndarray


def normalize_direction(spec: MetricSpec, x, v) -> np.ndarray:
    """Rescale v so that F(x, v) = 1."""
    x = _as_points(x, "x")
    v = _as_points(v, "v")
    return v / spec.norm(x, v)[:, None]


# -- pointwise lift data ---------------------------------------------------------

def _unit_derivs(spec, x, T):
    """F, dF/dx and dF/dy at (x, T)."""
    P = f2_taylor(spec, x, T, 1)
    F = np.sqrt(P.value)
    Fx = np.stack([P.partial(0), P.partial(1)], axis=1) / (2 * F[:, None])
    Fy = np.stack([P.partial(2), P.partial(3)], axis=1) / (2 * F[:, None])
    return F, Fx, Fy


def _lift_block(spec, x, T, dT, side):
    nd = normal_with_derivative(spec, x, T, dx=T, dT=dT, side=side)
    N = nd.N
    geoN = geometry(spec, x, N, curvature=False)
    DN = nd.dN + np.einsum("nij,nj->ni", geoN.conn.Nnl, T)
    DNT = dT + np.einsum("nijk,nj,nk->ni", geoN.conn.Gamma, T, T)
    gN = geoN.metric.g
    kTN = -np.einsum("nij,ni,nj->n", gN, DN, T)
    sigma = np.sqrt(np.einsum("nij,ni,nj->n", gN, T, T))

    G = spray_coefficients(spec, x, T)
    DTT = dT + 2.0 * G
    gT, sgT, _, FyT = fundamental_tensor(spec, x, T)
    e1 = np.stack([FyT[:, 1], -FyT[:, 0]], axis=1) / sgT[:, None]
    V = -side * e1
    V = V / spec.norm(x, V)[:, None]
    mu2 = np.einsum("nij,ni,nj->n", gT, V, V)
    kVT = np.einsum("nij,ni,nj->n", gT, DTT, V) / mu2
    return N, nd.dN, DN, DNT, kTN, sigma, DTT, V, np.sqrt(mu2), kVT


def lift_data(spec: MetricSpec, x, T, dT, side: int = 1) -> dict:
    """Shen normal, covariant derivatives and curvatures at unit-speed samples.

    ``T`` must satisfy F(x, T) = 1 and ``dT`` is dT/ds.
    """
    x = _as_points(x, "x")
    T = _as_points(T, "T")
    dT = _as_points(dT, "dT")
    out = chunked(lambda a, b, c: _lift_block(spec, a, b, c, side), x, T, dT, size=2048)
    N, dN, DN, DNT, kTN, sigma, DTT, V, mu, kVT = out
    if np.any(sigma < SIGMA_FLOOR):
        raise GeometryError("sigma = sqrt(g_N(T, T)) fell below its floor")
    return dict(N=N, dN=dN, DN=DN, DNT=DNT, kTN=kTN, sigma=sigma, DTT=DTT, V=V, mu=mu, kVT=kVT)


def n_parallel_curvature(spec: MetricSpec, x, T, dT, side: int = 1) -> np.ndarray:
    """k_T^(N) = -g_N(D_T^(N) N, T) at unit-speed samples (x, T, dT/ds)."""
    return lift_data(spec, x, T, dT, side)["kTN"]


def signed_curvature_over_T(spec: MetricSpec, x, T, dT, side: int = 1) -> np.ndarray:
    """k_V^(T) with D_T^(T) T = k_V^(T) V, V the unit g_T-normal on ``side`` of T."""
    return lift_data(spec, x, T, dT, side)["kVT"]


def _make_trace(spec, ts, xs, Ts, dTs, side, speed=None, closed=False) -> CurveTrace:
    d = lift_data(spec, xs, Ts, dTs, side)
    return CurveTrace(
        ts=ts, xs=xs, Ts=Ts, Ns=d["N"], sigmas=d["sigma"], kTN=d["kTN"], mu=d["mu"],
        kVT=d["kVT"], speed=np.ones_like(ts) if speed is None else speed, dT=dTs,
        dN=d["dN"], DN=d["DN"], DNT=d["DNT"], DTT=d["DTT"], V=d["V"], side=side, closed=closed,
    )


# -- ODE right-hand sides -----------------------------------------------------------

def _geodesic_rhs(spec):
    def rhs(t, z):
        Z = z.reshape(-1, 4)
        G = spray_coefficients(spec, Z[:, :2], Z[:, 2:])
        return np.concatenate([Z[:, 2:], -2.0 * G], axis=1).ravel()
    return rhs


class _NParallelRHS:
    """Right-hand side with a warm-started normal cache."""

    def __init__(self, spec: MetricSpec, side: int):
        self.spec = spec
        self.side = side
        self.N = None

    def tangent_rate(self, x, T):
        p0 = self.N if self.N is not None and self.N.shape == T.shape else None
        N = solve_normals(self.spec, x, T, side=self.side, p0=p0)
        self.N = N
        Gamma = geometry(self.spec, x, N, curvature=False).conn.Gamma
        acc = np.einsum("nijk,nj,nk->ni", Gamma, T, T)
        _, Fx, Fy = _unit_derivs(self.spec, x, T)
        lam = np.einsum("ni,ni->n", Fy, acc) - np.einsum("ni,ni->n", Fx, T)
        return -acc + lam[:, None] * T

    def __call__(self, t, z):
        Z = z.reshape(-1, 4)
        return np.concatenate([Z[:, 2:], self.tangent_rate(Z[:, :2], Z[:, 2:])], axis=1).ravel()


def _check_unit(spec, x0, T0, tol=1e-12):
    F = spec.norm(x0, T0)
    if np.any(np.abs(F - 1.0) > tol):
        raise GeometryError("initial tangent must have unit Finsler length (F(x0, T0) = 1)")


def _integrate(rhs, x0, T0, t_span, n_samples, rtol, atol):
    z0 = np.concatenate([x0, T0], axis=1).ravel()
    sol = solve_ivp(rhs, t_span, z0, method="DOP853", rtol=rtol, atol=atol, dense_output=True)
    if not sol.success:
        raise ConvergenceError(f"curve integration failed: {sol.message}")
    ts = np.linspace(t_span[0], t_span[1], n_samples)
    Z = sol.sol(ts).T.reshape(n_samples, -1, 4)  # (samples, rays, 4)
    return ts, Z, sol


def integrate_geodesics(spec: MetricSpec, x0, T0, t_span=(0.0, 1.0), n_samples: int = 201,
                        side: int = 1, rtol: float = 1e-9, atol: float = 1e-12) -> list[CurveTrace]:
    """Batch of geodesics x'' + 2 G(x, x') = 0 integrated as one system."""
    x0 = _as_points(x0, "x0")
    T0 = _as_points(T0, "T0")
    _check_unit(spec, x0, T0)
    ts, Z, _ = _integrate(_geodesic_rhs(spec), x0, T0, t_span, n_samples, rtol, atol)
    traces = []
    for r in range(x0.shape[0]):
        xs, Ts = Z[:, r, :2].copy(), Z[:, r, 2:].copy()
        dTs = -2.0 * spray_coefficients(spec, xs, Ts)
        traces.append(_make_trace(spec, ts, xs, Ts, dTs, side))
    return traces


def integrate_n_parallels(spec: MetricSpec, x0, T0, t_span=(0.0, 1.0), n_samples: int = 201,
                          side: int = 1, rtol: float = 1e-9, atol: float = 1e-12) -> list[CurveTrace]:
    """Batch of N-parallels (parallel Shen normal) integrated as one system."""
    x0 = _as_points(x0, "x0")
    T0 = _as_points(T0, "T0")
    _check_unit(spec, x0, T0)
    rhs = _NParallelRHS(spec, side)
    ts, Z, _ = _integrate(rhs, x0, T0, t_span, n_samples, rtol, atol)
    traces = []
    for r in range(x0.shape[0]):
        xs, Ts = Z[:, r, :2].copy(), Z[:, r, 2:].copy()
        dTs = chunked(_NParallelRHS(spec, side).tangent_rate, xs, Ts, size=2048)
        traces.append(_make_trace(spec, ts, xs, Ts, dTs, side))
    return traces


def integrate_geodesic(spec: MetricSpec, curve: CurveSpec, **kw) -> CurveTrace:
    if curve.kind != "geodesic":
        raise GeometryError("integrate_geodesic needs a curve of kind 'geodesic'")
    return integrate_geodesics(spec, curve.x0, curve.T0, curve.t_span, curve.n_samples,
                               curve.side, **kw)[0]


def integrate_n_parallel(spec: MetricSpec, curve: CurveSpec, **kw) -> CurveTrace:
    if curve.kind != "n-parallel":
        raise GeometryError("integrate_n_parallel needs a curve of kind 'n-parallel'")
    return integrate_n_parallels(spec, curve.x0, curve.T0, curve.t_span, curve.n_samples,
                                 curve.side, **kw)[0]


def unit_speed_data(spec: MetricSpec, x, xd, xdd):
    """Speed c = F(x, x'), unit tangent and dT/ds for an arbitrary parameterisation."""
    c, Fx, Fy = _unit_derivs(spec, x, xd)
    cdot = np.einsum("ni,ni->n", Fx, xd) + np.einsum("ni,ni->n", Fy, xdd)
    T = xd / c[:, None]
    dT = (xdd - xd * (cdot / c)[:, None]) / (c**2)[:, None]
    return c, T, dT


def trace_explicit(spec: MetricSpec, curve: CurveSpec) -> CurveTrace:
    """Sample an explicitly parameterised curve and attach its lift data."""
    if curve.kind != "explicit":
        raise GeometryError("trace_explicit needs a curve of kind 'explicit'")
    ts = np.linspace(curve.t_span[0], curve.t_span[1], curve.n_samples)
    x, xd, xdd = (np.asarray(a, dtype=float) for a in curve.param(ts))
    c, T, dT = unit_speed_data(spec, x, xd, xdd)
    return _make_trace(spec, ts, x, T, dT, curve.side, speed=c, closed=curve.closed)


def trace(spec: MetricSpec, curve: CurveSpec, **kw) -> CurveTrace:
    """Dispatch on ``curve.kind``."""
    if curve.kind == "geodesic":
        return integrate_geodesic(spec, curve, **kw)
    if curve.kind == "n-parallel":
        return integrate_n_parallel(spec, curve, **kw)
    return trace_explicit(spec, curve)


# -- covariant derivative with a reference vector -------------------------------------

def ref_cov_deriv(spec: MetricSpec, ts, xs, Ts, U, ref, dU=None) -> RefCovDeriv:
    """(dU/dt + Gamma(x, ref) T U) along samples.

    Without ``dU`` the rate of U is taken from an interpolating cubic spline,
    which needs at least four strictly increasing sample times.
    """
    ts = np.asarray(ts, dtype=float)
    xs, Ts, U, ref = (_as_points(a, n) for a, n in ((xs, "xs"), (Ts, "Ts"), (U, "U"), (ref, "ref")))
    if dU is None:
        if ts.size < 4 or np.any(np.diff(ts) <= 0):
            raise GeometryError("ref_cov_deriv needs >= 4 increasing samples to differentiate U")
        dU = CubicSpline(ts, U, axis=0)(ts, 1)
    Gamma = geometry(spec, xs, ref, curvature=False).conn.Gamma
    return RefCovDeriv(np.asarray(dU) + np.einsum("nijk,nj,nk->ni", Gamma, Ts, U))


# -- coframe pullbacks along lifts ------------------------------------------------------

def lift_pullback(spec: MetricSpec, x, xd, Y, Yd) -> np.ndarray:
    """(omega1, omega2, omega3) evaluated on the velocity of the lift t -> (x(t), Y(t)).

    Uses omega1 = (sqrt g / F)(Y2 dx1 - Y1 dx2), omega2 = dF/dy dx and
    omega3 = -(sqrt g / F^2)(Y1 dY2 - Y2 dY1) with dY -> dY + N(x, Y) dx.
    Returns an (n, 3) array.
    """
    x, xd, Y, Yd = (_as_points(a, n) for a, n in ((x, "x"), (xd, "xd"), (Y, "Y"), (Yd, "Yd")))
    geo = geometry(spec, x, Y, curvature=False)
    sg = geo.metric.sqrtg
    F = geo.metric.F
    dY = Yd + np.einsum("nij,nj->ni", geo.conn.Nnl, xd)
    w1 = sg / F * (Y[:, 1] * xd[:, 0] - Y[:, 0] * xd[:, 1])
    w2 = np.einsum("ni,ni->n", geo.metric.gradF_y, xd)
    w3 = -sg / F**2 * (Y[:, 0] * dY[:, 1] - Y[:, 1] * dY[:, 0])
    return np.stack([w1, w2, w3], axis=1)


# -- self-intersections -----------------------------------------------------------------

def _orient(ax, ay, bx, by, cx, cy):
    return (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)


def self_intersections(trace_or_points, ts=None, window: int = 1, closed: bool | None = None,
                       block: int = 512) -> list[tuple[float, float, np.ndarray]]:
    """Transverse crossings of a sampled polyline as (t_a, t_b, point), t_a < t_b.

    Segments closer than ``window`` positions along the curve (cyclically
    for closed curves) are never compared, so neighbours sharing an
    endpoint do not register.
    """
    if isinstance(trace_or_points, CurveTrace):
        P = trace_or_points.xs
        ts = trace_or_points.ts
        closed = trace_or_points.closed if closed is None else closed
    else:
        P = np.asarray(trace_or_points, dtype=float)
        ts = np.arange(P.shape[0], dtype=float) if ts is None else np.asarray(ts, dtype=float)
        closed = bool(closed)
    if P.shape[0] < 4:
        raise GeometryError("self-intersection test needs at least 4 samples")
    if closed:
        if np.allclose(P[0], P[-1], rtol=0, atol=1e-12):
            P = P[:-1]
            t_end = ts[-1]
        else:
            t_end = ts[-1] + (ts[-1] - ts[-2])
        A, B = P, np.roll(P, -1, axis=0)
        t0 = ts[: A.shape[0]]
        t1 = np.append(ts[1: A.shape[0]], t_end)
    else:
        A, B = P[:-1], P[1:]
        t0, t1 = ts[:-1], ts[1:]
    m = A.shape[0]
    lo = np.minimum(A, B)
    hi = np.maximum(A, B)
    found = []
    for s in range(0, m, block):
        i = np.arange(s, min(s + block, m))
        j = np.arange(m)
        I, J = np.meshgrid(i, j, indexing="ij")
        gap = J - I
        if closed:
            gap = np.minimum(np.abs(gap), m - np.abs(gap)) * np.sign(gap)
        keep = (J > I) & (np.abs(gap) > window)
        keep &= (lo[I, 0] <= hi[J, 0]) & (lo[J, 0] <= hi[I, 0])
        keep &= (lo[I, 1] <= hi[J, 1]) & (lo[J, 1] <= hi[I, 1])
        ii, jj = I[keep], J[keep]
        if ii.size == 0:
            continue
        a, b, c, d = A[ii], B[ii], A[jj], B[jj]
        o1 = _orient(*a.T, *b.T, *c.T)
        o2 = _orient(*a.T, *b.T, *d.T)
        o3 = _orient(*c.T, *d.T, *a.T)
        o4 = _orient(*c.T, *d.T, *b.T)
        hit = (o1 * o2 < 0) & (o3 * o4 < 0)
        for k in np.flatnonzero(hit):
            u = o1[k] / (o1[k] - o2[k])  # position along segment jj
            v = o3[k] / (o3[k] - o4[k])  # position along segment ii
            pt = a[k] + v * (b[k] - a[k])
            ta = t0[ii[k]] + v * (t1[ii[k]] - t0[ii[k]])
            tb = t0[jj[k]] + u * (t1[jj[k]] - t0[jj[k]])
            found.append((float(min(ta, tb)), float(max(ta, tb)), pt))
    found.sort(key=lambda f: (f[0], f[1]))
    return found


def arc_length(trace_: CurveTrace) -> float:
    """Finsler length of a trace (trapezoid rule on the speed)."""
    return float(trapezoid(trace_.speed, trace_.ts))
