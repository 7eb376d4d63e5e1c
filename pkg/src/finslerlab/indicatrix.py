"""Indicatrix sampling, Landsberg angles, indicatrix length and Shen normals.

Angles are integrals of the closed fibre form
``dtheta = sqrt(g) / F^2 (y1 dy2 - y2 dy1)``; pulled back to the Euclidean
unit circle ``u(phi) = (cos phi, sin phi)`` it reads
``sqrt(g)(x, u) / F(x, u)^2 dphi``, so every angle is a one-dimensional
quadrature in the Euclidean direction angle phi.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError
from .metric import MetricSpec, _as_points, _positive_definite, f2_taylor, fundamental_tensor

TWO_PI = 2.0 * math.pi
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)


@dataclass(frozen=True)
class IndicatrixSample:
    """Radially projected sample of the indicatrix at one base point."""

    phis: np.ndarray
    ys: np.ndarray
    dtheta_weights: np.ndarray

    @property
    def length(self) -> float:
        return float(np.sum(self.dtheta_weights))


@dataclass(frozen=True)
class LandsbergAngle:
    value: float

    def __float__(self) -> float:
        return self.value


def dtheta_density(spec: MetricSpec, x, phi) -> np.ndarray:
    """sqrt(g)/F^2 at u = (cos phi, sin phi); broadcasts x (n, 2) against phi (n,)."""
    phi = np.asarray(phi, dtype=float)
    u = np.stack([np.cos(phi), np.sin(phi)], axis=-1)
    x = np.broadcast_to(np.asarray(x, dtype=float), u.shape)
    _, sg, F, _ = fundamental_tensor(spec, x.reshape(-1, 2), u.reshape(-1, 2), check=False)
    return (sg / F**2).reshape(phi.shape)


def sample_indicatrix(spec: MetricSpec, x, n: int = 64) -> IndicatrixSample:
    """Uniform sample of Sigma_x by radial projection of the unit circle.

    The angles are offset by half a step so that no sample sits on a
    coordinate axis (where the p-norm family degenerates).
    """
    if n < 16:
        raise ValueError("indicatrix sample needs at least 16 points")
    x = np.asarray(x, dtype=float).reshape(2)
    phis = TWO_PI * (np.arange(n) + 0.5) / n
    u = np.stack([np.cos(phis), np.sin(phis)], axis=1)
    F = spec.norm(np.broadcast_to(x, u.shape), u)
    ys = u / F[:, None]
    w = dtheta_density(spec, np.broadcast_to(x, u.shape), phis) * (TWO_PI / n)
    return IndicatrixSample(phis=phis, ys=ys, dtheta_weights=w)


def _panels(a: float, b: float, max_width: float = math.pi / 4) -> np.ndarray:
    """Breakpoints on [a, b] including every multiple of pi/2 inside."""
    k0 = math.floor(a / (math.pi / 2)) + 1
    inner = [k * math.pi / 2 for k in range(k0, k0 + 8) if a < k * math.pi / 2 < b]
    pts = [a, *inner, b]
    out = [pts[0]]
    for lo, hi in zip(pts[:-1], pts[1:]):
        m = max(1, math.ceil((hi - lo) / max_width - 1e-12))
        out.extend(np.linspace(lo, hi, m + 1)[1:])
    return np.array(out)


def _gl_on(lo: np.ndarray, hi: np.ndarray):
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    nodes = mid[:, None] + half[:, None] * _GL_NODES[None, :]
    weights = half[:, None] * _GL_WEIGHTS[None, :]
    return nodes, weights


def integrate_dtheta(spec: MetricSpec, x, a: float, b: float, tol: float = 1e-10,
                     max_panels: int = 4096) -> float:
    """Adaptive composite Gauss-Legendre quadrature of dtheta over phi in [a, b]."""
    if b <= a:
        return 0.0
    x = np.asarray(x, dtype=float).reshape(2)
    bp = _panels(a, b)
    lo, hi = bp[:-1], bp[1:]
    total = 0.0
    accepted = []
    while lo.size:
        if lo.size + len(accepted) > max_panels:
            raise ConvergenceError("dtheta quadrature exceeded its panel budget")
        mid = 0.5 * (lo + hi)
        L_lo = np.concatenate([lo, lo, mid])
        L_hi = np.concatenate([hi, mid, hi])
        nodes, weights = _gl_on(L_lo, L_hi)
        vals = dtheta_density(spec, np.broadcast_to(x, nodes.shape + (2,)).reshape(-1, 2),
                              nodes.reshape(-1)).reshape(nodes.shape)
        sums = np.sum(vals * weights, axis=1)
        m = lo.size
        whole, left, right = sums[:m], sums[m:2 * m], sums[2 * m:]
        fine = left + right
        ok = np.abs(fine - whole) <= tol * (hi - lo) / (b - a) + 1e-15
        accepted.extend(fine[ok].tolist())
        lo, hi = np.concatenate([lo[~ok], mid[~ok]]), np.concatenate([mid[~ok], hi[~ok]])
    accepted.sort(key=abs)
    total = math.fsum(accepted)
    return total


def fixed_rule(a: float = 0.0, b: float = TWO_PI, max_width: float = math.pi / 8):
    """Composite 16-point Gauss-Legendre nodes/weights on [a, b] (axis-aligned breakpoints)."""
    bp = _panels(a, b, max_width)
    nodes, weights = _gl_on(bp[:-1], bp[1:])
    return nodes.reshape(-1), weights.reshape(-1)


def periodic_rule(n: int = 64):
    """Half-step offset trapezoid nodes on the circle (spectral for smooth densities)."""
    nodes = TWO_PI * (np.arange(n) + 0.5) / n
    return nodes, np.full(n, TWO_PI / n)


def default_rule(spec: MetricSpec):
    """Fixed rule used for batched lengths: trapezoid unless the density has axis kinks."""
    if spec.family == "minkowski-pnorm":
        return fixed_rule()
    return periodic_rule()


def indicatrix_length(spec: MetricSpec, x, tol: float = 1e-10) -> float:
    """Riemannian length L(x) of the indicatrix Sigma_x."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    return integrate_dtheta(spec, x, 0.0, TWO_PI, tol)


def indicatrix_lengths(spec: MetricSpec, xs, rule=None) -> np.ndarray:
    """L at many base points with a fixed quadrature rule (same nodes everywhere)."""
    xs = _as_points(xs, "x")
    if spec.is_riemannian and rule is None:
        # sqrt(g) / F^2 is identically one on a Riemannian indicatrix
        return np.full(xs.shape[0], TWO_PI)
    nodes, weights = default_rule(spec) if rule is None else rule
    if spec.is_x_independent:
        val = float(np.sum(dtheta_density(spec, np.zeros((nodes.size, 2)), nodes) * weights))
        return np.full(xs.shape[0], val)
    out = np.empty(xs.shape[0])
    chunk = max(1, 20000 // nodes.size)
    for s in range(0, xs.shape[0], chunk):
        xc = xs[s:s + chunk]
        X = np.repeat(xc, nodes.size, axis=0)
        phi = np.tile(nodes, xc.shape[0])
        out[s:s + chunk] = (dtheta_density(spec, X, phi).reshape(xc.shape[0], -1) @ weights)
    return out


def grad_log_length(spec: MetricSpec, xs, h: float = 1e-4) -> tuple[np.ndarray, np.ndarray]:
    """L(x) and the gradient of log L by Richardson-extrapolated central differences.

    The quadrature nodes are identical at all stencil points, so the
    differences are of a smooth function of x.
    """
    xs = _as_points(xs, "x")
    L = indicatrix_lengths(spec, xs)
    if spec.is_x_independent or spec.is_riemannian:
        return L, np.zeros_like(xs)
    n = xs.shape[0]
    offs = []
    for step in (h, h / 2):
        for a in range(2):
            for s in (1.0, -1.0):
                e = np.zeros(2)
                e[a] = s * step
                offs.append(xs + e)
    vals = indicatrix_lengths(spec, np.concatenate(offs)).reshape(8, n)
    logv = np.log(vals)
    grads = []
    for k, step in enumerate((h, h / 2)):
        base = 4 * k
        grads.append(np.stack([(logv[base] - logv[base + 1]) / (2 * step),
                               (logv[base + 2] - logv[base + 3]) / (2 * step)], axis=1))
    return L, (4.0 * grads[1] - grads[0]) / 3.0


def _direction_angle(v) -> float:
    return math.atan2(float(v[1]), float(v[0]))


def arc_interval(X, Y) -> tuple[float, float]:
    """Euclidean angle interval [a, b] of the positively oriented arc from X to Y."""
    a = _direction_angle(X)
    d = (_direction_angle(Y) - a) % TWO_PI
    return a, a + d


def landsberg_angle(spec: MetricSpec, x, X, Y, tol: float = 1e-10) -> LandsbergAngle:
    """Landsberg angle along the positively oriented indicatrix arc from X to Y.

    Only the directions of X and Y matter (inputs are radially projected).
    """
    a, b = arc_interval(X, Y)
    return LandsbergAngle(integrate_dtheta(spec, x, a, b, tol))


# -- Shen normal ----------------------------------------------------------------

def _rot(T: np.ndarray) -> np.ndarray:
    return np.stack([-T[:, 1], T[:, 0]], axis=1)


def _half_grad(spec, x, p):
    g, _, F, Fy = fundamental_tensor(spec, x, p, check=False)
    return g, F, F[:, None] * Fy


def solve_normals(spec: MetricSpec, x, T, side: int = 1, p0=None, tol: float = 1e-12,
                  maxiter: int = 50) -> np.ndarray:
    """Batched Shen normals: F(x, N) = 1 and g_N(N, T) = 0 with N on ``side`` of T.

    Newton's method on ``g_ij(x, p) p^i = side * (-T^2, T^1)_j`` with step
    halving whenever the residual grows; ``N = p / F(x, p)``.
    """
    x = _as_points(x, "x")
    T = _as_points(T, "T")
    x, T = np.broadcast_arrays(x, T)
    if side not in (1, -1):
        raise ValueError("side must be +1 (left of T) or -1 (right of T)")
    rhs = side * _rot(T)
    scale = np.maximum(1.0, np.linalg.norm(rhs, axis=1))
    p = rhs.copy() if p0 is None else _as_points(p0, "p0").copy()
    p = np.broadcast_to(p, T.shape).copy()
    g, F, h = _half_grad(spec, x, p)
    r = h - rhs
    rn = np.linalg.norm(r, axis=1)
    active = rn > tol * scale
    it = 0
    while np.any(active):
        if it >= maxiter:
            raise ConvergenceError(
                f"normal solver did not converge in {maxiter} iterations",
                residual=float(np.max(rn[active] / scale[active])),
            )
        idx = np.flatnonzero(active)
        _positive_definite(g[idx], True)
        step = np.linalg.solve(g[idx], r[idx][:, :, None])[:, :, 0]
        lam = np.ones(idx.size)
        todo = np.arange(idx.size)
        new_p = p[idx].copy()
        new_g = g[idx].copy()
        new_r = r[idx].copy()
        new_rn = rn[idx].copy()
        for _ in range(40):
            cand = p[idx[todo]] - lam[todo, None] * step[todo]
            # stay on the requested side of T
            bad_side = side * (T[idx[todo], 0] * cand[:, 1] - T[idx[todo], 1] * cand[:, 0]) <= 0
            safe = np.where(bad_side[:, None], p[idx[todo]], cand)
            gc, _, hc = _half_grad(spec, x[idx[todo]], safe)
            rc = hc - rhs[idx[todo]]
            rnc = np.linalg.norm(rc, axis=1)
            good = (~bad_side) & (rnc < rn[idx[todo]]) | (rnc <= tol * scale[idx[todo]])
            good &= ~bad_side
            sel = todo[good]
            new_p[sel], new_g[sel], new_r[sel], new_rn[sel] = cand[good], gc[good], rc[good], rnc[good]
            todo = todo[~good]
            if todo.size == 0:
                break
            lam[todo] *= 0.5
        if todo.size:
            # no decrease possible: accept the full step (Newton may need to climb)
            cand = p[idx[todo]] - step[todo]
            gc, _, hc = _half_grad(spec, x[idx[todo]], cand)
            new_p[todo], new_g[todo] = cand, gc
            new_r[todo] = hc - rhs[idx[todo]]
            new_rn[todo] = np.linalg.norm(new_r[todo], axis=1)
        p[idx], g[idx], r[idx], rn[idx] = new_p, new_g, new_r, new_rn
        active = rn > tol * scale
        it += 1
    F = spec.norm(x, p)
    return p / F[:, None]


def solve_normal(spec: MetricSpec, x, T, side: int = 1, **kwargs) -> np.ndarray:
    """Shen normal of a single unit tangent T at x."""
    return solve_normals(spec, x, T, side=side, **kwargs)[0]


@dataclass
class NormalData:
    """Shen normal along sampled tangents together with its rate of change."""

    N: np.ndarray
    dN: np.ndarray
    sigma: np.ndarray
    gN: np.ndarray


def normal_with_derivative(spec: MetricSpec, x, T, dx, dT, side: int = 1, p0=None) -> NormalData:
    """N(x, T) and dN = dN/dx . dx + dN/dT . dT by implicit differentiation.

    Differentiating ``h(x, p) = side * rot(T)`` with ``h = F dF/dy`` gives
    ``g(p) dp = side * rot(dT) - (1/2) d2F2/dxdy(p) dx``; the Jacobian is the
    one Newton already used.
    """
    x = _as_points(x, "x")
    T = _as_points(T, "T")
    dx = _as_points(dx, "dx")
    dT = _as_points(dT, "dT")
    N = solve_normals(spec, x, T, side=side, p0=p0)
    P = f2_taylor(spec, x, N, 2)
    n = x.shape[0]
    g = np.empty((n, 2, 2))
    d2 = np.empty((n, 2, 2))
    for i in range(2):
        for j in range(2):
            g[:, i, j] = 0.5 * P.partial(2 + i, 2 + j)
            d2[:, i, j] = P.partial(i, 2 + j)
    FN = np.sqrt(P.value)
    dFx = np.stack([P.partial(0), P.partial(1)], axis=1) / (2 * FN[:, None])
    Fy = np.stack([P.partial(2), P.partial(3)], axis=1) / (2 * FN[:, None])
    # the Newton unknown is p = N / lam with g(N) N = lam * side * rot(T);
    # g and dF/dy are 0-homogeneous, d2F2/dxdy and dF/dx 1-homogeneous
    rot_s = side * _rot(T)
    lam = np.einsum("nij,nj,ni->n", g, N, rot_s) / np.einsum("ni,ni->n", rot_s, rot_s)
    p = N / lam[:, None]
    Fp = FN / lam
    _positive_definite(g, True)
    rhs = side * _rot(dT) - 0.5 * np.einsum("nkl,nk->nl", d2, dx) / lam[:, None]
    dp = np.linalg.solve(g, rhs[:, :, None])[:, :, 0]
    dF = np.einsum("ni,ni->n", dFx, dx) / lam + np.einsum("ni,ni->n", Fy, dp)
    dN = dp / Fp[:, None] - p * (dF / Fp**2)[:, None]
    sigma = np.sqrt(np.einsum("nij,ni,nj->n", g, T, T))
    return NormalData(N=N, dN=dN, sigma=sigma, gN=g)
