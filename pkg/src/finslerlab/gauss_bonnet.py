"""Gauss-Bonnet assembly for Finsler surfaces with (piecewise) smooth boundary.

For a domain D with boundary traversed with D on the left, and a unit field
X = V / F(V) extending the inward Shen normal, the identity checked is

    interior + boundary + corners = chi(D)

with

* boundary:  sum over segments of  (1/L) k_T^(N) / sigma  ds;
* corners:   sum over corners of   angle(N-, N+) / L  on the positive arc;
* interior:  (1/L) [K sqrt(g) - J (omega1 ^ a) - dlog L ^ a]  with
  ``a = X* Omega`` the pulled back connection form
  ``Omega = sqrt(g)/F^2 (y1 dy2 - y2 dy1)`` (``dy`` made horizontal).

On Landsberg surfaces (J = 0, L constant) the interior integrand is
K sqrt(g) / L, a function on the base that needs no vector field.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._util import chunked
from .connection import geometry
from .curves import lift_data, unit_speed_data
from .domain import Arc, DomainSpec, Triangulation, annulus, triangulate
from .errors import CertificationError, ConvergenceError, GeometryError
from .indicatrix import (
    TWO_PI,
    _GL_NODES,
    _GL_WEIGHTS,
    grad_log_length,
    indicatrix_length,
    indicatrix_lengths,
    landsberg_angle,
    normal_with_derivative,
    solve_normal,
)
from .metric import MetricSpec, _as_points, f2_taylor

FIELD_KINDS = ("radial", "sink", "saddle", "rotational", "blended")
REFERENCE_DIRECTION = (0.6, 0.8)


@dataclass(frozen=True)
class VectorFieldSpec:
    """A planar field with an isolated zero at ``zero``.

    ``blended`` is the sink -(x - zero) inside, turned smoothly into the
    inward Shen normal over a collar of relative width ``collar`` at the
    boundary of a disk domain.
    """

    kind: str = "blended"
    zero: tuple = (0.0, 0.0)
    collar: float = 0.3

    def __post_init__(self):
        if self.kind not in FIELD_KINDS:
            raise GeometryError(f"unknown field kind {self.kind!r}; expected one of {FIELD_KINDS}")
        if not 0.0 < self.collar < 1.0:
            raise GeometryError("collar must lie in (0, 1)")

    @property
    def zero_points(self) -> list:
        return [tuple(map(float, self.zero))]

    def to_dict(self) -> dict:
        return {"kind": self.kind, "zero": list(map(float, self.zero)), "collar": float(self.collar)}


def _raw_field(kind, p, x):
    d = x - np.asarray(p, dtype=float)[None, :]
    n = x.shape[0]
    J = np.zeros((n, 2, 2))
    if kind == "radial":
        V = d
        J[:, 0, 0] = J[:, 1, 1] = 1.0
    elif kind == "sink":
        V = -d
        J[:, 0, 0] = J[:, 1, 1] = -1.0
    elif kind == "saddle":
        V = np.stack([d[:, 0], -d[:, 1]], axis=1)
        J[:, 0, 0], J[:, 1, 1] = 1.0, -1.0
    elif kind == "rotational":
        V = np.stack([-d[:, 1], d[:, 0]], axis=1)
        J[:, 0, 1], J[:, 1, 0] = -1.0, 1.0
    else:
        raise GeometryError(f"field kind {kind!r} has no closed form without a domain")
    return V, J


def _smoothstep(s):
    """Quintic 0 -> 1 on [0, 1] with vanishing first and second derivatives at the ends."""
    s = np.clip(s, 0.0, 1.0)
    return s**3 * (10 - 15 * s + 6 * s * s), 30 * s * s * (1 - s) ** 2


def _disk_of(domain: DomainSpec):
    if len(domain.loops) != 1 or len(domain.loops[0]) != 1 or not isinstance(domain.loops[0][0], Arc):
        raise GeometryError("the blended field is built for disk domains (one full circular arc)")
    arc = domain.loops[0][0]
    if not math.isclose(abs(arc.theta1 - arc.theta0), TWO_PI, rel_tol=1e-12):
        raise GeometryError("the blended field is built for disk domains (one full circular arc)")
    return np.asarray(arc.center, dtype=float), float(arc.radius), 1 if arc.theta1 > arc.theta0 else -1


class FieldEvaluator:
    """V and its Jacobian dV^i/dx^j for a field on a given metric and domain."""

    def __init__(self, metric: MetricSpec, fspec: VectorFieldSpec, domain: DomainSpec | None = None,
                 side: int = 1):
        self.metric = metric
        self.fspec = fspec
        self.side = side
        if fspec.kind == "blended":
            if domain is None:
                raise GeometryError("the blended field needs its disk domain")
            self.center, self.radius, self.orient = _disk_of(domain)
            if np.linalg.norm(np.asarray(fspec.zero) - self.center) >= (1 - fspec.collar) * self.radius:
                raise GeometryError("the zero of the blended field must lie inside the collar")

    def __call__(self, x):
        x = _as_points(x, "x")
        kind = self.fspec.kind
        if kind != "blended":
            return _raw_field(kind, self.fspec.zero, x)
        V, J = _raw_field("sink", self.fspec.zero, x)
        c, R, w = self.center, self.radius, self.fspec.collar * self.radius
        d = x - c[None, :]
        r = np.hypot(d[:, 0], d[:, 1])
        s = (r - (R - w)) / w
        in_collar = s > 0.0
        if not np.any(in_collar):
            return V, J
        idx = np.flatnonzero(in_collar)
        di, ri = d[idx], r[idx]
        beta, dbeta = _smoothstep(s[idx])
        psi = np.arctan2(di[:, 1], di[:, 0])
        Nb, dNb = self.boundary_normal(psi)
        # d psi / dx and d r / dx
        dpsi = np.stack([-di[:, 1], di[:, 0]], axis=1) / (ri**2)[:, None]
        dr = di / ri[:, None]
        Vin, Jin = V[idx], J[idx]
        Vb = (1 - beta)[:, None] * Vin + beta[:, None] * Nb
        dbeta_dx = (dbeta / w)[:, None] * dr
        Jb = ((1 - beta)[:, None, None] * Jin
              + np.einsum("ni,nj->nij", Nb - Vin, dbeta_dx)
              + beta[:, None, None] * np.einsum("ni,nj->nij", dNb, dpsi))
        V = V.copy()
        J = J.copy()
        V[idx], J[idx] = Vb, Jb
        return V, J

    def boundary_normal(self, psi):
        """Inward Shen normal at the boundary point of polar angle psi, and d/dpsi."""
        c, R = self.center, self.radius
        u = np.stack([np.cos(psi), np.sin(psi)], axis=1)
        xb = c[None, :] + R * u
        t = self.orient * np.stack([-u[:, 1], u[:, 0]], axis=1)
        dxb = R * np.stack([-u[:, 1], u[:, 0]], axis=1)
        dt = self.orient * np.stack([-u[:, 0], -u[:, 1]], axis=1)
        c_, T, dT_ds = unit_speed_data(self.metric, xb, t, dt)
        # N follows the traversal tangent, exactly as in the boundary term
        nd = normal_with_derivative(self.metric, xb, T, dxb, dT_ds * c_[:, None], side=self.side)
        return nd.N, nd.dN


def unit_field(metric: MetricSpec, evaluator: FieldEvaluator, x):
    """X = V / F(V) and dX^i/dx^j."""
    V, JV = evaluator(x)
    if np.any(np.linalg.norm(V, axis=1) < 1e-12):
        raise GeometryError("vector field vanishes at a quadrature point")
    P = f2_taylor(metric, x, V, 1)
    F = np.sqrt(P.value)
    Fx = np.stack([P.partial(0), P.partial(1)], axis=1) / (2 * F[:, None])
    Fy = np.stack([P.partial(2), P.partial(3)], axis=1) / (2 * F[:, None])
    dF = Fx + np.einsum("ni,nij->nj", Fy, JV)
    X = V / F[:, None]
    JX = JV / F[:, None, None] - np.einsum("ni,nj->nij", V, dF / (F**2)[:, None])
    return X, JX


def connection_pullback(metric: MetricSpec, x, X, JX, geo=None):
    """Components a_j of X* Omega together with omega1 at X and the geometry at (x, X)."""
    if geo is None:
        geo = geometry(metric, x, X, curvature=False)
    F = geo.metric.F
    sg = geo.metric.sqrtg
    dY = JX + geo.conn.Nnl  # column j: horizontal rate of X along e_j
    a = (sg / F**2)[:, None] * (X[:, 0, None] * dY[:, 1, :] - X[:, 1, None] * dY[:, 0, :])
    m = np.stack([X[:, 1], -X[:, 0]], axis=1) * (sg / F)[:, None]
    return a, m, geo


# -- boundary and corners ---------------------------------------------------------------

def _gl_panels(n_panels):
    edges = np.linspace(0.0, 1.0, n_panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    t = (mid[:, None] + half[:, None] * _GL_NODES[None, :]).ravel()
    w = (half[:, None] * _GL_WEIGHTS[None, :]).ravel()
    return t, w


def boundary_integrand(metric: MetricSpec, seg, t, side: int = 1):
    """k_T^(N) / (sigma L) times ds/dt at parameters t of a segment."""
    x, xd, xdd = seg.eval(t)
    c, T, dT = unit_speed_data(metric, x, xd, xdd)
    d = lift_data(metric, x, T, dT, side)
    L = indicatrix_lengths(metric, x)
    return d["kTN"] / d["sigma"] * c / L


def boundary_term(metric: MetricSpec, domain: DomainSpec, side: int = 1, tol: float = 1e-10,
                  max_panels: int = 1024) -> float:
    """Sum over boundary segments of the integral of k_T^(N) / (L sigma) ds.

    Each segment uses composite 16-point Gauss-Legendre panels, doubled until
    two successive values agree to ``tol``.
    """
    total = []
    for loop in domain.loops:
        for seg in loop:
            n = 4 if seg.is_straight else 16
            t, w = _gl_panels(n)
            prev = float(np.dot(boundary_integrand(metric, seg, t, side), w))
            while True:
                n *= 2
                t, w = _gl_panels(n)
                cur = float(np.dot(boundary_integrand(metric, seg, t, side), w))
                if abs(cur - prev) <= tol:
                    break
                if 2 * n > max_panels:
                    raise ConvergenceError("boundary quadrature did not converge", residual=abs(cur - prev))
                prev = cur
            total.append(cur)
    return math.fsum(total)


@dataclass(frozen=True)
class CornerAngle:
    point: tuple
    N_minus: tuple
    N_plus: tuple
    angle: float
    length: float

    @property
    def normalized(self) -> float:
        return self.angle / self.length

    def to_dict(self) -> dict:
        return {"point": list(self.point), "N_minus": list(self.N_minus), "N_plus": list(self.N_plus),
                "angle": self.angle, "L": self.length, "normalized": self.normalized}


def corner_term(metric: MetricSpec, domain: DomainSpec, side: int = 1, tol: float = 1e-12):
    """Total corner contribution and the per-corner angles."""
    out = []
    for c in domain.corners:
        x = np.asarray(c.point, dtype=float)
        Tm = c.T_minus / metric.norm(x, c.T_minus)[0]
        Tp = c.T_plus / metric.norm(x, c.T_plus)[0]
        Nm = solve_normal(metric, x, Tm, side=side)
        Np = solve_normal(metric, x, Tp, side=side)
        ang = landsberg_angle(metric, x, Nm, Np, tol=tol).value
        L = indicatrix_length(metric, x, tol=tol)
        out.append(CornerAngle(tuple(map(float, x)), tuple(map(float, Nm)), tuple(map(float, Np)),
                               float(ang), float(L)))
    total = math.fsum(c.normalized for c in out)
    return total, out


# -- interior terms ---------------------------------------------------------------------

def _positive_triangulation(domain: DomainSpec, levels=None, min_triangles=20000, coarse=24):
    d = domain if domain.signed_area() > 0 else domain.reversed()
    return triangulate(d, levels=levels, min_triangles=min_triangles, coarse=coarse)


def certify_landsberg(metric: MetricSpec, points, tol_J: float = 1e-7, tol_L: float = 1e-7,
                      n_dirs: int = 8) -> dict:
    """Probe J and L at points x directions; raise CertificationError on failure."""
    points = _as_points(points, "points")
    ang = TWO_PI * (np.arange(n_dirs) + 0.5) / n_dirs
    dirs = np.stack([np.cos(ang), np.sin(ang)], axis=1)
    X = np.repeat(points, n_dirs, axis=0)
    Y = np.tile(dirs, (points.shape[0], 1))
    Y = Y / metric.norm(X, Y)[:, None]
    J = chunked(lambda a, b: geometry(metric, a, b).J, X, Y)
    L = indicatrix_lengths(metric, points)
    maxJ = float(np.max(np.abs(J)))
    spread = float((L.max() - L.min()) / L.mean())
    if maxJ > tol_J:
        raise CertificationError(f"metric is not Landsberg on the probe set: max |J| = {maxJ:.3e}")
    if spread > tol_L:
        raise CertificationError(f"indicatrix length varies on the probe set: spread {spread:.3e}")
    return {"max_abs_J": maxJ, "L_spread": spread, "L": float(L.mean()), "probes": int(X.shape[0])}


def _probe_points(tri: Triangulation, n: int = 25):
    C = tri.centroids
    idx = np.linspace(0, C.shape[0] - 1, n).round().astype(int)
    return C[idx]


def landsberg_density(metric: MetricSpec, pts) -> np.ndarray:
    """K sqrt(g) / L at the fixed reference direction."""
    ref = np.broadcast_to(np.asarray(REFERENCE_DIRECTION, dtype=float), pts.shape)

    def block(p, r):
        r = r / metric.norm(p, r)[:, None]
        geo = geometry(metric, p, r)
        return geo.K * geo.metric.sqrtg

    Ksg = chunked(block, pts, np.ascontiguousarray(ref))
    return Ksg / indicatrix_lengths(metric, pts)


def interior_term_landsberg(metric: MetricSpec, domain: DomainSpec, tri: Triangulation | None = None,
                            rule: str = "centroid", certify: bool = True, **tri_kw) -> float:
    """(1/L) times the integral of K sqrt(g) over D, for Landsberg surfaces."""
    tri = _positive_triangulation(domain, **tri_kw) if tri is None else tri
    if certify:
        certify_landsberg(metric, _probe_points(tri))
    pts, w = tri.quadrature(rule)
    return tri.integrate(landsberg_density(metric, pts), w)


def general_density(metric: MetricSpec, evaluator: FieldEvaluator, pts) -> np.ndarray:
    """Coefficient of dx1 ^ dx2 in the interior 2-form for a unit field X."""

    def block(p):
        X, JX = unit_field(metric, evaluator, p)
        geo = geometry(metric, p, X)
        a, m, _ = connection_pullback(metric, p, X, JX, geo)
        L, dlogL = grad_log_length(metric, p)
        Ksg = geo.K * geo.metric.sqrtg
        wedge_m_a = m[:, 0] * a[:, 1] - m[:, 1] * a[:, 0]
        wedge_dl_a = dlogL[:, 0] * a[:, 1] - dlogL[:, 1] * a[:, 0]
        return (Ksg + geo.J * wedge_m_a + wedge_dl_a) / L

    return chunked(block, pts, size=2048)


def _zero_patch_radius(domain: DomainSpec, fspec: VectorFieldSpec) -> float:
    center, R, _ = _disk_of(domain)
    gap = (1 - fspec.collar) * R - float(np.linalg.norm(np.asarray(fspec.zero) - center))
    return min(0.25 * R, 0.5 * gap)


def _polar_patch(zero, r0: float, n_t: int = 64):
    """Polar Gauss points and weights on the disk |x - zero| < r0.

    The unit field is singular at its zero, but r times the interior density
    is smooth in polar coordinates, so this rule converges spectrally where a
    triangle rule only reaches O(h).
    """
    r = np.concatenate([0.5 * r0 * (_GL_NODES + 1) * 0.5, 0.5 * r0 * (_GL_NODES + 3) * 0.5])
    wr = np.concatenate([_GL_WEIGHTS, _GL_WEIGHTS]) * 0.25 * r0
    th = TWO_PI * np.arange(n_t) / n_t
    Rg, Tg = np.meshgrid(r, th, indexing="ij")
    pts = np.asarray(zero, dtype=float)[None, :] + np.stack(
        [(Rg * np.cos(Tg)).ravel(), (Rg * np.sin(Tg)).ravel()], axis=1)
    w = (wr[:, None] * Rg * (TWO_PI / n_t)).ravel()
    return pts, w


def excised_triangulation(domain: DomainSpec, fspec: VectorFieldSpec, levels=None,
                          min_triangles: int = 20000, coarse: int = 24):
    """Triangulation of the disk minus the polar patch around the field zero, and the patch radius."""
    r0 = _zero_patch_radius(domain, fspec)
    if r0 <= 0:
        raise GeometryError("the zero of the blended field must lie inside the collar")
    center, R, _ = _disk_of(domain)
    z = tuple(float(v) for v in fspec.zero)
    outer = (Arc(tuple(center), R, 0.0, TWO_PI),)
    hole = (Arc(z, r0, TWO_PI, 0.0),)
    tri = triangulate(DomainSpec((outer, hole), name="excised-disk"), levels=levels,
                      min_triangles=min_triangles, coarse=coarse)
    return tri, r0


def interior_term_general(metric: MetricSpec, domain: DomainSpec, field_spec: VectorFieldSpec,
                          tri: Triangulation | None = None, patch_radius: float | None = None,
                          rule: str = "centroid", side: int = 1, **tri_kw) -> float:
    """Integral over D of the interior 2-form pulled back by X = V / F(V).

    Without an explicit ``tri`` a polar patch around the zero of X is cut
    out and integrated separately. A given ``tri`` is taken to cover D
    minus the patch of ``patch_radius`` (or all of D when that is None).
    """
    ev = FieldEvaluator(metric, field_spec, domain, side=side)
    if tri is None:
        tri, patch_radius = excised_triangulation(domain, field_spec, **tri_kw)
    pts, w = tri.quadrature(rule)
    parts = [tri.integrate(general_density(metric, ev, pts), w)]
    if patch_radius is not None:
        ppts, pw = _polar_patch(field_spec.zero, patch_radius)
        parts.append(float(np.dot(general_density(metric, ev, ppts), pw)))
    return math.fsum(parts)


# -- index and topological lemma --------------------------------------------------------------

def field_index(metric: MetricSpec, field_spec: VectorFieldSpec, zero=None, radius: float = 1e-3,
                n: int = 256, domain: DomainSpec | None = None, side: int = 1) -> int:
    """Index of an isolated zero from (1/L) times the integral of X* Omega over a small circle.

    Cross-checked against the Euclidean winding number of V.
    """
    z = np.asarray(field_spec.zero if zero is None else zero, dtype=float)
    ev = FieldEvaluator(metric, field_spec, domain, side=side)
    th = TWO_PI * np.arange(n) / n
    u = np.stack([np.cos(th), np.sin(th)], axis=1)
    x = z[None, :] + radius * u
    xd = radius * np.stack([-u[:, 1], u[:, 0]], axis=1)
    X, JX = unit_field(metric, ev, x)
    a, _, _ = connection_pullback(metric, x, X, JX)
    integral = float(np.sum(np.einsum("ni,ni->n", a, xd))) * (TWO_PI / n)
    value = integral / indicatrix_length(metric, z)
    k = round(value)
    if abs(value - k) > 0.2:
        raise GeometryError(f"index is ambiguous: {value:.4f}")
    V, _ = ev(np.concatenate([x, x[:1]]))
    phi = np.unwrap(np.arctan2(V[:, 1], V[:, 0]))
    winding = (phi[-1] - phi[0]) / TWO_PI
    if round(winding) != k:
        raise GeometryError(f"Finsler index {k} disagrees with the Euclidean winding {winding:.4f}")
    return int(k)


def _curl_of_pullback(metric, ev, pts, h):
    """FD curl of a / L at pts (central differences, step h)."""
    def b_of(p):
        X, JX = unit_field(metric, ev, p)
        a, _, _ = connection_pullback(metric, p, X, JX)
        return a / indicatrix_lengths(metric, p)[:, None]

    def block(p):
        n = p.shape[0]
        e1, e2 = np.array([h, 0.0]), np.array([0.0, h])
        b = b_of(np.concatenate([p + e1, p - e1, p + e2, p - e2])).reshape(4, n, 2)
        return (b[0, :, 1] - b[1, :, 1]) / (2 * h) - (b[2, :, 0] - b[3, :, 0]) / (2 * h)

    return chunked(block, pts, size=1024)


def topological_lemma_check(metric: MetricSpec, domain: DomainSpec, field_spec: VectorFieldSpec | None = None,
                            rho: float = 0.04, h: float = 1e-5, side: int = 1, min_triangles: int = 20000,
                            coarse: int = 32) -> dict:
    """Evaluate -int_D X* dPi + int_{N(boundary)} Pi and its distance to chi(D).

    X* dPi is the finite-difference curl of X* Omega / L, integrated over the
    disk minus a small disk of radius rho around the zero; the rho -> 0 limit
    is taken by fitting c0 + c1 rho + c2 rho^2 through rho, rho/2, rho/4.
    """
    field_spec = VectorFieldSpec("blended") if field_spec is None else field_spec
    center, R, _ = _disk_of(domain)
    z = np.asarray(field_spec.zero, dtype=float)
    if not np.allclose(z, center):
        raise GeometryError("the excision annulus assumes the zero at the disk centre")
    dist = R - np.linalg.norm(z - center)
    if dist < 3 * _positive_triangulation(domain, min_triangles=min_triangles, coarse=coarse).max_diameter:
        raise GeometryError("zero too close to the boundary (< 3 grid cells)")
    ev = FieldEvaluator(metric, field_spec, domain, side=side)
    vals = []
    radii = [rho, rho / 2, rho / 4]
    grid = {}
    for r in radii:
        tri = triangulate(annulus(tuple(center), r, R), min_triangles=min_triangles, coarse=coarse)
        pts, w = tri.quadrature()
        vals.append(tri.integrate(_curl_of_pullback(metric, ev, pts, h), w))
        grid[r] = int(tri.triangles.shape[0])
    I0 = (vals[0] - 6 * vals[1] + 8 * vals[2]) / 3.0
    bnd = boundary_term(metric, domain, side=side)
    lhs = -I0 + bnd
    chi = domain.euler_characteristic()
    return {"lhs": lhs, "interior": -I0, "boundary": bnd, "chi": chi, "residual": abs(lhs - chi),
            "excision_values": vals, "radii": radii, "triangles": grid}


# -- full check -----------------------------------------------------------------------

@dataclass
class GBReport:
    interior: float
    boundary: float
    corners: float
    mode: str
    corner_angles: list = field(default_factory=list)
    grid: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)
    samples: dict | None = field(default=None, repr=False)  # quadrature points, weights, densities

    @property
    def total(self) -> float:
        return self.interior + self.boundary + self.corners

    @property
    def chi_nearest(self) -> int:
        return int(round(self.total))

    @property
    def residual(self) -> float:
        return abs(self.total - self.chi_nearest)

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "interior": self.interior,
            "boundary": self.boundary,
            "corners": self.corners,
            "total": self.total,
            "chi_nearest": self.chi_nearest,
            "residual": self.residual,
            "corner_angles": [c.to_dict() for c in self.corner_angles],
            "grid": self.grid,
            **self.extra,
        }

    def csv_line(self) -> str:
        vals = [self.interior, self.boundary, self.corners, self.total, self.chi_nearest, self.residual]
        return ",".join(format(v, ".17g") if isinstance(v, float) else str(v) for v in vals)

    CSV_HEADER = "interior,boundary,corners,total,chi_nearest,residual"


def gauss_bonnet_check(metric: MetricSpec, domain: DomainSpec, mode: str = "landsberg",
                       field_spec: VectorFieldSpec | None = None, side: int = 1, rule: str = "centroid",
                       levels: int | None = None, min_triangles: int = 20000, coarse: int = 24,
                       tol: float = 1e-10) -> GBReport:
    """Interior + boundary + corner terms of the Gauss-Bonnet identity.

    ``mode="landsberg"`` needs a certified Landsberg metric and handles
    corners; ``mode="general"`` integrates the full interior 2-form with a
    blended field and supports smooth disk boundaries.  The landsberg
    report keeps its quadrature samples in ``samples`` for CSV export.
    """
    grid = {"rule": rule}
    extra = {}
    if mode == "landsberg":
        tri = _positive_triangulation(domain, levels=levels, min_triangles=min_triangles, coarse=coarse)
        grid.update(triangles=int(tri.triangles.shape[0]), levels=tri.levels,
                    max_diameter=tri.max_diameter)
        extra["certification"] = certify_landsberg(metric, _probe_points(tri))
        pts, w = tri.quadrature(rule)
        dens = landsberg_density(metric, pts)
        interior = tri.integrate(dens, w)
        samples = {"points": pts, "weights": w, "density": dens}
    elif mode == "general":
        if domain.corners:
            raise GeometryError("general mode supports smooth (corner-free) disk boundaries only")
        field_spec = VectorFieldSpec("blended") if field_spec is None else field_spec
        tri, r0 = excised_triangulation(domain, field_spec, levels=levels,
                                        min_triangles=min_triangles, coarse=coarse)
        grid.update(triangles=int(tri.triangles.shape[0]), levels=tri.levels,
                    max_diameter=tri.max_diameter, zero_patch_radius=r0)
        interior = interior_term_general(metric, domain, field_spec, tri=tri, patch_radius=r0,
                                         rule=rule, side=side)
        samples = None
        extra["field"] = field_spec.to_dict()
    else:
        raise ValueError(f"unknown mode {mode!r}")
    boundary = boundary_term(metric, domain, side=side, tol=tol)
    corners, angles = corner_term(metric, domain, side=side)
    return GBReport(interior=interior, boundary=boundary, corners=corners, mode=mode,
                    corner_angles=angles, grid=grid, extra=extra, samples=samples)
