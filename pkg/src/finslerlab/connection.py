"""Geodesic spray, nonlinear connection, Chern connection and the invariants I, J, K.

Conventions (dimension two, variables x = chart point, y = direction):

* spray ``G^i = 1/4 g^il (d2F2/dx^k dy^l y^k - dF2/dx^l)``, geodesics solve
  ``x'' + 2 G(x, x') = 0``;
* nonlinear connection ``N^i_j = dG^i/dy^j`` and horizontal derivatives
  ``delta/delta x^i = d/dx^i - N^j_i d/dy^j``;
* Chern coefficients from the horizontal derivatives of g (torsion free);
* ``R^i_k`` is the Riemann curvature of the spray and ``K = tr R / F^2``.

The connection form on the indicatrix bundle is
``Omega = (sqrt(g) / F^2) (y1 dy2 - y2 dy1)`` (with ``dy`` replaced by
``delta y = dy + N dx`` off the fibres) and the third coframe form is
``omega3 = -Omega``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._jets import Jet
from .metric import MetricJet, MetricSpec, _as_points, f2_taylor, jets_from_taylor


@dataclass
class ConnectionJet:
    """Spray G^i, nonlinear connection N^i_j, Chern Gamma^i_jk and spray curvature R^i_k."""

    G: np.ndarray
    Nnl: np.ndarray
    Gamma: np.ndarray
    R: np.ndarray | None = None

    def take(self, i: int) -> "ConnectionJet":
        return ConnectionJet(
            G=self.G[i], Nnl=self.Nnl[i], Gamma=self.Gamma[i],
            R=None if self.R is None else self.R[i],
        )


@dataclass
class InvariantsIJK:
    I: float
    J: float
    K: float


@dataclass
class Geometry:
    """Everything known pointwise at a batch of (x, y)."""

    metric: MetricJet
    conn: ConnectionJet
    K: np.ndarray | None = None
    I: np.ndarray | None = None
    J: np.ndarray | None = None
    dI_dx: np.ndarray | None = None
    dI_dy: np.ndarray | None = None


def geometry(spec: MetricSpec, x, y, curvature: bool = True, check: bool = True) -> Geometry:
    """Batched local geometry; ``curvature`` adds R, K, I, J (needs degree-4 jets)."""
    x = _as_points(x, "x")
    y = _as_points(y, "y")
    x, y = np.broadcast_arrays(x, y)
    x, y = x.copy(), y.copy()
    degree = 4 if curvature else 3
    P = f2_taylor(spec, x, y, degree)
    mj = jets_from_taylor(P, x, y, check=check)
    alg = P.alg
    n = x.shape[0]

    # the spray only needs second derivatives downstream: work in degree <= 2
    Py = [P.d(2), P.d(3)]
    low = max(degree - 2, 1)
    g = [[(0.5 * Py[i].d(2 + j)).truncate(low) for j in range(2)] for i in range(2)]
    det = g[0][0] * g[1][1] - g[0][1] * g[0][1]
    rdet = det.reciprocal()
    ginv = [[g[1][1] * rdet, -g[0][1] * rdet], [-g[0][1] * rdet, g[0][0] * rdet]]
    alg_low = det.alg
    Y = [Jet.variable(y[:, k], 2 + k, alg_low) for k in range(2)]
    Px = [P.d(0), P.d(1)]
    a = [Px[0].d(2 + l).truncate(low) * Y[0] + Px[1].d(2 + l).truncate(low) * Y[1]
         - Px[l].truncate(low) for l in range(2)]
    Gj = [0.25 * (ginv[i][0] * a[0] + ginv[i][1] * a[1]) for i in range(2)]

    G = np.stack([Gj[i].value for i in range(2)], axis=1)
    Nnl = np.empty((n, 2, 2))
    for i in range(2):
        for j in range(2):
            Nnl[:, i, j] = Gj[i].partial(2 + j)

    # horizontal derivatives of g: dg[l, j, k] = delta g_lj / delta x^k
    dgy = np.empty((n, 2, 2, 2))
    for l in range(2):
        for j in range(2):
            for m in range(2):
                dgy[:, l, j, m] = 0.5 * P.partial(2 + l, 2 + j, 2 + m)
    dg = mj.dg_dx - np.einsum("nljm,nmk->nljk", dgy, Nnl)
    Gamma = 0.5 * np.einsum(
        "nil,nljk->nijk", mj.gInv, dg + dg.transpose(0, 1, 3, 2) - dg.transpose(0, 3, 2, 1)
    )

    conn = ConnectionJet(G=G, Nnl=Nnl, Gamma=Gamma)
    out = Geometry(metric=mj, conn=conn)
    if not curvature:
        return out

    dGx = np.empty((n, 2, 2))
    dGxy = np.empty((n, 2, 2, 2))
    dGyy = np.empty((n, 2, 2, 2))
    for i in range(2):
        for k in range(2):
            dGx[:, i, k] = Gj[i].partial(k)
            for j in range(2):
                dGxy[:, i, j, k] = Gj[i].partial(j, 2 + k)
                dGyy[:, i, j, k] = Gj[i].partial(2 + j, 2 + k)
    R = (
        2.0 * dGx
        - np.einsum("nj,nijk->nik", y, dGxy)
        + 2.0 * np.einsum("nj,nijk->nik", G, dGyy)
        - np.einsum("nij,njk->nik", Nnl, Nnl)
    )
    conn.R = R
    F2 = P.value
    out.K = (R[:, 0, 0] + R[:, 1, 1]) / F2

    # Cartan scalar as a degree-1 jet, then its exact first derivatives
    Fj = P.truncate(2) ** 0.5
    Fy = [Fj.d(2).truncate(1), Fj.d(3).truncate(1)]
    F1 = Fj.truncate(1)
    det1 = det.truncate(1)
    sg = det1**0.5
    e = [Fy[1] / sg, -Fy[0] / sg]
    P3 = {}
    for key in ((0, 0, 0), (0, 0, 1), (0, 1, 1), (1, 1, 1)):
        P3[key] = Py[key[0]].d(2 + key[1]).d(2 + key[2]).truncate(1)
    e00 = e[0] * e[0]
    e11 = e[1] * e[1]
    Ij = 0.25 * F1 * (
        P3[(0, 0, 0)] * (e00 * e[0])
        + 3.0 * P3[(0, 0, 1)] * (e00 * e[1])
        + 3.0 * P3[(0, 1, 1)] * (e[0] * e11)
        + P3[(1, 1, 1)] * (e11 * e[1])
    )
    out.I = Ij.value
    out.dI_dx = np.stack([Ij.partial(0), Ij.partial(1)], axis=1)
    out.dI_dy = np.stack([Ij.partial(2), Ij.partial(3)], axis=1)
    horiz = out.dI_dx - np.einsum("nji,nj->ni", Nnl, out.dI_dy)
    out.J = np.einsum("ni,ni->n", y, horiz) / np.sqrt(F2)
    return out


def spray_coefficients(spec: MetricSpec, x, y) -> np.ndarray:
    """Batched spray G^i(x, y) from second-order jets only (cheaper than :func:`geometry`)."""
    x = _as_points(x, "x")
    y = _as_points(y, "y")
    x, y = np.broadcast_arrays(x, y)
    P = f2_taylor(spec, x, y, 2)
    n = x.shape[0]
    g = np.empty((n, 2, 2))
    d2 = np.empty((n, 2, 2))
    for i in range(2):
        for j in range(2):
            g[:, i, j] = 0.5 * P.partial(2 + i, 2 + j)
            d2[:, i, j] = P.partial(i, 2 + j)
    dx = np.stack([P.partial(0), P.partial(1)], axis=1)
    a = np.einsum("nkl,nk->nl", d2, y) - dx
    return 0.25 * np.linalg.solve(g, a[:, :, None])[:, :, 0]


def _unit(spec: MetricSpec, x, y):
    x = _as_points(x, "x")
    y = _as_points(y, "y")
    x, y = np.broadcast_arrays(x, y)
    F = spec.norm(x, y)
    return x.copy(), y / F[:, None]


def spray(spec: MetricSpec, x, y) -> ConnectionJet:
    """Spray, nonlinear connection, Chern coefficients and R at a single (x, y)."""
    return geometry(spec, x, y, curvature=True).conn.take(0)


def gauss_curvature_K(spec: MetricSpec, x, y) -> float:
    """Flag (Gauss) curvature K(x, y) of the surface."""
    x, y = _unit(spec, x, y)
    return float(geometry(spec, x, y).K[0])


def invariant_J(spec: MetricSpec, x, y) -> float:
    """Landsberg invariant J = (1/F) y^i delta I / delta x^i, evaluated on the indicatrix."""
    x, y = _unit(spec, x, y)
    return float(geometry(spec, x, y).J[0])


def invariants(spec: MetricSpec, x, y) -> InvariantsIJK:
    x, y = _unit(spec, x, y)
    geo = geometry(spec, x, y)
    return InvariantsIJK(I=float(geo.I[0]), J=float(geo.J[0]), K=float(geo.K[0]))


def invariants_batch(spec: MetricSpec, x, y):
    """Arrays (I, J, K) at unit-normalised directions."""
    x, y = _unit(spec, x, y)
    geo = geometry(spec, x, y)
    return geo.I, geo.J, geo.K


# -- structure equation check ------------------------------------------------

def _omega3_sigma(spec: MetricSpec, z: np.ndarray):
    """omega3 (and omega1, omega2) in the chart (x1, x2, theta) of the indicatrix bundle.

    The indicatrix point is y = u(theta) / F(x, u(theta)).
    Returns the covector arrays (n, 3) of omega1, omega2, omega3.
    """
    x = z[:, :2]
    th = z[:, 2]
    u = np.stack([np.cos(th), np.sin(th)], axis=1)
    du = np.stack([-np.sin(th), np.cos(th)], axis=1)
    P = f2_taylor(spec, x, u, 1)
    Fu = np.sqrt(P.value)
    dFx = np.stack([P.partial(0), P.partial(1)], axis=1) / (2 * Fu[:, None])
    dFy = np.stack([P.partial(2), P.partial(3)], axis=1) / (2 * Fu[:, None])
    y = u / Fu[:, None]
    dy_dx = -u[:, :, None] * dFx[:, None, :] / (Fu**2)[:, None, None]  # [n, i, j] = d y^i / d x^j
    dy_dth = du / Fu[:, None] - u * (np.einsum("ni,ni->n", dFy, du) / Fu**2)[:, None]

    geo = geometry(spec, x, y, curvature=False)
    sg = geo.metric.sqrtg
    Nn = geo.conn.Nnl
    dy = np.concatenate([dy_dx + Nn, dy_dth[:, :, None]], axis=2)  # delta y^i (d/dz^a)
    omega3 = -sg[:, None] * (y[:, 0, None] * dy[:, 1, :] - y[:, 1, None] * dy[:, 0, :])
    F = geo.metric.F
    omega1 = np.zeros_like(omega3)
    omega1[:, 0] = sg / F * y[:, 1]
    omega1[:, 1] = -sg / F * y[:, 0]
    omega2 = np.zeros_like(omega3)
    omega2[:, :2] = geo.metric.gradF_y
    return omega1, omega2, omega3, y


def structure_equation_residual(spec: MetricSpec, x, y, h: float = 1e-3) -> float:
    """Residual of d omega3 = K omega1^omega2 - J omega1^omega3 at a point of the indicatrix.

    The exterior derivative is taken by Richardson-extrapolated central
    differences of omega3 in the chart (x1, x2, theta) and evaluated on the
    dual frame (e1^, e2^, e3^).  Returns
    ``max(|d omega3(e1^, e2^) - K|, |d omega3(e1^, e3^) + J|)``.
    """
    x, y = _unit(spec, x, y)
    z0 = np.array([x[0, 0], x[0, 1], np.arctan2(y[0, 1], y[0, 0])])

    def jac(step):
        pts = []
        for a in range(3):
            for s in (1.0, -1.0):
                z = z0.copy()
                z[a] += s * step
                pts.append(z)
        _, _, w3, _ = _omega3_sigma(spec, np.array(pts))
        D = np.empty((3, 3))  # D[a, b] = d c_b / d z^a
        for a in range(3):
            D[a] = (w3[2 * a] - w3[2 * a + 1]) / (2 * step)
        return D

    D1, D2 = jac(h), jac(h / 2)
    D = (4.0 * D2 - D1) / 3.0
    M = D - D.T
    w1, w2, w3, yy = _omega3_sigma(spec, z0[None, :])
    W = np.stack([w1[0], w2[0], w3[0]])
    E = np.linalg.inv(W)
    e1, e2, e3 = E[:, 0], E[:, 1], E[:, 2]
    geo = geometry(spec, x, yy)
    K, J = geo.K[0], geo.J[0]
    return float(max(abs(e1 @ M @ e2 - K), abs(e1 @ M @ e3 + J)))
