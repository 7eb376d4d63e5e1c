"""Piecewise-smooth planar domains and their interior triangulations.

A domain is a list of closed boundary loops, each a head-to-tail chain of
``Line`` and ``Arc`` segments traversed with the domain on the left (outer
loop counter-clockwise, holes clockwise).  Junctions where the tangent
direction jumps are recorded as corners.

Interior quadrature uses a triangulation obtained by ear clipping a coarse
boundary polygon and refining every triangle into four; boundary midpoints
created by refinement are placed on the exact curve, so the triangulated
region converges to the true domain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import GeometryError

ANGLE_EPS = 1e-9


@dataclass(frozen=True)
class Line:
    a: tuple
    b: tuple

    def eval(self, t):
        t = np.asarray(t, dtype=float)
        a, b = np.asarray(self.a, float), np.asarray(self.b, float)
        x = a[None, :] + t[:, None] * (b - a)[None, :]
        xd = np.broadcast_to(b - a, x.shape).copy()
        return x, xd, np.zeros_like(x)

    def reversed(self) -> "Line":
        return Line(self.b, self.a)

    @property
    def euclidean_length(self) -> float:
        return float(np.hypot(self.b[0] - self.a[0], self.b[1] - self.a[1]))

    @property
    def is_straight(self) -> bool:
        return True


@dataclass(frozen=True)
class Arc:
    """Circular arc; counter-clockwise when theta1 > theta0."""

    center: tuple
    radius: float
    theta0: float
    theta1: float

    def eval(self, t):
        t = np.asarray(t, dtype=float)
        d = self.theta1 - self.theta0
        th = self.theta0 + d * t
        c, s = np.cos(th), np.sin(th)
        r = self.radius
        x = np.stack([self.center[0] + r * c, self.center[1] + r * s], axis=1)
        xd = d * r * np.stack([-s, c], axis=1)
        xdd = -(d * d) * r * np.stack([c, s], axis=1)
        return x, xd, xdd

    def reversed(self) -> "Arc":
        return Arc(self.center, self.radius, self.theta1, self.theta0)

    @property
    def euclidean_length(self) -> float:
        return abs(self.theta1 - self.theta0) * self.radius

    @property
    def is_straight(self) -> bool:
        return False


def _unit(v):
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v)


@dataclass(frozen=True)
class Corner:
    """Junction where the incoming tangent T_minus differs from T_plus."""

    point: np.ndarray
    T_minus: np.ndarray
    T_plus: np.ndarray
    loop: int
    segment: int  # index of the outgoing segment

    @property
    def turning_angle(self) -> float:
        """Euclidean exterior angle in (-pi, pi)."""
        a, b = self.T_minus, self.T_plus
        return math.atan2(a[0] * b[1] - a[1] * b[0], a[0] * b[0] + a[1] * b[1])


@dataclass(frozen=True)
class DomainSpec:
    """Closed boundary loops plus the corner list (detected automatically)."""

    loops: tuple
    name: str = "custom"
    corners: tuple = field(init=False)

    def __post_init__(self):
        loops = tuple(tuple(loop) for loop in self.loops)
        if not loops or any(len(loop) == 0 for loop in loops):
            raise GeometryError("a domain needs at least one non-empty boundary loop")
        corners = []
        for li, loop in enumerate(loops):
            scale = max(1.0, max(s.euclidean_length for s in loop))
            for k, seg in enumerate(loop):
                nxt = loop[(k + 1) % len(loop)]
                end, d_end, _ = seg.eval([1.0])
                start, d_start, _ = nxt.eval([0.0])
                if np.linalg.norm(end[0] - start[0]) > 1e-9 * scale:
                    raise GeometryError(f"loop {li}: segment {k} does not end where segment {k + 1} starts")
                Tm, Tp = _unit(d_end[0]), _unit(d_start[0])
                ang = math.atan2(Tm[0] * Tp[1] - Tm[1] * Tp[0], float(Tm @ Tp))
                if abs(ang) > ANGLE_EPS:
                    corners.append(Corner(start[0].copy(), Tm, Tp, li, (k + 1) % len(loop)))
        object.__setattr__(self, "loops", loops)
        object.__setattr__(self, "corners", tuple(corners))

    @property
    def segments(self):
        return [s for loop in self.loops for s in loop]

    def reversed(self) -> "DomainSpec":
        """Same point set with every loop traversed in the opposite sense."""
        return DomainSpec(tuple(tuple(s.reversed() for s in reversed(loop)) for loop in self.loops),
                          name=self.name + "-reversed")

    def signed_area(self, n: int = 4096) -> float:
        """Shoelace area of the boundary (positive when the domain is on the left)."""
        total = 0.0
        for loop in self.loops:
            pts = _loop_polygon(loop, n)[0]
            x, y = pts[:, 0], pts[:, 1]
            total += 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))
        return total

    def euler_characteristic(self) -> int:
        """Single-chart planar domain: one outer loop and len(loops) - 1 holes."""
        return 2 - len(self.loops)

    def to_dict(self) -> dict:
        out = []
        for loop in self.loops:
            segs = []
            for s in loop:
                if isinstance(s, Line):
                    segs.append({"type": "line", "a": list(map(float, s.a)), "b": list(map(float, s.b))})
                else:
                    segs.append({"type": "arc", "center": list(map(float, s.center)),
                                 "radius": float(s.radius), "theta0": float(s.theta0),
                                 "theta1": float(s.theta1)})
            out.append(segs)
        return {"name": self.name, "loops": out}


# -- presets ------------------------------------------------------------------------

def disk(center=(0.0, 0.0), radius: float = 1.0) -> DomainSpec:
    if radius <= 0:
        raise GeometryError("disk radius must be positive")
    c = (float(center[0]), float(center[1]))
    return DomainSpec(((Arc(c, float(radius), 0.0, 2 * math.pi),),), name="disk")


def polygon(vertices, name: str = "polygon") -> DomainSpec:
    """Straight-sided domain; vertices are reordered counter-clockwise."""
    V = np.asarray(vertices, dtype=float)
    if V.ndim != 2 or V.shape[0] < 3 or V.shape[1] != 2:
        raise GeometryError("a polygon needs at least three 2-D vertices")
    area = 0.5 * np.sum(V[:, 0] * np.roll(V[:, 1], -1) - np.roll(V[:, 0], -1) * V[:, 1])
    if abs(area) < 1e-14:
        raise GeometryError("degenerate polygon")
    if area < 0:
        V = V[::-1]
    pts = [tuple(map(float, v)) for v in V]
    segs = tuple(Line(pts[k], pts[(k + 1) % len(pts)]) for k in range(len(pts)))
    return DomainSpec((segs,), name=name)


def square(lower=(0.0, 0.0), side: float = 1.0) -> DomainSpec:
    x0, y0 = lower
    return polygon([(x0, y0), (x0 + side, y0), (x0 + side, y0 + side), (x0, y0 + side)], name="square")


def triangle(a, b, c) -> DomainSpec:
    return polygon([a, b, c], name="triangle")


def half_disk(center=(0.0, 0.0), radius: float = 1.0) -> DomainSpec:
    """Upper half disk: diameter from left to right, then the semicircle back."""
    cx, cy = float(center[0]), float(center[1])
    r = float(radius)
    segs = (Line((cx - r, cy), (cx + r, cy)), Arc((cx, cy), r, 0.0, math.pi))
    return DomainSpec((segs,), name="half-disk")


def annulus(center=(0.0, 0.0), r_inner: float = 0.5, r_outer: float = 1.0) -> DomainSpec:
    if not 0 < r_inner < r_outer:
        raise GeometryError("annulus needs 0 < r_inner < r_outer")
    c = (float(center[0]), float(center[1]))
    outer = (Arc(c, float(r_outer), 0.0, 2 * math.pi),)
    inner = (Arc(c, float(r_inner), 2 * math.pi, 0.0),)
    return DomainSpec((outer, inner), name="annulus")


# -- triangulation ----------------------------------------------------------------------

def _loop_polygon(loop, n_total: int):
    """Boundary polygon of one loop: points and their (segment, t) labels."""
    lengths = np.array([s.euclidean_length for s in loop])
    total = lengths.sum()
    pts, labels = [], []
    for k, s in enumerate(loop):
        m = 1 if s.is_straight and n_total <= len(loop) else max(1, int(round(n_total * lengths[k] / total)))
        if not s.is_straight:
            m = max(m, 3)
        t = np.arange(m) / m
        x, _, _ = s.eval(t)
        pts.append(x)
        labels.extend((k, float(tt)) for tt in t)
    return np.concatenate(pts), labels


def _cross(o, a, b):
    return (a[..., 0] - o[..., 0]) * (b[..., 1] - o[..., 1]) - (a[..., 1] - o[..., 1]) * (b[..., 0] - o[..., 0])


def _segments_cross(p, q, A, B):
    """Proper intersection of segment pq with each segment A[i]B[i]."""
    d1 = _cross(A, B, p[None, :])
    d2 = _cross(A, B, q[None, :])
    d3 = _cross(p[None, :], q[None, :], A)
    d4 = _cross(p[None, :], q[None, :], B)
    return (d1 * d2 < 0) & (d3 * d4 < 0)


def _bridge_holes(P, outer, holes):
    """Splice hole index cycles into the outer cycle with bridge edges."""
    ring = list(outer)
    all_edges = []
    for cyc in [outer, *holes]:
        for k in range(len(cyc)):
            all_edges.append((cyc[k], cyc[(k + 1) % len(cyc)]))
    for hole in sorted(holes, key=lambda h: -max(P[i, 0] for i in h)):
        h_pos = int(np.argmax([P[i, 0] for i in hole]))
        h = hole[h_pos]
        E = np.array(all_edges)
        cand = sorted(set(ring), key=lambda i: float(np.sum((P[i] - P[h]) ** 2)))
        chosen = None
        for o in cand:
            mask = (E[:, 0] != o) & (E[:, 1] != o) & (E[:, 0] != h) & (E[:, 1] != h)
            if not np.any(_segments_cross(P[h], P[o], P[E[mask, 0]], P[E[mask, 1]])):
                chosen = o
                break
        if chosen is None:
            raise GeometryError("could not connect a hole to the outer boundary")
        at = ring.index(chosen)
        hole_seq = hole[h_pos:] + hole[:h_pos] + [h]
        ring = ring[: at + 1] + hole_seq + [chosen] + ring[at + 1:]
        all_edges.append((h, chosen))
    return ring


def _ear_clip(P, ring):
    """Triangulate a counter-clockwise index ring, clipping the best-shaped ear first."""
    ring = list(ring)
    tris = []
    while len(ring) > 3:
        idx = np.array(ring)
        a = P[np.roll(idx, 1)]
        b = P[idx]
        c = P[np.roll(idx, -1)]
        convex = _cross(a, b, c) > 1e-14
        reflex_pos = np.flatnonzero(~convex)
        best, best_q = None, -1.0
        for k in np.flatnonzero(convex):
            ia, ib, ic = idx[(k - 1) % len(idx)], idx[k], idx[(k + 1) % len(idx)]
            if reflex_pos.size:
                R = idx[reflex_pos]
                R = R[(R != ia) & (R != ib) & (R != ic)]
                if R.size:
                    Q = P[R]
                    A, B, C = P[ia], P[ib], P[ic]
                    inside = (_cross(A, B, Q) >= 0) & (_cross(B, C, Q) >= 0) & (_cross(C, A, Q) >= 0)
                    if np.any(inside):
                        continue
            q = _min_angle(P[ia], P[ib], P[ic])
            if q > best_q:
                best, best_q = k, q
        if best is None:
            raise GeometryError("ear clipping failed (self-intersecting boundary?)")
        n = len(ring)
        tris.append((ring[(best - 1) % n], ring[best], ring[(best + 1) % n]))
        del ring[best]
    tris.append(tuple(ring))
    return tris


def _in_circle(a, b, c, d) -> bool:
    """d strictly inside the circumcircle of the counter-clockwise triangle abc."""
    m = np.array([[a[0] - d[0], a[1] - d[1], (a[0] - d[0]) ** 2 + (a[1] - d[1]) ** 2],
                  [b[0] - d[0], b[1] - d[1], (b[0] - d[0]) ** 2 + (b[1] - d[1]) ** 2],
                  [c[0] - d[0], c[1] - d[1], (c[0] - d[0]) ** 2 + (c[1] - d[1]) ** 2]])
    scale = max(1e-300, float(np.max(np.abs(m))) ** 2)
    return float(np.linalg.det(m)) > 1e-12 * scale


def _delaunay_flips(P, tris, fixed, max_sweeps: int = 200):
    """Lawson flips of interior edges until the triangulation is locally Delaunay."""
    tris = [list(t) for t in tris]
    for _ in range(max_sweeps):
        owner = {}
        for ti, t in enumerate(tris):
            for k in range(3):
                owner[(t[k], t[(k + 1) % 3])] = ti
        touched = set()
        for (a, b), t1 in owner.items():
            if (min(a, b), max(a, b)) in fixed or (b, a) not in owner:
                continue
            t2 = owner[(b, a)]
            if t1 in touched or t2 in touched:
                continue
            c = next(v for v in tris[t1] if v not in (a, b))
            d = next(v for v in tris[t2] if v not in (a, b))
            if not _in_circle(P[a], P[b], P[c], P[d]):
                continue
            if _cross(P[c], P[a], P[d]) <= 0 or _cross(P[d], P[b], P[c]) <= 0:
                continue
            tris[t1], tris[t2] = [c, a, d], [d, b, c]
            touched.update((t1, t2))
        if not touched:
            break
    return tris


def _insert_point(P, tris, p):
    """Split the triangle containing p; returns the new point list and triangles."""
    k = len(P)
    for ti, (a, b, c) in enumerate(tris):
        if (_cross(P[a], P[b], p) > 0 and _cross(P[b], P[c], p) > 0
                and _cross(P[c], P[a], p) > 0):
            tris = tris[:ti] + [[a, b, k], [b, c, k], [c, a, k]] + tris[ti + 1:]
            return P + [np.asarray(p, dtype=float)], tris
    return P, tris


def _hole_steiner(P, cyc):
    """Points one edge length off each hole edge, on the domain side.

    Without them an outer vertex can see a hole edge nearly edge-on, and the
    sliver inverts once the edge midpoint is pushed onto the curved boundary.
    """
    out = []
    for k in range(len(cyc)):
        a, b = P[cyc[k]], P[cyc[(k + 1) % len(cyc)]]
        d = b - a
        # hole loops run clockwise, so the domain lies to the left
        out.append(0.5 * (a + b) + 0.8 * np.array([-d[1], d[0]]))
    return out


def _min_angle(a, b, c):
    def ang(p, q, r):
        u, v = q - p, r - p
        return math.atan2(abs(u[0] * v[1] - u[1] * v[0]), float(u @ v))
    return min(ang(a, b, c), ang(b, c, a), ang(c, a, b))


@dataclass(frozen=True)
class Triangulation:
    vertices: np.ndarray
    triangles: np.ndarray
    levels: int

    @property
    def areas(self) -> np.ndarray:
        a, b, c = (self.vertices[self.triangles[:, k]] for k in range(3))
        return 0.5 * _cross(a, b, c)

    @property
    def centroids(self) -> np.ndarray:
        return self.vertices[self.triangles].mean(axis=1)

    @property
    def max_diameter(self) -> float:
        V = self.vertices[self.triangles]
        d = [np.linalg.norm(V[:, i] - V[:, j], axis=1) for i, j in ((0, 1), (1, 2), (2, 0))]
        return float(np.max(d))

    def quadrature(self, rule: str = "centroid"):
        """Points and weights of a per-triangle rule ("centroid" or "edge-midpoint")."""
        areas = self.areas
        if rule == "centroid":
            return self.centroids, areas
        if rule == "edge-midpoint":
            V = self.vertices[self.triangles]
            mids = np.concatenate([(V[:, 0] + V[:, 1]) / 2, (V[:, 1] + V[:, 2]) / 2, (V[:, 2] + V[:, 0]) / 2])
            return mids, np.tile(areas / 3.0, 3)
        raise ValueError(f"unknown quadrature rule {rule!r}")

    def integrate(self, values: np.ndarray, weights: np.ndarray) -> float:
        return float(np.dot(values, weights))


def triangulate(domain: DomainSpec, levels: int | None = None, min_triangles: int = 20000,
                coarse: int = 48) -> Triangulation:
    """Ear-clip a coarse boundary polygon and refine uniformly.

    With ``levels=None`` the refinement depth is the smallest giving at
    least ``min_triangles`` triangles.
    """
    P_parts, labels = [], []
    cycles = []
    offset = 0
    for li, loop in enumerate(domain.loops):
        n_loop = coarse if li == 0 else max(12, coarse // 2)
        pts, lab = _loop_polygon(loop, n_loop)
        P_parts.append(pts)
        labels.extend((li, s, t) for s, t in lab)
        cycles.append(list(range(offset, offset + pts.shape[0])))
        offset += pts.shape[0]
    P = np.concatenate(P_parts)
    outer, holes = cycles[0], cycles[1:]
    ring = _bridge_holes(P, outer, holes) if holes else outer
    fixed = set()
    for cyc in cycles:
        for k in range(len(cyc)):
            i, j = cyc[k], cyc[(k + 1) % len(cyc)]
            fixed.add((min(i, j), max(i, j)))
    tris = _delaunay_flips(P, _ear_clip(P, ring), fixed)
    if holes:
        pts = [p for p in P]
        for cyc in holes:
            for q in _hole_steiner(P, cyc):
                pts, tris = _insert_point(pts, tris, q)
        P = np.array(pts)
        tris = _delaunay_flips(P, tris, fixed)
    tris = np.array(tris, dtype=np.int64)

    # boundary edges with their curve labels (loop, segment, t_start, t_end)
    bedges = {}
    for cyc in cycles:
        for k in range(len(cyc)):
            i, j = cyc[k], cyc[(k + 1) % len(cyc)]
            li, si, ti = labels[i]
            _, sj, tj = labels[j]
            if sj != si or tj <= ti:  # edge ends at the segment's end point
                tj = 1.0
            # labels store the curve parameter at the smaller vertex index first
            bedges[(min(i, j), max(i, j))] = (li, si, ti, tj) if i < j else (li, si, tj, ti)

    if levels is None:
        levels = 0
        while tris.shape[0] * 4**levels < min_triangles:
            levels += 1
    V = P
    for _ in range(levels):
        V, tris, bedges = _refine(domain, V, tris, bedges)
    areas = 0.5 * _cross(V[tris[:, 0]], V[tris[:, 1]], V[tris[:, 2]])
    if np.any(areas <= 0):
        raise GeometryError("triangulation produced a non-positive triangle")
    return Triangulation(vertices=V, triangles=tris, levels=levels)


def _refine(domain, V, tris, bedges):
    e = np.concatenate([tris[:, [0, 1]], tris[:, [1, 2]], tris[:, [2, 0]]])
    e_sorted = np.sort(e, axis=1)
    uniq, inv = np.unique(e_sorted, axis=0, return_inverse=True)
    inv = inv.reshape(3, -1).T  # per triangle: edges (01, 12, 20)
    mids = 0.5 * (V[uniq[:, 0]] + V[uniq[:, 1]])
    new_b = {}
    n0 = V.shape[0]
    for k, (i, j) in enumerate(uniq):
        lab = bedges.get((int(i), int(j)))
        if lab is None:
            continue
        li, si, ta, tb = lab
        tm = 0.5 * (ta + tb)
        mids[k] = domain.loops[li][si].eval([tm])[0][0]
        m = n0 + k  # larger than every old index
        new_b[(int(i), m)] = (li, si, ta, tm)
        new_b[(int(j), m)] = (li, si, tb, tm)
    V2 = np.concatenate([V, mids])
    a, b, c = tris[:, 0], tris[:, 1], tris[:, 2]
    mab, mbc, mca = n0 + inv[:, 0], n0 + inv[:, 1], n0 + inv[:, 2]
    T2 = np.concatenate([
        np.stack([a, mab, mca], 1),
        np.stack([mab, b, mbc], 1),
        np.stack([mca, mbc, c], 1),
        np.stack([mab, mbc, mca], 1),
    ])
    return V2, T2, new_b
