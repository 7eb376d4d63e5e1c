"""Finsler norms on a planar chart and their pointwise tensors.

Three built-in families are provided:

``riemannian-conformal``
    F = e^phi(x) |y| with phi a quadratic polynomial in x, optionally
    multiplied by the stereographic factor 2 / (1 + kappa |x|^2) (constant
    curvature kappa).
``randers``
    F = |y| + b(x).y with an affine drift b(x) = b + B x.
``minkowski-pnorm``
    F = ((y1^2)^(p/2) + (y2^2)^(p/2))^(1/p), independent of x.

All derivatives of F^2 are produced by truncated Taylor arithmetic
(:mod:`finslerlab._jets`), so tensors such as the Cartan tensor are exact up
to rounding.  The Cartan tensor follows the normalisation
A_ijk = (F/4) d^3 F^2 / dy^i dy^j dy^k, which makes the Cartan scalar
I = A(e1, e1, e1) homogeneous of degree zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping

import numpy as np

from ._jets import Jet, algebra
from .errors import ConvexityError, ParameterError, ZeroDirectionError

FAMILIES = ("riemannian-conformal", "randers", "minkowski-pnorm")

_PARAM_DEFAULTS = {
    "riemannian-conformal": {
        "c00": 0.0, "c10": 0.0, "c01": 0.0, "c20": 0.0, "c11": 0.0, "c02": 0.0,
        "kappa": None,
    },
    "randers": {
        "b1": 0.0, "b2": 0.0,
        "b1_x1": 0.0, "b1_x2": 0.0, "b2_x1": 0.0, "b2_x2": 0.0,
    },
    "minkowski-pnorm": {"p": 4.0},
}

#: admissible exponent range for the p-norm family (open interval)
PNORM_RANGE = (1.0, 8.0)


def _as_points(a, name: str) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.shape == (2,):
        a = a[None, :]
    if a.ndim != 2 or a.shape[1] != 2:
        raise ValueError(f"{name} must have shape (2,) or (n, 2), got {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} has non-finite components")
    return a


@dataclass(frozen=True)
class MetricSpec:
    """Immutable description of a Finsler norm family with parameters."""

    family: str
    params: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ParameterError(f"unknown metric family {self.family!r}; expected one of {FAMILIES}")
        allowed = _PARAM_DEFAULTS[self.family]
        unknown = sorted(set(self.params) - set(allowed))
        if unknown:
            raise ParameterError(f"unknown parameter(s) {unknown} for family {self.family!r}")
        merged = {}
        for k, default in allowed.items():
            v = self.params.get(k, default)
            if v is not None:
                v = float(v)
                if not math.isfinite(v):
                    raise ParameterError(f"parameter {k} must be finite")
            merged[k] = v
        object.__setattr__(self, "params", MappingProxyType(merged))
        self._validate()

    def _validate(self):
        p = self.params
        if self.family == "randers":
            if p["b1"] ** 2 + p["b2"] ** 2 >= 1.0:
                raise ParameterError("randers drift violates the convexity bound b1^2 + b2^2 < 1")
        elif self.family == "minkowski-pnorm":
            lo, hi = PNORM_RANGE
            if not lo < p["p"] < hi:
                raise ParameterError(f"p-norm exponent must lie in the open interval {PNORM_RANGE}")

    # -- convenience constructors -------------------------------------------
    @classmethod
    def euclidean(cls) -> "MetricSpec":
        return cls("riemannian-conformal", {})

    @classmethod
    def sphere(cls, kappa: float = 1.0) -> "MetricSpec":
        return cls("riemannian-conformal", {"kappa": kappa})

    @classmethod
    def conformal(cls, kappa: float | None = None, **coeffs: float) -> "MetricSpec":
        """e^phi |y| with phi given by the coefficients c00 ... c02."""
        return cls("riemannian-conformal", {"kappa": kappa, **coeffs})

    @classmethod
    def randers(cls, b1: float = 0.0, b2: float = 0.0, **gradient: float) -> "MetricSpec":
        return cls("randers", {"b1": b1, "b2": b2, **gradient})

    @classmethod
    def pnorm(cls, p: float = 4.0) -> "MetricSpec":
        return cls("minkowski-pnorm", {"p": p})

    def to_dict(self) -> dict:
        return {"family": self.family,
                "params": {k: v for k, v in self.params.items() if v is not None}}

    @property
    def is_x_independent(self) -> bool:
        p = self.params
        if self.family == "minkowski-pnorm":
            return True
        if self.family == "randers":
            return p["b1_x1"] == p["b1_x2"] == p["b2_x1"] == p["b2_x2"] == 0.0
        return all(p[k] == 0.0 for k in ("c10", "c01", "c20", "c11", "c02")) and p["kappa"] in (None, 0.0)

    @property
    def is_reversible(self) -> bool:
        if self.family == "randers":
            return self.is_x_independent and self.params["b1"] == self.params["b2"] == 0.0
        return True

    @property
    def is_riemannian(self) -> bool:
        p = self.params
        if self.family == "riemannian-conformal":
            return True
        if self.family == "minkowski-pnorm":
            return p["p"] == 2.0
        return all(p[k] == 0.0 for k in ("b1", "b2", "b1_x1", "b1_x2", "b2_x1", "b2_x2"))

    # -- F^2 as a function of jets or arrays --------------------------------
    def _f2(self, x1, x2, y1, y2):
        """F^2 evaluated on jets (or plain arrays for x)."""
        p = self.params
        if self.family == "riemannian-conformal":
            phi = (p["c00"] + p["c10"] * x1 + p["c01"] * x2
                   + p["c20"] * (x1 * x1) + p["c11"] * (x1 * x2) + p["c02"] * (x2 * x2))
            e2phi = _exp(2.0 * phi)
            if p["kappa"] is not None:
                q = 1.0 + p["kappa"] * (x1 * x1 + x2 * x2)
                _check_positive(q, "stereographic chart requires 1 + kappa |x|^2 > 0")
                e2phi = e2phi * 4.0 / (q * q)
            return e2phi * (y1 * y1 + y2 * y2)
        if self.family == "randers":
            b1 = p["b1"] + p["b1_x1"] * x1 + p["b1_x2"] * x2
            b2 = p["b2"] + p["b2_x1"] * x1 + p["b2_x2"] * x2
            _check_positive(1.0 - (b1 * b1 + b2 * b2), "randers drift violates |b(x)| < 1")
            f = (y1 * y1 + y2 * y2) ** 0.5 + b1 * y1 + b2 * y2
            return f * f
        # minkowski-pnorm
        half = p["p"] / 2.0
        u1, u2 = y1 * y1, y2 * y2
        if float(half).is_integer():
            s = u1 ** int(half) + u2 ** int(half)
        else:
            s = u1**half + u2**half
        return s ** (2.0 / p["p"])

    def norm(self, x, y) -> np.ndarray:
        """Vectorised F(x, y) for arrays of shape (n, 2)."""
        x = _as_points(x, "x")
        y = _as_points(y, "y")
        x, y = np.broadcast_arrays(x, y)
        _check_nonzero(y)
        p = self.params
        if self.family == "minkowski-pnorm":
            # direct formula avoids the jet power restrictions at the axes
            q = p["p"]
            scale = np.max(np.abs(y), axis=1)
            t = np.abs(y) / scale[:, None]
            return scale * np.sum(t**q, axis=1) ** (1.0 / q)
        f2 = self._f2(x[:, 0], x[:, 1], y[:, 0], y[:, 1])
        return np.sqrt(f2)


def _exp(a):
    return a.exp() if isinstance(a, Jet) else np.exp(a)


def _check_positive(q, message: str):
    v = q.value if isinstance(q, Jet) else np.asarray(q)
    if np.any(v <= 0.0):
        raise ParameterError(message)


def _check_nonzero(y: np.ndarray):
    if np.any(np.all(y == 0.0, axis=1)):
        raise ZeroDirectionError("metric evaluated along the zero direction y = 0")


def eval_norm(spec: MetricSpec, x, y) -> float:
    """F(x, y) at a single point."""
    return float(spec.norm(x, y)[0])


def f2_taylor(spec: MetricSpec, x, y, degree: int, vertical_only: bool = False) -> Jet:
    """Taylor expansion of F^2 around each (x, y).

    Variables are (x1, x2, y1, y2), or only (y1, y2) when ``vertical_only``.
    """
    x = _as_points(x, "x")
    y = _as_points(y, "y")
    x, y = np.broadcast_arrays(x, y)
    _check_nonzero(y)
    if vertical_only:
        alg = algebra(2, degree)
        X1, X2 = x[:, 0], x[:, 1]
        Y1, Y2 = Jet.variable(y[:, 0], 0, alg), Jet.variable(y[:, 1], 1, alg)
    else:
        alg = algebra(4, degree)
        X1, X2 = Jet.variable(x[:, 0], 0, alg), Jet.variable(x[:, 1], 1, alg)
        Y1, Y2 = Jet.variable(y[:, 0], 2, alg), Jet.variable(y[:, 1], 3, alg)
    pn = spec.family == "minkowski-pnorm" and not float(spec.params["p"] / 2).is_integer()
    if pn and np.any(y == 0.0):
        raise ConvexityError("non-even p-norm is not smooth along the coordinate axes")
    return spec._f2(X1, X2, Y1, Y2)


@dataclass
class MetricJet:
    """Derivatives of F and F^2 at (x, y).

    Arrays may carry a leading batch axis when produced by :func:`metric_jets`.
    """

    F: np.ndarray
    gradF_y: np.ndarray
    g: np.ndarray
    gInv: np.ndarray
    sqrtg: np.ndarray
    A: np.ndarray
    dg_dx: np.ndarray
    dF2_dx: np.ndarray
    d2F2_dxdy: np.ndarray
    x: np.ndarray
    y: np.ndarray

    def take(self, i: int) -> "MetricJet":
        return MetricJet(**{k: getattr(self, k)[i] for k in self.__dataclass_fields__})


def _positive_definite(g: np.ndarray, check: bool) -> np.ndarray:
    det = g[:, 0, 0] * g[:, 1, 1] - g[:, 0, 1] * g[:, 1, 0]
    if check:
        scale = np.maximum(np.abs(g[:, 0, 0]) * np.abs(g[:, 1, 1]), 1e-300)
        bad = (g[:, 0, 0] <= 0.0) | (det <= 1e-14 * scale)
        if np.any(bad):
            i = int(np.flatnonzero(bad)[0])
            raise ConvexityError(
                f"fundamental tensor not positive definite (det g = {det[i]:.3e})"
            )
    return det


def jets_from_taylor(P: Jet, x: np.ndarray, y: np.ndarray, check: bool = True) -> MetricJet:
    """Assemble a batched :class:`MetricJet` from a degree >= 3 expansion of F^2."""
    n = P.c.shape[0]
    F2 = P.value
    F = np.sqrt(F2)
    dF2_dy = np.stack([P.partial(2 + i) for i in range(2)], axis=1)
    g = np.empty((n, 2, 2))
    A = np.empty((n, 2, 2, 2))
    dg_dx = np.empty((n, 2, 2, 2))
    d2 = np.empty((n, 2, 2))
    for i in range(2):
        for j in range(2):
            g[:, i, j] = 0.5 * P.partial(2 + i, 2 + j)
            d2[:, i, j] = P.partial(i, 2 + j)
            for k in range(2):
                A[:, i, j, k] = 0.25 * F * P.partial(2 + i, 2 + j, 2 + k)
                dg_dx[:, i, j, k] = 0.5 * P.partial(k, 2 + i, 2 + j)
    det = _positive_definite(g, check)
    gInv = np.empty_like(g)
    gInv[:, 0, 0] = g[:, 1, 1] / det
    gInv[:, 1, 1] = g[:, 0, 0] / det
    gInv[:, 0, 1] = gInv[:, 1, 0] = -g[:, 0, 1] / det
    return MetricJet(
        F=F,
        gradF_y=dF2_dy / (2.0 * F[:, None]),
        g=g,
        gInv=gInv,
        sqrtg=np.sqrt(np.maximum(det, 0.0)),
        A=A,
        dg_dx=dg_dx,
        dF2_dx=np.stack([P.partial(i) for i in range(2)], axis=1),
        d2F2_dxdy=d2,
        x=x,
        y=y,
    )


def metric_jets(spec: MetricSpec, x, y, check: bool = True) -> MetricJet:
    """Batched :func:`metric_jet` over arrays of points and directions."""
    x = _as_points(x, "x")
    y = _as_points(y, "y")
    x, y = np.broadcast_arrays(x, y)
    P = f2_taylor(spec, x, y, 3)
    return jets_from_taylor(P, x.copy(), y.copy(), check=check)


def metric_jet(spec: MetricSpec, x, y) -> MetricJet:
    """All first- and second-level tensors of F at a single (x, y)."""
    return metric_jets(spec, x, y).take(0)


def fundamental_tensor(spec: MetricSpec, x, y, check: bool = True):
    """Cheap batched (g, sqrt(det g), F, dF/dy) from a vertical degree-2 expansion."""
    x = _as_points(x, "x")
    y = _as_points(y, "y")
    x, y = np.broadcast_arrays(x, y)
    P = f2_taylor(spec, x, y, 2, vertical_only=True)
    n = P.c.shape[0]
    g = np.empty((n, 2, 2))
    for i in range(2):
        for j in range(2):
            g[:, i, j] = 0.5 * P.partial(i, j)
    det = _positive_definite(g, check)
    F = np.sqrt(P.value)
    Fy = np.stack([P.partial(0), P.partial(1)], axis=1) / (2.0 * F[:, None])
    return g, np.sqrt(np.maximum(det, 0.0)), F, Fy


@dataclass
class BerwaldFrame:
    """g-orthonormal frame (e1, e2 = y/F) with its dual coframe."""

    e1: np.ndarray
    e2: np.ndarray
    omega1: np.ndarray
    omega2: np.ndarray


def _frame_arrays(F, Fy, sqrtg, y, flip: bool = False):
    sgn = -1.0 if flip else 1.0
    e1 = sgn * np.stack([Fy[..., 1], -Fy[..., 0]], axis=-1) / sqrtg[..., None]
    e2 = y / F[..., None]
    w1 = sgn * (sqrtg / F)[..., None] * np.stack([y[..., 1], -y[..., 0]], axis=-1)
    return e1, e2, w1, Fy


def berwald_frame(jet: MetricJet, y=None, flip: bool = False) -> BerwaldFrame:
    """Berwald frame at the jet's (x, y).

    ``flip`` reverses the orientation of (e1, omega1); the default matches the
    positively oriented local formulas.
    """
    y = jet.y if y is None else np.asarray(y, dtype=float)
    e1, e2, w1, w2 = _frame_arrays(jet.F, jet.gradF_y, jet.sqrtg, y, flip)
    return BerwaldFrame(e1=e1, e2=e2, omega1=w1, omega2=w2)


def main_scalar_I(jet: MetricJet, frame: BerwaldFrame) -> float:
    """Cartan scalar I = A(e1, e1, e1)."""
    e = frame.e1
    return np.einsum("...ijk,...i,...j,...k->...", jet.A, e, e, e)
