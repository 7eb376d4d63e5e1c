"""Truncated multivariate Taylor arithmetic (forward-mode jets).

A :class:`Jet` holds the Taylor coefficients of a function of ``nvars``
variables around a base point, truncated at total degree ``degree``, for a
whole batch of base points at once.  Arithmetic and the elementary functions
used by the metric families propagate all mixed partial derivatives exactly,
which is what the connection and curvature code needs (third and fourth
derivatives of F^2 without finite-difference noise).

Coefficients are stored densely, one column per monomial, ordered by total
degree.  ``order`` tracks up to which degree the coefficients are exact:
differentiating lowers it by one.
"""

from __future__ import annotations

import itertools
import math
from functools import lru_cache

import numpy as np


class _Algebra:
    def __init__(self, nvars: int, degree: int):
        self.nvars = nvars
        self.degree = degree
        monos = []
        for d in range(degree + 1):
            for combo in itertools.combinations_with_replacement(range(nvars), d):
                e = [0] * nvars
                for v in combo:
                    e[v] += 1
                monos.append(tuple(e))
        self.monomials = monos
        self.size = len(monos)
        self.index = {m: i for i, m in enumerate(monos)}
        self.degrees = np.array([sum(m) for m in monos])
        self.factorials = np.array(
            [math.prod(math.factorial(k) for k in m) for m in monos], dtype=float
        )

        pairs = []
        for i, a in enumerate(monos):
            for j, b in enumerate(monos):
                s = tuple(p + q for p, q in zip(a, b))
                if sum(s) <= degree:
                    pairs.append((self.index[s], i, j))
        pairs.sort()
        k, i, j = (np.array(t) for t in zip(*pairs))
        self._mul_i = i
        self._mul_j = j
        starts = np.flatnonzero(np.r_[True, k[1:] != k[:-1]])
        self._mul_starts = starts
        assert len(starts) == self.size

        # d/dv: coefficient of monomial m in the derivative is
        # (m_v + 1) * c[m + e_v]
        self._deriv = []
        for v in range(nvars):
            src = np.zeros(self.size, dtype=int)
            fac = np.zeros(self.size)
            for t, m in enumerate(monos):
                up = list(m)
                up[v] += 1
                up = tuple(up)
                if sum(up) <= degree:
                    src[t] = self.index[up]
                    fac[t] = m[v] + 1
            self._deriv.append((src, fac))

    def mul(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        prod = a[..., self._mul_i] * b[..., self._mul_j]
        return np.add.reduceat(prod, self._mul_starts, axis=-1)


@lru_cache(maxsize=None)
def algebra(nvars: int, degree: int) -> _Algebra:
    return _Algebra(nvars, degree)


class Jet:
    """Batch of truncated Taylor expansions.

    ``c`` has shape ``(batch, alg.size)``.
    """

    __slots__ = ("c", "alg", "order")
    __array_ufunc__ = None

    def __init__(self, c: np.ndarray, alg: _Algebra, order: int | None = None):
        self.c = c
        self.alg = alg
        self.order = alg.degree if order is None else order

    # -- construction -------------------------------------------------------
    @classmethod
    def constant(cls, value, batch: int, alg: _Algebra) -> "Jet":
        c = np.zeros((batch, alg.size))
        c[:, 0] = value
        return cls(c, alg)

    @classmethod
    def variable(cls, value, var: int, alg: _Algebra) -> "Jet":
        value = np.asarray(value, dtype=float)
        c = np.zeros((value.shape[0], alg.size))
        c[:, 0] = value
        if alg.degree >= 1:
            e = [0] * alg.nvars
            e[var] = 1
            c[:, alg.index[tuple(e)]] = 1.0
        return cls(c, alg)

    # -- access -------------------------------------------------------------
    @property
    def value(self) -> np.ndarray:
        return self.c[:, 0]

    def partial(self, *vars_: int) -> np.ndarray:
        """Mixed partial derivative at the base point, e.g. ``partial(2, 2, 0)``."""
        e = [0] * self.alg.nvars
        for v in vars_:
            e[v] += 1
        e = tuple(e)
        if sum(e) > self.order:
            raise ValueError(f"derivative of order {sum(e)} exceeds jet order {self.order}")
        i = self.alg.index[e]
        return self.c[:, i] * self.alg.factorials[i]

    def d(self, var: int) -> "Jet":
        src, fac = self.alg._deriv[var]
        c = self.c[:, src] * fac
        order = self.order - 1
        c[:, self.alg.degrees > order] = 0.0
        return Jet(c, self.alg, order)

    def truncate(self, degree: int) -> "Jet":
        """Same expansion in the smaller algebra of total degree ``degree``.

        Monomials are ordered by total degree, so this is a prefix slice.
        """
        degree = min(degree, self.order)
        alg = algebra(self.alg.nvars, degree)
        return Jet(self.c[:, : alg.size].copy(), alg, degree)

    # -- arithmetic ---------------------------------------------------------
    def _coerce(self, other):
        if isinstance(other, Jet):
            return other
        other = np.asarray(other, dtype=float)
        c = np.zeros_like(self.c)
        c[:, 0] = other
        return Jet(c, self.alg)

    def __add__(self, other):
        o = self._coerce(other)
        return Jet(self.c + o.c, self.alg, min(self.order, o.order))

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.c, self.alg, self.order)

    def __sub__(self, other):
        o = self._coerce(other)
        return Jet(self.c - o.c, self.alg, min(self.order, o.order))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if isinstance(other, Jet):
            return Jet(self.alg.mul(self.c, other.c), self.alg, min(self.order, other.order))
        other = np.asarray(other, dtype=float)
        if other.ndim == 1:
            other = other[:, None]
        return Jet(self.c * other, self.alg, self.order)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * other.reciprocal()
        other = np.asarray(other, dtype=float)
        if other.ndim == 1:
            other = other[:, None]
        return Jet(self.c / other, self.alg, self.order)

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def _compose(self, derivs: list[np.ndarray]) -> "Jet":
        """f(a) from ``derivs[n] = f^(n)(a0) / n!``, evaluated by Horner."""
        h = self.c.copy()
        h[:, 0] = 0.0
        n = min(len(derivs) - 1, self.order)
        out = np.zeros_like(self.c)
        out[:, 0] = derivs[n]
        for k in range(n - 1, -1, -1):
            out = self.alg.mul(out, h)
            out[:, 0] += derivs[k]
        return Jet(out, self.alg, self.order)

    def __pow__(self, r):
        if isinstance(r, (int, np.integer)) and r >= 0:
            out = Jet.constant(1.0, self.c.shape[0], self.alg)
            base = self
            k = int(r)
            while k:
                if k & 1:
                    out = out * base
                k >>= 1
                if k:
                    base = base * base
            return out
        a0 = self.value
        if np.any(a0 <= 0.0):
            raise ValueError("non-integer power of a jet with non-positive value")
        r = float(r)
        derivs = []
        coef = np.ones_like(a0) * a0**r
        for n in range(self.alg.degree + 1):
            derivs.append(coef.copy())
            coef = coef * (r - n) / ((n + 1) * a0)
        return self._compose(derivs)

    def reciprocal(self) -> "Jet":
        a0 = self.value
        if np.any(a0 == 0.0):
            raise ZeroDivisionError("jet division by a zero value")
        derivs = [(-1.0) ** n / a0 ** (n + 1) for n in range(self.alg.degree + 1)]
        return self._compose(derivs)

    def sqrt(self) -> "Jet":
        return self**0.5

    def exp(self) -> "Jet":
        e = np.exp(self.value)
        return self._compose([e / math.factorial(n) for n in range(self.alg.degree + 1)])

    def log(self) -> "Jet":
        a0 = self.value
        if np.any(a0 <= 0.0):
            raise ValueError("log of a jet with non-positive value")
        derivs = [np.log(a0)]
        for n in range(1, self.alg.degree + 1):
            derivs.append((-1.0) ** (n + 1) / (n * a0**n))
        return self._compose(derivs)
