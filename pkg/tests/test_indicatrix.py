import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import CONFORMAL, EUCLIDEAN, FAMILIES, PNORM4, RANDERS, RANDERS_VAR, SPHERE, random_direction
from finslerlab import ConvergenceError, indicatrix_length, landsberg_angle, sample_indicatrix, solve_normal
from finslerlab.indicatrix import TWO_PI, indicatrix_lengths, integrate_dtheta, solve_normals
from finslerlab.metric import fundamental_tensor
from oracles import normal_by_scan

# trapezoid rule with 2^20 panels on the closed-form density (1 + 0.2 cos phi)^(-1/2);
# the elliptic form 4 K(m) / sqrt(1.2), m = 0.4 / 1.2, agrees to the last digit
RANDERS_02_LENGTH = 6.3313692726324495

angle = st.floats(0.0, 2 * math.pi, allow_nan=False)
family = st.sampled_from(sorted(FAMILIES))


def _dir(th):
    return np.array([math.cos(th), math.sin(th)])


# -- sampling ----------------------------------------------------------------------------

def test_euclidean_sample_on_unit_circle():
    s = sample_indicatrix(EUCLIDEAN, (0.4, 0.1), n=64)
    np.testing.assert_allclose(np.linalg.norm(s.ys, axis=1), 1.0, atol=1e-15)
    assert np.all(s.dtheta_weights > 0)


def test_randers_sample_is_unit():
    s = sample_indicatrix(RANDERS, (0.0, 0.0), n=64)
    F = RANDERS.norm(np.zeros_like(s.ys), s.ys)
    assert np.max(np.abs(F - 1.0)) <= 1e-12


@pytest.mark.parametrize("name", sorted(FAMILIES))
def test_sample_is_closed_convex_polyline(name):
    s = sample_indicatrix(FAMILIES[name], (0.3, -0.2), n=128)
    P = s.ys
    d1 = np.roll(P, -1, axis=0) - P
    d2 = np.roll(d1, -1, axis=0)
    cross = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
    assert np.all(cross > 0)


def test_sample_needs_sixteen_points():
    with pytest.raises(ValueError):
        sample_indicatrix(EUCLIDEAN, (0, 0), n=8)


# -- length -------------------------------------------------------------------------------

def test_length_examples():
    assert indicatrix_length(EUCLIDEAN, (0.0, 0.0)) == pytest.approx(TWO_PI, abs=1e-10)
    for x in [(0.0, 0.0), (0.7, -0.4), (-1.5, 2.0)]:
        assert indicatrix_length(SPHERE, x) == pytest.approx(TWO_PI, abs=1e-10)
        assert indicatrix_length(CONFORMAL, x) == pytest.approx(TWO_PI, abs=1e-10)
    assert indicatrix_length(RANDERS, (0.3, -0.1)) == pytest.approx(RANDERS_02_LENGTH, abs=1e-10)


def test_randers_length_oracle_reproduces_golden():
    n = 2**20
    phi = TWO_PI * np.arange(n) / n
    oracle = float(np.sum((1 + 0.2 * np.cos(phi)) ** -0.5) * TWO_PI / n)
    assert oracle == pytest.approx(RANDERS_02_LENGTH, abs=1e-13)


def test_length_tolerance_validation_and_budget():
    with pytest.raises(ValueError):
        indicatrix_length(EUCLIDEAN, (0, 0), tol=0.0)
    with pytest.raises(ConvergenceError):
        integrate_dtheta(RANDERS, (0, 0), 0.0, TWO_PI, tol=1e-12, max_panels=4)


def test_fixed_rule_lengths_agree_with_adaptive(rng):
    xs = rng.uniform(-0.5, 0.5, size=(4, 2))
    for m in (RANDERS_VAR, PNORM4):
        L = indicatrix_lengths(m, xs)
        for x, v in zip(xs, L):
            assert v == pytest.approx(indicatrix_length(m, x), abs=1e-9)


def _polyline_length(spec, x, n):
    """Riemannian length of the inscribed indicatrix polygon, measured with g at chord midpoints."""
    s = sample_indicatrix(spec, x, n=n)
    P = s.ys
    D = np.roll(P, -1, axis=0) - P
    M = 0.5 * (np.roll(P, -1, axis=0) + P)
    g, _, _, _ = fundamental_tensor(spec, np.broadcast_to(np.asarray(x, float), M.shape), M)
    return float(np.sum(np.sqrt(np.einsum("nij,ni,nj->n", g, D, D))))


@pytest.mark.parametrize("name", ["randers", "randers-var", "pnorm4", "sphere"])
def test_dtheta_integral_equals_indicatrix_arc_length(name):
    # the fibre metric g restricted to the indicatrix tangent is (dtheta)^2
    m = FAMILIES[name]
    x = (0.2, -0.3)
    a, b = _polyline_length(m, x, 4096), _polyline_length(m, x, 8192)
    assert (4 * b - a) / 3 == pytest.approx(indicatrix_length(m, x), abs=1e-8)


# -- Landsberg angles -------------------------------------------------------------------

def test_euclidean_perpendicular_angle():
    v = landsberg_angle(EUCLIDEAN, (0.0, 0.0), (1.0, 0.0), (0.0, 1.0)).value
    assert v == pytest.approx(math.pi / 2, abs=1e-10)


@pytest.mark.parametrize("name", ["euclidean", "sphere", "randers", "pnorm4"])
def test_quadrant_angles_sum_to_length(name):
    m = FAMILIES[name]
    x = (0.3, 0.2)
    A, B = np.array([1.0, 0.3]), np.array([-0.4, 1.0])
    pts = [A, B, -A, -B, A]
    total = sum(landsberg_angle(m, x, p, q).value for p, q in zip(pts[:-1], pts[1:]))
    assert total == pytest.approx(indicatrix_length(m, x), abs=1e-9)


def test_reversible_pnorm_opposite_angles_equal():
    x = (0.0, 0.0)
    e1, e2 = np.array([1.0, 0.0]), np.array([0.0, 1.0])
    L1 = landsberg_angle(PNORM4, x, e1, e2).value
    L2 = landsberg_angle(PNORM4, x, e2, -e1).value
    L3 = landsberg_angle(PNORM4, x, -e1, -e2).value
    L4 = landsberg_angle(PNORM4, x, -e2, e1).value
    assert L1 == pytest.approx(L3, abs=1e-9)
    assert L2 == pytest.approx(L4, abs=1e-9)


def test_equal_vectors_give_zero_angle():
    assert landsberg_angle(RANDERS, (0, 0), (0.3, 0.4), (0.6, 0.8)).value == 0.0


@given(family, angle, st.floats(0.05, 0.95), st.floats(0.05, 0.95))
def test_angle_additivity(name, a, s, t):
    m = FAMILIES[name]
    x = (0.1, -0.2)
    total = s * TWO_PI
    X, Y, Z = _dir(a), _dir(a + t * total), _dir(a + total)
    lhs = landsberg_angle(m, x, X, Z).value
    rhs = landsberg_angle(m, x, X, Y).value + landsberg_angle(m, x, Y, Z).value
    assert lhs == pytest.approx(rhs, abs=1e-9)
    assert 0.0 <= lhs <= indicatrix_length(m, x)


# -- Shen normal ---------------------------------------------------------------------------

def _residuals(m, x, T, N):
    # no definiteness check: on the p-norm axes g_N is degenerate but still defined
    g, _, _, _ = fundamental_tensor(m, x, N, check=False)
    return abs(m.norm(x, N)[0] - 1.0), abs(float(N @ g[0] @ T))


def test_euclidean_normal():
    N = solve_normal(EUCLIDEAN, (0, 0), (1.0, 0.0), side=1)
    np.testing.assert_allclose(N, [0.0, 1.0], atol=1e-15)
    np.testing.assert_allclose(solve_normal(EUCLIDEAN, (0, 0), (1.0, 0.0), side=-1), [0.0, -1.0], atol=1e-15)


def test_conformal_normal_is_rotated_tangent(rng):
    # e^(2u) delta is rotation invariant, so the unit normal is the rotated unit tangent
    for _ in range(20):
        x = rng.uniform(-0.8, 0.8, size=2)
        T = random_direction(rng, avoid_axes=False)
        for m in (SPHERE, CONFORMAL):
            Tu = T / m.norm(x, T)[0]
            N = solve_normal(m, x, Tu)
            np.testing.assert_allclose(N, [-Tu[1], Tu[0]], atol=1e-12)


def test_randers_normal_against_scan():
    x, T = (0.0, 0.0), np.array([0.0, 1.0])
    T = T / RANDERS.norm(x, T)[0]
    N = solve_normal(RANDERS, x, T)
    r1, r2 = _residuals(RANDERS, x, T, N)
    assert r1 <= 1e-10 and r2 <= 1e-10
    np.testing.assert_allclose(N, normal_by_scan(RANDERS, x, T), atol=1e-6)
    # dF/dy(N) . T = N2 / |N| + b2 = 0 puts N on the negative y1 axis, where F = 1 - b1
    np.testing.assert_allclose(N, [-1.0 / 0.8, 0.0], atol=1e-12)


@given(st.sampled_from(["sphere", "conformal", "pnorm4"]), angle)
def test_reversible_normal_is_odd(name, th):
    m = FAMILIES[name]
    x = (0.2, 0.1)
    T = _dir(th)
    T = T / m.norm(x, T)[0]
    np.testing.assert_allclose(solve_normal(m, x, -T), -solve_normal(m, x, T), atol=1e-10)


@given(family, angle, st.sampled_from([1, -1]))
def test_normal_defining_relations(name, th, side):
    m = FAMILIES[name]
    x = (-0.3, 0.25)
    T = _dir(th)
    T = T / m.norm(x, T)[0]
    N = solve_normal(m, x, T, side=side)
    r1, r2 = _residuals(m, x, T, N)
    assert r1 <= 1e-10 and r2 <= 1e-10
    assert side * (T[0] * N[1] - T[1] * N[0]) > 0


def test_batched_normals_match_single(rng):
    x = rng.uniform(-0.5, 0.5, size=(10, 2))
    T = random_direction(rng, 10)
    T = T / RANDERS_VAR.norm(x, T)[:, None]
    Ns = solve_normals(RANDERS_VAR, x, T)
    for k in range(10):
        np.testing.assert_allclose(Ns[k], solve_normal(RANDERS_VAR, x[k], T[k]), atol=1e-13)
