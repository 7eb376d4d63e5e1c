import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import CONFORMAL, EUCLIDEAN, FAMILIES, PNORM4, RANDERS, RANDERS_VAR, SPHERE, random_direction
from finslerlab import (
    ConvexityError,
    MetricSpec,
    ParameterError,
    ZeroDirectionError,
    berwald_frame,
    eval_norm,
    main_scalar_I,
    metric_jet,
)
from finslerlab.metric import metric_jets
from oracles import f2_xy_function, fd_cartan, fd_fundamental_tensor, fd_partial

coord = st.floats(-0.6, 0.6, allow_nan=False)
angle = st.floats(0.0, 2 * math.pi, allow_nan=False)
family = st.sampled_from(sorted(FAMILIES))


def _dir(th):
    return np.array([math.cos(th), math.sin(th)])


def _off_axis(th):
    d = _dir(th)
    return d if np.all(np.abs(d) > 0.05) else _dir(th + 0.1)


# -- eval_norm -------------------------------------------------------------------------

def test_norm_examples():
    assert eval_norm(EUCLIDEAN, (0.3, 0.1), (3.0, 4.0)) == pytest.approx(5.0, abs=1e-14)
    assert eval_norm(RANDERS, (0.0, 0.0), (1.0, 0.0)) == pytest.approx(1.2, abs=1e-14)
    assert eval_norm(PNORM4, (0.0, 0.0), (1.0, 1.0)) == pytest.approx(2**0.25, abs=1e-14)


def test_norm_errors():
    with pytest.raises(ZeroDirectionError):
        eval_norm(EUCLIDEAN, (0, 0), (0, 0))
    with pytest.raises(ParameterError, match="convexity bound"):
        MetricSpec.randers(0.8, 0.6)
    with pytest.raises(ParameterError):
        MetricSpec.pnorm(1.0)
    with pytest.raises(ParameterError):
        MetricSpec.pnorm(9.0)
    with pytest.raises(ParameterError):
        MetricSpec("finsler-unknown")
    with pytest.raises(ParameterError):
        MetricSpec("randers", {"b3": 0.1})


def test_randers_pointwise_bound_is_checked():
    m = MetricSpec.randers(0.5, 0.0, b1_x1=1.0)
    with pytest.raises(ParameterError):
        metric_jet(m, (0.6, 0.0), (1.0, 0.0))


@given(family, coord, coord, angle, st.sampled_from([0.5, 2.0, 10.0]))
def test_positive_homogeneity(name, x1, x2, th, lam):
    m = FAMILIES[name]
    y = _dir(th)
    assert eval_norm(m, (x1, x2), lam * y) == pytest.approx(lam * eval_norm(m, (x1, x2), y), rel=1e-12)


@given(family, coord, coord, angle, st.sampled_from([0.5, 2.0, 10.0]))
def test_fundamental_tensor_zero_homogeneous(name, x1, x2, th, lam):
    m = FAMILIES[name]
    y = _off_axis(th)
    g1 = metric_jet(m, (x1, x2), y).g
    g2 = metric_jet(m, (x1, x2), lam * y).g
    np.testing.assert_allclose(g2, g1, rtol=0, atol=1e-10 * max(1.0, np.abs(g1).max()))


# -- metric_jet --------------------------------------------------------------------------

def test_euclidean_jet():
    jet = metric_jet(EUCLIDEAN, (0.4, -0.7), (0.3, 2.0))
    np.testing.assert_allclose(jet.g, np.eye(2), atol=1e-14)
    np.testing.assert_allclose(jet.A, 0.0, atol=1e-14)
    assert jet.sqrtg == pytest.approx(1.0, abs=1e-14)


def test_randers_vertical_direction_identity():
    y = np.array([0.0, 1.0])
    for x in [(0.0, 0.0), (0.5, -0.3)]:
        jet = metric_jet(RANDERS, x, y)
        assert y @ jet.g @ y == pytest.approx(jet.F**2, rel=1e-12)


def test_pnorm_axis_direction_is_degenerate():
    # g_22 vanishes on the y1 axis for p = 4, so no jet exists there
    with pytest.raises(ConvexityError):
        metric_jet(PNORM4, (0.0, 0.0), (1.0, 0.0))


def test_pnorm_cartan_against_finite_differences():
    y = np.array([1.0, 0.35])
    jet = metric_jet(PNORM4, (0.0, 0.0), y)
    A_fd = fd_cartan(PNORM4, (0.0, 0.0), y)
    np.testing.assert_allclose(jet.A, A_fd, atol=1e-6)
    assert abs(jet.A[0, 0, 0]) > 1e-2
    np.testing.assert_allclose(np.einsum("ijk,k->ij", jet.A, y), 0.0, atol=1e-12)


@given(family, coord, coord, angle)
def test_euler_identities(name, x1, x2, th):
    m = FAMILIES[name]
    y = 1.7 * _off_axis(th)
    jet = metric_jet(m, (x1, x2), y)
    F = jet.F
    assert y @ jet.g @ y == pytest.approx(F * F, rel=1e-10)
    assert jet.gradF_y @ y == pytest.approx(F, rel=1e-10)
    np.testing.assert_allclose(jet.g @ y, F * jet.gradF_y, atol=1e-10 * F)
    scale = max(1.0, np.abs(jet.A).max())
    np.testing.assert_allclose(np.einsum("ijk,k->ij", jet.A, y), 0.0, atol=1e-10 * scale)
    np.testing.assert_allclose(jet.g, jet.g.T, atol=0)


def test_riemannian_members_have_vanishing_cartan(rng):
    for m in (EUCLIDEAN, SPHERE, CONFORMAL):
        x = rng.uniform(-0.8, 0.8, size=(100, 2))
        y = random_direction(rng, 100, avoid_axes=False) * rng.uniform(0.2, 3.0, size=(100, 1))
        jets = metric_jets(m, x, y)
        assert np.max(np.abs(jets.A)) <= 1e-10
        I = main_scalar_I(jets, berwald_frame(jets))
        assert np.max(np.abs(I)) <= 1e-10


@pytest.mark.parametrize("name", ["conformal", "randers-var", "pnorm4"])
def test_derivative_fields_against_finite_differences(name, rng):
    m = FAMILIES[name]
    f = f2_xy_function(m)
    for _ in range(5):
        x = rng.uniform(-0.5, 0.5, size=2)
        y = random_direction(rng) * rng.uniform(0.5, 1.5)
        jet = metric_jet(m, x, y)
        z = np.concatenate([x, y])
        np.testing.assert_allclose(jet.g, fd_fundamental_tensor(m, x, y), atol=1e-6)
        np.testing.assert_allclose(jet.A, fd_cartan(m, x, y), atol=1e-6)
        F2 = jet.F**2
        assert F2 == pytest.approx(float(f(z[None, :])[0]), rel=1e-14)
        for k in range(2):
            c = [0, 0, 0, 0]
            c[k] = 1
            assert jet.dF2_dx[k] == pytest.approx(fd_partial(f, z, c), abs=1e-6)
            for l in range(2):
                c = [0, 0, 0, 0]
                c[k] += 1
                c[2 + l] += 1
                assert jet.d2F2_dxdy[k, l] == pytest.approx(fd_partial(f, z, c), abs=1e-6)
                for i in range(2):
                    c = [0, 0, 0, 0]
                    c[k] += 1
                    c[2 + i] += 1
                    c[2 + l] += 1
                    assert jet.dg_dx[i, l, k] == pytest.approx(0.5 * fd_partial(f, z, c), abs=1e-6)


# -- Berwald frame and Cartan scalar ---------------------------------------------------------

def test_euclidean_frame():
    jet = metric_jet(EUCLIDEAN, (0.0, 0.0), (1.0, 0.0))
    fr = berwald_frame(jet)
    np.testing.assert_allclose(fr.e2, [1.0, 0.0], atol=1e-15)
    np.testing.assert_allclose(fr.e1, [0.0, -1.0], atol=1e-15)
    W = np.stack([fr.omega1, fr.omega2])
    E = np.stack([fr.e1, fr.e2], axis=1)
    np.testing.assert_allclose(W @ E, np.eye(2), atol=1e-15)


def test_frame_flip_reverses_e1():
    jet = metric_jet(RANDERS, (0.0, 0.0), (1.0, 0.0))
    a, b = berwald_frame(jet), berwald_frame(jet, flip=True)
    np.testing.assert_allclose(b.e1, -a.e1)
    np.testing.assert_allclose(b.e2, a.e2)


@given(family, coord, coord, angle)
def test_frame_is_orthonormal_and_dual(name, x1, x2, th):
    m = FAMILIES[name]
    y = _off_axis(th)
    jet = metric_jet(m, (x1, x2), y)
    fr = berwald_frame(jet)
    E = np.stack([fr.e1, fr.e2], axis=1)
    np.testing.assert_allclose(E.T @ jet.g @ E, np.eye(2), atol=1e-10)
    W = np.stack([fr.omega1, fr.omega2])
    np.testing.assert_allclose(W @ E, np.eye(2), atol=1e-10)
    assert fr.omega1 @ fr.e2 == pytest.approx(0.0, abs=1e-12)
    np.testing.assert_allclose(fr.e2, y / jet.F, atol=1e-15)


def test_randers_frame_orthonormal_on_axis():
    jet = metric_jet(RANDERS, (0.0, 0.0), (1.0, 0.0))
    fr = berwald_frame(jet)
    E = np.stack([fr.e1, fr.e2], axis=1)
    np.testing.assert_allclose(E.T @ jet.g @ E, np.eye(2), atol=1e-10)


def test_cartan_scalar_examples():
    for m in (EUCLIDEAN, CONFORMAL):
        jet = metric_jet(m, (0.3, 0.2), (0.6, -1.1))
        assert main_scalar_I(jet, berwald_frame(jet)) == pytest.approx(0.0, abs=1e-10)
    # the diagonal is a reflection axis of the p-norm indicatrix, and I is odd under
    # orientation reversal, so I vanishes at (1, 1); off the axis it does not
    for y, nonzero in ((np.array([1.0, 1.0]), False), (np.array([1.0, 0.35]), True)):
        jet = metric_jet(PNORM4, (0.0, 0.0), y)
        I = main_scalar_I(jet, berwald_frame(jet))
        # oracle: finite-difference Cartan and fundamental tensors, frame built from them
        A = fd_cartan(PNORM4, (0.0, 0.0), y)
        g = fd_fundamental_tensor(PNORM4, (0.0, 0.0), y)
        F = eval_norm(PNORM4, (0.0, 0.0), y)
        Fy = g @ y / F
        e1 = np.array([Fy[1], -Fy[0]]) / math.sqrt(np.linalg.det(g))
        I_fd = np.einsum("ijk,i,j,k->", A, e1, e1, e1)
        assert I == pytest.approx(I_fd, abs=1e-6)
        assert (abs(I) > 1e-2) == nonzero


@given(st.sampled_from(["randers", "randers-var", "pnorm4"]), coord, coord, angle,
       st.sampled_from([0.5, 2.0, 10.0]))
def test_cartan_scalar_zero_homogeneous(name, x1, x2, th, lam):
    m = FAMILIES[name]
    y = _off_axis(th)
    j1, j2 = metric_jet(m, (x1, x2), y), metric_jet(m, (x1, x2), lam * y)
    I1, I2 = main_scalar_I(j1, berwald_frame(j1)), main_scalar_I(j2, berwald_frame(j2))
    assert I2 == pytest.approx(I1, abs=1e-10)
