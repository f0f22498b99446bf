import math

import numpy as np
import pytest
from scipy.linalg import expm

from hyper3b import _core_py
from hyper3b import special_functions as sf


def jy_matrix(two_j):
    """J_y in the basis m = j..-j from the ladder operators."""
    ms = [m / 2 for m in range(two_j, -two_j - 1, -2)]
    j = two_j / 2
    n = len(ms)
    jp = np.zeros((n, n))
    for c in range(1, n):
        m = ms[c]
        jp[c - 1, c] = math.sqrt(j * (j + 1) - m * (m + 1))
    return (jp - jp.T) / 2j


@pytest.mark.parametrize("two_j", range(0, 9))
def test_small_d_matches_matrix_exponential(two_j):
    beta = 0.83
    ref = expm(-1j * beta * jy_matrix(two_j)).real
    assert np.allclose(sf.wigner_d_matrix(two_j, beta), ref, atol=1e-13)


def test_small_d_known_values():
    b = 0.7
    assert sf.wigner_small_d(2, 2, 0, b) == pytest.approx(-math.sin(b) / math.sqrt(2), abs=1e-15)
    assert sf.wigner_small_d(1, 1, 1, b) == pytest.approx(math.cos(b / 2), abs=1e-15)
    assert sf.wigner_small_d(1, 1, -1, b) == pytest.approx(-math.sin(b / 2), abs=1e-15)


def test_small_d_group_and_orthogonality():
    for two_j in (1, 2, 5, 8):
        a, b = 0.4, 1.3
        da, db, dab = (sf.wigner_d_matrix(two_j, x) for x in (a, b, a + b))
        assert np.abs(da @ db - dab).max() < 1e-13
        assert np.abs(da @ da.T - np.eye(two_j + 1)).max() < 1e-13


def test_small_d_array_argument():
    betas = np.linspace(0, math.pi, 7)
    vals = sf.wigner_small_d(4, 2, -2, betas)
    assert np.allclose(vals, [sf.wigner_small_d(4, 2, -2, b) for b in betas], atol=1e-15)


def test_wigner_D_phase():
    ang = (0.3, 1.1, -0.8)
    d = sf.wigner_small_d(2, 2, 0, ang[1])
    assert sf.wigner_D(2, 2, 0, ang) == pytest.approx(np.exp(-1j * ang[0]) * d, abs=1e-15)


@pytest.mark.parametrize("args", [(2, 1, 0), (2, 4, 0), (-2, 0, 0), (3, 1, 2)])
def test_small_d_index_errors(args):
    with pytest.raises(sf.IndexError_):
        sf.wigner_small_d(*args, 0.3)


def test_jacobi_against_binomial_sum():
    rng = np.random.default_rng(0)
    x = rng.uniform(-1, 1, 100)
    assert np.abs(sf.jacobi(2, 1.5, 0.5, x) - sf.jacobi_sum(2, 1.5, 0.5, x)).max() < 1e-12
    assert sf.jacobi(1, 0.5, 0.5, 1.0) == pytest.approx(1.5, abs=1e-15)


def test_jacobi_reduced_d_route():
    th = np.linspace(0.1, 1.4, 9)
    for n, a, b in ((0, 0.5, 1.5), (2, 1.5, 0.5), (3, 2.5, 3.5), (1, 0.5, 0.5)):
        ref = sf.jacobi(n, a, b, np.cos(2 * th))
        assert np.allclose(sf.jacobi_via_reduced_d(n, a, b, th), ref, rtol=1e-11, atol=1e-12)


def test_jacobi_leading_coefficient():
    x = np.linspace(-1, 1, 12)
    for n, a, b in ((3, 0.5, 1.5), (4, 2.5, 0.5)):
        c = np.polyfit(x, sf.jacobi(n, a, b, x), n)[0]
        assert c == pytest.approx(sf.jacobi_leading(n, a, b), rel=1e-10)


def test_jacobi_domain_errors():
    with pytest.raises(sf.DomainError):
        sf.JacobiParams(-1.0, 0.5, 2)
    with pytest.raises(sf.DomainError):
        sf.JacobiParams(0.5, 0.5, -1)
    with pytest.raises(TypeError):
        sf.jacobi_poly((0.5, 0.5, 1), 0.3)


def test_gegenbauer_and_legendre():
    x = np.linspace(-1, 1, 5)
    assert np.allclose(sf.gegenbauer_poly(1, 2, x), 4 * x ** 2 - 1)
    assert np.allclose(sf.assoc_legendre(1, 1, x), -np.sqrt(1 - x ** 2))
    with pytest.raises(sf.DomainError):
        sf.gegenbauer_poly(-0.6, 2, 0.1)
    with pytest.raises(sf.IndexError_):
        sf.assoc_legendre(1, 2, 0.1)


def test_angular_momentum_validation():
    am = sf.AngularMomentum(3, -1)
    assert (am.j, am.m) == (1.5, -0.5)
    with pytest.raises(sf.IndexError_):
        sf.AngularMomentum(2, 1)


def test_delta_pi_half():
    assert sf.delta_pi_half(2, 0, 0) == pytest.approx(0.0, abs=1e-15)
    assert sf.delta_pi_half(2, 2, 2) == pytest.approx(0.5, abs=1e-15)
    # tilde rescaling is 1 when |m| = |n|
    assert sf.delta_pi_half_tilde(4, 2, -2) == pytest.approx(sf.delta_pi_half(4, 2, -2), abs=1e-15)


def test_python_kernel_matches_active_backend():
    from hyper3b import _backend
    for l, a, b in ((2.0, 1.0, 0.0), (3.5, 1.5, -0.5), (2.25, 1.25, 0.75)):
        for beta in (0.2, 1.0, 2.9):
            assert _core_py.dsum(l, a, b, beta) == pytest.approx(_backend.dsum(l, a, b, beta), abs=1e-14)
