import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from conftest import HOPF_LAMBDA
from delayfield import charpoly, resolvent
from delayfield.errors import AtEigenvalue, EssentialPoint, TSingular
from delayfield.model import SpatialGrid, effective_coefficients

POINTS = (1.0, 2.0j, -0.5 + 3.0j)


def _rhs(x):
    return np.cos(2.0 * x) + 0.5j * x


@pytest.mark.parametrize("z", POINTS)
def test_residual_shrinks_fourfold(hopf_params, z):
    out = []
    for n in (201, 401):
        grid = SpatialGrid.uniform(n)
        h = _rhs(grid.nodes)
        res = resolvent.resolve(z, h, hopf_params, grid)
        out.append(np.max(np.abs(resolvent.resolvent_residual(res, h, hopf_params))))
    assert 3.5 <= out[0] / out[1] <= 4.5


@pytest.mark.parametrize("z", POINTS)
def test_agrees_with_dense_nystrom_solve(hopf_params, z):
    grid = SpatialGrid.uniform(401)
    h = _rhs(grid.nodes)
    q = resolvent.resolve(z, h, hopf_params, grid).qsamples
    A = oracles.nystrom_matrix(z, grid.nodes, grid.weights, 1.0, 1.0,
                               effective_coefficients(hopf_params), hopf_params.mu_array)
    q_dense = np.linalg.solve(A, h)
    # both carry O(h^2) quadrature error of opposite origin
    assert np.max(np.abs(q - q_dense)) <= 1e-3 * np.max(np.abs(q))


@settings(max_examples=20, deadline=None)
@given(st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False),
       st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False))
def test_linearity(hopf_params, a, b):
    grid = SpatialGrid.uniform(101)
    h1 = _rhs(grid.nodes)
    h2 = np.exp(grid.nodes)
    z = 0.5 + 1.0j
    q1 = resolvent.resolve(z, h1, hopf_params, grid).qsamples
    q2 = resolvent.resolve(z, h2, hopf_params, grid).qsamples
    q = resolvent.resolve(z, a * h1 + b * h2, hopf_params, grid).qsamples
    scale = max(1.0, np.max(np.abs(a * q1)), np.max(np.abs(b * q2)))
    assert np.max(np.abs(q - (a * q1 + b * q2))) <= 1e-10 * scale


def test_pole_at_eigenvalue_is_simple(hopf_params):
    grid = SpatialGrid.uniform(201)
    h = np.cos(2 * grid.nodes)
    eps = np.array([1e-1, 3e-2, 1e-2, 3e-3, 1e-3])
    norms = [np.max(np.abs(resolvent.resolve(HOPF_LAMBDA + 1j * e, h, hopf_params, grid).qsamples))
             for e in eps]
    slope = np.polyfit(np.log(eps), np.log(norms), 1)[0]
    assert abs(slope + 1) <= 0.1


def test_refuses_eigenvalue(hopf_params):
    grid = SpatialGrid.uniform(101)
    with pytest.raises(AtEigenvalue):
        resolvent.resolve(HOPF_LAMBDA, np.ones(grid.size), hopf_params, grid)


def test_refuses_essential_point(hopf_params):
    grid = SpatialGrid.uniform(101)
    with pytest.raises(EssentialPoint):
        resolvent.resolve(-1.0, np.ones(grid.size), hopf_params, grid)


def test_t_matrix_singular_when_rate_meets_root():
    k = np.array([0.5 + 1j, 1.0 + 1j])
    poly = charpoly.PolyData(0j, k, np.ones(3), np.array([-k[0], 2.0 + 0.5j]))
    with pytest.raises(TSingular):
        resolvent.t_matrix(0j, poly)


def test_t_matrix_invertible_on_contour(hopf_params):
    for z in HOPF_LAMBDA + 0.09 * np.exp(2j * np.pi * np.arange(16) / 16):
        T = resolvent.t_matrix(z, charpoly.char_poly(z, hopf_params))
        assert np.linalg.cond(T) < resolvent.COND_LIMIT


def test_align_roots_recovers_permutation_and_sign():
    ref = np.array([0.3 - 0.9j, 0.1 - 2.3j])
    shuffled = np.array([-(0.1 - 2.3j) + 1e-4, 0.3 - 0.9j])
    assert np.allclose(resolvent.align_roots(shuffled, ref), [0.3 - 0.9j, 0.1 - 2.3j - 1e-4])


def test_gamma_hat_starts_at_zero_and_interpolates(hopf_params):
    grid = SpatialGrid.uniform(101)
    res = resolvent.resolve(0.5, np.ones(grid.size), hopf_params, grid)
    assert np.all(res.gammahat[0] == 0)
    assert np.allclose(res.gammahat_at(grid.nodes[7])[0], res.gammahat[7])


def test_history_right_hand_side_for_constant_history(hopf_params):
    # inner time integral is elementary for a constant history
    grid = SpatialGrid.uniform(41)
    z = 0.7 + 0.4j
    h = resolvent.h_from_history(z, lambda t, x: np.ones(np.broadcast(t, x).shape), grid, hopf_params,
                                 time_nodes=257)
    c = effective_coefficients(hopf_params)
    mu = hopf_params.mu_array
    x = 0.25
    j = int(np.argmin(np.abs(grid.nodes - x)))

    def integrand(r):
        d = abs(grid.nodes[j] - r)
        kern = sum(complex(ci) * mpmath.exp(-complex(mi) * d) for ci, mi in zip(c, mu))
        return kern * (1 - mpmath.exp(-z * (1.0 + d))) / z

    exact = 1 + complex(mpmath.quad(integrand, [-1, grid.nodes[j], 1]))
    # spatial trapezoid on 41 nodes dominates the error
    assert abs(h[j] - exact) <= 5e-3 * abs(exact)
