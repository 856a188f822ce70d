import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from delayfield import normalform as nf
from delayfield import resolvent, spectrum
from delayfield.errors import PreconditionError, ProportionalityFailure, Resonance
from delayfield.model import SpatialGrid, effective_coefficients

REFERENCE_GAMMA = np.array([-0.191821747840362 - 0.172140605861736j, -0.080160108888561] * 2)


@pytest.fixture(scope="module")
def cubic_rhs(hopf_eigen, hopf_params):
    phi = nf.ExponentialHistory.of(hopf_eigen)
    return nf.multilinear_G(3, [phi, phi, phi.conj()], hopf_eigen.grid, hopf_params)


@pytest.fixture(scope="module")
def kappa(hopf_eigen, cubic_rhs, hopf_contour, hopf_params):
    return nf.pairing_kappa(hopf_eigen, cubic_rhs, hopf_contour, hopf_params)[0]


def test_kappa_matches_nystrom_projection(hopf_eigen, cubic_rhs, hopf_contour, hopf_params, kappa):
    grid = hopf_eigen.grid
    f = oracles.nystrom_residue(hopf_contour.center, hopf_contour.radius, 64, cubic_rhs, grid.nodes,
                                grid.weights, 1.0, 1.0, effective_coefficients(hopf_params),
                                hopf_params.mu_array)
    q = hopf_eigen.qsamples
    k_dense = np.sum(grid.weights * q.conj() * f) / np.sum(grid.weights * np.abs(q) ** 2)
    # the two discretizations differ by O(h^2); measured 4.4e-6 at 401 nodes
    assert abs(kappa - k_dense) <= 2e-5 * abs(kappa)


@pytest.mark.parametrize("radius,nodes", [(0.05, 64), (0.09, 64), (0.05, 128)])
def test_kappa_stable_under_contour_changes(hopf_eigen, cubic_rhs, hopf_params, kappa, radius, nodes):
    other, fit = nf.pairing_kappa(hopf_eigen, cubic_rhs, nf.ContourSpec(hopf_eigen.lam, radius, nodes),
                                  hopf_params)
    assert abs(other - kappa) <= 1e-8 * abs(kappa)
    assert fit < 1e-10


def test_kappa_is_linear(hopf_eigen, hopf_contour, hopf_params):
    x = hopf_eigen.grid.nodes
    y1, y2 = np.cos(3 * x) + 0j, 1j * x**2
    a, b = 0.7 - 0.2j, -1.3
    k1 = nf.pairing_kappa(hopf_eigen, y1, hopf_contour, hopf_params)[0]
    k2 = nf.pairing_kappa(hopf_eigen, y2, hopf_contour, hopf_params)[0]
    k12 = nf.pairing_kappa(hopf_eigen, a * y1 + b * y2, hopf_contour, hopf_params)[0]
    assert abs(k12 - (a * k1 + b * k2)) <= 1e-9 * max(abs(a * k1), abs(b * k2))


def test_contour_not_enclosing_eigenvalue_fails(hopf_eigen, cubic_rhs, hopf_params):
    far = nf.ContourSpec(hopf_eigen.lam + 0.5, 0.1, 32)
    with pytest.raises(ProportionalityFailure):
        nf.pairing_kappa(hopf_eigen, cubic_rhs, far, hopf_params)


def test_certified_radius(hopf_eigen, hopf_params, hopf_contour):
    assert 0 < hopf_contour.radius <= nf.MAX_RADIUS
    assert hopf_contour.nodes == nf.DEFAULT_NODES
    with pytest.raises(PreconditionError):
        nf.certify_contour(hopf_eigen, hopf_params, radius=0.5)


def test_hopf_g21_own_normalization(hopf_eigen, hopf_contour, hopf_params, kappa):
    result = nf.hopf_g21(hopf_eigen, hopf_params, hopf_contour)
    assert result.g21 == pytest.approx(kappa / 2, rel=1e-14)
    assert result.l1 == pytest.approx(result.g21.real / 1.644003102046893, rel=1e-12)
    assert result.verdict is nf.HopfVerdict.SUPERCRITICAL
    assert result.summary().startswith("SUPERCRITICAL, l1 = ")


def test_hopf_g21_with_reference_coefficients(hopf_eigen, hopf_contour, hopf_params):
    # frozen from this implementation (independently confirmed by the Nystrom kappa test)
    result = nf.hopf_g21(hopf_eigen.with_gamma(REFERENCE_GAMMA), hopf_params, hopf_contour)
    assert result.g21 == pytest.approx(-0.798437 - 0.271621j, abs=2e-5)
    assert result.verdict is nf.HopfVerdict.SUPERCRITICAL


@settings(max_examples=8, deadline=None)
@given(st.floats(0.2, 3.0), st.floats(0, 2 * np.pi))
def test_g21_scales_with_modulus_squared(hopf_eigen, hopf_contour, hopf_params, modulus, angle):
    base = nf.hopf_g21(hopf_eigen, hopf_params, hopf_contour)
    s = modulus * np.exp(1j * angle)
    scaled = nf.hopf_g21(hopf_eigen.with_gamma(s * hopf_eigen.gamma), hopf_params, hopf_contour)
    assert abs(scaled.g21 - modulus**2 * base.g21) <= 1e-8 * modulus**2 * abs(base.g21)
    assert scaled.verdict is base.verdict


def test_quadratic_terms_vanish_for_odd_activation(hopf_eigen, hopf_params):
    phi = nf.ExponentialHistory.of(hopf_eigen)
    b = nf.multilinear_G(2, [phi, phi], hopf_eigen.grid, hopf_params)
    assert np.all(b == 0)
    odd = nf.Derivatives.of(hopf_params)
    assert odd.second == 0


def test_full_formula_equals_simplified_for_odd_activation(hopf_eigen, hopf_contour, hopf_params):
    default = nf.hopf_g21(hopf_eigen, hopf_params, hopf_contour)
    explicit = nf.hopf_g21(hopf_eigen, hopf_params, hopf_contour, nf.Derivatives.of(hopf_params))
    assert default.g21 == explicit.g21


def test_quadratic_path_with_test_activation(hopf_eigen, hopf_contour, hopf_params):
    derivs = nf.Derivatives(second=0.8, third=nf.Derivatives.of(hopf_params).third)
    h20, h11 = nf.hopf_h_coefficients(hopf_eigen, hopf_params, derivs)
    phi = nf.ExponentialHistory.of(hopf_eigen)
    grid = hopf_eigen.grid
    b20 = nf.multilinear_G(2, [phi, phi], grid, hopf_params, derivs)
    residual = spectrum.delta_apply(h20.lam, h20.profile(grid.nodes), grid, hopf_params) - b20
    # trapezoid residual of the resolvent solve, O(h^2)
    assert np.max(np.abs(residual)) <= 1e-4 * np.max(np.abs(b20))
    assert h11.lam == 0
    result = nf.hopf_g21(hopf_eigen, hopf_params, hopf_contour, derivs)
    plain = nf.hopf_g21(hopf_eigen, hopf_params, hopf_contour)
    assert result.g21 != plain.g21


def test_exponential_history_evaluates(hopf_eigen):
    phi = nf.ExponentialHistory.of(hopf_eigen)
    x = hopf_eigen.grid.nodes[[0, 100, 400]]
    assert np.allclose(phi(0.0, x), hopf_eigen.qsamples[[0, 100, 400]])
    assert np.allclose(phi(-1.0, x), np.exp(-hopf_eigen.lam) * hopf_eigen.qsamples[[0, 100, 400]])


@pytest.mark.parametrize(
    "matrix,expected",
    [
        ([[-8.822, -3.367], [-13.79, -1.310]], ("SIMPLE", "I")),
        ([[-1.0, 0.5], [0.5, -1.0]], ("SIMPLE", "other (not I)")),
        ([[-1.0, 0.5], [0.5, 1.0]], ("DIFFICULT", "n/a")),
    ],
)
def test_double_hopf_classification(matrix, expected):
    theta, delta, kind, subtype = nf.classify_double_hopf(matrix)
    assert (kind, subtype) == expected
    assert theta == pytest.approx(matrix[0][1] / matrix[1][1])
    assert delta == pytest.approx(matrix[1][0] / matrix[0][0])


def test_nonresonance():
    assert nf.check_nonresonance(1.299147304907829, 2.030930500644927) > 1e-6
    with pytest.raises(Resonance):
        nf.check_nonresonance(1.0, 2.0)


@pytest.fixture(scope="module")
def dh_result(dh_eigen, dh_params):
    return nf.doublehopf_coeffs(dh_eigen[0], dh_eigen[1], dh_params)


def test_double_hopf_invariants(dh_result):
    assert dh_result.theta == pytest.approx(2.57, abs=0.02)
    assert dh_result.delta == pytest.approx(1.56, abs=0.02)
    assert (dh_result.kind, dh_result.subtype) == ("SIMPLE", "I")
    assert max(dh_result.fit_residuals) < 1e-10
    assert "not computed" in dh_result.note


def test_theta_delta_invariant_under_rescaling(dh_eigen, dh_params, dh_result):
    a, b = 0.4 * np.exp(0.3j), 2.5 * np.exp(-1.1j)
    e1 = dh_eigen[0].with_gamma(a * dh_eigen[0].gamma)
    e2 = dh_eigen[1].with_gamma(b * dh_eigen[1].gamma)
    scaled = nf.doublehopf_coeffs(e1, e2, dh_params, dh_result.contours)
    assert scaled.theta == pytest.approx(dh_result.theta, rel=1e-8)
    assert scaled.delta == pytest.approx(dh_result.delta, rel=1e-8)
    # each row of p scales with the squared moduli of the modes it pairs
    assert np.allclose(scaled.p, dh_result.p * np.array([[abs(a) ** 2, abs(b) ** 2],
                                                          [abs(a) ** 2, abs(b) ** 2]]), rtol=1e-8)


def test_double_hopf_needs_distinct_frequencies(dh_eigen, dh_params):
    with pytest.raises(PreconditionError):
        nf.doublehopf_coeffs(dh_eigen[0], dh_eigen[0], dh_params)


def test_lifted_resolvent_zero_rhs_short_circuits(hopf_params):
    grid = SpatialGrid.uniform(21)
    h = nf._lifted_resolvent(0.3j, np.zeros(21), hopf_params, grid)
    assert np.all(h.qsamples == 0)


def test_resolve_on_contour_keeps_branch(hopf_eigen, hopf_contour, hopf_params):
    for z in hopf_contour.points()[::8]:
        res = resolvent.resolve(z, np.ones(hopf_eigen.grid.size), hopf_params, hopf_eigen.grid,
                                rho_ref=hopf_eigen.rho)
        assert np.max(np.abs(res.poly.rho - hopf_eigen.rho)) < 0.5
