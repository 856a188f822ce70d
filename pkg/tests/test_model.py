import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from delayfield.errors import ConfigError, UnsupportedDerivative
from delayfield.model import (
    ModelParams,
    SpatialGrid,
    activation,
    activation_deriv,
    connectivity,
    delay,
    effective_coefficients,
)


@pytest.mark.parametrize("k", [1, 2, 3])
@pytest.mark.parametrize("r", [1.0, 4.220214885988226, 6.0])
def test_activation_derivatives_match_mpmath(k, r):
    assert activation_deriv(k, r) == pytest.approx(oracles.activation_derivative(k, r), rel=1e-12, abs=1e-14)


def test_activation_is_logistic_minus_half():
    v = np.linspace(-3, 3, 13)
    r = 4.2
    assert np.allclose(activation(v, r), 1 / (1 + np.exp(-r * v)) - 0.5, atol=1e-15)
    assert activation(0.0, r) == 0.0


def test_activation_no_overflow_for_large_argument():
    assert activation(1e6, 10.0) == pytest.approx(0.5)


def test_fourth_derivative_is_refused():
    with pytest.raises(UnsupportedDerivative):
        activation_deriv(4, 1.0)


def test_effective_coefficients_scale_with_gain(hopf_params):
    assert np.allclose(effective_coefficients(hopf_params), hopf_params.r / 4 * np.array([3.0, -5.5]))


def test_connectivity_and_delay(hopf_params):
    assert connectivity(0.2, 0.2, hopf_params) == pytest.approx(3.0 - 5.5)
    assert connectivity(-1.0, 1.0, hopf_params) == pytest.approx(3 * np.exp(-1.0) - 5.5 * np.exp(-2.0))
    assert delay(-1.0, 1.0, hopf_params) == pytest.approx(3.0)
    assert hopf_params.max_delay == pytest.approx(3.0)


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(alpha=0.0),
        dict(tau0=-1.0),
        dict(r=0.0),
        dict(mu=(1.0, 1.0)),
        dict(c_hat=(1.0,)),
    ],
)
def test_invalid_parameters_raise(kwargs):
    base = dict(alpha=1.0, tau0=1.0, r=4.0, c_hat=(3.0, -5.5), mu=(0.5, 1.0))
    base.update(kwargs)
    with pytest.raises(ConfigError):
        ModelParams(**base)


def test_overrides_address_single_terms(hopf_params):
    q = hopf_params.with_overrides(r=6.0, mu1=0.0)
    assert q.r == 6.0 and q.mu == (0.0, 1.0) and q.c_hat == hopf_params.c_hat
    with pytest.raises(ConfigError):
        hopf_params.with_overrides(mu3=1.0)
    with pytest.raises(ConfigError):
        hopf_params.with_overrides(beta=1.0)


def test_json_roundtrip_and_wrapper(tmp_path, hopf_params):
    path = tmp_path / "m.json"
    path.write_text(json.dumps({"model": hopf_params.to_dict()}))
    assert ModelParams.from_json(path) == hopf_params
    path.write_text(json.dumps(hopf_params.to_dict()))
    assert ModelParams.from_json(path) == hopf_params


def test_malformed_json_names_key(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"alpha": 1, "tau0": 1, "r": 4, "terms": [{"c_hat": 1}]}')
    with pytest.raises(ConfigError) as info:
        ModelParams.from_json(path)
    assert "terms[0]" in str(info.value)


def test_complex_parameters_are_not_real():
    p = ModelParams(1.0, 1.0, 4.0, (1 + 1j, -2.0), (0.5, 1.0))
    assert not p.is_real


def test_uniform_grid_weights_sum_to_length():
    g = SpatialGrid.uniform(401)
    assert g.weights.sum() == pytest.approx(2.0)
    assert g.size == 401


def test_refined_grid_keeps_old_nodes():
    g = SpatialGrid.uniform(11)
    fine = g.refined()
    assert fine.size == 21
    assert np.array_equal(fine.nodes[0::2], g.nodes)
    assert np.allclose(fine.weights, SpatialGrid.uniform(21).weights)


def test_grid_rejects_missing_endpoint():
    with pytest.raises(ValueError):
        SpatialGrid.from_nodes([-1.0, 0.0, 0.5])


@settings(max_examples=50, deadline=None)
@given(st.floats(-1, 1), st.floats(-1, 1))
def test_connectivity_is_symmetric(x, y):
    p = ModelParams(1.0, 1.0, 4.0, (3.0, -5.5), (0.5, 1.0))
    assert connectivity(x, y, p) == connectivity(y, x, p)
