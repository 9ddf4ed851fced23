import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from metagrad import Adam


def adam_oracle(grads, lr, beta1, beta2, eps):
    """Straight transcription of the update, scalar by scalar."""
    m = v = 0.0
    delta = None
    for t, g in enumerate(grads, start=1):
        m = beta1 * m + (1 - beta1) * g
        v = beta2 * v + (1 - beta2) * g * g
        m_hat = m / (1 - beta1**t)
        v_hat = v / (1 - beta2**t)
        delta = -lr * m_hat / (math.sqrt(v_hat) + eps)
    return delta


def test_first_step_is_sign():
    adam = Adam(lr=0.01, eps=0.0)
    g = np.array([3.0, -0.2, 1e-3])
    np.testing.assert_allclose(adam.step(g), -0.01 * np.sign(g), rtol=1e-12)


def test_zero_gradients():
    adam = Adam()
    for _ in range(5):
        delta = adam.step(np.zeros(2))
    np.testing.assert_array_equal(delta, 0.0)
    np.testing.assert_array_equal(adam.m, 0.0)
    np.testing.assert_array_equal(adam.v, 0.0)


def test_second_step_matches_oracle():
    adam = Adam(lr=0.001, beta1=0.9, beta2=0.999)
    adam.step(np.array([1.0]))
    delta = adam.step(np.array([1.0]))
    assert delta[0] == pytest.approx(adam_oracle([1.0, 1.0], 0.001, 0.9, 0.999, 1e-8), abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-100, 100), min_size=1, max_size=30))
def test_matches_oracle(grads):
    adam = Adam(lr=0.01)
    for g in grads:
        delta = adam.step(np.array([g]))
    assert delta[0] == pytest.approx(adam_oracle(grads, 0.01, 0.9, 0.999, 1e-8), rel=1e-10, abs=1e-15)
    assert adam.v[0] >= 0


@pytest.mark.parametrize("g", [1e-3, 0.5, 40.0, -7.0])
def test_step_bound_constant_gradient(g):
    adam = Adam(lr=0.02)
    for _ in range(200):
        delta = adam.step(np.array([g]))
        assert abs(delta[0]) <= 0.02 * 1.0001


def test_beta1_zero_is_rmsprop_like():
    rng = np.random.default_rng(1)
    adam = Adam(lr=0.1, beta1=0.0)
    for g in rng.normal(size=(20, 3)):
        delta = adam.step(g)
        np.testing.assert_allclose(delta, -0.1 * g / (np.sqrt(adam.v_hat) + adam.eps), rtol=1e-14)


def test_shape_mismatch():
    adam = Adam()
    adam.step(np.zeros(2))
    with pytest.raises(ValueError):
        adam.step(np.zeros(3))


@pytest.mark.parametrize("kwargs", [dict(beta1=1.0), dict(beta2=-0.1), dict(lr=0.0)])
def test_bad_hyperparameters(kwargs):
    with pytest.raises(ValueError):
        Adam(**kwargs)


def test_non_finite_propagates():
    adam = Adam()
    assert np.isnan(adam.step(np.array([np.nan]))[0])
