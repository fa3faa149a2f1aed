import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from specpath.errors import ConfigurationError, StateError
from specpath.features import evaluate_block, evaluate_dense, predict
from specpath.model import SpectralModel
from specpath.paths import FrequencyVector
from specpath.preprocessing import ScalingParams

fv = FrequencyVector.from_dense


def make_model(paths, amps, intercept=0.0, mean=0.0):
    D = paths[0].dimension if paths else 2
    scaling = ScalingParams(np.zeros(D), np.ones(D), mean)
    return SpectralModel(paths, np.asarray(amps, float), intercept, scaling, 1e-3)


def test_exact_angle_examples():
    assert evaluate_block(np.array([[0.0, 1.3]]), [fv([1, 0])]).values[0, 0] == 1.0
    v = evaluate_block(np.array([[math.pi / 2, math.pi]]), [fv([2, -1])]).values[0, 0]
    assert v == pytest.approx(1.0, abs=1e-15)


def test_matches_scalar_loop(rng):
    theta = rng.uniform(0, np.pi, size=(50, 3))
    m = fv([3, 1, -2])
    got = evaluate_block(theta, [m]).values[:, 0]
    for n in range(50):
        phase = 3 * theta[n, 0] + 1 * theta[n, 1] - 2 * theta[n, 2]
        assert abs(got[n] - math.cos(phase)) <= 1e-15


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_ray_reuse_matches_dense_oracle(seed):
    rng = np.random.default_rng(seed)
    theta = rng.uniform(0, np.pi, size=(30, 4))
    paths = [fv([1, -1, 0, 0]), fv([2, -2, 0, 0]), fv([0, 0, 1, 2]), fv([3, -3, 0, 0]),
             fv([0, 0, 0, 5]), fv([1, 1, 1, 1])]
    block = evaluate_block(theta, paths)
    assert block.values.shape == (30, 6)
    assert np.all(np.abs(block.values) <= 1.0)
    np.testing.assert_allclose(block.values, evaluate_dense(theta, paths), atol=1e-12)


def test_harmonics_follow_chebyshev_recurrence(rng):
    theta = rng.uniform(0, np.pi, size=(40, 2))
    p = fv([1, -1])
    phase = theta @ p.dense()
    block = evaluate_block(theta, [p.scaled(r) for r in range(1, 6)]).values
    x = np.cos(phase)
    T = [np.ones_like(x), x]
    for _ in range(4):
        T.append(2 * x * T[-1] - T[-2])
    for r in range(1, 6):
        np.testing.assert_allclose(block[:, r - 1], T[r], atol=1e-12)


def test_dimension_mismatch():
    with pytest.raises(ConfigurationError):
        evaluate_block(np.zeros((3, 2)), [fv([1, 0, 0])])


def test_predict_examples():
    m = make_model([], [], intercept=1.5, mean=2.0)
    np.testing.assert_array_equal(predict(m, np.zeros((4, 2))), np.full(4, 3.5))
    m = make_model([fv([1, 0])], [1.0], mean=0.25)
    assert predict(m, np.array([[0.0, 0.7]]))[0] == pytest.approx(1.25, abs=1e-15)
    with pytest.raises(StateError):
        predict(SpectralModel(), np.zeros((1, 2)))


def test_predict_two_routes_linear_and_bounded(rng):
    paths = [fv([1, 0, 2]), fv([0, 1, -1]), fv([2, 2, 0])]
    amps = rng.normal(size=3)
    m = make_model(paths, amps, intercept=0.3, mean=-1.0)
    theta = rng.uniform(0, np.pi, size=(200, 3))
    y = predict(m, theta)
    direct = 0.3 - 1.0 + evaluate_block(theta, paths).values @ amps
    np.testing.assert_allclose(y, direct, atol=1e-12)
    assert np.all(np.abs(y - (0.3 - 1.0)) <= np.abs(amps).sum() + 1e-12)
    m2 = make_model(paths, 2.5 * amps, intercept=0.3, mean=-1.0)
    np.testing.assert_allclose(predict(m2, theta) - (0.3 - 1.0), 2.5 * (y - (0.3 - 1.0)), atol=1e-12)
