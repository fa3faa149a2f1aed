import json
import logging
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from specpath.data_io import (
    Dataset,
    SplitMix64,
    dumps_model,
    load_csv,
    load_model,
    model_from_dict,
    model_to_dict,
    nrmse_sigma,
    r2,
    save_csv,
    save_model,
    shuffled_indices,
    split,
)
from specpath.errors import DataError, SchemaError, UndefinedMetricError, VersionError
from specpath.model import SpectralModel
from specpath.paths import FrequencyVector
from specpath.preprocessing import ScalingParams


def write(tmp_path, text, name="d.csv"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_load_small_table(tmp_path):
    d = load_csv(write(tmp_path, "a,b,y\n1,2,3\n4,5,6\n7,8,9\n"), "y")
    assert d.n_rows == 3 and d.n_features == 2
    assert d.feature_names == ["a", "b"] and d.target.tolist() == [3, 6, 9]


def test_missing_cells_are_dropped_and_counted(tmp_path, caplog):
    with caplog.at_level(logging.WARNING):
        d = load_csv(write(tmp_path, "a,b,y\n1,2,3\n4,,6\n7,8,NaN\n1,1,1\n"), "y")
    assert d.n_rows == 2 and d.n_dropped == 2
    assert "dropped 2 row" in caplog.text


def test_load_errors(tmp_path):
    with pytest.raises(DataError, match="available columns: a, b, y"):
        load_csv(write(tmp_path, "a,b,y\n1,2,3\n"), "target")
    with pytest.raises(DataError, match="line 3"):
        load_csv(write(tmp_path, "a,y\n1,2\nfoo,3\n"), "y")
    with pytest.raises(DataError, match="not found"):
        load_csv(tmp_path / "missing.csv", "y")
    with pytest.raises(DataError, match="line 2"):
        load_csv(write(tmp_path, "a,y\n1,inf\n"), "y")


def test_csv_round_trip_is_idempotent(tmp_path, rng):
    X = rng.normal(size=(20, 3))
    d = Dataset(X, rng.normal(size=20), ["p", "q", "r"], "t")
    save_csv(d, tmp_path / "a.csv")
    once = load_csv(tmp_path / "a.csv", "t")
    save_csv(once, tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_text() == (tmp_path / "b.csv").read_text()
    np.testing.assert_array_equal(once.features, X)


def test_splitmix_reference_vectors():
    # published outputs of the reference SplitMix64 for seeds 0 and 1234567
    r = SplitMix64(0)
    assert [r.next() for _ in range(3)] == [
        0xE220A8397B1DCDAF, 0x6E789E6AA1B965F4, 0x06C45D188009454F,
    ]
    r = SplitMix64(1234567)
    assert [r.next() for _ in range(3)] == [
        6457827717110365317, 3203168211198807973, 9817491932198370423,
    ]


def reference_shuffle(n, seed):
    state = seed & (2**64 - 1)

    def nxt():
        nonlocal state
        state = (state + 0x9E3779B97F4A7C15) % 2**64
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) % 2**64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) % 2**64
        return z ^ (z >> 31)

    a = list(range(n))
    for i in reversed(range(1, n)):
        j = (nxt() * (i + 1)) // 2**64
        a[i], a[j] = a[j], a[i]
    return a


@given(st.integers(2, 300), st.integers(0, 2**64 - 1))
def test_shuffle_matches_reference(n, seed):
    assert shuffled_indices(n, seed) == reference_shuffle(n, seed)


def test_golden_splits():
    s = split(10, 42)
    assert (s.train.tolist(), s.val.tolist(), s.test.tolist()) == (
        [8, 3, 6, 5, 4, 0], [9, 2], [1, 7],
    )
    s = split(1030, 42)
    assert (len(s.train), len(s.val), len(s.test)) == (618, 206, 206)
    assert s.train[:5].tolist() == [678, 475, 276, 700, 239]
    assert s.val[:5].tolist() == [607, 560, 209, 84, 63]
    assert s.test[:5].tolist() == [920, 955, 487, 450, 794]


@given(st.integers(5, 2000), st.integers(0, 2**32))
def test_split_partitions(n, seed):
    s = split(n, seed)
    assert (len(s.train), len(s.val)) == ((6 * n) // 10, (2 * n) // 10)
    assert sorted(np.concatenate([s.train, s.val, s.test]).tolist()) == list(range(n))
    again = split(n, seed)
    assert np.array_equal(again.train, s.train) and np.array_equal(again.test, s.test)


def test_split_too_small():
    with pytest.raises(DataError):
        split(4, 0)


def test_metric_examples():
    y = np.array([0.0, 0.0, 2.0, 2.0])
    assert r2(y, y) == 1.0 and nrmse_sigma(y, y) == 0.0
    assert r2(y, np.full(4, 1.0)) == 0.0 and nrmse_sigma(y, np.full(4, 1.0)) == 1.0
    yhat = np.array([0.0, 1.0, 1.0, 2.0])
    assert r2(y, yhat) == pytest.approx(0.5, abs=1e-15)
    assert nrmse_sigma(y, yhat) == pytest.approx(1 / math.sqrt(2), abs=1e-15)
    with pytest.raises(UndefinedMetricError):
        r2(np.ones(3), np.zeros(3))
    with pytest.raises(UndefinedMetricError):
        nrmse_sigma(np.ones(3), np.zeros(3))


@settings(max_examples=50)
@given(arrays(np.float64, st.integers(2, 40), elements=st.floats(-100, 100)),
       st.integers(0, 2**32 - 1))
def test_metrics_match_naive(y, seed):
    if np.ptp(y) < 1e-3:
        return
    yhat = y + np.random.default_rng(seed).normal(size=y.size)
    mean = sum(y) / len(y)
    ss_res = sum((a - b) ** 2 for a, b in zip(y, yhat))
    ss_tot = sum((a - mean) ** 2 for a in y)
    assert r2(y, yhat) == pytest.approx(1 - ss_res / ss_tot, rel=1e-12, abs=1e-12)
    assert nrmse_sigma(y, yhat) == pytest.approx(
        math.sqrt(ss_res / len(y)) / math.sqrt(ss_tot / len(y)), rel=1e-12
    )


def toy_model():
    paths = [FrequencyVector.from_dense([2, -1, 0]), FrequencyVector.from_dense([0, 0, 1])]
    scaling = ScalingParams(np.array([0.1, 2.0, -3.0]), np.array([1.0, 0.3, 2.2]), 5.5)
    return SpectralModel(paths, [3.14159, -0.1 / 3], 0.2, scaling, 1e-3, [{"iteration": 1}],
                         ["a", "b", "c"])


def test_model_round_trip_is_exact(tmp_path, rng):
    m = toy_model()
    save_model(m, tmp_path / "m.json")
    back = load_model(tmp_path / "m.json")
    X = rng.normal(size=(30, 3))
    np.testing.assert_array_equal(back.predict(X), m.predict(X))
    assert dumps_model(back) == dumps_model(m)
    assert back.feature_names == ["a", "b", "c"]


def test_model_file_errors(tmp_path):
    text = dumps_model(toy_model())
    (tmp_path / "t.json").write_text(text[: len(text) // 2])
    with pytest.raises(SchemaError):
        load_model(tmp_path / "t.json")
    doc = model_to_dict(toy_model())
    with pytest.raises(VersionError):
        model_from_dict({**doc, "format_version": 99})
    for key in ("centers", "paths", "lambda_star"):
        with pytest.raises(SchemaError, match=key):
            model_from_dict({k: v for k, v in doc.items() if k != key})
    with pytest.raises(SchemaError):
        model_from_dict({**doc, "amplitudes": [1.0]})
    with pytest.raises(SchemaError):
        model_from_dict({**doc, "paths": [{"support": [0, 0], "coeffs": [1, 1]}, doc["paths"][1]]})
    with pytest.raises(SchemaError):
        model_from_dict({**doc, "d": "three"})


def test_model_json_has_required_fields():
    doc = json.loads(dumps_model(toy_model()))
    for key in ("format_version", "d", "centers", "scales", "target_mean", "lambda_star",
                "intercept", "paths", "amplitudes", "fit_trace"):
        assert key in doc
    assert doc["paths"][0] == {"support": [0, 1], "coeffs": [2, -1]}
