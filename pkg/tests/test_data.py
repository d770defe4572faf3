import json
import logging

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from singboost.data import (
    Dataset,
    SyntheticSpec,
    load_csv,
    noise_sd_for,
    simulate_gaussian_linear,
    standardize,
    write_csv,
    write_simulation,
)
from singboost.errors import ConfigError, DataError


def write(tmp_path, text, name="d.csv"):
    f = tmp_path / name
    f.write_text(text, encoding="utf-8")
    return f


def test_load_csv_basic(tmp_path):
    f = write(tmp_path, "a,b,y\n1,2,3\n4,5,6\n7,8,9\n")
    d = load_csv(f, "y")
    assert (d.n, d.p) == (3, 2)
    assert d.column_names == ("a", "b")
    assert d.y.tolist() == [3, 6, 9]
    assert d.x[:, 1].tolist() == [2, 5, 8]


def test_load_csv_target_in_middle_keeps_order(tmp_path):
    f = write(tmp_path, "a,y,b,c\n1,0,2,3\n4,1,5,6\n")
    d = load_csv(f, "y")
    assert d.column_names == ("a", "b", "c")
    assert d.x[0].tolist() == [1, 2, 3]


def test_load_csv_single_predictor(tmp_path):
    d = load_csv(write(tmp_path, "x,y\n1,2\n3,4\n"), "y")
    assert d.p == 1


def test_load_csv_errors(tmp_path):
    with pytest.raises(DataError, match="not found"):
        load_csv(tmp_path / "missing.csv", "y")
    with pytest.raises(DataError, match="target column 'z'"):
        load_csv(write(tmp_path, "a,y\n1,2\n3,4\n"), "z")
    with pytest.raises(DataError, match=r"row 3, column 'b'.*'abc'"):
        load_csv(write(tmp_path, "a,b,y\n1,2,3\n4,abc,6\n"), "y")


def test_dataset_invariants():
    with pytest.raises(DataError):
        Dataset(np.ones((1, 2)), np.ones(1))
    with pytest.raises(DataError):
        Dataset(np.array([[1.0], [np.nan]]), np.ones(2))
    with pytest.raises(DataError, match="unique"):
        Dataset(np.ones((3, 2)), np.ones(3), ["a", "a"])
    d = Dataset(np.ones((3, 2)), np.ones(3))
    with pytest.raises(ValueError):
        d.x[0, 0] = 5.0


def test_standardize_simple_column():
    d = Dataset(np.array([[1.0], [2.0], [3.0]]), np.array([1.0, 2.0, 4.0]))
    ds, st_ = standardize(d)
    assert abs(ds.x.mean()) < 1e-10
    assert abs(ds.x.var() - 1) < 1e-10
    assert st_.y_mean == pytest.approx(7 / 3)
    assert abs(ds.y.mean()) < 1e-12


def test_standardize_drops_constant_column(caplog):
    x = np.array([[1.0, 5.0], [2.0, 5.0], [3.0, 5.0]])
    with caplog.at_level(logging.WARNING):
        ds, st_ = standardize(Dataset(x, np.arange(3.0), ["a", "const"]))
    assert st_.dropped == [1]
    assert ds.column_names == ("a",)
    assert "const" in caplog.text
    back = st_.inverse(ds)
    np.testing.assert_allclose(back.x, x, rtol=1e-12)


def test_standardize_all_degenerate():
    with pytest.raises(DataError, match="no usable predictors"):
        standardize(Dataset(np.full((4, 2), 3.0), np.arange(4.0)))


def test_standardize_already_standardized(rng):
    x = rng.standard_normal((50, 3))
    x = (x - x.mean(0)) / x.std(0)
    _, st_ = standardize(Dataset(x, rng.standard_normal(50)))
    np.testing.assert_allclose(st_.means, 0, atol=1e-12)
    np.testing.assert_allclose(st_.sds, 1, atol=1e-12)


@settings(max_examples=60, deadline=None)
@given(
    arrays(np.float64, st.tuples(st.integers(2, 30), st.integers(1, 6)),
           elements=st.floats(-1e4, 1e4, allow_subnormal=False)),
    st.floats(-100, 100),
)
def test_standardize_round_trip(x, shift):
    y = x.sum(axis=1) + shift
    d = Dataset(x, y)
    try:
        ds, st_ = standardize(d)
    except DataError:
        return
    back = st_.inverse(ds)
    scale = np.maximum(np.abs(x).max(axis=0), 1.0)
    assert np.all(np.abs(back.x - x) <= 1e-12 * scale)
    np.testing.assert_allclose(back.y, y, rtol=1e-12, atol=1e-12 * max(1.0, np.abs(y).max()))
    np.testing.assert_allclose(ds.x.mean(axis=0), 0, atol=1e-10)
    np.testing.assert_allclose((ds.x**2).mean(axis=0), 1, atol=1e-10)


def test_simulation_shapes_and_support():
    d, beta, support = simulate_gaussian_linear(SyntheticSpec(n=100, p=50, s0=10, snr=2, seed=1))
    assert (d.n, d.p) == (100, 50)
    assert len(support) == 10
    assert np.count_nonzero(beta) == 10
    assert set(np.flatnonzero(beta)) == set(support)
    mags = np.abs(beta[support])
    assert np.all((mags >= 0.5) & (mags <= 2.0))


def test_simulation_null_model():
    d, beta, support = simulate_gaussian_linear(SyntheticSpec(n=30, p=5, s0=0, snr=2, seed=3))
    assert not beta.any() and len(support) == 0
    assert d.y.std() > 0


def test_simulation_deterministic():
    spec = SyntheticSpec(n=40, p=7, s0=3, snr=1.5, seed=99)
    a, b = simulate_gaussian_linear(spec), simulate_gaussian_linear(spec)
    assert np.array_equal(a[0].x, b[0].x) and np.array_equal(a[0].y, b[0].y)
    assert np.array_equal(a[1], b[1])


def test_simulation_empirical_snr():
    spec = SyntheticSpec(n=10_000, p=20, s0=10, snr=2.0, seed=4)
    d, beta, _ = simulate_gaussian_linear(spec)
    signal = d.x @ beta
    noise = d.y - signal
    assert signal.var() / noise.var() == pytest.approx(2.0, rel=0.10)


@pytest.mark.parametrize("kw", [dict(s0=6, p=5), dict(n=1), dict(snr=0.0), dict(snr=-1.0)])
def test_synthetic_spec_validation(kw):
    with pytest.raises(ConfigError):
        SyntheticSpec(**kw)


def test_csv_round_trip_exact(tmp_path):
    d, _, _ = simulate_gaussian_linear(SyntheticSpec(n=20, p=4, s0=2, seed=2))
    write_csv(d, tmp_path / "x.csv")
    back = load_csv(tmp_path / "x.csv", "y")
    assert np.array_equal(back.x, d.x) and np.array_equal(back.y, d.y)


def test_write_simulation_sidecar(tmp_path):
    spec = SyntheticSpec(n=25, p=6, s0=2, snr=2, seed=8)
    csv_path, truth_path = write_simulation(spec, tmp_path / "sim.csv")
    truth = json.loads(open(truth_path).read())
    _, beta, support = simulate_gaussian_linear(spec)
    assert truth["seed"] == 8
    assert truth["s0_indices"] == support.tolist()
    assert truth["true_beta"] == beta.tolist()
    assert truth["noise_sd"] == noise_sd_for(beta, 2)
