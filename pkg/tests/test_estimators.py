import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from singboost.data import Dataset
from singboost.errors import DataError, DesignError
from singboost.estimators import (
    SupportSet,
    expected_one_step,
    influence_eval,
    k_step,
    ols,
    one_step,
    reduced_one_step,
)
from singboost.measures import ColumnMeasure


def well_conditioned(seed, n=80, p=5, noise=0.5):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, p))
    beta = rng.uniform(-2, 2, p)
    y = x @ beta + noise * rng.standard_normal(n)
    return Dataset(x, y), beta


def lstsq(d):
    return np.linalg.lstsq(d.x, d.y, rcond=None)[0]


@pytest.mark.parametrize("seed", range(10))
def test_ols_is_fixed_point_and_eta_mean_zero(seed):
    d, _ = well_conditioned(seed)
    theta = lstsq(d)
    assert np.max(np.abs(influence_eval(d, theta).mean())) <= 1e-10
    np.testing.assert_allclose(one_step(d, theta), theta, atol=1e-10, rtol=0)
    np.testing.assert_allclose(k_step(d, theta, 3), theta, atol=1e-10, rtol=0)


def test_influence_eval_shapes_and_formula():
    d, beta = well_conditioned(1, n=30, p=3)
    ev = influence_eval(d, beta)
    assert ev.eta.shape == (30, 3) and ev.sigma_hat.shape == (3, 3)
    np.testing.assert_allclose(ev.sigma_hat, d.x.T @ d.x / 30)
    i = 7
    want = np.linalg.inv(ev.sigma_hat) @ d.x[i] * (d.y[i] - d.x[i] @ beta)
    np.testing.assert_allclose(ev.eta[i], want, rtol=1e-12)


def test_condition_iii_monte_carlo():
    rng = np.random.default_rng(20191216)
    n, p = 10_000, 4
    x = rng.standard_normal((n, p))
    beta = np.array([1.0, -0.5, 0.0, 2.0])
    y = x @ beta + 1.3 * rng.standard_normal(n)
    d = Dataset(x, y)
    ev = influence_eval(d, beta)
    resid = y - x @ beta
    score = x * (resid / resid.var())[:, None]
    np.testing.assert_allclose(ev.eta.T @ score / n, np.eye(p), atol=0.1, rtol=0)


def test_zero_residual_gives_zero_eta():
    ev = influence_eval(Dataset([[1.0], [1.0]], [2.0, 2.0]), [2.0])
    assert ev.eta.tolist() == [[0.0], [0.0]]


def test_one_step_univariate_closed_form():
    x = np.array([-1.5, -0.5, 0.5, 1.5])
    x = (x - x.mean()) / x.std()
    d = Dataset(x[:, None], 2 * x)
    np.testing.assert_allclose(one_step(d, [0.0]), [2.0], rtol=1e-14)


@pytest.mark.parametrize("seed", range(10))
def test_k_step_contracts_toward_ols(seed):
    d, _ = well_conditioned(seed)
    target = lstsq(d)
    start = target + np.random.default_rng(seed + 100).normal(0, 1, d.p)
    dist = [np.linalg.norm(k_step(d, start, k) - target) for k in range(3)]
    # the least-squares correction is an exact Newton step: the first step
    # lands on OLS, later steps stay there up to rounding
    assert dist[1] < dist[0]
    assert dist[2] <= max(dist[1], 1e-12)


def test_k_step_one_equals_one_step_and_five_matches_lstsq():
    d, _ = well_conditioned(3)
    start = np.random.default_rng(0).normal(0, 3, d.p)
    assert np.array_equal(k_step(d, start, 1), one_step(d, start))
    np.testing.assert_allclose(k_step(d, start, 5), lstsq(d), atol=1e-8, rtol=0)
    assert np.array_equal(k_step(d, start, 0), start)
    with pytest.raises(ValueError):
        k_step(d, start, -1)


def test_ols_helper_matches_lstsq():
    d, _ = well_conditioned(4)
    np.testing.assert_allclose(ols(d), lstsq(d), atol=1e-12)


def test_singular_design_errors():
    x = np.array([[1.0, 2.0], [2.0, 4.0], [3.0, 6.0]])
    with pytest.raises(DesignError, match="not full rank"):
        one_step(Dataset(x, [1.0, 2.0, 3.0]), [0.0, 0.0])


def test_theta_length_checked():
    d, _ = well_conditioned(0, p=3)
    with pytest.raises(DataError):
        one_step(d, [0.0, 0.0])


# --- reduced one-step ----------------------------------------------------


def test_reduced_full_support_equals_one_step():
    d, _ = well_conditioned(5)
    start = np.random.default_rng(1).normal(size=d.p)
    np.testing.assert_array_equal(reduced_one_step(d, range(d.p), start), one_step(d, start))


def test_reduced_true_support_noiseless():
    rng = np.random.default_rng(6)
    x = rng.standard_normal((50, 6))
    beta = np.array([0.0, 1.5, 0.0, -2.0, 0.0, 0.7])
    d = Dataset(x, x @ beta)
    out = reduced_one_step(d, SupportSet((5, 1, 3)), np.zeros(6))
    np.testing.assert_allclose(out, beta, atol=1e-12)


def test_reduced_orthogonal_columns_decouple():
    x = np.array([[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]])
    y = np.array([3.0, 1.0, -0.5, -2.5])
    d = Dataset(x, y)
    out = reduced_one_step(d, [0], np.zeros(2))
    uni = one_step(Dataset(x[:, :1], y), [0.0])
    assert out[1] == 0.0
    np.testing.assert_allclose(out[0], uni[0], rtol=1e-14)
    # with orthogonal columns the full fit has the same first coordinate
    np.testing.assert_allclose(one_step(d, [0.0, 0.0])[0], out[0], rtol=1e-14)


def test_reduced_preconditions():
    d, _ = well_conditioned(7, p=3)
    with pytest.raises(DataError, match="outside the support"):
        reduced_one_step(d, [0], [0.0, 1.0, 0.0])
    with pytest.raises(DataError):
        SupportSet(())
    with pytest.raises(DataError):
        reduced_one_step(d, [3], np.zeros(3))
    x = np.column_stack([np.arange(5.0), 2 * np.arange(5.0), np.ones(5)])
    with pytest.raises(DesignError, match="reduced design"):
        reduced_one_step(Dataset(x, np.arange(5.0)), [0, 1], np.zeros(3))


def test_support_set_sorted():
    assert SupportSet((4, 0, 2)).indices == (0, 2, 4)
    with pytest.raises(DataError):
        SupportSet((1, 1))


# --- expected one-step -------------------------------------------------


def test_expected_one_step_examples():
    s1 = np.array([1.0, -2.0, 0.5])
    assert expected_one_step(s1, ColumnMeasure([1, 0, 0.5])).tolist() == [1.0, 0.0, 0.25]
    assert expected_one_step(s1, ColumnMeasure(np.ones(3))).tolist() == s1.tolist()
    assert expected_one_step(s1, [0, 1, 1]).tolist() == [0.0, -2.0, 0.5]
    with pytest.raises(DataError, match="length mismatch"):
        expected_one_step(s1, [1.0, 1.0])


vec = st.lists(st.floats(-1e3, 1e3), min_size=4, max_size=4)
mass = st.lists(st.floats(0, 1), min_size=4, max_size=4)


@settings(max_examples=200, deadline=None)
@given(vec, vec, mass, st.floats(-10, 10))
def test_expected_one_step_linear(a, b, nu, c):
    a, b = np.array(a), np.array(b)
    lhs = expected_one_step(a + c * b, nu)
    rhs = expected_one_step(a, nu) + c * expected_one_step(b, nu)
    np.testing.assert_allclose(lhs, rhs, rtol=1e-9, atol=1e-9)


@settings(max_examples=200, deadline=None)
@given(vec, mass, mass)
def test_expected_one_step_monotone_in_mass(s1, m1, m2):
    lo, hi = np.minimum(m1, m2), np.maximum(m1, m2)
    assert np.all(np.abs(expected_one_step(s1, lo)) <= np.abs(expected_one_step(s1, hi)))
