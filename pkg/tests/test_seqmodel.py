import numpy as np
import pytest
from hypothesis import given, strategies as st

from mma_lab.seqmodel import (
    RankDeficientError,
    RegressionData,
    loss,
    nested_fit,
    orthogonalize,
)


def make_data(seed, n, p, with_f=True):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, p))
    beta = rng.standard_normal(p)
    f = X @ beta
    y = f + rng.standard_normal(n)
    return RegressionData(X=X, y=y, f=f if with_f else None)


@given(st.integers(0, 1000), st.integers(1, 12), st.integers(0, 30))
def test_orthonormal_and_spans(seed, p, extra):
    n = p + extra
    data = make_data(seed, n, p)
    view = orthogonalize(data)
    gram = view.phi.T @ view.phi
    assert np.abs(gram - np.eye(p)).max() < 1e-10
    # successive spans: phi[:, :k] reproduces the projection of y onto the
    # first k design columns for every k
    for k in (1, p):
        beta = np.linalg.lstsq(data.X[:, :k], data.y, rcond=None)[0]
        proj = data.X[:, :k] @ beta
        assert np.abs(nested_fit(view, k) - proj).max() < 1e-8


def test_full_fit_reconstruction():
    data = make_data(7, 40, 9)
    view = orthogonalize(data)
    full = np.linalg.lstsq(data.X, data.y, rcond=None)[0]
    assert np.allclose(nested_fit(view, 9), data.X @ full, atol=1e-8)
    assert nested_fit(view, 0).tolist() == [0.0] * 40


def test_theta_hat_small_system():
    # X columns (1,1) and (1,-1): phi = X/sqrt(2), theta_hat = phi'y/sqrt(2)
    X = np.array([[1.0, 1.0], [1.0, -1.0]])
    y = np.array([3.0, 1.0])
    view = orthogonalize(RegressionData(X=X, y=y))
    assert view.theta_hat == pytest.approx([2.0, 1.0], abs=1e-12)


def test_theta_true_matches_theta_hat_on_noiseless_data():
    rng = np.random.default_rng(3)
    X = rng.standard_normal((25, 6))
    f = X @ rng.standard_normal(6)
    view = orthogonalize(RegressionData(X=X, y=f.copy(), f=f))
    assert np.allclose(view.theta_hat, view.theta_true, atol=1e-12)


def test_rank_deficiency_names_the_column():
    rng = np.random.default_rng(0)
    X = rng.standard_normal((20, 5))
    X[:, 3] = 2.0 * X[:, 0] - X[:, 1]
    with pytest.raises(RankDeficientError, match="column 4"):
        RegressionData(X=X, y=np.zeros(20))


def test_shape_validation():
    rng = np.random.default_rng(1)
    with pytest.raises(ValueError, match="more regressors"):
        RegressionData(X=rng.standard_normal((3, 5)), y=np.zeros(3))
    with pytest.raises(ValueError, match="response length"):
        RegressionData(X=rng.standard_normal((6, 2)), y=np.zeros(5))
    with pytest.raises(ValueError, match="finite"):
        RegressionData(X=np.array([[1.0], [np.nan]]), y=np.zeros(2))
    with pytest.raises(ValueError, match="sigma2"):
        RegressionData(X=np.ones((2, 1)), y=np.zeros(2), sigma2=-1.0)


def test_nested_fit_bounds_and_loss():
    data = make_data(11, 30, 5)
    view = orthogonalize(data)
    with pytest.raises(ValueError):
        nested_fit(view, 6)
    with pytest.raises(ValueError):
        nested_fit(view, -1)
    fit = nested_fit(view, 5)
    assert loss(view, fit) == pytest.approx(
        float((fit - data.f) @ (fit - data.f)) / 30
    )
    bare = orthogonalize(make_data(11, 30, 5, with_f=False))
    with pytest.raises(ValueError, match="oracle"):
        loss(bare, fit)
