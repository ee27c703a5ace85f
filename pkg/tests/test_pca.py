import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hqtn_ser.pca import DimensionError, InsufficientSamplesError, fit_pca, pca_transform

from oracles import covariance_pca


def test_collinear_data():
    t = np.linspace(-1, 1, 11)
    X = np.column_stack([t, t])
    model = fit_pca(X, 1)
    np.testing.assert_allclose(model.components[:, 0], [2**-0.5, 2**-0.5], atol=1e-12)
    with pytest.warns(RuntimeWarning, match="rank 1"):
        full = fit_pca(X, 2)
    assert full.explained_variance[1] == 0.0
    np.testing.assert_allclose(full.components.T @ full.components, np.eye(2), atol=1e-12)


def test_isotropic_gaussian_variances():
    X = np.random.default_rng(42).normal(size=(10000, 5))
    model = fit_pca(X, 5)
    assert np.all(np.abs(model.explained_variance - 1.0) < 0.1)


def test_mean_maps_to_zero():
    X = np.random.default_rng(0).normal(size=(40, 12))
    model = fit_pca(X, 4)
    np.testing.assert_allclose(pca_transform(model, model.mean), 0.0, atol=1e-12)


def test_component_maps_to_unit_vector():
    X = np.random.default_rng(1).normal(size=(40, 12))
    model = fit_pca(X, 4)
    np.testing.assert_allclose(pca_transform(model, model.mean + model.components[:, 0]), [1, 0, 0, 0], atol=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_gram_matches_covariance_oracle(seed):
    rng = np.random.default_rng(seed)
    N, D, k = 30 + seed * 4, 8 + 3 * seed, 6
    X = rng.normal(size=(N, D)) @ rng.normal(size=(D, D))
    model = fit_pca(X, k, method="gram")
    w, v = covariance_pca(X, k)
    np.testing.assert_allclose(model.explained_variance, w, rtol=1e-8)
    np.testing.assert_allclose(model.components, v, atol=1e-8)
    x = rng.normal(size=D)
    np.testing.assert_allclose(pca_transform(model, x), v.T @ (x - X.mean(axis=0)), atol=1e-8)


def test_orthonormal_and_sorted():
    X = np.random.default_rng(2).normal(size=(25, 300))
    model = fit_pca(X, 16)
    np.testing.assert_allclose(model.components.T @ model.components, np.eye(16), atol=1e-8)
    assert np.all(np.diff(model.explained_variance) <= 0)
    assert np.all(model.explained_variance >= 0)


def test_training_projection_variance_matches():
    X = np.random.default_rng(3).normal(size=(50, 200)) * np.linspace(3, 0.1, 200)
    model = fit_pca(X, 10)
    Z = pca_transform(model, X)
    np.testing.assert_allclose(Z.var(axis=0, ddof=1), model.explained_variance, rtol=1e-6)


def test_rank_deficient_padding_is_deterministic():
    rng = np.random.default_rng(4)
    X = rng.normal(size=(40, 3)) @ rng.normal(size=(3, 20))  # rank 3
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        a = fit_pca(X, 8)
        b = fit_pca(X, 8)
    np.testing.assert_array_equal(a.components, b.components)
    np.testing.assert_allclose(a.components.T @ a.components, np.eye(8), atol=1e-10)
    assert np.all(a.explained_variance[3:] == 0)


def test_errors():
    with pytest.raises(InsufficientSamplesError):
        fit_pca(np.zeros((3, 10)), 5)
    model = fit_pca(np.random.default_rng(0).normal(size=(10, 6)), 2)
    with pytest.raises(DimensionError):
        pca_transform(model, np.zeros(5))


def test_deterministic():
    X = np.random.default_rng(9).normal(size=(30, 100))
    a, b = fit_pca(X, 8), fit_pca(X, 8)
    assert a.components.tobytes() == b.components.tobytes()


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**31 - 1))
def test_reconstruction_never_increases_residual(seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(20, 15))
    model = fit_pca(X, 5)
    x = rng.normal(size=15) * 3
    recon = model.inverse_transform(pca_transform(model, x))
    assert np.sum((x - recon) ** 2) <= np.sum((x - model.mean) ** 2) + 1e-12


def test_small_but_real_variance_is_not_dropped():
    # strong low-rank signal plus weak noise: full rank, so no padding
    rng = np.random.default_rng(5)
    X = (rng.normal(size=(60, 4)) * [9, 6, 4, 2]) @ rng.normal(size=(4, 600)) + 0.05 * rng.normal(size=(60, 600))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        gram = fit_pca(X, 8, method="gram")
        cov = fit_pca(X, 8, method="covariance")
    assert np.all(gram.explained_variance > 0)
    np.testing.assert_allclose(gram.explained_variance, cov.explained_variance, rtol=1e-8)
    np.testing.assert_allclose(gram.components, cov.components, atol=1e-6)
