import numpy as np
import pytest
from scipy.linalg import eigh
from scipy.spatial.distance import cdist

import mpce.reducers.kernel as kernel_mod
from mpce.reducers import KpcaModel, ReducerParams, kpca_fit, pca_fit


def test_linear_kernel_equals_pca_up_to_sign():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(40, 12))
    Z_pca = pca_fit(X, d=5).training_embedding
    Z_kpca = kpca_fit(X, d=5, kernel="linear").training_embedding
    for j in range(5):
        sign = np.sign(Z_pca[:, j] @ Z_kpca[:, j])
        assert np.abs(Z_kpca[:, j] - sign * Z_pca[:, j]).max() < 1e-8


def test_huge_bandwidth_degenerates_to_zero_spectrum():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(25, 6))
    with pytest.warns(UserWarning, match="degenerate"):
        model = kpca_fit(X, d=3, kernel="gaussian", bandwidth=1e12)
    scale = np.abs(X).max() ** 2 * X.shape[0]
    assert np.abs(model.eigenvalues_).max() < 1e-6 * scale


def test_matches_dense_centering_oracle():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(5, 3))
    model = kpca_fit(X, d=2, kernel="gaussian")
    h = model.bandwidth_
    # brute-force oracle: explicit centering and eigendecomposition
    K = np.exp(-cdist(X, X, "sqeuclidean") / (2 * h * h))
    one = np.full((5, 5), 1.0 / 5)
    Kc = K - one @ K - K @ one + one @ K @ one
    w, v = eigh(Kc)
    order = np.argsort(w)[::-1]
    w, v = w[order][:2], v[:, order][:, :2]
    oracle = v * np.sqrt(w)
    Z = model.training_embedding
    for j in range(2):
        sign = np.sign(oracle[:, j] @ Z[:, j])
        assert np.abs(Z[:, j] - sign * oracle[:, j]).max() < 1e-8


def test_median_heuristic_bandwidth():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(20, 4))
    model = kpca_fit(X, d=2, kernel="gaussian")
    dist = cdist(X, X)
    med = np.median(dist[np.triu_indices(20, k=1)])
    assert np.isclose(model.bandwidth_, med)


def test_nystrom_reproduces_training_embedding():
    rng = np.random.default_rng(4)
    X = rng.normal(size=(30, 8))
    for kern in ("linear", "polynomial", "gaussian"):
        model = kpca_fit(X, d=4, kernel=kern)
        assert np.abs(model.transform(X) - model.training_embedding).max() < 1e-8


def test_out_of_sample_transform_is_finite_and_shaped():
    rng = np.random.default_rng(5)
    X = rng.normal(size=(30, 8))
    model = kpca_fit(X, d=4, kernel="gaussian")
    Z = model.transform(rng.normal(size=(7, 8)))
    assert Z.shape == (7, 4) and np.isfinite(Z).all()


def test_non_psd_kernel_rejected(monkeypatch):
    rng = np.random.default_rng(6)
    X = rng.normal(size=(12, 3))

    def indefinite(Xa, Xb, kind, c, p, h):
        M = Xa @ Xb.T
        return M - np.diag(np.full(M.shape[0], 10.0)) if M.shape[0] == M.shape[1] else M

    monkeypatch.setattr(kernel_mod, "kernel_matrix", indefinite)
    with pytest.raises(ValueError, match="PSD"):
        kpca_fit(X, d=2, kernel="linear")


def test_d_capped_by_sample_count():
    X = np.random.default_rng(7).normal(size=(5, 40))
    with pytest.raises(ValueError):
        kpca_fit(X, d=5, kernel="gaussian")


def test_rank_shrink_warns():
    rng = np.random.default_rng(8)
    base = rng.normal(size=(20, 2))
    X = base @ rng.normal(size=(2, 9))
    with pytest.warns(UserWarning, match="shrinking"):
        model = kpca_fit(X, d=6, kernel="linear")
    assert model.d == 2
