"""Kernel PCA with linear, polynomial, and Gaussian kernels."""

from __future__ import annotations

import warnings

import numpy as np
from scipy.linalg import eigh
from scipy.spatial.distance import cdist

from .base import Reducer, ReducerParams, fix_signs, median_bandwidth


def kernel_matrix(X: np.ndarray, Y: np.ndarray, kind: str, c: float, p: int, h: float) -> np.ndarray:
    if kind == "linear":
        return X @ Y.T
    if kind == "polynomial":
        return (X @ Y.T + c) ** p
    if kind == "gaussian":
        return np.exp(-cdist(X, Y, "sqeuclidean") / (2.0 * h * h))
    raise ValueError(f"unknown kernel {kind!r}")


class KpcaModel(Reducer):
    """PCA in a kernel-induced feature space.

    The kernel matrix is double-centered, its eigenvectors scaled by
    1/sqrt(N lambda) so training projections have column norm
    sqrt(N lambda), and new points are projected through the centered
    cross-kernel. With the linear kernel this reproduces standard PCA
    scores up to sign.
    """

    method = "kpca"
    _array_fields = ("X_train_", "alpha_", "eigenvalues_", "train_col_mean_")

    def __init__(self, params: ReducerParams):
        super().__init__(params)
        self.X_train_ = None
        self.alpha_ = None  # (N, d), already scaled
        self.eigenvalues_ = None  # eigenvalues of K' (= N lambda)
        self.train_col_mean_ = None  # (N,) column means of uncentered K
        self.train_mean_ = None  # scalar grand mean of K
        self.bandwidth_ = None

    def _kernel(self, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
        return kernel_matrix(
            X, Y, self.params.kernel, self.params.kernel_c, self.params.kernel_p, self.bandwidth_ or 1.0
        )

    def fit(self, X: np.ndarray) -> "KpcaModel":
        X = self._check_input(X)
        N = X.shape[0]
        if self.d > N - 1:
            raise ValueError(f"d={self.d} exceeds N-1={N - 1}")
        self.n_features = X.shape[1]
        self.X_train_ = X
        if self.params.kernel == "gaussian":
            self.bandwidth_ = self.params.bandwidth or median_bandwidth(X)
        K = self._kernel(X, X)
        self.train_col_mean_ = K.mean(axis=0)
        self.train_mean_ = float(K.mean())
        Kc = self._center_cross(K)

        w, v = eigh(Kc)
        lam_max = max(abs(w[0]), abs(w[-1]), 1e-300)
        if w[0] < -1e-8 * lam_max:
            raise ValueError("kernel matrix is not PSD within tolerance")
        order = np.argsort(w)[::-1]
        w = np.maximum(w[order], 0.0)
        v = v[:, order]
        keep = min(self.d, int(np.sum(w > 1e-12 * lam_max)))
        if keep < self.d:
            if keep == 0:
                # fully degenerate spectrum (e.g. huge bandwidth); keep the
                # requested components so the model stays well-defined
                keep = self.d
                warnings.warn("centered kernel is numerically zero; embedding is degenerate")
            else:
                warnings.warn(f"kernel rank {keep} < requested d={self.d}; shrinking d")
                self.d = keep
        w = w[: self.d]
        v = fix_signs(v[:, : self.d])
        self.eigenvalues_ = w
        self.alpha_ = v / np.sqrt(np.maximum(w, 1e-300))
        self.training_embedding = Kc @ self.alpha_
        return self

    def _center_cross(self, K: np.ndarray) -> np.ndarray:
        """Center a cross-kernel block against the training distribution."""
        row_mean = K.mean(axis=1, keepdims=True)
        return K - self.train_col_mean_[None, :] - row_mean + self.train_mean_

    def transform(self, X: np.ndarray) -> np.ndarray:
        X = self._check_input(X)
        K = self._kernel(X, self.X_train_)
        return self._center_cross(K) @ self.alpha_

    def _extra_state(self) -> dict:
        return {"bandwidth": self.bandwidth_, "train_mean": self.train_mean_}

    def _set_extra_state(self, state: dict) -> None:
        self.bandwidth_ = state.get("bandwidth")
        self.train_mean_ = state.get("train_mean")
