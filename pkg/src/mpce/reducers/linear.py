"""Linear reducers: principal component analysis and random projections."""

from __future__ import annotations

import warnings

import numpy as np

from .base import Reducer, ReducerParams, fix_signs


class PcaModel(Reducer):
    """Projection onto the directions of highest variance:
    z = W^T (x - mean) with orthonormal W.

    The covariance convention is (1/N) Xc^T Xc; eigenpairs come from the
    SVD of the centered data. Requesting more components than the data
    rank shrinks d with a warning.
    """

    method = "pca"
    _array_fields = ("mean_", "components_", "eigenvalues_", "explained_variance_ratio_")

    def __init__(self, params: ReducerParams):
        super().__init__(params)
        self.mean_ = None
        self.components_ = None  # (D, d)
        self.eigenvalues_ = None
        self.explained_variance_ratio_ = None
        self.total_variance_ = None

    def fit(self, X: np.ndarray) -> "PcaModel":
        X = self._check_input(X)
        N, D = X.shape
        if self.d > min(N - 1, D):
            raise ValueError(f"d={self.d} exceeds min(N-1, D)={min(N - 1, D)}")
        self.n_features = D
        self.mean_ = X.mean(axis=0)
        Xc = X - self.mean_
        U, S, Vt = np.linalg.svd(Xc, full_matrices=False)
        eigvals = S**2 / N
        rank = int(np.sum(S > 1e-12 * (S[0] if S.size else 1.0)))
        if rank < self.d:
            warnings.warn(f"data rank {rank} < requested d={self.d}; shrinking d")
            self.d = rank
        W = fix_signs(Vt[: self.d].T)
        self.components_ = W
        self.eigenvalues_ = eigvals[: self.d]
        self.total_variance_ = float((Xc**2).sum() / N)
        self.explained_variance_ratio_ = self.eigenvalues_ / self.total_variance_
        self.training_embedding = Xc @ W
        return self

    def transform(self, X: np.ndarray) -> np.ndarray:
        X = self._check_input(X)
        return (X - self.mean_) @ self.components_

    def inverse_transform(self, Z: np.ndarray) -> np.ndarray:
        return np.atleast_2d(Z) @ self.components_.T + self.mean_

    def _extra_state(self) -> dict:
        return {"total_variance": self.total_variance_}

    def _set_extra_state(self, state: dict) -> None:
        self.total_variance_ = state.get("total_variance")


class RandomProjectionModel(Reducer):
    """Projection onto random directions (x = 0 maps to z = 0; no centering).

    gaussian: the d projection directions are unit vectors in R^D (entries
    drawn N(0, 1/d), each direction then normalized), so original distances
    are approximated by sqrt(D/d) times embedded distances. sparse: entries
    sqrt(3) * {+1 w.p. 1/6, 0 w.p. 2/3, -1 w.p. 1/6} scaled by 1/sqrt(d),
    which preserves distances with no rescaling.
    """

    method = "grp"
    _array_fields = ("projection_",)

    def __init__(self, params: ReducerParams):
        super().__init__(params)
        self.method = params.method
        self.projection_ = None  # (D, d)

    def fit(self, X: np.ndarray) -> "RandomProjectionModel":
        X = self._check_input(X)
        D = X.shape[1]
        self.n_features = D
        rng = np.random.default_rng(self.params.seed)
        if self.params.method == "grp":
            R = rng.normal(0.0, 1.0 / np.sqrt(self.d), size=(D, self.d))
            R /= np.linalg.norm(R, axis=0, keepdims=True)
        else:  # srp
            u = rng.uniform(size=(D, self.d))
            R = np.where(u < 1 / 6, 1.0, np.where(u < 1 / 3, -1.0, 0.0))
            R *= np.sqrt(3.0) / np.sqrt(self.d)
        self.projection_ = R
        self.training_embedding = X @ R
        return self

    def transform(self, X: np.ndarray) -> np.ndarray:
        X = self._check_input(X)
        return X @ self.projection_

    def distance_scale(self) -> float:
        """Factor mapping embedded distances back to original-space scale."""
        if self.params.method == "grp":
            return float(np.sqrt(self.n_features / self.d))
        return 1.0
