"""Blind source separation reducers: FastICA and non-negative matrix
factorization."""

from __future__ import annotations

import warnings

import numpy as np
from scipy.optimize import nnls

from .base import Reducer, ReducerParams


def kurtosis(x: np.ndarray, axis: int = 0) -> np.ndarray:
    """Excess kurtosis E[x^4] - 3 E[x^2]^2 (zero for Gaussian data)."""
    x = np.asarray(x, dtype=float)
    return np.mean(x**4, axis=axis) - 3.0 * np.mean(x**2, axis=axis) ** 2


def _sym_decorrelate(W: np.ndarray) -> np.ndarray:
    """W <- (W W^T)^{-1/2} W, the symmetric orthogonalization step."""
    s, u = np.linalg.eigh(W @ W.T)
    return (u / np.sqrt(s)) @ u.T @ W


class IcaModel(Reducer):
    """FastICA on PCA-whitened data with the kurtosis contrast.

    Runs symmetric fixed-point iterations w <- E[u (w.u)^3] - 3w until the
    largest direction change falls below 1e-6 (500 iteration cap). Sources
    with near-zero kurtosis are flagged non-identifiable.
    """

    method = "ica"
    _array_fields = ("mean_", "linear_map_", "unmixing_", "whitening_")

    def __init__(self, params: ReducerParams):
        super().__init__(params)
        self.mean_ = None
        self.whitening_ = None  # (D, d): x_centered @ whitening_ has identity cov
        self.unmixing_ = None  # (d, d) orthonormal rows in whitened space
        self.linear_map_ = None  # (D, d) combined map
        self.converged_ = True
        self.identifiable_ = True
        self.source_kurtosis_ = None

    def fit(self, X: np.ndarray) -> "IcaModel":
        X = self._check_input(X)
        N, D = X.shape
        self.n_features = D
        self.mean_ = X.mean(axis=0)
        Xc = X - self.mean_
        # PCA whitening with the 1/N covariance convention
        _, S, Vt = np.linalg.svd(Xc, full_matrices=False)
        rank = int(np.sum(S > 1e-12 * (S[0] if S.size else 1.0)))
        if self.d > rank:
            raise ValueError(f"d={self.d} exceeds data rank {rank}")
        scale = S[: self.d] / np.sqrt(N)
        self.whitening_ = Vt[: self.d].T / scale
        U = Xc @ self.whitening_  # (N, d), identity covariance

        rng = np.random.default_rng(self.params.seed)
        W = _sym_decorrelate(rng.standard_normal((self.d, self.d)))
        self.converged_ = False
        for _ in range(500):
            proj = U @ W.T  # (N, d)
            W_new = (proj**3).T @ U / N - 3.0 * W
            W_new = _sym_decorrelate(W_new)
            delta = np.max(np.abs(np.abs(np.sum(W_new * W, axis=1)) - 1.0))
            W = W_new
            if delta < 1e-6:
                self.converged_ = True
                break
        if not self.converged_:
            warnings.warn("FastICA did not converge; returning best iterate")

        # fix row signs so the largest-magnitude entry is positive
        idx = np.argmax(np.abs(W), axis=1)
        flips = np.sign(W[np.arange(self.d), idx])
        flips[flips == 0] = 1.0
        W = W * flips[:, None]
        self.unmixing_ = W
        self.linear_map_ = self.whitening_ @ W.T
        sources = Xc @ self.linear_map_
        self.source_kurtosis_ = kurtosis(sources, axis=0)
        # kurtosis estimator noise floor ~ sqrt(24/N)
        threshold = 3.0 * np.sqrt(24.0 / N)
        self.identifiable_ = bool(np.max(np.abs(self.source_kurtosis_)) > threshold)
        if not self.identifiable_:
            warnings.warn("all source kurtoses are near zero; ICA is non-identifiable")
        self.training_embedding = sources
        return self

    def transform(self, X: np.ndarray) -> np.ndarray:
        X = self._check_input(X)
        return (X - self.mean_) @ self.linear_map_

    def _extra_state(self) -> dict:
        return {
            "converged": self.converged_,
            "identifiable": self.identifiable_,
            "source_kurtosis": list(map(float, self.source_kurtosis_)),
        }

    def _set_extra_state(self, state: dict) -> None:
        self.converged_ = state.get("converged", True)
        self.identifiable_ = state.get("identifiable", True)
        if "source_kurtosis" in state:
            self.source_kurtosis_ = np.asarray(state["source_kurtosis"])


class NmfModel(Reducer):
    """Non-negative factorization X ~ G F by multiplicative updates.

    Signed data is shifted by its global minimum first (shift stored).
    Updates run until the relative objective decrease drops below 1e-6 or
    1000 iterations; the Frobenius objective is nonincreasing throughout.
    New data transforms by nonnegative least squares against F.
    """

    method = "nmf"
    _array_fields = ("basis_",)

    def __init__(self, params: ReducerParams):
        super().__init__(params)
        self.basis_ = None  # F, (d, D)
        self.shift_ = 0.0
        self.objective_trace_ = None

    def fit(self, X: np.ndarray) -> "NmfModel":
        X = self._check_input(X)
        N, D = X.shape
        if self.d > min(N, D):
            raise ValueError(f"d={self.d} exceeds min(N, D)")
        self.n_features = D
        self.shift_ = float(min(X.min(), 0.0))
        Xp = X - self.shift_
        if np.allclose(Xp, 0.0):
            raise ValueError("data is constant after the nonnegativity shift")

        rng = np.random.default_rng(self.params.seed)
        scale = np.sqrt(Xp.mean() / self.d)
        G = scale * rng.uniform(0.1, 1.0, size=(N, self.d))
        F = scale * rng.uniform(0.1, 1.0, size=(self.d, D))
        eps = 1e-12
        trace = [float(np.linalg.norm(Xp - G @ F))]
        for _ in range(1000):
            F *= (G.T @ Xp) / np.maximum(G.T @ G @ F, eps)
            G *= (Xp @ F.T) / np.maximum(G @ F @ F.T, eps)
            obj = float(np.linalg.norm(Xp - G @ F))
            trace.append(obj)
            prev = trace[-2]
            if prev > 0 and (prev - obj) / prev < 1e-6:
                break
        self.objective_trace_ = np.array(trace)
        self.basis_ = F
        self.training_embedding = G
        return self

    def transform(self, X: np.ndarray) -> np.ndarray:
        X = self._check_input(X)
        Xp = X - self.shift_
        out = np.empty((X.shape[0], self.d))
        Ft = self.basis_.T  # (D, d)
        for i in range(X.shape[0]):
            out[i], _ = nnls(Ft, Xp[i])
        return out

    def _extra_state(self) -> dict:
        return {"shift": self.shift_}

    def _set_extra_state(self, state: dict) -> None:
        self.shift_ = state.get("shift", 0.0)
