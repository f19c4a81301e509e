"""Exact t-distributed stochastic neighbor embedding.

O(N^2) similarities throughout: per-point Gaussian bandwidths found by
binary search on the conditional-distribution entropy, Student-t kernel
in the embedding, and gradient descent with momentum (0.5 until iteration
250, then 0.8), adaptive per-parameter gains, and x12 early exaggeration
for the first 250 iterations.
"""

from __future__ import annotations

import numpy as np
from scipy.spatial.distance import cdist

from .base import Reducer, ReducerParams, barycentric_transform

_EPS = 1e-12


def conditional_probabilities(sqdist_row: np.ndarray, beta: float, self_index: int) -> np.ndarray:
    """p_{j|i} for one point at precision beta = 1 / (2 sigma_i^2)."""
    logits = -sqdist_row * beta
    logits[self_index] = -np.inf
    logits -= logits.max()
    p = np.exp(logits)
    p[self_index] = 0.0
    return p / p.sum()


def _entropy(p: np.ndarray) -> float:
    nz = p[p > 0]
    return float(-(nz * np.log(nz)).sum())


def conditional_matrix(X: np.ndarray, perplexity: float, tol: float = 1e-5) -> np.ndarray:
    """Row i holds p_{j|i} with bandwidth tuned so the row entropy matches
    log(perplexity) within tol."""
    N = X.shape[0]
    if N < 3 * perplexity:
        raise ValueError(f"perplexity {perplexity} too large for N={N}")
    sqdist = cdist(X, X, "sqeuclidean")
    target = np.log(perplexity)
    P = np.zeros((N, N))
    for i in range(N):
        lo, hi = 0.0, np.inf
        beta = 1.0
        for _ in range(100):
            p = conditional_probabilities(sqdist[i], beta, i)
            h = _entropy(p)
            if abs(h - target) < tol:
                break
            if h > target:  # too spread out: increase precision
                lo = beta
                beta = beta * 2.0 if hi == np.inf else 0.5 * (lo + hi)
            else:
                hi = beta
                beta = 0.5 * (lo + hi)
        P[i] = p
    return P


def joint_probabilities(X: np.ndarray, perplexity: float, tol: float = 1e-5) -> np.ndarray:
    """Symmetrized similarities p_ij = (p_{j|i} + p_{i|j}) / 2N."""
    P = conditional_matrix(X, perplexity, tol)
    return (P + P.T) / (2.0 * P.shape[0])


def _student_t_terms(Y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Unnormalized Student-t weights and the normalized Q matrix."""
    num = 1.0 / (1.0 + cdist(Y, Y, "sqeuclidean"))
    np.fill_diagonal(num, 0.0)
    Q = num / num.sum()
    return num, Q


def kl_objective(P: np.ndarray, Y: np.ndarray) -> float:
    """KL(P || Q) with the Student-t embedding similarities."""
    _, Q = _student_t_terms(Y)
    mask = P > 0
    return float(np.sum(P[mask] * np.log(P[mask] / np.maximum(Q[mask], _EPS))))


def kl_gradient(P: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """dC/dY = 4 sum_j (p_ij - q_ij) (1 + ||y_i - y_j||^2)^-1 (y_i - y_j)."""
    num, Q = _student_t_terms(Y)
    W = (P - Q) * num
    return 4.0 * ((np.diag(W.sum(axis=1)) - W) @ Y)


class TsneModel(Reducer):
    """t-SNE reducer; out-of-sample points use barycentric interpolation."""

    method = "tsne"
    _array_fields = ("X_train_",)

    n_iter = 1000
    exaggeration = 12.0
    exaggeration_iters = 250
    momentum_switch = 250

    def __init__(self, params: ReducerParams):
        super().__init__(params)
        self.X_train_ = None
        self.loss_trace_ = None

    def fit(self, X: np.ndarray) -> "TsneModel":
        X = self._check_input(X)
        N = X.shape[0]
        self.n_features = X.shape[1]
        self.X_train_ = X
        P = joint_probabilities(X, self.params.perplexity)

        rng = np.random.default_rng(self.params.seed)
        Y = 1e-4 * rng.standard_normal((N, self.d))
        velocity = np.zeros_like(Y)
        gains = np.ones_like(Y)
        learning_rate = max(N / self.exaggeration, 50.0)
        trace = np.empty(self.n_iter)
        for it in range(self.n_iter):
            Pe = P * self.exaggeration if it < self.exaggeration_iters else P
            num, Q = _student_t_terms(Y)
            W = (Pe - Q) * num
            grad = 4.0 * ((np.diag(W.sum(axis=1)) - W) @ Y)
            momentum = 0.5 if it < self.momentum_switch else 0.8
            same_sign = np.sign(grad) == np.sign(velocity)
            gains = np.where(same_sign, gains * 0.8, gains + 0.2)
            np.clip(gains, 0.01, None, out=gains)
            velocity = momentum * velocity - learning_rate * gains * grad
            Y = Y + velocity
            Y = Y - Y.mean(axis=0)
            trace[it] = kl_objective(P, Y)
        self.loss_trace_ = trace
        self.training_embedding = Y
        return self

    def transform(self, X: np.ndarray) -> np.ndarray:
        X = self._check_input(X)
        return barycentric_transform(
            X, self.X_train_, self.training_embedding, min(self.params.k_neighbors, self.X_train_.shape[0] - 1)
        )
