"""Graph-based spectral reducers: Isomap, diffusion maps, locally linear
embedding, and Laplacian eigenmaps.

All four build a structure over the training set (neighborhood graph or
dense kernel), solve an eigenproblem, and keep the training embedding in
the model. New points are embedded by Nystrom-style extensions (Isomap,
DMaps, LE) or barycentric interpolation (LLE).
"""

from __future__ import annotations

import warnings

import numpy as np
import scipy.sparse as sp
from scipy.linalg import eigh
from scipy.sparse.csgraph import connected_components, dijkstra
from scipy.spatial.distance import cdist

from .base import (
    Reducer,
    ReducerParams,
    barycentric_transform,
    barycentric_weights,
    fix_signs,
    gaussian_kernel,
    knn_indices,
    median_bandwidth,
    pairwise_distances,
)


def knn_graph(dist: np.ndarray, k: int) -> sp.csr_matrix:
    """Symmetric (union) k-nearest-neighbor distance graph."""
    n = dist.shape[0]
    idx = knn_indices(dist, k)
    rows = np.repeat(np.arange(n), k)
    cols = idx.ravel()
    vals = dist[rows, cols]
    G = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
    return G.maximum(G.T)


def _require_connected(G: sp.csr_matrix, what: str) -> None:
    n_comp, _ = connected_components(G, directed=False)
    if n_comp > 1:
        raise ValueError(f"{what} graph is disconnected ({n_comp} components); increase k_neighbors")


class IsomapModel(Reducer):
    """Geodesic-distance-preserving embedding.

    Shortest paths are computed by Dijkstra from every source over the
    union k-NN graph, and classical MDS (double centering of squared
    geodesics) gives the embedding from the top-d eigenpairs.
    """

    method = "isomap"
    _array_fields = ("X_train_", "geodesics_", "eigenvalues_", "eigenvectors_", "col_mean_sq_")

    def __init__(self, params: ReducerParams):
        super().__init__(params)
        self.X_train_ = None
        self.geodesics_ = None  # (N, N)
        self.eigenvalues_ = None
        self.eigenvectors_ = None  # (N, d)
        self.col_mean_sq_ = None  # column means of squared geodesics

    def fit(self, X: np.ndarray) -> "IsomapModel":
        X = self._check_input(X)
        N = X.shape[0]
        self.n_features = X.shape[1]
        self.X_train_ = X
        dist = pairwise_distances(X)
        G = knn_graph(dist, self.params.k_neighbors)
        _require_connected(G, "k-NN")
        DG = dijkstra(G, directed=False)
        self.geodesics_ = DG

        sq = DG**2
        self.col_mean_sq_ = sq.mean(axis=0)
        B = -0.5 * (sq - self.col_mean_sq_[None, :] - sq.mean(axis=1)[:, None] + sq.mean())
        w, v = eigh(B)
        order = np.argsort(w)[::-1]
        w, v = w[order], v[:, order]
        lam_max = max(w[0], 1e-300)
        keep = int(np.sum(w > 1e-10 * lam_max))
        if keep < self.d:
            warnings.warn(f"only {keep} usable MDS eigenvalues; shrinking d from {self.d}")
            self.d = max(keep, 1)
        w = w[: self.d]
        v = fix_signs(v[:, : self.d])
        self.eigenvalues_ = w
        self.eigenvectors_ = v
        self.training_embedding = v * np.sqrt(w)
        return self

    def transform(self, X: np.ndarray) -> np.ndarray:
        """Geodesic-to-training MDS extension.

        A new point's geodesic to training point j is the minimum of
        (Euclidean hop to neighbor i) + (training geodesic i -> j); the
        embedding follows the centered-MDS projection formula, which
        reproduces training points exactly.
        """
        X = self._check_input(X)
        dist = cdist(X, self.X_train_)
        k = min(self.params.k_neighbors, self.X_train_.shape[0])
        idx = np.argpartition(dist, k - 1, axis=1)[:, :k]
        out = np.empty((X.shape[0], self.d))
        scale = 0.5 / np.sqrt(self.eigenvalues_)
        for i in range(X.shape[0]):
            hop = dist[i, idx[i]]
            delta = np.min(hop[:, None] + self.geodesics_[idx[i]], axis=0) ** 2
            out[i] = (self.eigenvectors_.T @ (self.col_mean_sq_ - delta)) * scale
        return out


def diffusion_operator(K: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Transition matrix and stationary probabilities from a kernel matrix.

    The kernel is normalized symmetrically by the degree and the result
    row-normalized, so P is row-stochastic with spectrum in [-1, 1].
    A point with (off-diagonal) degree near zero is isolated and rejected.
    """
    deg = K.sum(axis=1)
    if np.any(deg - np.diag(K) < 1e-12):
        raise ValueError("isolated point: near-zero kernel degree")
    pi = deg / deg.sum()
    kappa = K / np.sqrt(np.outer(deg, deg))
    P = kappa / kappa.sum(axis=1, keepdims=True)
    return P, pi


class DiffusionMapsModel(Reducer):
    """Random-walk diffusion coordinates from a Gaussian kernel.

    The kernel is symmetrically normalized by the degree, row-normalized
    into a transition matrix, and the top nontrivial eigenvectors scaled
    by lambda^t give the embedding.
    """

    method = "dmaps"
    _array_fields = ("X_train_", "eigenvalues_", "eigenvectors_", "stationary_")

    def __init__(self, params: ReducerParams):
        super().__init__(params)
        self.X_train_ = None
        self.eigenvalues_ = None  # (d,), nontrivial
        self.eigenvectors_ = None  # (N, d) right eigenvectors of P
        self.stationary_ = None  # pi, stored but unused by transform
        self.bandwidth_ = None

    def fit(self, X: np.ndarray) -> "DiffusionMapsModel":
        X = self._check_input(X)
        N = X.shape[0]
        if self.d > N - 1:
            raise ValueError(f"d={self.d} exceeds N-1={N - 1}")
        self.n_features = X.shape[1]
        self.X_train_ = X
        self.bandwidth_ = self.params.bandwidth or median_bandwidth(X)
        K = gaussian_kernel(cdist(X, X, "sqeuclidean"), self.bandwidth_)
        deg = K.sum(axis=1)
        if np.any(deg - np.diag(K) < 1e-12):
            raise ValueError("isolated point: near-zero kernel degree")
        self.stationary_ = deg / deg.sum()
        kappa = K / np.sqrt(np.outer(deg, deg))
        rho = kappa.sum(axis=1)
        # P = diag(1/rho) kappa; eigendecompose the symmetric conjugate
        A = kappa / np.sqrt(np.outer(rho, rho))
        w, phi = eigh(A)
        order = np.argsort(w)[::-1]
        w, phi = w[order], phi[:, order]
        V = phi / np.sqrt(rho)[:, None]  # right eigenvectors of P
        # drop the trivial pair (lambda = 1, constant eigenvector)
        lam = w[1 : self.d + 1]
        vecs = fix_signs(V[:, 1 : self.d + 1])
        self.eigenvalues_ = lam
        self.eigenvectors_ = vecs
        self.training_embedding = vecs * lam**self.params.t_diffusion
        return self

    def transform(self, X: np.ndarray) -> np.ndarray:
        """Nystrom extension through one transition step from new points."""
        X = self._check_input(X)
        K = gaussian_kernel(cdist(X, self.X_train_, "sqeuclidean"), self.bandwidth_)
        Ktr = gaussian_kernel(cdist(self.X_train_, self.X_train_, "sqeuclidean"), self.bandwidth_)
        deg_train = Ktr.sum(axis=1)
        deg_new = K.sum(axis=1)
        if np.any(deg_new < 1e-300):
            raise ValueError("isolated point: near-zero kernel degree")
        kappa = K / np.sqrt(np.outer(deg_new, deg_train))
        P = kappa / kappa.sum(axis=1, keepdims=True)
        t = self.params.t_diffusion
        return (P @ self.eigenvectors_) * self.eigenvalues_ ** (t - 1)

    def _extra_state(self) -> dict:
        return {"bandwidth": self.bandwidth_}

    def _set_extra_state(self, state: dict) -> None:
        self.bandwidth_ = state.get("bandwidth")


class LleModel(Reducer):
    """Locally linear embedding.

    Per-point reconstruction weights over the k nearest neighbors solve a
    sum-to-one constrained least squares; the embedding collects the
    eigenvectors of M = (I - W)^T (I - W) for the d smallest eigenvalues
    above the zero mode.
    """

    method = "lle"
    _array_fields = ("X_train_", "weights_dense_")

    def __init__(self, params: ReducerParams):
        super().__init__(params)
        self.X_train_ = None
        self.weights_dense_ = None  # (N, N) reconstruction weight matrix

    def fit(self, X: np.ndarray) -> "LleModel":
        X = self._check_input(X)
        N = X.shape[0]
        k = self.params.k_neighbors
        self.n_features = X.shape[1]
        self.X_train_ = X
        dist = pairwise_distances(X)
        idx = knn_indices(dist, k)
        W = np.zeros((N, N))
        for i in range(N):
            W[i, idx[i]] = barycentric_weights(X[i], X[idx[i]])
        self.weights_dense_ = W
        IW = np.eye(N) - W
        M = IW.T @ IW
        w, v = eigh(M)
        # skip the zero eigenvalue (constant eigenvector)
        lam = w[1 : self.d + 1]
        self.embedding_eigenvalues_ = lam
        self.training_embedding = fix_signs(v[:, 1 : self.d + 1])
        return self

    def transform(self, X: np.ndarray) -> np.ndarray:
        X = self._check_input(X)
        return barycentric_transform(
            X, self.X_train_, self.training_embedding, self.params.k_neighbors
        )


def laplacian_embedding(W: np.ndarray, d: int) -> tuple[np.ndarray, np.ndarray]:
    """Solve L v = lambda M v for the d smallest nonzero eigenpairs.

    W is a symmetric nonnegative adjacency matrix; M is its degree matrix
    and L = M - W the graph Laplacian. Returns (eigenvalues, eigenvectors).
    """
    deg = W.sum(axis=1)
    if np.any(deg <= 0):
        raise ValueError("graph has an isolated vertex")
    L = np.diag(deg) - W
    w, v = eigh(L, np.diag(deg))
    return w[1 : d + 1], fix_signs(v[:, 1 : d + 1])


class LaplacianEigenmapsModel(Reducer):
    """Spectral embedding from the graph Laplacian of a kernelized k-NN graph."""

    method = "le"
    _array_fields = ("X_train_", "eigenvalues_", "adjacency_")

    def __init__(self, params: ReducerParams):
        super().__init__(params)
        self.X_train_ = None
        self.eigenvalues_ = None
        self.adjacency_ = None
        self.bandwidth_ = None

    def fit(self, X: np.ndarray) -> "LaplacianEigenmapsModel":
        X = self._check_input(X)
        N = X.shape[0]
        self.n_features = X.shape[1]
        self.X_train_ = X
        dist = pairwise_distances(X)
        G = knn_graph(dist, self.params.k_neighbors)
        _require_connected(G, "k-NN")
        self.bandwidth_ = self.params.bandwidth or median_bandwidth(X)
        mask = G.toarray() > 0
        W = np.where(mask, gaussian_kernel(dist**2, self.bandwidth_), 0.0)
        np.fill_diagonal(W, 0.0)
        self.adjacency_ = W
        lam, vecs = laplacian_embedding(W, self.d)
        self.eigenvalues_ = lam
        self.training_embedding = vecs
        return self

    def transform(self, X: np.ndarray) -> np.ndarray:
        """Nystrom extension through the random-walk operator M^-1 W.

        Training eigenvectors satisfy (M^-1 W) v = (1 - lambda) v, so a new
        point's coordinate is the kernel-weighted neighbor average divided
        by (1 - lambda).
        """
        X = self._check_input(X)
        dist = cdist(X, self.X_train_)
        k = min(self.params.k_neighbors, self.X_train_.shape[0])
        idx = np.argpartition(dist, k - 1, axis=1)[:, :k]
        out = np.empty((X.shape[0], self.d))
        denom = 1.0 - self.eigenvalues_
        denom = np.where(np.abs(denom) < 1e-12, 1.0, denom)
        for i in range(X.shape[0]):
            w = gaussian_kernel(dist[i, idx[i]] ** 2, self.bandwidth_)
            s = w.sum()
            if s <= 0:
                raise ValueError("new point is isolated from the training graph")
            out[i] = (w @ self.training_embedding[idx[i]]) / s / denom
        return out

    def _set_extra_state(self, state: dict) -> None:
        self.bandwidth_ = state.get("bandwidth")

    def _extra_state(self) -> dict:
        return {"bandwidth": self.bandwidth_}
