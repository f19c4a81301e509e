"""Shared machinery for the dimension-reduction methods.

Every method implements fit(X) on an (N, D) sample matrix and
transform(Xnew) -> (n, d) reduced coordinates. Kernel bandwidths default
to the median of pairwise training distances; eigenvectors are sign-fixed
so the largest-magnitude entry is positive, making embeddings reproducible.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, asdict

import numpy as np
from scipy.spatial.distance import cdist

from .. import dataio

METHODS = (
    "pca", "kpca", "grp", "srp", "ica", "nmf", "isomap",
    "dmaps", "lle", "le", "tsne", "ae", "wae",
)

_LOCAL_METHODS = ("isomap", "lle", "le")


@dataclass
class ReducerParams:
    """Knobs for all thirteen methods; each method reads the ones it needs."""

    method: str
    d: int
    kernel: str = "gaussian"  # kpca: linear | polynomial | gaussian
    kernel_c: float = 1.0  # polynomial kernel shift
    kernel_p: int = 2  # polynomial kernel power
    bandwidth: float | None = None  # Gaussian kernel h; None -> median heuristic
    k_neighbors: int = 10
    t_diffusion: int = 1
    perplexity: float = 30.0
    net_hidden: tuple[int, ...] = (256, 64)
    epochs: int = 500
    batch: int = 64
    learning_rate: float = 1e-3
    lambda_penalty: float = 10.0
    activation: str = "tanh"
    seed: int = 0

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if self.d < 1:
            raise ValueError("d must be >= 1")
        if self.bandwidth is not None and self.bandwidth <= 0:
            raise ValueError("bandwidth must be positive")
        if self.method in _LOCAL_METHODS and self.method != "isomap":
            if self.k_neighbors < self.d + 1:
                raise ValueError("locally-linear methods need k_neighbors >= d + 1")
        self.net_hidden = tuple(self.net_hidden)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["net_hidden"] = list(self.net_hidden)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ReducerParams":
        d = dict(d)
        if "net_hidden" in d:
            d["net_hidden"] = tuple(d["net_hidden"])
        return cls(**d)


class Reducer:
    """Base class: a fitted model mapping (n, D) data to (n, d) coordinates."""

    method: str = ""

    def __init__(self, params: ReducerParams):
        self.params = params
        self.d = params.d
        self.n_features: int | None = None
        self.training_embedding: np.ndarray | None = None

    def fit(self, X: np.ndarray) -> "Reducer":
        raise NotImplementedError

    def transform(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def fit_transform(self, X: np.ndarray) -> np.ndarray:
        self.fit(X)
        return self.training_embedding

    def _check_input(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.n_features is not None and X.shape[1] != self.n_features:
            raise ValueError(
                f"expected {self.n_features} input columns, got {X.shape[1]}"
            )
        return X

    # serialization: subclasses list their array attributes
    _array_fields: tuple[str, ...] = ()

    def _extra_state(self) -> dict:
        return {}

    def _set_extra_state(self, state: dict) -> None:
        pass

    def to_dict(self) -> dict:
        arrays = {}
        for name in self._array_fields + ("training_embedding",):
            value = getattr(self, name)
            if value is not None:
                arrays[name] = dataio.encode_array(np.asarray(value, dtype=float))
        return {
            "method": self.method,
            "d": self.d,
            "params": self.params.to_dict(),
            "n_features": self.n_features,
            "extra": self._extra_state(),
            "arrays": arrays,
        }

    @classmethod
    def _restore(cls, d: dict) -> "Reducer":
        model = cls(ReducerParams.from_dict(d["params"]))
        model.n_features = d["n_features"]
        model.d = int(d["d"])
        for name in cls._array_fields + ("training_embedding",):
            setattr(model, name, dataio.decode_array(d["arrays"][name]) if name in d["arrays"] else None)
        model._set_extra_state(d.get("extra", {}))
        return model


@dataclass
class Standardizer:
    """Column centering with optional unit-variance scaling.

    Zero-variance columns are centered but never divided.
    """

    mean: np.ndarray
    scale: np.ndarray | None = None

    @classmethod
    def fit(cls, X: np.ndarray, unit_variance: bool = False) -> "Standardizer":
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[0] < 2:
            raise ValueError("need at least 2 samples")
        mean = X.mean(axis=0)
        scale = None
        if unit_variance:
            std = X.std(axis=0)
            scale = np.where(std > 0, std, 1.0)
        return cls(mean=mean, scale=scale)

    def apply(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        out = X - self.mean
        if self.scale is not None:
            out = out / self.scale
        return out


def standardize_fit(X: np.ndarray, unit_variance: bool = False):
    """Fit a column scaler and return (scaler, transformed X)."""
    scaler = Standardizer.fit(X, unit_variance)
    return scaler, scaler.apply(X)


def pairwise_distances(X: np.ndarray, Y: np.ndarray | None = None) -> np.ndarray:
    return cdist(X, X if Y is None else Y)


def median_bandwidth(X: np.ndarray) -> float:
    """Median of (strictly positive upper-triangle) pairwise distances."""
    dist = pairwise_distances(X)
    iu = np.triu_indices(dist.shape[0], k=1)
    vals = dist[iu]
    med = float(np.median(vals))
    if med <= 0:
        vals = vals[vals > 0]
        if vals.size == 0:
            raise ValueError("all training points coincide; no usable bandwidth")
        med = float(np.median(vals))
    return med


def gaussian_kernel(sqdist: np.ndarray, h: float) -> np.ndarray:
    return np.exp(-sqdist / (2.0 * h * h))


def knn_indices(dist: np.ndarray, k: int, exclude_self: bool = True) -> np.ndarray:
    """Indices of the k nearest columns per row of a distance matrix."""
    n = dist.shape[1]
    if exclude_self:
        dist = dist.copy()
        np.fill_diagonal(dist, np.inf)
    if k >= n:
        raise ValueError(f"k_neighbors={k} too large for {n} points")
    idx = np.argpartition(dist, k, axis=1)[:, :k]
    # order neighbors by distance for reproducibility
    order = np.argsort(np.take_along_axis(dist, idx, axis=1), axis=1, kind="stable")
    return np.take_along_axis(idx, order, axis=1)


def fix_signs(vectors: np.ndarray) -> np.ndarray:
    """Flip eigenvector columns so the largest-magnitude entry is positive."""
    idx = np.argmax(np.abs(vectors), axis=0)
    flips = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    flips[flips == 0] = 1.0
    return vectors * flips


def barycentric_weights(x: np.ndarray, neighbors: np.ndarray, reg: float = 1e-3) -> np.ndarray:
    """Reconstruction weights of x from its neighbors, summing to one.

    Solves the constrained local least squares on the neighborhood Gram
    matrix; the Gram is regularized by reg * trace when ill-conditioned.
    An exact-duplicate neighbor receives all the weight (the exact
    zero-residual solution).
    """
    diffs = neighbors - x[None, :]
    norms = np.linalg.norm(diffs, axis=1)
    if np.any(norms == 0):
        w = np.zeros(len(neighbors))
        w[int(np.argmin(norms))] = 1.0
        return w
    C = diffs @ diffs.T
    trace = np.trace(C)
    if trace <= 0:
        raise ValueError("degenerate neighborhood Gram matrix")
    k = C.shape[0]
    try:
        cond_bad = np.linalg.cond(C) > 1e12
    except np.linalg.LinAlgError:  # pragma: no cover
        cond_bad = True
    if cond_bad:
        C = C + reg * trace * np.eye(k)
    w = np.linalg.solve(C, np.ones(k))
    s = w.sum()
    if s == 0:
        raise ValueError("neighborhood Gram matrix is irreparably singular")
    return w / s


def barycentric_transform(
    Xnew: np.ndarray, Xtrain: np.ndarray, Ytrain: np.ndarray, k: int
) -> np.ndarray:
    """Embed new points by applying their input-space reconstruction
    weights to the training embedding coordinates."""
    dist = cdist(Xnew, Xtrain)
    k = min(k, Xtrain.shape[0])
    idx = np.argpartition(dist, k - 1, axis=1)[:, :k]
    out = np.empty((Xnew.shape[0], Ytrain.shape[1]))
    for i in range(Xnew.shape[0]):
        w = barycentric_weights(Xnew[i], Xtrain[idx[i]])
        out[i] = w @ Ytrain[idx[i]]
    return out
