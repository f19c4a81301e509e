"""Thirteen dimension-reduction methods behind one fit/transform contract.

Use fit_reducer(X, ReducerParams(...)) or the per-method convenience
constructors; every fitted model exposes transform(Xnew) -> (n, d) and a
JSON-envelope serialization via save_reducer / load_reducer.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .. import dataio
from .base import (
    METHODS,
    Reducer,
    ReducerParams,
    Standardizer,
    standardize_fit,
    median_bandwidth,
    barycentric_weights,
    barycentric_transform,
)
from .bss import IcaModel, NmfModel, kurtosis
from .kernel import KpcaModel, kernel_matrix
from .linear import PcaModel, RandomProjectionModel
from .nets import AutoencoderModel
from .spectral import (
    DiffusionMapsModel,
    IsomapModel,
    LaplacianEigenmapsModel,
    LleModel,
    diffusion_operator,
    laplacian_embedding,
)
from .tsne import TsneModel

_MODEL_CLASSES: dict[str, type[Reducer]] = {
    "pca": PcaModel,
    "kpca": KpcaModel,
    "grp": RandomProjectionModel,
    "srp": RandomProjectionModel,
    "ica": IcaModel,
    "nmf": NmfModel,
    "isomap": IsomapModel,
    "dmaps": DiffusionMapsModel,
    "lle": LleModel,
    "le": LaplacianEigenmapsModel,
    "tsne": TsneModel,
    "ae": AutoencoderModel,
    "wae": AutoencoderModel,
}


def fit_reducer(X: np.ndarray, params: ReducerParams) -> Reducer:
    """Fit the method selected by params on an (N, D) sample matrix.

    d < D is the intended regime; d = D is allowed where the method itself
    permits it (full-basis PCA).
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if params.d > X.shape[1]:
        raise ValueError(f"d={params.d} must not exceed D={X.shape[1]}")
    model = _MODEL_CLASSES[params.method](params)
    return model.fit(X)


def reducer_transform(model: Reducer, Xnew: np.ndarray) -> np.ndarray:
    """Embed new samples; the output always has model.d columns."""
    Z = model.transform(Xnew)
    if not np.isfinite(Z).all():
        raise ValueError("non-finite embedding values")
    return Z


def pca_fit(X, d, **kw) -> PcaModel:
    return fit_reducer(X, ReducerParams(method="pca", d=d, **kw))


def kpca_fit(X, d, kernel="gaussian", **kw) -> KpcaModel:
    return fit_reducer(X, ReducerParams(method="kpca", d=d, kernel=kernel, **kw))


def rp_fit(X, d, variant="gaussian", seed=0, **kw) -> RandomProjectionModel:
    method = {"gaussian": "grp", "sparse": "srp"}[variant]
    return fit_reducer(X, ReducerParams(method=method, d=d, seed=seed, **kw))


def ica_fit(X, d, seed=0, **kw) -> IcaModel:
    return fit_reducer(X, ReducerParams(method="ica", d=d, seed=seed, **kw))


def nmf_fit(X, d, seed=0, **kw) -> NmfModel:
    return fit_reducer(X, ReducerParams(method="nmf", d=d, seed=seed, **kw))


def isomap_fit(X, d, k_neighbors=10, **kw) -> IsomapModel:
    return fit_reducer(X, ReducerParams(method="isomap", d=d, k_neighbors=k_neighbors, **kw))


def dmaps_fit(X, d, bandwidth=None, t=1, **kw) -> DiffusionMapsModel:
    return fit_reducer(
        X, ReducerParams(method="dmaps", d=d, bandwidth=bandwidth, t_diffusion=t, **kw)
    )


def lle_fit(X, d, k_neighbors=10, **kw) -> LleModel:
    return fit_reducer(X, ReducerParams(method="lle", d=d, k_neighbors=k_neighbors, **kw))


def le_fit(X, d, k_neighbors=10, bandwidth=None, **kw) -> LaplacianEigenmapsModel:
    return fit_reducer(
        X, ReducerParams(method="le", d=d, k_neighbors=k_neighbors, bandwidth=bandwidth, **kw)
    )


def tsne_fit(X, d, perplexity=30.0, seed=0, **kw) -> TsneModel:
    return fit_reducer(
        X, ReducerParams(method="tsne", d=d, perplexity=perplexity, seed=seed, **kw)
    )


def net_fit(X, d, variant="ae", **kw) -> AutoencoderModel:
    return fit_reducer(X, ReducerParams(method=variant, d=d, **kw))


def reducer_to_dict(model: Reducer) -> dict:
    return model.to_dict()


def reducer_from_dict(d: dict) -> Reducer:
    cls = _MODEL_CLASSES[d["method"]]
    return cls._restore(d)


def save_reducer(path: str | Path, model: Reducer) -> None:
    dataio.save_json(path, model.to_dict())


def load_reducer(path: str | Path) -> Reducer:
    return reducer_from_dict(dataio.load_json(path))


__all__ = [
    "METHODS",
    "Reducer",
    "ReducerParams",
    "Standardizer",
    "standardize_fit",
    "median_bandwidth",
    "barycentric_weights",
    "barycentric_transform",
    "kurtosis",
    "kernel_matrix",
    "laplacian_embedding",
    "diffusion_operator",
    "fit_reducer",
    "reducer_transform",
    "pca_fit",
    "kpca_fit",
    "rp_fit",
    "ica_fit",
    "nmf_fit",
    "isomap_fit",
    "dmaps_fit",
    "lle_fit",
    "le_fit",
    "tsne_fit",
    "net_fit",
    "reducer_to_dict",
    "reducer_from_dict",
    "save_reducer",
    "load_reducer",
    "PcaModel",
    "KpcaModel",
    "RandomProjectionModel",
    "IcaModel",
    "NmfModel",
    "IsomapModel",
    "DiffusionMapsModel",
    "LleModel",
    "LaplacianEigenmapsModel",
    "TsneModel",
    "AutoencoderModel",
]
