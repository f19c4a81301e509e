"""Cross-method contract tests: embedding shape/finiteness, training-set
reproduction for closed-form transforms, determinism, serialization."""

import json

import numpy as np
import pytest

from mpce.reducers import (
    METHODS,
    ReducerParams,
    Standardizer,
    fit_reducer,
    load_reducer,
    reducer_from_dict,
    reducer_to_dict,
    reducer_transform,
    save_reducer,
    standardize_fit,
)


def toy_dataset(n=64, D=12, seed=0):
    """Noisy low-dimensional structure so every method has signal."""
    rng = np.random.default_rng(seed)
    t = rng.uniform(-1, 1, size=(n, 3))
    basis = rng.normal(size=(3, D))
    return t @ basis + 0.05 * rng.normal(size=(n, D))


def params_for(method: str, d: int = 2) -> ReducerParams:
    kw = dict(method=method, d=d, seed=7)
    if method in ("ae", "wae"):
        kw.update(net_hidden=(8,), epochs=8, batch=16)
    if method == "tsne":
        kw.update(perplexity=8.0)
    if method == "kpca":
        kw.update(kernel="gaussian")
    return ReducerParams(**kw)


@pytest.mark.parametrize("method", METHODS)
def test_embedding_finite_with_d_columns(method):
    X = toy_dataset()
    model = fit_reducer(X, params_for(method))
    Z = reducer_transform(model, X)
    assert Z.shape == (64, model.d)
    assert np.isfinite(Z).all()
    Znew = reducer_transform(model, X[:5] * 0.95)
    assert Znew.shape == (5, model.d)
    assert np.isfinite(Znew).all()


CLOSED_FORM = ("pca", "kpca", "grp", "srp", "ica", "ae", "wae", "dmaps")


@pytest.mark.parametrize("method", CLOSED_FORM)
def test_training_set_reproduction(method):
    X = toy_dataset(seed=1)
    model = fit_reducer(X, params_for(method))
    Z = model.transform(X)
    assert np.abs(Z - model.training_embedding).max() < 1e-8


def test_lle_training_reproduction_via_barycentric_weights():
    X = toy_dataset(seed=2)
    model = fit_reducer(X, params_for("lle"))
    assert np.abs(model.transform(X) - model.training_embedding).max() < 1e-8


STOCHASTIC = ("grp", "srp", "ica", "nmf", "tsne", "ae", "wae")


@pytest.mark.parametrize("method", STOCHASTIC)
def test_fixed_seed_bit_reproducible(method):
    X = toy_dataset(seed=3)
    a = fit_reducer(X, params_for(method))
    b = fit_reducer(X, params_for(method))
    da, db = reducer_to_dict(a), reducer_to_dict(b)
    assert json.dumps(da, sort_keys=True) == json.dumps(db, sort_keys=True)


@pytest.mark.parametrize("method", METHODS)
def test_serialization_round_trip(method, tmp_path):
    X = toy_dataset(seed=4)
    model = fit_reducer(X, params_for(method))
    path = tmp_path / f"{method}.json"
    save_reducer(path, model)
    back = load_reducer(path)
    Xq = X[:6] * 0.9
    assert np.array_equal(back.transform(Xq), model.transform(Xq))
    assert back.d == model.d and back.method == model.method


@pytest.mark.parametrize("method", METHODS)
def test_column_count_mismatch_rejected(method):
    X = toy_dataset(seed=5)
    model = fit_reducer(X, params_for(method))
    with pytest.raises(ValueError):
        model.transform(np.zeros((3, 5)))


class TestStandardizer:
    def test_centering(self):
        scaler, Xc = standardize_fit(np.array([[1.0], [3.0]]))
        assert np.allclose(Xc, [[-1.0], [1.0]])
        assert np.allclose(Xc.mean(axis=0), 0.0)

    def test_constant_column_not_divided(self):
        X = np.column_stack([np.full(6, 4.0), np.arange(6.0)])
        scaler, Xc = standardize_fit(X, unit_variance=True)
        assert np.allclose(Xc[:, 0], 0.0)
        assert np.isclose(Xc[:, 1].std(), 1.0)

    def test_apply_reuses_training_statistics(self):
        rng = np.random.default_rng(6)
        X = rng.normal(3.0, 2.0, size=(50, 3))
        scaler, _ = standardize_fit(X, unit_variance=True)
        Xnew = rng.normal(3.0, 2.0, size=(10, 3))
        out = scaler.apply(Xnew)
        assert np.allclose(out, (Xnew - X.mean(axis=0)) / X.std(axis=0))

    def test_needs_two_samples(self):
        with pytest.raises(ValueError):
            Standardizer.fit(np.ones((1, 4)))


def test_unknown_method_rejected():
    with pytest.raises(ValueError):
        ReducerParams(method="umap", d=2)


def test_k_neighbors_floor_for_locally_linear():
    with pytest.raises(ValueError):
        ReducerParams(method="lle", d=5, k_neighbors=5)
