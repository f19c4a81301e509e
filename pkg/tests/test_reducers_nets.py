import numpy as np
import pytest
from scipy.linalg import subspace_angles

from mpce.reducers import ReducerParams, net_fit
from mpce.reducers.nets import _mmd_and_grad, _Network, init_layers


def flatten_grads(grads):
    return np.concatenate([g.ravel() for g in grads])


class TestGradients:
    def _fd_check(self, net, params, X, lam=0.0, prior=None, tol=1e-6):
        loss, grads = net.loss_and_grad(params, X, lam, prior)
        flat = flatten_grads(grads)
        eps = 1e-7
        k = 0
        for p in params:
            for idx in np.ndindex(p.shape):
                orig = p[idx]
                p[idx] = orig + eps
                lp, _ = net.loss_and_grad(params, X, lam, prior)
                p[idx] = orig - eps
                lm, _ = net.loss_and_grad(params, X, lam, prior)
                p[idx] = orig
                fd = (lp - lm) / (2 * eps)
                rel = abs(flat[k] - fd) / max(abs(fd), 1e-8)
                assert rel < tol, f"param {idx} analytic {flat[k]} vs fd {fd}"
                k += 1

    def test_ae_toy_net_matches_finite_differences(self):
        rng = np.random.default_rng(0)
        net = _Network(n_in=2, hidden=(), d=1, activation="tanh")
        params = init_layers(net.widths_enc, rng) + init_layers(net.widths_dec, rng)
        for p in params:
            p += 0.3 * rng.normal(size=p.shape)
        X = rng.normal(size=(6, 2))
        self._fd_check(net, params, X)

    def test_ae_deep_net_matches_finite_differences(self):
        rng = np.random.default_rng(1)
        net = _Network(n_in=3, hidden=(4,), d=2, activation="tanh")
        params = init_layers(net.widths_enc, rng) + init_layers(net.widths_dec, rng)
        X = rng.normal(size=(5, 3))
        # wider tolerance: FD roundoff dominates the smallest components
        self._fd_check(net, params, X, tol=1e-5)

    def test_wae_loss_matches_finite_differences(self):
        rng = np.random.default_rng(2)
        net = _Network(n_in=2, hidden=(), d=1, activation="tanh")
        params = init_layers(net.widths_enc, rng) + init_layers(net.widths_dec, rng)
        for p in params:
            p += 0.3 * rng.normal(size=p.shape)
        X = rng.normal(size=(8, 2))
        prior = rng.standard_normal((8, 1))
        self._fd_check(net, params, X, lam=10.0, prior=prior)

    def test_mmd_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(3)
        Z = rng.normal(size=(7, 2))
        prior = rng.normal(size=(9, 2))
        _, grad = _mmd_and_grad(Z, prior)
        eps = 1e-7
        for idx in [(0, 0), (3, 1), (6, 0)]:
            Zp = Z.copy()
            Zp[idx] += eps
            Zm = Z.copy()
            Zm[idx] -= eps
            fd = (_mmd_and_grad(Zp, prior)[0] - _mmd_and_grad(Zm, prior)[0]) / (2 * eps)
            assert abs(grad[idx] - fd) / max(abs(fd), 1e-10) < 1e-5


class TestMmd:
    def test_matched_distributions_near_zero(self):
        rng = np.random.default_rng(4)
        Z = rng.standard_normal((1000, 3))
        prior = rng.standard_normal((1000, 3))
        mmd, _ = _mmd_and_grad(Z, prior)
        assert abs(mmd) < 1e-2

    def test_mismatched_distributions_positive(self):
        rng = np.random.default_rng(5)
        Z = 5.0 + rng.standard_normal((500, 3))
        prior = rng.standard_normal((500, 3))
        mmd, _ = _mmd_and_grad(Z, prior)
        assert mmd > 0.1


class TestTraining:
    def test_linear_ae_spans_pca_subspace(self):
        rng = np.random.default_rng(6)
        # anisotropic Gaussian with a clear top-2 subspace
        scales = np.array([5.0, 3.0, 0.3, 0.2, 0.1, 0.1])
        X = rng.normal(size=(256, 6)) * scales
        params = ReducerParams(
            method="ae", d=2, net_hidden=(), activation="linear",
            epochs=400, batch=64, learning_rate=3e-2, seed=0,
        )
        model = net_fit(X, d=2, variant="ae", net_hidden=(), activation="linear",
                        epochs=400, batch=64, learning_rate=3e-2, seed=0)
        Xc = X - X.mean(axis=0)
        _, _, Vt = np.linalg.svd(Xc, full_matrices=False)
        pca_basis = Vt[:2].T
        enc = model.encoder_matrix()  # (D, d)
        angles = subspace_angles(enc, pca_basis)
        assert np.degrees(angles).max() < 5.0

    def test_loss_history_decreases(self):
        rng = np.random.default_rng(7)
        X = rng.normal(size=(128, 5)) * np.array([3.0, 2.0, 0.5, 0.2, 0.1])
        model = net_fit(X, d=2, variant="ae", net_hidden=(8,), epochs=60,
                        batch=32, learning_rate=1e-2, seed=1)
        hist = model.loss_history_
        assert hist[-1] < 0.5 * hist[0]

    def test_wae_trains_and_regularizes_latent(self):
        rng = np.random.default_rng(8)
        X = rng.normal(size=(128, 4)) * np.array([3.0, 2.0, 0.3, 0.1])
        model = net_fit(X, d=2, variant="wae", net_hidden=(8,), epochs=80,
                        batch=64, learning_rate=1e-2, lambda_penalty=10.0, seed=2)
        Z = model.training_embedding
        # latent second moments pulled toward the standard normal prior
        assert np.abs(Z.mean(axis=0)).max() < 1.0
        assert 0.2 < Z.std(axis=0).max() < 3.0

    def test_transform_matches_training_embedding(self):
        rng = np.random.default_rng(9)
        X = rng.normal(size=(96, 4))
        model = net_fit(X, d=2, variant="ae", net_hidden=(6,), epochs=10,
                        batch=32, seed=3)
        assert np.array_equal(model.transform(X), model.training_embedding)

    def test_deterministic(self):
        rng = np.random.default_rng(10)
        X = rng.normal(size=(80, 4))
        kw = dict(net_hidden=(6,), epochs=5, batch=16, seed=4)
        a = net_fit(X, d=2, variant="wae", **kw)
        b = net_fit(X, d=2, variant="wae", **kw)
        for wa, wb in zip(a.weights_, b.weights_):
            assert np.array_equal(wa, wb)

    def test_nonfinite_loss_aborts(self):
        rng = np.random.default_rng(11)
        X = np.full((64, 3), 1e200)
        with pytest.raises(RuntimeError, match="non-finite"):
            net_fit(X, d=1, variant="ae", net_hidden=(), activation="linear",
                    epochs=2, batch=32, learning_rate=1.0, seed=0)

    def test_batch_larger_than_data_rejected(self):
        X = np.random.default_rng(12).normal(size=(10, 3))
        with pytest.raises(ValueError, match="batch"):
            net_fit(X, d=1, variant="ae", batch=64, seed=0)
