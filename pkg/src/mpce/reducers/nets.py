"""Autoencoder reducers: plain reconstruction (ae) and the latent-prior
penalized variant (wae).

A fully connected encoder D -> hidden... -> d and mirrored decoder are
trained on mean-squared reconstruction error with the Adam update rule.
The wae variant adds lambda * MMD between the batch latent codes and a
standard normal prior, estimated with an inverse-multiquadric kernel.
All gradients are computed analytically in numpy so they can be checked
against finite differences.
"""

from __future__ import annotations

import numpy as np

from .base import Reducer, ReducerParams

_ACTIVATIONS = {
    "tanh": (np.tanh, lambda a: 1.0 - a**2),  # derivative in terms of activation
    "linear": (lambda x: x, lambda a: np.ones_like(a)),
}


def init_layers(widths: list[int], rng: np.random.Generator) -> list[np.ndarray]:
    """Glorot-scaled weights and zero biases, flattened as [W0, b0, W1, ...]."""
    params = []
    for fan_in, fan_out in zip(widths[:-1], widths[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        params.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        params.append(np.zeros(fan_out))
    return params


def _forward(params, X, activation, n_layers):
    """Hidden layers use the nonlinearity; each block's last layer is linear."""
    act, _ = _ACTIVATIONS[activation]
    acts = [X]
    for layer in range(n_layers):
        W, b = params[2 * layer], params[2 * layer + 1]
        z = acts[-1] @ W + b
        acts.append(z if layer == n_layers - 1 else act(z))
    return acts


class _Network:
    """Encoder/decoder pair with analytic backpropagation."""

    def __init__(self, n_in: int, hidden: tuple[int, ...], d: int, activation: str):
        self.widths_enc = [n_in, *hidden, d]
        self.widths_dec = [d, *reversed(hidden), n_in]
        self.activation = activation
        self.n_enc = len(self.widths_enc) - 1
        self.n_dec = len(self.widths_dec) - 1

    def split(self, params):
        return params[: 2 * self.n_enc], params[2 * self.n_enc :]

    def encode(self, params, X):
        enc, _ = self.split(params)
        return _forward(enc, X, self.activation, self.n_enc)[-1]

    def decode(self, params, Z):
        _, dec = self.split(params)
        return _forward(dec, Z, self.activation, self.n_dec)[-1]

    def loss_and_grad(self, params, X, lam: float = 0.0, prior: np.ndarray | None = None):
        """Mean-squared reconstruction loss (+ lam * MMD^2 to the prior)
        and its gradient with respect to every parameter array."""
        enc, dec = self.split(params)
        acts_e = _forward(enc, X, self.activation, self.n_enc)
        Z = acts_e[-1]
        acts_d = _forward(dec, Z, self.activation, self.n_dec)
        Xhat = acts_d[-1]

        n, D = X.shape
        diff = Xhat - X
        loss = float(np.mean(diff**2))
        dXhat = 2.0 * diff / (n * D)

        dZ_mmd = None
        if lam > 0.0:
            if prior is None:
                raise ValueError("wae loss needs prior samples")
            mmd, dZ_mmd = _mmd_and_grad(Z, prior)
            loss += lam * mmd
            dZ_mmd *= lam

        grads = [np.zeros_like(p) for p in params]
        dZ = self._backprop(dec, acts_d, dXhat, grads, offset=2 * self.n_enc)
        if dZ_mmd is not None:
            dZ = dZ + dZ_mmd
        self._backprop(enc, acts_e, dZ, grads, offset=0)
        return loss, grads

    def _backprop(self, block, acts, delta, grads, offset):
        _, dact = _ACTIVATIONS[self.activation]
        n_layers = len(block) // 2
        for layer in range(n_layers - 1, -1, -1):
            a_prev = acts[layer]
            grads[offset + 2 * layer] += a_prev.T @ delta
            grads[offset + 2 * layer + 1] += delta.sum(axis=0)
            if layer > 0:
                W = block[2 * layer]
                delta = (delta @ W.T) * dact(acts[layer])
        W0 = block[0]
        return delta @ W0.T


def _imq_kernel(A: np.ndarray, B: np.ndarray, C: float) -> np.ndarray:
    sq = np.sum(A**2, axis=1)[:, None] + np.sum(B**2, axis=1)[None, :] - 2.0 * A @ B.T
    return C / (C + np.maximum(sq, 0.0))


def _mmd_and_grad(Z: np.ndarray, prior: np.ndarray) -> tuple[float, np.ndarray]:
    """Unbiased MMD^2 between codes and prior samples, inverse-multiquadric
    kernel with the 2 d scale, plus its gradient in the codes."""
    n, d = Z.shape
    m = prior.shape[0]
    C = 2.0 * d
    Kzz = _imq_kernel(Z, Z, C)
    Kzp = _imq_kernel(Z, prior, C)
    Kpp = _imq_kernel(prior, prior, C)
    sum_zz = (Kzz.sum() - np.trace(Kzz)) / (n * (n - 1)) if n > 1 else 0.0
    sum_pp = (Kpp.sum() - np.trace(Kpp)) / (m * (m - 1)) if m > 1 else 0.0
    sum_zp = Kzp.mean()
    mmd = float(sum_zz + sum_pp - 2.0 * sum_zp)

    # d k(a,b) / d a = -2 C (a - b) / (C + ||a-b||^2)^2 = -2 k^2 (a - b) / C
    Wzz = Kzz**2 / C
    np.fill_diagonal(Wzz, 0.0)
    grad = np.zeros_like(Z)
    if n > 1:
        # within-codes term: each unordered pair appears twice in the sum
        grad += (-2.0 / (n * (n - 1))) * 2.0 * (Wzz.sum(axis=1)[:, None] * Z - Wzz @ Z)
    Wzp = Kzp**2 / C
    grad -= (-2.0 / (n * m)) * 2.0 * (Wzp.sum(axis=1)[:, None] * Z - Wzp @ prior)
    return mmd, grad


class AutoencoderModel(Reducer):
    """Neural reducer trained by Adam on minibatches; encoder gives z."""

    method = "ae"
    _array_fields = ()

    def __init__(self, params: ReducerParams):
        super().__init__(params)
        self.method = params.method
        self.net_: _Network | None = None
        self.weights_: list[np.ndarray] | None = None
        self.loss_history_ = None

    def fit(self, X: np.ndarray) -> "AutoencoderModel":
        X = self._check_input(X)
        N, D = X.shape
        p = self.params
        if N < p.batch:
            raise ValueError(f"need at least batch={p.batch} samples, got {N}")
        self.n_features = D
        self.net_ = _Network(D, p.net_hidden, self.d, p.activation)
        rng = np.random.default_rng(p.seed)
        weights = init_layers(self.net_.widths_enc, rng) + init_layers(self.net_.widths_dec, rng)
        lam = p.lambda_penalty if p.method == "wae" else 0.0

        m = [np.zeros_like(w) for w in weights]
        v = [np.zeros_like(w) for w in weights]
        beta1, beta2, eps = 0.9, 0.999, 1e-8
        step = 0
        history = []
        for epoch in range(p.epochs):
            order = rng.permutation(N)
            epoch_loss = 0.0
            n_batches = 0
            for start in range(0, N - p.batch + 1, p.batch):
                batch = X[order[start : start + p.batch]]
                prior = rng.standard_normal((p.batch, self.d)) if lam > 0 else None
                loss, grads = self.net_.loss_and_grad(weights, batch, lam, prior)
                if not np.isfinite(loss):
                    raise RuntimeError(
                        f"non-finite loss at epoch {epoch}; reduce the learning rate"
                    )
                step += 1
                for i, g in enumerate(grads):
                    m[i] = beta1 * m[i] + (1 - beta1) * g
                    v[i] = beta2 * v[i] + (1 - beta2) * g**2
                    mhat = m[i] / (1 - beta1**step)
                    vhat = v[i] / (1 - beta2**step)
                    weights[i] = weights[i] - p.learning_rate * mhat / (np.sqrt(vhat) + eps)
                epoch_loss += loss
                n_batches += 1
            history.append(epoch_loss / max(n_batches, 1))
        self.weights_ = weights
        self.loss_history_ = np.array(history)
        self.training_embedding = self.net_.encode(weights, X)
        return self

    def transform(self, X: np.ndarray) -> np.ndarray:
        X = self._check_input(X)
        return self.net_.encode(self.weights_, X)

    def encoder_matrix(self) -> np.ndarray:
        """First encoder weight matrix (useful for the linear variant)."""
        return self.weights_[0]

    def to_dict(self) -> dict:
        from .. import dataio

        d = super().to_dict()
        d["arrays"]["weights"] = [dataio.encode_array(w) for w in self.weights_]
        d["extra"]["loss_history"] = list(map(float, self.loss_history_))
        return d

    @classmethod
    def _restore(cls, d: dict) -> "AutoencoderModel":
        from .. import dataio

        model = super()._restore(d)
        p = model.params
        model.net_ = _Network(model.n_features, p.net_hidden, model.d, p.activation)
        model.weights_ = [dataio.decode_array(w) for w in d["arrays"]["weights"]]
        model.loss_history_ = np.asarray(d["extra"].get("loss_history", []))
        return model
