"""Polynomial chaos expansion surrogates on reduced coordinates.

The surrogate expands each output component in multivariate polynomials
that are orthonormal under an assumed product distribution of the inputs:
uniform over the (margin-expanded) training support with Legendre bases by
default, or standard normal with Hermite bases. Coefficients come from
ordinary, ridge, or LASSO regression on a shared design matrix, and the
first two output moments follow from orthonormality: the mean is the
zero-index coefficient and the variance the sum of squared remaining ones.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import dataio


@dataclass(frozen=True)
class MultiIndexSet:
    """Total-degree multi-index set in graded order.

    Indices are all k-tuples of nonnegative integers with sum <= s_max,
    sorted by total degree and, within a degree, descending
    lexicographically: (0,0), (1,0), (0,1), (2,0), (1,1), (0,2), ...
    """

    k: int
    s_max: int
    indices: np.ndarray  # (S, k) int array

    @property
    def size(self) -> int:
        return self.indices.shape[0]


def total_degree_size(k: int, s_max: int) -> int:
    """Closed-form cardinality (s_max + k)! / (s_max! k!)."""
    return math.comb(s_max + k, k)


def _compositions(total: int, k: int):
    """Tuples of k nonnegative ints summing to `total`, first entry largest first."""
    if k == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _compositions(total - first, k - 1):
            yield (first,) + rest


def total_degree_set(k: int, s_max: int) -> MultiIndexSet:
    if k < 1:
        raise ValueError("k must be >= 1")
    if s_max < 0:
        raise ValueError("s_max must be >= 0")
    rows = []
    for degree in range(s_max + 1):
        rows.extend(_compositions(degree, k))
    indices = np.array(rows, dtype=np.int32).reshape(len(rows), k)
    return MultiIndexSet(k=k, s_max=s_max, indices=indices)


def legendre_orthonormal(degree: int, x) -> np.ndarray:
    """Legendre polynomial scaled to unit norm under U[-1, 1].

    Uses the three-term recurrence and the sqrt(2s + 1) normalization so
    that E[xi_s xi_t] = delta_st for the uniform density 1/2 on [-1, 1].
    """
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) > 1.0 + 1e-12):
        raise ValueError("Legendre evaluation outside [-1, 1]")
    p_prev = np.ones_like(x)
    if degree == 0:
        return p_prev
    p = x.copy()
    for n in range(1, degree):
        p, p_prev = ((2 * n + 1) * x * p - n * p_prev) / (n + 1), p
    return math.sqrt(2 * degree + 1) * p


def hermite_orthonormal(degree: int, x) -> np.ndarray:
    """Probabilists' Hermite polynomial scaled to unit norm under N(0, 1)."""
    x = np.asarray(x, dtype=float)
    h_prev = np.ones_like(x)
    if degree == 0:
        return h_prev
    h = x.copy()
    for n in range(1, degree):
        h, h_prev = x * h - n * h_prev, h
    return h / math.sqrt(math.factorial(degree))


_FAMILIES = {"legendre": legendre_orthonormal, "hermite": hermite_orthonormal}


@dataclass
class InputScaler:
    """Maps reduced coordinates onto the polynomial domain.

    For the Legendre family, per-dimension training bounds expanded by a
    margin fraction map affinely to [-1, 1]; out-of-support points are
    clipped (with a running count). For the Hermite family, columns are
    standardized instead.
    """

    family: str
    lo: np.ndarray
    hi: np.ndarray
    margin: float = 0.01
    clipped_points: int = 0

    @classmethod
    def fit(cls, Z: np.ndarray, family: str = "legendre", margin: float = 0.01) -> "InputScaler":
        Z = np.asarray(Z, dtype=float)
        if family == "hermite":
            mu = Z.mean(axis=0)
            sd = Z.std(axis=0)
            if np.any(sd == 0):
                raise ValueError("constant embedding column; cannot standardize")
            return cls(family=family, lo=mu, hi=sd, margin=margin)
        lo = Z.min(axis=0)
        hi = Z.max(axis=0)
        if np.any(hi <= lo):
            raise ValueError("degenerate embedding column (hi <= lo)")
        half = 0.5 * (hi - lo) * (1.0 + margin)
        mid = 0.5 * (hi + lo)
        return cls(family=family, lo=mid - half, hi=mid + half, margin=margin)

    def apply(self, Z: np.ndarray) -> np.ndarray:
        Z = np.asarray(Z, dtype=float)
        if self.family == "hermite":
            return (Z - self.lo) / self.hi
        zeta = 2.0 * (Z - self.lo) / (self.hi - self.lo) - 1.0
        outside = np.abs(zeta) > 1.0
        n_out = int(outside.any(axis=1).sum())
        if n_out:
            self.clipped_points += n_out
            warnings.warn(f"{n_out} point(s) outside the training support were clipped")
            zeta = np.clip(zeta, -1.0, 1.0)
        return zeta

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "lo": list(map(float, self.lo)),
            "hi": list(map(float, self.hi)),
            "margin": self.margin,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "InputScaler":
        return cls(
            family=d["family"],
            lo=np.asarray(d["lo"], dtype=float),
            hi=np.asarray(d["hi"], dtype=float),
            margin=float(d["margin"]),
        )


def design_matrix(Z_scaled: np.ndarray, mset: MultiIndexSet, family: str = "legendre") -> np.ndarray:
    """N x S matrix of products of univariate orthonormal polynomials."""
    Z = np.atleast_2d(np.asarray(Z_scaled, dtype=float))
    if Z.shape[1] != mset.k:
        raise ValueError(f"Z has {Z.shape[1]} columns, multi-index set expects {mset.k}")
    poly = _FAMILIES[family]
    max_deg = int(mset.indices.max(initial=0))
    # table[j][s] = xi_s evaluated on column j
    table = [
        [poly(s, Z[:, j]) for s in range(max_deg + 1)]
        for j in range(mset.k)
    ]
    Phi = np.ones((Z.shape[0], mset.size))
    for col, idx in enumerate(mset.indices):
        for j, s in enumerate(idx):
            if s > 0:
                Phi[:, col] *= table[j][s]
    return Phi


@dataclass
class PceSurrogate:
    """Fitted expansion: multi-index set, input scaler, coefficient matrix."""

    mset: MultiIndexSet
    scaler: InputScaler
    coeffs: np.ndarray  # (S, M), one column per output component
    family: str = "legendre"
    regression: str = "ols"
    penalty: float = 0.0

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "k": self.mset.k,
            "s_max": self.mset.s_max,
            "regression": self.regression,
            "penalty": self.penalty,
            "scaler": self.scaler.to_dict(),
            "coeffs": dataio.encode_array(self.coeffs),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PceSurrogate":
        mset = total_degree_set(int(d["k"]), int(d["s_max"]))
        return cls(
            mset=mset,
            scaler=InputScaler.from_dict(d["scaler"]),
            coeffs=dataio.decode_array(d["coeffs"]),
            family=d["family"],
            regression=d["regression"],
            penalty=float(d["penalty"]),
        )


def _lasso_coordinate_descent(Phi, y, lam, max_iter=10_000, tol=1e-8):
    """Coordinate descent for (1/N) ||y - Phi c||^2 + lam ||c||_1.

    The penalty is interpreted relative to column-normalized design
    columns, so each coordinate is scaled by its column norm.
    """
    N, S = Phi.shape
    norms = np.linalg.norm(Phi, axis=0)
    norms = np.where(norms > 0, norms, 1.0)
    Q = Phi / norms
    gram_diag = (Q * Q).sum(axis=0) / N
    c = np.zeros(S)
    r = y.copy()
    for _ in range(max_iter):
        max_change = 0.0
        for j in range(S):
            rho = Q[:, j] @ r / N + gram_diag[j] * c[j]
            new = np.sign(rho) * max(abs(rho) - lam / 2.0, 0.0) / gram_diag[j]
            if new != c[j]:
                r -= (new - c[j]) * Q[:, j]
                max_change = max(max_change, abs(new - c[j]))
                c[j] = new
        if max_change < tol:
            break
    return c / norms


def pce_fit(
    Z: np.ndarray,
    Y: np.ndarray,
    s_max: int,
    regression: str = "ols",
    penalty: float | None = None,
    family: str = "legendre",
    margin: float = 0.01,
) -> PceSurrogate:
    """Fit one coefficient column per output against a shared design matrix."""
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    Y = np.asarray(Y, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    if not (np.isfinite(Z).all() and np.isfinite(Y).all()):
        raise ValueError("non-finite training inputs")
    if Z.shape[0] == 0:
        raise ValueError("zero training rows")
    if Z.shape[0] != Y.shape[0]:
        raise ValueError("Z and Y row counts differ")

    mset = total_degree_set(Z.shape[1], s_max)
    scaler = InputScaler.fit(Z, family=family, margin=margin)
    Phi = design_matrix(scaler.apply(Z), mset, family)
    N, S = Phi.shape
    if regression == "ols" and N < S:
        warnings.warn(f"OLS with N={N} < basis size S={S}; fit is underdetermined")

    if penalty is None:
        penalty = {"ols": 0.0, "ridge": 1e-8, "lasso": 1e-4}.get(regression)
        if penalty is None:
            raise ValueError(f"unknown regression {regression!r}")

    if regression == "ols":
        coeffs, *_ = np.linalg.lstsq(Phi, Y, rcond=1e-10)
    elif regression == "ridge":
        A = Phi.T @ Phi + penalty * np.eye(S)
        coeffs = np.linalg.solve(A, Phi.T @ Y)
    elif regression == "lasso":
        coeffs = np.column_stack(
            [_lasso_coordinate_descent(Phi, Y[:, m], penalty) for m in range(Y.shape[1])]
        )
    else:
        raise ValueError(f"unknown regression {regression!r}")

    return PceSurrogate(
        mset=mset,
        scaler=scaler,
        coeffs=coeffs,
        family=family,
        regression=regression,
        penalty=penalty,
    )


def pce_predict(model: PceSurrogate, Znew: np.ndarray) -> np.ndarray:
    Znew = np.atleast_2d(np.asarray(Znew, dtype=float))
    if Znew.shape[1] != model.mset.k:
        raise ValueError(f"expected {model.mset.k} input columns, got {Znew.shape[1]}")
    Phi = design_matrix(model.scaler.apply(Znew), model.mset, model.family)
    return Phi @ model.coeffs


def pce_moments(model: PceSurrogate) -> tuple[np.ndarray, np.ndarray]:
    """Analytic output mean and variance under the assumed input law."""
    zero_row = np.flatnonzero(~model.mset.indices.any(axis=1))[0]
    mean = model.coeffs[zero_row].copy()
    mask = np.ones(model.mset.size, dtype=bool)
    mask[zero_row] = False
    variance = (model.coeffs[mask] ** 2).sum(axis=0)
    return mean, variance
