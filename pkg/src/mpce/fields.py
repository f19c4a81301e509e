"""Stochastic input field generation.

Two samplers cover the benchmark input models: a Karhunen-Loeve expansion
of a covariance kernel evaluated on the grid (Gaussian fields, optionally
translated to uniform marginals), and a spectral representation sampler
that synthesizes 2-D homogeneous Gaussian fields as a double cosine series
with random phases.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh
from scipy.special import erf

from .grid import GridSpec

_COV_KINDS = ("squared-exponential-1d", "separable-exponential-2d")


@dataclass(frozen=True)
class CovarianceSpec:
    """Stationary covariance kernel selection.

    kind 'squared-exponential-1d' is sigma^2 * exp(-(x-x')^2 / l^2) and
    'separable-exponential-2d' is sigma^2 * exp(-|x-x'|/lx - |y-y'|/ly)
    with unit sigma by default (unit variance at zero separation).
    """

    kind: str
    sigma: float
    lengthscales: tuple[float, ...]

    def __post_init__(self):
        if self.kind not in _COV_KINDS:
            raise ValueError(f"unknown covariance kind {self.kind!r}")
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")
        if any(l <= 0 for l in self.lengthscales):
            raise ValueError("lengthscales must be positive")


@dataclass
class KleBasis:
    """Eigen-decomposition of a grid covariance matrix plus the field mean."""

    eigenvalues: np.ndarray  # (rank,), nonincreasing, >= 0
    eigenvectors: np.ndarray  # (P, rank), orthonormal columns
    mean: np.ndarray  # (P,)
    rank: int

    def pointwise_std(self) -> np.ndarray:
        """Standard deviation of the expansion at each grid point."""
        var = (self.eigenvectors**2) @ self.eigenvalues
        return np.sqrt(np.maximum(var, 0.0))


@dataclass(frozen=True)
class SrmSpectrum:
    """Discretized power spectrum for the cosine-series sampler.

    S(k1, k2) = alpha2 * (k1^2 + k2^2) * exp(-alpha1 * sqrt(k1^2 + k2^2)),
    discretized with step dkappa up to the cutoff kappa_upper per axis.
    """

    alpha1: float
    alpha2: float
    dkappa: float
    kappa_upper: float

    def __post_init__(self):
        if min(self.alpha1, self.alpha2, self.dkappa, self.kappa_upper) <= 0:
            raise ValueError("all spectrum parameters must be positive")

    @property
    def m_bins(self) -> int:
        return int(round(self.kappa_upper / self.dkappa))


@dataclass
class FieldEnsemble:
    """N field realizations over a grid, one row per realization."""

    grid: GridSpec
    values: np.ndarray  # (N, P)
    provenance: str  # kle-gaussian | kle-uniform | srm-gaussian
    seed: int | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2:
            raise ValueError("values must be a 2-D matrix")
        if self.values.shape[1] != self.grid.n_points:
            raise ValueError(
                f"values has {self.values.shape[1]} columns but grid has "
                f"{self.grid.n_points} points"
            )

    @property
    def n(self) -> int:
        return self.values.shape[0]


def srm_spectrum_eval(kappa1, kappa2, alpha1: float, alpha2: float):
    """Power spectrum value(s); vanishes at the origin and is nonnegative."""
    k1 = np.asarray(kappa1, dtype=float)
    k2 = np.asarray(kappa2, dtype=float)
    r = np.sqrt(k1**2 + k2**2)
    return alpha2 * (k1**2 + k2**2) * np.exp(-alpha1 * r)


def cov_matrix(grid: GridSpec, spec: CovarianceSpec) -> np.ndarray:
    """Covariance matrix of the kernel evaluated at all grid point pairs."""
    if spec.kind == "squared-exponential-1d":
        if grid.dims != 1:
            raise ValueError("squared-exponential-1d requires a 1-D grid")
        x = grid.points()[:, 0]
        dx = x[:, None] - x[None, :]
        lc = spec.lengthscales[0]
        return spec.sigma**2 * np.exp(-(dx**2) / lc**2)
    if spec.kind == "separable-exponential-2d":
        if grid.dims != 2:
            raise ValueError("separable-exponential-2d requires a 2-D grid")
        if len(spec.lengthscales) != 2:
            raise ValueError("separable-exponential-2d needs two lengthscales")
        pts = grid.points()
        lx, ly = spec.lengthscales
        ax = np.abs(pts[:, 0][:, None] - pts[:, 0][None, :])
        ay = np.abs(pts[:, 1][:, None] - pts[:, 1][None, :])
        return spec.sigma**2 * np.exp(-ax / lx - ay / ly)
    raise ValueError(f"unknown covariance kind {spec.kind!r}")  # pragma: no cover


def kle_decompose(cov: np.ndarray, mean: np.ndarray, rank: int) -> KleBasis:
    """Spectral decomposition of a covariance matrix, truncated to `rank`.

    Eigenpairs are sorted by nonincreasing eigenvalue; small negative
    eigenvalues (within -1e-8 * lambda_max) are clamped to zero.
    """
    cov = np.asarray(cov, dtype=float)
    P = cov.shape[0]
    if cov.shape != (P, P):
        raise ValueError("covariance must be square")
    if not np.allclose(cov, cov.T, atol=1e-10 * max(1.0, np.abs(cov).max())):
        raise ValueError("covariance matrix is not symmetric")
    if not 1 <= rank <= P:
        raise ValueError(f"rank must be in [1, {P}]")
    mean = np.asarray(mean, dtype=float)
    if mean.shape != (P,):
        raise ValueError("mean length must match covariance size")

    w, v = eigh(cov)
    order = np.argsort(w)[::-1]
    w = w[order][:rank]
    v = v[:, order][:, :rank]
    lam_max = w[0] if w.size and w[0] > 0 else 1.0
    if np.any(w < -1e-8 * lam_max):
        raise ValueError("covariance matrix is not PSD within tolerance")
    w = np.maximum(w, 0.0)
    # fix eigenvector signs for reproducibility
    flips = np.sign(v[np.argmax(np.abs(v), axis=0), np.arange(v.shape[1])])
    flips[flips == 0] = 1.0
    v = v * flips
    return KleBasis(eigenvalues=w, eigenvectors=v, mean=mean, rank=rank)


def kle_sample_gaussian(
    basis: KleBasis, n: int, seed: int, grid: GridSpec | None = None
) -> FieldEnsemble:
    """Sample n Gaussian fields mean + sum_i sqrt(lambda_i) theta_i f_i.

    The optional grid only tags the ensemble; a placeholder 1-D grid with
    one point per basis entry is used when omitted.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    theta = rng.standard_normal((n, basis.rank))
    fields = basis.mean[None, :] + (theta * np.sqrt(basis.eigenvalues)) @ basis.eigenvectors.T
    if grid is None:
        P = basis.mean.shape[0]
        grid = GridSpec(dims=1, extents=((0.0, 1.0),), points_per_axis=(P,))
    return FieldEnsemble(grid=grid, values=fields, provenance="kle-gaussian", seed=seed)


def _std_normal_cdf(z: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + erf(z / math.sqrt(2.0)))


def translate_gaussian_to_uniform(
    ensemble: FieldEnsemble, basis: KleBasis, a: float, b: float
) -> FieldEnsemble:
    """Map the zero-mean Gaussian part of each field to uniform marginals.

    Pointwise, g(x) becomes a + (b - a) * Phi(g(x) / sigma(x)) with the
    mean re-added, Phi the standard normal CDF and sigma(x) the expansion
    standard deviation at x. Outputs lie in [mean + a, mean + b].
    """
    if not b > a:
        raise ValueError("need b > a")
    sigma = basis.pointwise_std()
    if np.any(sigma == 0.0):
        raise ValueError("zero expansion standard deviation at some grid point")
    g = ensemble.values - basis.mean[None, :]
    u = a + (b - a) * _std_normal_cdf(g / sigma[None, :])
    return FieldEnsemble(
        grid=ensemble.grid,
        values=basis.mean[None, :] + u,
        provenance="kle-uniform",
        seed=ensemble.seed,
    )


def srm_wavenumbers(spectrum: SrmSpectrum) -> np.ndarray:
    """Wavenumber bins per axis: 0, dk, ..., (M-1) dk below the cutoff."""
    return spectrum.dkappa * np.arange(spectrum.m_bins)


def srm2d_sample(spectrum: SrmSpectrum, grid: GridSpec, n: int, seed: int) -> FieldEnsemble:
    """Sample n zero-mean Gaussian fields from the double cosine series.

    Each realization uses 2 M^2 independent phases, uniform on [0, 2 pi),
    with amplitudes sqrt(2 S dk1 dk2) on the (k1, +k2) and (k1, -k2) terms.
    The tensor grid structure lets each term sum collapse to two complex
    matrix products.
    """
    if grid.dims != 2:
        raise ValueError("srm2d_sample requires a 2-D grid")
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    M = spectrum.m_bins
    k = srm_wavenumbers(spectrum)
    dk2 = spectrum.dkappa**2
    K1, K2 = np.meshgrid(k, k, indexing="ij")
    amp_plus = np.sqrt(2.0 * srm_spectrum_eval(K1, K2, spectrum.alpha1, spectrum.alpha2) * dk2)
    amp_minus = np.sqrt(2.0 * srm_spectrum_eval(K1, -K2, spectrum.alpha1, spectrum.alpha2) * dk2)

    x, y = grid.axes()
    ex = np.exp(1j * np.outer(x, k))  # (nx, M)
    ey = np.exp(1j * np.outer(k, y))  # (M, ny)

    nx, ny = grid.points_per_axis
    out = np.empty((n, nx * ny))
    for s in range(n):
        phi1 = rng.uniform(0.0, 2.0 * np.pi, size=(M, M))
        phi2 = rng.uniform(0.0, 2.0 * np.pi, size=(M, M))
        c = amp_plus * np.exp(1j * phi1)
        # cos(k1 x + k2 y + phi) = Re[e^{i k1 x} c e^{i k2 y}]
        field = (ex @ c @ ey).real
        c = amp_minus * np.exp(1j * phi2)
        # cos(k1 x - k2 y + phi) = Re[e^{i k1 x} c e^{-i k2 y}]
        field += (ex @ c @ ey.conj()).real
        # field[i, j] is the value at (x_i, y_j); flatten with x fastest
        out[s] = math.sqrt(2.0) * field.T.ravel()
    return FieldEnsemble(grid=grid, values=out, provenance="srm-gaussian", seed=seed)


def srm2d_point_variance(spectrum: SrmSpectrum) -> float:
    """Analytic ensemble variance of the cosine series at any point."""
    k = srm_wavenumbers(spectrum)
    K1, K2 = np.meshgrid(k, k, indexing="ij")
    dk2 = spectrum.dkappa**2
    s_plus = srm_spectrum_eval(K1, K2, spectrum.alpha1, spectrum.alpha2)
    s_minus = srm_spectrum_eval(K1, -K2, spectrum.alpha1, spectrum.alpha2)
    return float(2.0 * dk2 * (s_plus.sum() + s_minus.sum()))


def lengthscale_design(
    n_pairs: int, bounds: tuple[float, float], seed: int
) -> np.ndarray:
    """Latin-hypercube lengthscale pairs biased toward the lower bound.

    Unit-square LHS values u are mapped through l_min + (l_max - l_min) u^2
    per axis, which concentrates samples at small lengthscales.
    """
    if n_pairs < 1:
        raise ValueError("n_pairs must be >= 1")
    lo, hi = bounds
    if not (0 < lo < hi):
        raise ValueError("bounds must satisfy 0 < lo < hi")
    rng = np.random.default_rng(seed)
    u = np.empty((n_pairs, 2))
    for j in range(2):
        u[:, j] = (rng.permutation(n_pairs) + rng.uniform(size=n_pairs)) / n_pairs
    return lo + (hi - lo) * u**2
