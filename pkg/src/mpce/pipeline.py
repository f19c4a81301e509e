"""End-to-end experiment orchestration.

A benchmark object generates input field ensembles and solves the forward
model; mpce_train fits a reducer plus a PCE surrogate on the reduced
coordinates; run_experiment wires generation, solving, training, held-out
evaluation, and result files together. Deterministic given the config
seed: all stage seeds are spawned from it, and the deterministic outputs
(metrics CSV, summary JSON, predictions) never contain wall-clock times,
which live in a separate timings file.
"""

from __future__ import annotations

import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import dataio, metrics
from .fields import (
    CovarianceSpec,
    FieldEnsemble,
    KleBasis,
    SrmSpectrum,
    cov_matrix,
    kle_decompose,
    kle_sample_gaussian,
    lengthscale_design,
    srm2d_sample,
    translate_gaussian_to_uniform,
)
from .grid import GridSpec, cell_center_grid, line_grid
from .pce import PceSurrogate, pce_fit, pce_predict
from .reducers import Reducer, ReducerParams, fit_reducer, reducer_from_dict, reducer_to_dict
from .solvers import (
    BrusselatorProblem,
    HeatProblem,
    PoissonProblem,
    solve_brusselator2d,
    solve_heat2d,
    solve_poisson1d_many,
)

BENCHMARKS = ("poisson1d", "heat2d", "brusselator")


@dataclass
class PceParams:
    s_max: int = 2
    regression: str = "ols"
    penalty: float | None = None
    family: str = "legendre"
    margin: float = 0.01

    @classmethod
    def from_dict(cls, d: dict) -> "PceParams":
        return cls(**{k: d[k] for k in ("s_max", "regression", "penalty", "family", "margin") if k in d})

    def to_dict(self) -> dict:
        return {
            "s_max": self.s_max,
            "regression": self.regression,
            "penalty": self.penalty,
            "family": self.family,
            "margin": self.margin,
        }


@dataclass
class ExperimentConfig:
    """Declarative description of one benchmark run."""

    benchmark: str
    n_train: int
    n_test: int
    seed: int
    field: dict
    reducer: ReducerParams
    pce: PceParams
    schema: int = 1

    def __post_init__(self):
        if self.benchmark not in BENCHMARKS:
            raise ValueError(f"unknown benchmark {self.benchmark!r}")
        if self.n_train < 1 or self.n_test < 1:
            raise ValueError("n_train and n_test must be >= 1")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        if d.get("schema", 1) != 1:
            raise ValueError(f"unsupported config schema {d.get('schema')}")
        reducer = dict(d["reducer"])
        return cls(
            benchmark=d["benchmark"],
            n_train=int(d["n_train"]),
            n_test=int(d["n_test"]),
            seed=int(d.get("seed", 0)),
            field=dict(d.get("field", {})),
            reducer=ReducerParams(**reducer),
            pce=PceParams.from_dict(d.get("pce", {})),
        )

    def to_dict(self) -> dict:
        return {
            "schema": self.schema,
            "benchmark": self.benchmark,
            "n_train": self.n_train,
            "n_test": self.n_test,
            "seed": self.seed,
            "field": self.field,
            "reducer": self.reducer.to_dict(),
            "pce": self.pce.to_dict(),
        }


def stage_seeds(seed: int) -> dict:
    """Deterministic per-stage seeds spawned from the master seed."""
    children = np.random.SeedSequence(seed).spawn(7)
    names = ("design", "fields_train", "fields_test", "fields_ood", "split", "reducer", "mc")
    return {name: int(c.generate_state(1)[0]) for name, c in zip(names, children)}


# ---------------------------------------------------------------------------
# benchmarks


class PoissonBenchmark:
    """1-D Poisson with a random forcing field, optionally translated to
    uniform marginals."""

    def __init__(self, field_cfg: dict):
        cfg = {
            "points": 1024,
            "sigma2": 20.0,
            "corr_length": 0.2,
            "translate": "uniform",
            "a": -15.0,
            "b": 15.0,
            "kle_rank": None,
            **field_cfg,
        }
        self.cfg = cfg
        self.grid = line_grid(-1.0, 1.0, int(cfg["points"]))
        x = self.grid.axes()[0]
        self.mean = 0.1 * np.sin(np.pi * x)
        self._basis: KleBasis | None = None

    @property
    def basis(self) -> KleBasis:
        if self._basis is None:
            spec = CovarianceSpec(
                kind="squared-exponential-1d",
                sigma=float(np.sqrt(self.cfg["sigma2"])),
                lengthscales=(float(self.cfg["corr_length"]),),
            )
            cov = cov_matrix(self.grid, spec)
            rank = int(self.cfg["kle_rank"] or self.grid.n_points)
            self._basis = kle_decompose(cov, self.mean, rank)
        return self._basis

    def sample_inputs(self, n: int, seed: int) -> np.ndarray:
        ens = kle_sample_gaussian(self.basis, n, seed, grid=self.grid)
        if self.cfg["translate"] == "uniform":
            ens = translate_gaussian_to_uniform(
                ens, self.basis, float(self.cfg["a"]), float(self.cfg["b"])
            )
        return ens.values

    def solve(self, X: np.ndarray, threads: int = 1) -> np.ndarray:
        return solve_poisson1d_many(self.grid, X)


class HeatBenchmark:
    """2-D steady diffusion with log-normal diffusivity and a pooled
    training design over biased lengthscale pairs."""

    def __init__(self, field_cfg: dict):
        cfg = {
            "cells": 32,
            "n_pairs": 20,
            "samples_per_pair": 50,
            "bounds": [0.05, 1.0],
            "ood_grid": 5,
            "ood_samples_per_pair": 10,
            "kle_rank": 784,
            "uq_pair": [0.15, 0.25],
            **field_cfg,
        }
        self.cfg = cfg
        self.n_cells = int(cfg["cells"])
        self.grid = cell_center_grid(self.n_cells)
        self._basis_cache: dict[tuple[float, float], KleBasis] = {}

    def _basis_for_pair(self, pair) -> KleBasis:
        key = (float(pair[0]), float(pair[1]))
        if key not in self._basis_cache:
            spec = CovarianceSpec(kind="separable-exponential-2d", sigma=1.0, lengthscales=key)
            cov = cov_matrix(self.grid, spec)
            rank = int(self.cfg["kle_rank"] or self.grid.n_points)
            self._basis_cache[key] = kle_decompose(cov, np.zeros(self.grid.n_points), rank)
        return self._basis_cache[key]

    def sample_inputs_for_pair(self, pair, n: int, seed: int) -> np.ndarray:
        """Zero-mean Gaussian log-diffusivity fields.

        The ensemble carries log D; the solver exponentiates, so the
        reduced coordinates of a linear method are (nearly) Gaussian.
        """
        basis = self._basis_for_pair(pair)
        return kle_sample_gaussian(basis, n, seed, grid=self.grid).values

    def training_pairs(self, seed: int) -> np.ndarray:
        return lengthscale_design(int(self.cfg["n_pairs"]), tuple(self.cfg["bounds"]), seed)

    def ood_pairs(self) -> np.ndarray:
        lo, hi = self.cfg["bounds"]
        g = int(self.cfg["ood_grid"])
        lx, ly = np.meshgrid(np.linspace(lo, hi, g), np.linspace(lo, hi, g))
        return np.column_stack([lx.ravel(), ly.ravel()])

    def pooled_inputs(self, pairs: np.ndarray, per_pair: int, seed: int):
        """Fields for each pair, with per-sample pair labels."""
        seeds = np.random.SeedSequence(seed).spawn(len(pairs))
        blocks, labels = [], []
        for pair, ss in zip(pairs, seeds):
            blocks.append(self.sample_inputs_for_pair(pair, per_pair, int(ss.generate_state(1)[0])))
            labels.extend([f"({pair[0]:.4f},{pair[1]:.4f})"] * per_pair)
        return np.vstack(blocks), labels

    def sample_inputs(self, n: int, seed: int) -> np.ndarray:
        """Fixed-lengthscale sampler (the uncertainty-propagation setting)."""
        return self.sample_inputs_for_pair(tuple(self.cfg["uq_pair"]), n, seed)

    def solve(self, X: np.ndarray, threads: int = 1) -> np.ndarray:
        """Solve with log-normal diffusivity D = exp(field row)."""

        def one(row):
            return solve_heat2d(HeatProblem(n=self.n_cells, diffusivity=np.exp(row)))

        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                return np.array(list(pool.map(one, X)))
        return np.array([one(row) for row in X])


class BrusselatorBenchmark:
    """Reaction-diffusion trajectories driven by random initial fields."""

    def __init__(self, field_cfg: dict):
        cfg = {
            "mesh": 28,
            "alpha1": 3.0e3,
            "alpha2": 25.0,
            "dkappa": 0.01,
            "kappa_upper": 1.28,
            "a": 1.0,
            "b": 3.0,
            "d0": 1.0,
            "d1": 0.1,
            "horizon": 1.0,
            "snapshots": 10,
            "dt_report": 1e-2,
            **field_cfg,
        }
        self.cfg = cfg
        self.n_mesh = int(cfg["mesh"])
        self.grid = cell_center_grid(self.n_mesh)
        self.spectrum = SrmSpectrum(
            alpha1=float(cfg["alpha1"]),
            alpha2=float(cfg["alpha2"]),
            dkappa=float(cfg["dkappa"]),
            kappa_upper=float(cfg["kappa_upper"]),
        )

    def sample_inputs(self, n: int, seed: int) -> np.ndarray:
        return srm2d_sample(self.spectrum, self.grid, n, seed).values

    def solve(self, X: np.ndarray, threads: int = 1) -> np.ndarray:
        cfg = self.cfg

        def one(row):
            problem = BrusselatorProblem(
                n=self.n_mesh,
                v0=row,
                a=float(cfg["a"]),
                b=float(cfg["b"]),
                d0=float(cfg["d0"]),
                d1=float(cfg["d1"]),
                horizon=float(cfg["horizon"]),
                snapshots=int(cfg["snapshots"]),
                dt_report=float(cfg["dt_report"]),
            )
            return solve_brusselator2d(problem).ravel()

        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                return np.array(list(pool.map(one, X)))
        return np.array([one(row) for row in X])


def make_benchmark(name: str, field_cfg: dict):
    if name == "poisson1d":
        return PoissonBenchmark(field_cfg)
    if name == "heat2d":
        return HeatBenchmark(field_cfg)
    if name == "brusselator":
        return BrusselatorBenchmark(field_cfg)
    raise ValueError(f"unknown benchmark {name!r}")


# ---------------------------------------------------------------------------
# training and prediction


@dataclass
class TrainedMpce:
    """Reducer plus surrogate; reducer.d equals the surrogate input size."""

    reducer: Reducer
    surrogate: PceSurrogate
    seeds: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)  # excluded from serialization

    def to_dict(self) -> dict:
        return {
            "reducer": reducer_to_dict(self.reducer),
            "surrogate": self.surrogate.to_dict(),
            "seeds": self.seeds,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TrainedMpce":
        return cls(
            reducer=reducer_from_dict(d["reducer"]),
            surrogate=PceSurrogate.from_dict(d["surrogate"]),
            seeds=d.get("seeds", {}),
        )


def _tick() -> float:
    return time.perf_counter()


def mpce_train(
    X: np.ndarray, Y: np.ndarray, reducer_params: ReducerParams, pce_params: PceParams
) -> TrainedMpce:
    """Fit the reducer on X, embed X, and fit the surrogate on (Z, Y)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    if X.shape[0] != Y.shape[0]:
        raise ValueError("X and Y row counts differ")
    timings = {}
    t0 = _tick()
    reducer = fit_reducer(X, reducer_params)
    Z = (
        reducer.training_embedding
        if reducer.training_embedding is not None
        else reducer.transform(X)
    )
    timings["reduce"] = max(_tick() - t0, 1e-9)
    t0 = _tick()
    surrogate = pce_fit(
        Z,
        Y,
        s_max=pce_params.s_max,
        regression=pce_params.regression,
        penalty=pce_params.penalty,
        family=pce_params.family,
        margin=pce_params.margin,
    )
    timings["fit"] = max(_tick() - t0, 1e-9)
    return TrainedMpce(
        reducer=reducer,
        surrogate=surrogate,
        seeds={"reducer": reducer_params.seed},
        timings=timings,
    )


def mpce_predict(model: TrainedMpce, Xnew: np.ndarray) -> np.ndarray:
    Z = model.reducer.transform(np.atleast_2d(np.asarray(Xnew, dtype=float)))
    return pce_predict(model.surrogate, Z)


# ---------------------------------------------------------------------------
# experiment driver


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    report: metrics.EvalReport
    ood_report: metrics.EvalReport | None
    train_report: metrics.EvalReport
    timings: dict
    model: TrainedMpce
    seeds: dict


def run_experiment(
    config: ExperimentConfig,
    out_dir: str | Path | None = None,
    threads: int = 1,
    save_predictions: bool = False,
    fmt: str = "csv",
) -> ExperimentResult:
    """Generate data, solve, train, evaluate, and (optionally) write files."""
    seeds = stage_seeds(config.seed)
    bench = make_benchmark(config.benchmark, config.field)
    timings = {}

    t0 = _tick()
    groups_test = None
    X_ood = Y_ood = groups_ood = None
    if config.benchmark == "heat2d":
        pairs = bench.training_pairs(seeds["design"])
        per_pair = int(bench.cfg["samples_per_pair"])
        pooled, labels = bench.pooled_inputs(pairs, per_pair, seeds["fields_train"])
        n_total = pooled.shape[0]
        if config.n_train + config.n_test != n_total:
            raise ValueError(
                f"n_train + n_test = {config.n_train + config.n_test} must equal "
                f"n_pairs * samples_per_pair = {n_total}"
            )
        perm = np.random.default_rng(seeds["split"]).permutation(n_total)
        train_idx = perm[: config.n_train]
        test_idx = perm[config.n_train :]
        X_train, X_test = pooled[train_idx], pooled[test_idx]
        groups_test = [labels[i] for i in test_idx]
        ood_pairs = bench.ood_pairs()
        X_ood, groups_ood = bench.pooled_inputs(
            ood_pairs, int(bench.cfg["ood_samples_per_pair"]), seeds["fields_ood"]
        )
    else:
        X_train = bench.sample_inputs(config.n_train, seeds["fields_train"])
        X_test = bench.sample_inputs(config.n_test, seeds["fields_test"])
    timings["generate"] = max(_tick() - t0, 1e-9)

    t0 = _tick()
    Y_train = bench.solve(X_train, threads)
    Y_test = bench.solve(X_test, threads)
    if X_ood is not None:
        Y_ood = bench.solve(X_ood, threads)
    timings["solve"] = max(_tick() - t0, 1e-9)

    reducer_params = replace(config.reducer, seed=seeds["reducer"])
    model = mpce_train(X_train, Y_train, reducer_params, config.pce)
    timings.update(model.timings)

    t0 = _tick()
    pred_test = mpce_predict(model, X_test)
    pred_train = mpce_predict(model, X_train)
    pred_ood = mpce_predict(model, X_ood) if X_ood is not None else None
    timings["predict"] = max(_tick() - t0, 1e-9)

    report = metrics.evaluate(pred_test, Y_test, groups=groups_test)
    train_report = metrics.evaluate(pred_train, Y_train)
    ood_report = (
        metrics.evaluate(pred_ood, Y_ood, groups=groups_ood) if pred_ood is not None else None
    )

    result = ExperimentResult(
        config=config,
        report=report,
        ood_report=ood_report,
        train_report=train_report,
        timings=timings,
        model=model,
        seeds=seeds,
    )
    if out_dir is not None:
        write_result_files(result, out_dir, save_predictions=save_predictions, fmt=fmt, predictions=pred_test)
    return result


def write_result_files(
    result: ExperimentResult,
    out_dir: str | Path,
    save_predictions: bool = False,
    fmt: str = "csv",
    predictions: np.ndarray | None = None,
) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    result.report.write_csv(out / "metrics.csv")
    if result.ood_report is not None:
        result.ood_report.write_csv(out / "metrics_ood.csv")
    summary = {
        "schema": 1,
        "config": result.config.to_dict(),
        "seeds": result.seeds,
        "test": result.report.summary,
        "train": result.train_report.summary,
        "clipped_test_points": result.model.surrogate.scaler.clipped_points,
    }
    if result.ood_report is not None:
        summary["ood"] = result.ood_report.summary
    dataio.save_json(out / "summary.json", summary)
    dataio.save_json(out / "timings.json", {"seconds": result.timings})
    dataio.save_json(out / "model.json", result.model.to_dict())
    if save_predictions and predictions is not None:
        ext = "bin" if fmt == "bin" else "csv"
        dataio.write_matrix(out / f"predictions.{ext}", predictions, fmt)


# ---------------------------------------------------------------------------
# uncertainty propagation


def propagate_moments(model: TrainedMpce, sampler, n_mc: int, seed: int):
    """Push fresh input fields through the surrogate and return pointwise
    mean, variance, and the empirical 95 percent band (2.5/97.5)."""
    if n_mc < 100:
        raise ValueError("n_mc must be >= 100")
    X = sampler(n_mc, seed)
    Y = mpce_predict(model, X)
    mean = Y.mean(axis=0)
    variance = Y.var(axis=0)
    band = np.percentile(Y, [2.5, 97.5], axis=0)
    return mean, variance, band


def nearest_grid_index(grid: GridSpec, point) -> int:
    """Index of the grid point nearest to `point`; errors outside the domain."""
    pt = np.asarray(point, dtype=float)
    if pt.shape != (grid.dims,):
        raise ValueError(f"point must have {grid.dims} coordinates")
    for (lo, hi), val, npts in zip(grid.extents, pt, grid.points_per_axis):
        half = 0.5 * (hi - lo) / max(npts - 1, 1)
        if not (lo - half <= val <= hi + half):
            raise ValueError(f"point {tuple(pt)} is outside the domain")
    pts = grid.points()
    return int(np.argmin(np.sum((pts - pt[None, :]) ** 2, axis=1)))


def pdf_at_points(
    model: TrainedMpce,
    sampler,
    points,
    grid: GridSpec,
    n_mc: int,
    seed: int,
    bins: int = 50,
):
    """50-bin normalized histograms of the predicted QoI at fixed locations."""
    idx = [nearest_grid_index(grid, p) for p in points]
    X = sampler(n_mc, seed)
    Y = mpce_predict(model, X)
    out = []
    for i in idx:
        density, edges = np.histogram(Y[:, i], bins=bins, density=True)
        out.append({"grid_index": i, "density": density, "edges": edges})
    return out
