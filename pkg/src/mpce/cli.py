"""Command-line front end.

Subcommands: `fields generate`, `solve`, `reduce`, `surrogate train`,
`surrogate predict`, `metrics eval`, `experiment run`, `uq moments`,
`uq pdf`. Global flags --seed / --threads / --out / --format apply where
meaningful; matrices travel as CSV or the MPCE binary block with a JSON
grid sidecar. Exit codes: 0 success, 1 validation or usage error,
2 runtime failure. Set MPCE_LOG to error|info|debug for logging.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import dataio, metrics
from .fields import FieldEnsemble
from .pce import PceSurrogate, pce_fit, pce_predict
from .pipeline import (
    BENCHMARKS,
    ExperimentConfig,
    PceParams,
    TrainedMpce,
    make_benchmark,
    pdf_at_points,
    propagate_moments,
    run_experiment,
    stage_seeds,
)
from .reducers import METHODS, ReducerParams, fit_reducer, load_reducer, save_reducer

log = logging.getLogger("mpce")


class ValidationError(Exception):
    """User input problem: exit code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ValidationError(message)


def _common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=None, help="override the RNG seed")
    parser.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                        help="worker thread cap for ensemble solves (default: cores)")
    parser.add_argument("--out", type=str, default=None, help="output file or directory")
    parser.add_argument("--format", choices=("csv", "bin"), default="csv",
                        help="matrix file format (default csv)")


def build_parser() -> _Parser:
    parser = _Parser(prog="mpce", description=__doc__.strip().splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p_fields = sub.add_parser("fields", help="stochastic field ensembles")
    sub_fields = p_fields.add_subparsers(dest="subcommand", required=True)
    p_gen = sub_fields.add_parser("generate", help="sample an input field ensemble")
    p_gen.add_argument("--benchmark", choices=BENCHMARKS, required=True)
    p_gen.add_argument("--n", type=int, required=True, help="number of realizations")
    p_gen.add_argument("--config", type=str, default=None,
                       help="experiment config JSON; its 'field' block overrides defaults")
    _common_flags(p_gen)

    p_solve = sub.add_parser("solve", help="run the forward model on an ensemble")
    p_solve.add_argument("--benchmark", choices=BENCHMARKS, required=True)
    p_solve.add_argument("--input", type=str, required=True, help="field ensemble file")
    p_solve.add_argument("--config", type=str, default=None)
    _common_flags(p_solve)

    p_reduce = sub.add_parser("reduce", help="fit a dimension-reduction model")
    p_reduce.add_argument("--method", choices=METHODS, required=True)
    p_reduce.add_argument("--d", type=int, required=True, help="target dimension")
    p_reduce.add_argument("--input", type=str, required=True, help="data matrix file")
    p_reduce.add_argument("--out-model", type=str, default=None, help="model JSON path")
    p_reduce.add_argument("--k-neighbors", type=int, default=10)
    p_reduce.add_argument("--bandwidth", type=float, default=None)
    p_reduce.add_argument("--kernel", choices=("linear", "polynomial", "gaussian"),
                          default="gaussian", help="kernel for kpca")
    p_reduce.add_argument("--perplexity", type=float, default=30.0)
    p_reduce.add_argument("--epochs", type=int, default=500)
    _common_flags(p_reduce)

    p_surr = sub.add_parser("surrogate", help="polynomial chaos surrogates")
    sub_surr = p_surr.add_subparsers(dest="subcommand", required=True)
    p_train = sub_surr.add_parser("train", help="fit a surrogate on reduced coordinates")
    p_train.add_argument("--input", type=str, required=True, help="embedding matrix file")
    p_train.add_argument("--responses", type=str, required=True, help="response matrix file")
    p_train.add_argument("--s-max", type=int, default=2)
    p_train.add_argument("--regression", choices=("ols", "ridge", "lasso"), default="ols")
    p_train.add_argument("--penalty", type=float, default=None)
    p_train.add_argument("--out-model", type=str, default=None, help="surrogate JSON path")
    _common_flags(p_train)
    p_pred = sub_surr.add_parser("predict", help="evaluate a trained surrogate")
    p_pred.add_argument("--model", type=str, required=True, help="surrogate JSON path")
    p_pred.add_argument("--input", type=str, required=True, help="embedding matrix file")
    _common_flags(p_pred)

    p_metrics = sub.add_parser("metrics", help="accuracy measures")
    sub_metrics = p_metrics.add_subparsers(dest="subcommand", required=True)
    p_eval = sub_metrics.add_parser("eval", help="relative L2 and R^2 per sample")
    p_eval.add_argument("--pred", type=str, required=True)
    p_eval.add_argument("--ref", type=str, required=True)
    _common_flags(p_eval)

    p_exp = sub.add_parser("experiment", help="full benchmark experiments")
    sub_exp = p_exp.add_subparsers(dest="subcommand", required=True)
    p_run = sub_exp.add_parser("run", help="run one experiment config end to end")
    p_run.add_argument("--config", type=str, required=True, help="experiment config JSON")
    p_run.add_argument("--save-predictions", action="store_true")
    _common_flags(p_run)

    p_uq = sub.add_parser("uq", help="uncertainty propagation with a trained model")
    sub_uq = p_uq.add_subparsers(dest="subcommand", required=True)
    p_mom = sub_uq.add_parser("moments", help="surrogate mean/variance/95% band")
    p_mom.add_argument("--config", type=str, required=True)
    p_mom.add_argument("--model", type=str, required=True, help="model.json from experiment run")
    p_mom.add_argument("--n-mc", type=int, default=10_000)
    _common_flags(p_mom)
    p_pdf = sub_uq.add_parser("pdf", help="QoI histogram densities at fixed points")
    p_pdf.add_argument("--config", type=str, required=True)
    p_pdf.add_argument("--model", type=str, required=True)
    p_pdf.add_argument("--points", type=str, required=True,
                       help="semicolon-separated coordinates, e.g. '0.323,0.645;0.806,0.258'")
    p_pdf.add_argument("--n-mc", type=int, default=10_000)
    p_pdf.add_argument("--bins", type=int, default=50)
    _common_flags(p_pdf)

    return parser


def _load_config(path: str, seed_override: int | None) -> ExperimentConfig:
    p = Path(path)
    if not p.exists():
        raise ValidationError(f"config file not found: {p}")
    try:
        raw = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"config file {p} is not valid JSON: {exc}") from exc
    try:
        cfg = ExperimentConfig.from_dict(raw)
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"bad config {p}: {exc}") from exc
    if seed_override is not None:
        cfg.seed = seed_override
    return cfg


def _out_path(args, default: str) -> Path:
    return Path(args.out) if args.out else Path(default)


def _cmd_fields_generate(args) -> int:
    field_cfg = {}
    if args.config:
        field_cfg = _load_config(args.config, None).field
    bench = make_benchmark(args.benchmark, field_cfg)
    seed = args.seed if args.seed is not None else 0
    X = bench.sample_inputs(args.n, seed)
    out = _out_path(args, f"fields_{args.benchmark}.{args.format}")
    prov = {"poisson1d": "kle-uniform", "heat2d": "kle-gaussian", "brusselator": "srm-gaussian"}
    ens = FieldEnsemble(grid=bench.grid, values=X, provenance=prov[args.benchmark], seed=seed)
    dataio.save_ensemble(out, ens, args.format)
    log.info("wrote %d x %d ensemble to %s", X.shape[0], X.shape[1], out)
    print(out)
    return 0


def _cmd_solve(args) -> int:
    field_cfg = {}
    if args.config:
        field_cfg = _load_config(args.config, None).field
    bench = make_benchmark(args.benchmark, field_cfg)
    src = Path(args.input)
    if not src.exists():
        raise ValidationError(f"input file not found: {src}")
    X = dataio.read_matrix(src)
    Y = bench.solve(X, threads=max(args.threads, 1))
    out = _out_path(args, f"responses_{args.benchmark}.{args.format}")
    dataio.write_matrix(out, Y, args.format)
    sidecar = {"benchmark": args.benchmark, "rows": int(Y.shape[0]), "cols": int(Y.shape[1])}
    if args.benchmark == "brusselator":
        sidecar["snapshot_times"] = list(
            map(float, np.asarray(bench.cfg["horizon"], dtype=float)
                * np.arange(1, int(bench.cfg["snapshots"]) + 1) / int(bench.cfg["snapshots"]))
        )
    dataio.save_json(dataio.sidecar_path(out), sidecar)
    log.info("solved %d samples -> %s", Y.shape[0], out)
    print(out)
    return 0


def _cmd_reduce(args) -> int:
    src = Path(args.input)
    if not src.exists():
        raise ValidationError(f"input file not found: {src}")
    X = dataio.read_matrix(src)
    params = ReducerParams(
        method=args.method,
        d=args.d,
        kernel=args.kernel,
        bandwidth=args.bandwidth,
        k_neighbors=args.k_neighbors,
        perplexity=args.perplexity,
        epochs=args.epochs,
        seed=args.seed if args.seed is not None else 0,
    )
    model = fit_reducer(X, params)
    Z = model.training_embedding
    out = _out_path(args, f"embedding_{args.method}.{args.format}")
    dataio.write_matrix(out, Z, args.format)
    model_path = Path(args.out_model) if args.out_model else out.with_suffix(".model.json")
    save_reducer(model_path, model)
    log.info("fit %s (d=%d) on %s; embedding -> %s, model -> %s",
             args.method, model.d, src, out, model_path)
    print(out)
    return 0


def _cmd_surrogate_train(args) -> int:
    for path in (args.input, args.responses):
        if not Path(path).exists():
            raise ValidationError(f"input file not found: {path}")
    Z = dataio.read_matrix(args.input)
    Y = dataio.read_matrix(args.responses)
    model = pce_fit(Z, Y, s_max=args.s_max, regression=args.regression, penalty=args.penalty)
    out = Path(args.out_model) if args.out_model else _out_path(args, "surrogate.json")
    dataio.save_json(out, model.to_dict())
    log.info("trained PCE (k=%d, s_max=%d, S=%d) -> %s", model.mset.k, model.mset.s_max,
             model.mset.size, out)
    print(out)
    return 0


def _cmd_surrogate_predict(args) -> int:
    for path in (args.model, args.input):
        if not Path(path).exists():
            raise ValidationError(f"input file not found: {path}")
    model = PceSurrogate.from_dict(dataio.load_json(args.model))
    Z = dataio.read_matrix(args.input)
    Y = pce_predict(model, Z)
    out = _out_path(args, f"predictions.{args.format}")
    dataio.write_matrix(out, Y, args.format)
    print(out)
    return 0


def _cmd_metrics_eval(args) -> int:
    for path in (args.pred, args.ref):
        if not Path(path).exists():
            raise ValidationError(f"input file not found: {path}")
    pred = dataio.read_matrix(args.pred)
    ref = dataio.read_matrix(args.ref)
    report = metrics.evaluate(pred, ref)
    out = _out_path(args, "metrics.csv")
    report.write_csv(out)
    dataio.save_json(Path(str(out) + ".summary.json"), report.summary)
    print(json.dumps(report.summary["overall"], sort_keys=True))
    return 0


def _cmd_experiment_run(args) -> int:
    cfg = _load_config(args.config, args.seed)
    out_dir = _out_path(args, "results")
    result = run_experiment(
        cfg,
        out_dir=out_dir,
        threads=max(args.threads, 1),
        save_predictions=args.save_predictions,
        fmt=args.format,
    )
    line = {
        "benchmark": cfg.benchmark,
        "rel_l2_mean": result.report.summary["overall"]["rel_l2_mean"],
        "r2_mean": result.report.summary["overall"]["r2_mean"],
    }
    if result.ood_report is not None:
        line["ood_rel_l2_mean"] = result.ood_report.summary["overall"]["rel_l2_mean"]
    print(json.dumps(line, sort_keys=True))
    return 0


def _load_model(path: str) -> TrainedMpce:
    p = Path(path)
    if not p.exists():
        raise ValidationError(f"model file not found: {p}")
    return TrainedMpce.from_dict(dataio.load_json(p))


def _cmd_uq_moments(args) -> int:
    cfg = _load_config(args.config, args.seed)
    model = _load_model(args.model)
    bench = make_benchmark(cfg.benchmark, cfg.field)
    seeds = stage_seeds(cfg.seed)
    mean, var, band = propagate_moments(model, bench.sample_inputs, args.n_mc, seeds["mc"])
    out_dir = _out_path(args, "uq")
    out_dir.mkdir(parents=True, exist_ok=True)
    dataio.write_matrix(out_dir / f"moments.{args.format}",
                        np.vstack([mean, var, band[0], band[1]]), args.format)
    dataio.save_json(out_dir / "moments.json", {
        "rows": ["mean", "variance", "p2.5", "p97.5"],
        "n_mc": args.n_mc,
        "seed": seeds["mc"],
    })
    print(out_dir / f"moments.{args.format}")
    return 0


def _parse_points(text: str) -> list[tuple[float, ...]]:
    points = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        try:
            points.append(tuple(float(v) for v in chunk.split(",")))
        except ValueError as exc:
            raise ValidationError(f"bad point {chunk!r}: {exc}") from exc
    if not points:
        raise ValidationError("no points given")
    return points


def _cmd_uq_pdf(args) -> int:
    cfg = _load_config(args.config, args.seed)
    model = _load_model(args.model)
    bench = make_benchmark(cfg.benchmark, cfg.field)
    seeds = stage_seeds(cfg.seed)
    points = _parse_points(args.points)
    try:
        hists = pdf_at_points(model, bench.sample_inputs, points, bench.grid,
                              args.n_mc, seeds["mc"], bins=args.bins)
    except ValueError as exc:
        raise ValidationError(str(exc)) from exc
    out_dir = _out_path(args, "uq")
    out_dir.mkdir(parents=True, exist_ok=True)
    payload = []
    for point, h in zip(points, hists):
        payload.append({
            "point": list(point),
            "grid_index": h["grid_index"],
            "density": list(map(float, h["density"])),
            "edges": list(map(float, h["edges"])),
        })
    dataio.save_json(out_dir / "pdf.json", {"n_mc": args.n_mc, "bins": args.bins,
                                            "histograms": payload})
    print(out_dir / "pdf.json")
    return 0


_DISPATCH = {
    ("fields", "generate"): _cmd_fields_generate,
    ("solve", None): _cmd_solve,
    ("reduce", None): _cmd_reduce,
    ("surrogate", "train"): _cmd_surrogate_train,
    ("surrogate", "predict"): _cmd_surrogate_predict,
    ("metrics", "eval"): _cmd_metrics_eval,
    ("experiment", "run"): _cmd_experiment_run,
    ("uq", "moments"): _cmd_uq_moments,
    ("uq", "pdf"): _cmd_uq_pdf,
}


def main(argv: list[str] | None = None) -> int:
    level = os.environ.get("MPCE_LOG", "error").lower()
    if level not in ("error", "info", "debug"):
        level = "error"
    logging.basicConfig(level=getattr(logging, level.upper()),
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        handler = _DISPATCH[(args.command, getattr(args, "subcommand", None))]
        return handler(args)
    except SystemExit as exc:  # argparse -h/--help
        return int(exc.code or 0)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # runtime failure
        log.debug("unhandled failure", exc_info=True)
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 2


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
