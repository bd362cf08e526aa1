"""Command-line surface: estimate, test-submodel, stdf-eval, simulate, study.

Output is machine-first JSON/CSV; every run echoes its fully resolved
configuration for reproducibility. Exit codes: 0 success, 2 data errors,
3 fit failures, 4 inference failures; errors are emitted as a JSON object
with a machine-readable reason on stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace

import numpy as np

from .core import DataError, EstimationConfig, Sample, WeightSpec, compute_ranks, read_csv, write_csv
from .empirical import EmpiricalStdf
from .estimator import FitError, fit
from .families import (
    AsymmetricLogisticFamily,
    FactorFamily,
    LogisticFamily,
    SymmetricLogisticFamily,
    default_weights,
)
from .harness import run_coverage_study, run_derived_quantity_study, run_study
from .inference import InferenceError, submodel_test, with_covariance
from .samplers import sample_asymmetric_logistic, sample_factor, sample_from_family, sample_logistic

EXIT_OK = 0
EXIT_DATA = 2
EXIT_FIT = 3
EXIT_INFERENCE = 4


class CliError(Exception):
    def __init__(self, code: int, reason: str, detail: str):
        super().__init__(detail)
        self.code = code
        self.reason = reason
        self.detail = detail


def _fail(code: int, reason: str, detail: str):
    raise CliError(code, reason, detail)


def _parse_model(text: str, d: int):
    text = text.strip().lower()
    if text == "logistic":
        return LogisticFamily(d=d)
    if text == "alog":
        if d != 2:
            _fail(EXIT_DATA, "dimension", f"alog needs d=2 data, got d={d}")
        return AsymmetricLogisticFamily()
    if text == "symlog":
        if d != 2:
            _fail(EXIT_DATA, "dimension", f"symlog needs d=2 data, got d={d}")
        return SymmetricLogisticFamily()
    if text.startswith("factor:"):
        try:
            r = int(text.split(":", 1)[1])
        except ValueError:
            _fail(EXIT_DATA, "model-spec", f"cannot parse factor count in {text!r}")
        return FactorFamily(d=d, r=r)
    _fail(EXIT_DATA, "model-spec", f"unknown model {text!r}; use logistic|alog|symlog|factor:R")


def _k_values(args) -> list[int]:
    if getattr(args, "k", None) is not None:
        return [args.k]
    if getattr(args, "k_grid", None):
        try:
            return [int(v) for v in args.k_grid.split(",") if v.strip()]
        except ValueError:
            _fail(EXIT_DATA, "k-grid", f"cannot parse --k-grid {args.k_grid!r}")
    _fail(EXIT_DATA, "k", "either --k or --k-grid is required")


def _load_sample(path) -> Sample:
    try:
        return read_csv(path)
    except (DataError, OSError) as exc:
        _fail(EXIT_DATA, "data", str(exc))


def _weights_for(args, family) -> WeightSpec:
    if args.g:
        try:
            return WeightSpec.parse(args.g, family.d)
        except ValueError as exc:
            _fail(EXIT_DATA, "weights", str(exc))
    return default_weights(family)


def _config(args, k: int) -> EstimationConfig:
    return EstimationConfig(k=k, seed=args.seed, restarts=args.restarts)


def _emit(payload: dict, out_path) -> None:
    text = json.dumps(payload, indent=2)
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def cmd_estimate(args) -> int:
    sample = _load_sample(args.data)
    family = _parse_model(args.model, sample.d)
    weights = _weights_for(args, family)
    ranks = compute_ranks(sample)
    results = []
    for k in _k_values(args):
        if not 1 <= k < sample.n:
            _fail(EXIT_DATA, "k", f"k={k} outside 1..n-1 (n={sample.n})")
        cfg = _config(args, k)
        try:
            res = fit(ranks, family, cfg, weights)
        except FitError as exc:
            _fail(EXIT_FIT, "fit", f"k={k}: {exc}")
        try:
            res = with_covariance(res, family, weights, cfg)
        except InferenceError as exc:
            _fail(EXIT_INFERENCE, "inference", f"k={k}: {exc}")
        results.append(res.to_json())
    _emit(
        {
            "command": "estimate",
            "config": {
                "data": str(args.data),
                "model": args.model,
                "k_values": _k_values(args),
                "weights": weights.describe(),
                "seed": args.seed,
                "restarts": args.restarts,
                "n": sample.n,
                "d": sample.d,
            },
            "results": results,
        },
        args.out,
    )
    return EXIT_OK


def cmd_test_submodel(args) -> int:
    sample = _load_sample(args.data)
    family = _parse_model(args.model, sample.d)
    null = args.null.strip().lower().replace(" ", "")
    if null != "eta2=0":
        _fail(EXIT_DATA, "null", f"unsupported null {args.null!r}; only 'eta2=0' is available")
    if not isinstance(family, AsymmetricLogisticFamily):
        _fail(EXIT_DATA, "model-spec", "the symmetry test needs --model alog")
    weights = _weights_for(args, family)
    ranks = compute_ranks(sample)
    rows = []
    for k in _k_values(args):
        cfg = _config(args, k)
        try:
            res = submodel_test(family, ranks, [0.0], cfg, weights)
        except FitError as exc:
            _fail(EXIT_FIT, "fit", f"k={k}: {exc}")
        except InferenceError as exc:
            _fail(EXIT_INFERENCE, "inference", f"k={k}: {exc}")
        rows.append(res.to_json())
    _emit(
        {
            "command": "test-submodel",
            "config": {
                "data": str(args.data),
                "model": args.model,
                "null": "eta2=0",
                "k_values": _k_values(args),
                "weights": weights.describe(),
                "seed": args.seed,
            },
            "results": rows,
        },
        args.out,
    )
    return EXIT_OK


def cmd_stdf_eval(args) -> int:
    sample = _load_sample(args.data)
    points = _load_sample(args.points) if args.points else None
    if points is not None and points.d != sample.d:
        _fail(EXIT_DATA, "points", f"points have d={points.d}, data has d={sample.d}")
    if not 1 <= args.k < sample.n:
        _fail(EXIT_DATA, "k", f"k={args.k} outside 1..n-1 (n={sample.n})")
    est = EmpiricalStdf.from_ranks(compute_ranks(sample), args.k)
    pts = points.data if points is not None else np.eye(sample.d)
    values = est(pts)
    _emit(
        {
            "command": "stdf-eval",
            "config": {"data": str(args.data), "k": args.k, "points": str(args.points)},
            "points": pts.tolist(),
            "values": np.atleast_1d(values).tolist(),
        },
        args.out,
    )
    return EXIT_OK


def cmd_simulate(args) -> int:
    model = args.model.strip().lower()
    if model == "logistic":
        if args.theta is None:
            _fail(EXIT_DATA, "params", "--theta required for logistic")
        sample = sample_logistic(args.theta, args.d, args.n, args.seed)
    elif model == "alog":
        if None in (args.theta, args.psi1, args.psi2):
            _fail(EXIT_DATA, "params", "--theta --psi1 --psi2 required for alog")
        sample = sample_asymmetric_logistic(args.theta, args.psi1, args.psi2, args.n, args.seed)
    elif model.startswith("factor:"):
        if not args.loadings:
            _fail(EXIT_DATA, "params", "--loadings JSON required for factor models")
        loadings = np.asarray(json.loads(args.loadings), dtype=float)
        sample = sample_factor(loadings, args.nu, args.n, args.seed, form=args.form)
    else:
        _fail(EXIT_DATA, "model-spec", f"unknown model {args.model!r}")
    write_csv(args.out, sample.data)
    meta = {
        "command": "simulate",
        "config": {k: v for k, v in vars(args).items() if k not in ("func",)},
        "written": str(args.out),
        "shape": [sample.n, sample.d],
    }
    print(json.dumps(meta, indent=2))
    return EXIT_OK


def _study_family(spec: dict):
    kind = spec["family"].strip().lower()
    d = int(spec.get("d", 2))
    if kind == "logistic":
        return LogisticFamily(d=d)
    if kind == "alog":
        return AsymmetricLogisticFamily()
    if kind == "symlog":
        return SymmetricLogisticFamily()
    if kind == "factor":
        return FactorFamily(d=d, r=int(spec["r"]))
    _fail(EXIT_DATA, "study-config", f"unknown family {spec['family']!r}")


def cmd_study(args) -> int:
    try:
        with open(args.config) as fh:
            spec = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        _fail(EXIT_DATA, "study-config", str(exc))
    family = _study_family(spec)
    theta0 = np.asarray(spec["theta0"], dtype=float)
    weights = (
        WeightSpec.parse(spec["g"], family.d) if spec.get("g") else default_weights(family)
    )
    cfg = EstimationConfig(
        k=1, seed=int(spec.get("seed", 0)), restarts=int(spec.get("restarts", 5))
    )
    kind = spec.get("kind", "bias-rmse")
    if kind == "bias-rmse":
        report = run_study(
            family,
            theta0,
            n=int(spec["n"]),
            reps=int(spec["reps"]),
            k_grid=spec["k_grid"],
            weights=weights,
            seed=int(spec.get("seed", 0)),
            config=cfg,
        )
        if args.out:
            report.to_csv(args.out)
        summary = report.summary()
    elif kind == "coverage":
        out = run_coverage_study(
            family,
            theta0,
            n=int(spec["n"]),
            reps=int(spec["reps"]),
            k=int(spec["k"]),
            level=float(spec.get("level", 0.95)),
            weights=weights,
            seed=int(spec.get("seed", 0)),
            config=cfg,
        )
        out = dict(out)
        out["statistics"] = out["statistics"].tolist()
        summary = out
    else:
        _fail(EXIT_DATA, "study-config", f"unknown study kind {kind!r}")
    print(json.dumps({"command": "study", "config": spec, "summary": summary}, indent=2))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="taildep", description="Rank-based tail dependence estimation"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    est = sub.add_parser("estimate", help="fit a parametric tail dependence model")
    est.add_argument("--data", required=True)
    est.add_argument("--model", required=True, help="logistic|alog|symlog|factor:R")
    est.add_argument("--k", type=int)
    est.add_argument("--k-grid", dest="k_grid")
    est.add_argument("--g", help="semicolon-separated weight functions, e.g. '1;x1'")
    est.add_argument("--seed", type=int, default=0)
    est.add_argument("--restarts", type=int, default=5)
    est.add_argument("--out")
    est.set_defaults(func=cmd_estimate)

    tst = sub.add_parser("test-submodel", help="Wald test of a parameter sub-vector")
    tst.add_argument("--data", required=True)
    tst.add_argument("--model", required=True)
    tst.add_argument("--null", required=True, help="currently 'eta2=0' (symmetry)")
    tst.add_argument("--k", type=int)
    tst.add_argument("--k-grid", dest="k_grid")
    tst.add_argument("--g")
    tst.add_argument("--seed", type=int, default=0)
    tst.add_argument("--restarts", type=int, default=5)
    tst.add_argument("--out")
    tst.set_defaults(func=cmd_test_submodel)

    sev = sub.add_parser("stdf-eval", help="evaluate the empirical stdf at points")
    sev.add_argument("--data", required=True)
    sev.add_argument("--k", type=int, required=True)
    sev.add_argument("--points", help="CSV of evaluation points (default: unit vectors)")
    sev.add_argument("--out")
    sev.set_defaults(func=cmd_stdf_eval)

    sim = sub.add_parser("simulate", help="draw from a family's max-stable law")
    sim.add_argument("--model", required=True)
    sim.add_argument("--n", type=int, required=True)
    sim.add_argument("--d", type=int, default=2)
    sim.add_argument("--theta", type=float)
    sim.add_argument("--psi1", type=float)
    sim.add_argument("--psi2", type=float)
    sim.add_argument("--loadings", help="JSON (d x r) matrix for factor models")
    sim.add_argument("--nu", type=float, default=1.0)
    sim.add_argument("--form", choices=["max", "sum"], default="max")
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--out", required=True)
    sim.set_defaults(func=cmd_simulate)

    stu = sub.add_parser("study", help="run a replication study from a JSON config")
    stu.add_argument("--config", required=True)
    stu.add_argument("--out", help="tidy CSV destination for bias/RMSE studies")
    stu.set_defaults(func=cmd_study)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(json.dumps({"error": exc.reason, "detail": exc.detail}), file=sys.stderr)
        return exc.code
    except DataError as exc:
        print(json.dumps({"error": "data", "detail": str(exc)}), file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
