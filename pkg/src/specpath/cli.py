"""Command-line interface.

Exit codes: 0 success, 1 usage or configuration error, 2 data/model file
error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .data_io import Dataset, load_csv, load_model, nrmse_sigma, r2, save_model, split, write_jsonl
from .errors import DataError, SpecPathError, UndefinedMetricError
from .experiment import benchmark, lambda_sweep, run, run_baseline, seed_sweep
from .greedy import DEFAULT_LAMBDA_GRID, FitConfig, capacity_curve
from .interpret import render_expression, sensitivity_report

log = logging.getLogger("specpath")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERICAL = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _float_list(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _seed_range(text: str) -> list[int]:
    if "-" in text.strip("-") and "," not in text:
        lo, hi = text.split("-", 1)
        return list(range(int(lo), int(hi) + 1))
    return list(_int_list(text))


def _add_fit_flags(p):
    p.add_argument("--seed", type=int, default=42, help="split seed (default 42)")
    p.add_argument("--max-paths", type=int, default=512)
    p.add_argument("--k-set", type=_int_list, default=(1, 2, 3, 4), help="e.g. 1,2,3,4")
    p.add_argument("--lambda-grid", type=_float_list, default=DEFAULT_LAMBDA_GRID)
    p.add_argument("--block-size", type=int, default=8)
    p.add_argument("--patience", type=int, default=3)
    p.add_argument("--min-improvement", type=float, default=1e-4)
    p.add_argument("--no-resweep", action="store_true", help="skip the final lambda resweep")


def _add_format(p, choices=("text", "json"), default="text"):
    p.add_argument("--format", choices=choices, default=default)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="specpath", description="Sparse spectral path regression for tables.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("fit", help="fit a model on a CSV file")
    p.add_argument("--data", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--model", help="output model JSON (default: <data stem>.model.json)")
    p.add_argument("--trace", help="output fit trace JSON lines (default: <model>.trace.jsonl)")
    p.add_argument("--baseline", choices=("ridge",), help="fit the linear reference instead")
    _add_fit_flags(p)
    _add_format(p)

    p = sub.add_parser("predict", help="write predictions for a CSV file")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", help="predictions CSV (default: stdout)")

    p = sub.add_parser("eval", help="score a model against a target column")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--split", choices=("all", "train", "val", "test"), default="all")
    p.add_argument("--seed", type=int, default=42)
    _add_format(p)

    p = sub.add_parser("explain", help="print the fitted model as an expression")
    p.add_argument("--model", required=True)
    p.add_argument("--top", type=int, default=12)
    p.add_argument("--data", help="also print feature importances on this file")
    p.add_argument("--target", help="target column to exclude from the features")
    p.add_argument("--split", choices=("all", "train", "val", "test"), default="train")
    p.add_argument("--seed", type=int, default=42)

    p = sub.add_parser("importance", help="normalised sensitivity-based importances")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--target", help="target column to exclude from the features")
    p.add_argument("--split", choices=("all", "train", "val", "test"), default="train")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--out", help="CSV of feature,importance for plotting")
    _add_format(p)

    p = sub.add_parser("trace-report", help="per-iteration fit trace and capacity curve")
    p.add_argument("--model", required=True)
    p.add_argument("--data", help="with --target, add the capacity curve on the fit splits")
    p.add_argument("--target")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--out")
    _add_format(p, ("csv", "json"), "csv")

    p = sub.add_parser("benchmark", help="fit every dataset listed in a manifest")
    p.add_argument("--manifest", required=True, help="CSV with columns dataset,path,target")
    p.add_argument("--out")
    p.add_argument("--baseline", choices=("ridge",), help="add a ridge test R^2 column")
    _add_fit_flags(p)
    _add_format(p, ("csv", "json"), "csv")

    p = sub.add_parser("sweep", help="lambda sweep at a fixed dictionary, or a seed sweep")
    p.add_argument("--mode", choices=("lambda", "seeds"), required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--seeds", type=_seed_range, default=list(range(10)), help="e.g. 0-9")
    p.add_argument("--out")
    _add_fit_flags(p)
    _add_format(p, ("csv", "json"), "csv")
    return parser


def config_from_args(args) -> FitConfig:
    return FitConfig(
        sparsity_set=args.k_set,
        max_paths=args.max_paths,
        block_size=args.block_size,
        lambda_grid=tuple(sorted(args.lambda_grid)),
        patience=args.patience,
        min_improvement=args.min_improvement,
        final_resweep=not args.no_resweep,
        seed=args.seed,
    )


def _features_for(model, path, target=None) -> Dataset:
    """Load a CSV and pick the model's feature columns, in the model's order."""
    names = model.feature_names
    if names is not None:
        data = load_csv(path, target, feature_columns=list(names))
    else:
        data = load_csv(path, target)
    if data.n_features != model.dimension:
        raise DataError(
            f"model expects {model.dimension} features but {path} provides {data.n_features}"
        )
    return data


def _rows_for(data: Dataset, which: str, seed: int) -> Dataset:
    if which == "all":
        return data
    return data.subset(getattr(split(data.n_rows, seed), which))


def _fmt(v) -> str:
    if isinstance(v, float):
        return "nan" if math.isnan(v) else f"{v:.6g}"
    return str(v)


def _emit_table(rows: list[dict], fmt: str, out: str | None) -> None:
    if fmt == "json":
        text = json.dumps(rows, indent=2, allow_nan=True) + "\n"
    else:
        fields = []
        for row in rows:
            fields += [k for k in row if k not in fields]
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n", restval="")
        writer.writeheader()
        writer.writerows(rows)
        text = buf.getvalue()
    if out:
        Path(out).write_text(text, encoding="utf-8")
        log.info("wrote %d rows to %s", len(rows), out)
    else:
        sys.stdout.write(text)


def _print_metrics(metrics: dict, extra: dict, fmt: str) -> None:
    if fmt == "json":
        print(json.dumps({**extra, **metrics}, indent=2))
        return
    for k, v in extra.items():
        print(f"{k}: {_fmt(v)}")
    for part in ("train", "val", "test"):
        if f"{part}_r2" in metrics:
            print(f"{part:5s}  R2 {_fmt(metrics[f'{part}_r2'])}  NRMSE {_fmt(metrics[f'{part}_nrmse'])}")


def cmd_fit(args) -> int:
    data = load_csv(args.data, args.target)
    config = config_from_args(args)
    if args.baseline == "ridge":
        res = run_baseline(data, config)
        _print_metrics(res.metrics, {"model": "ridge", "lambda": res.model.lam,
                                     "seconds": round(res.seconds, 3)}, args.format)
        return EXIT_OK
    res = run(data, config)
    model_path = Path(args.model) if args.model else Path(args.data).with_suffix(".model.json")
    trace_path = Path(args.trace) if args.trace else model_path.with_suffix(".trace.jsonl")
    save_model(res.model, model_path)
    write_jsonl(res.model.fit_trace, trace_path)
    extra = {
        "model": str(model_path),
        "paths": res.model.n_paths,
        "lambda": res.model.lambda_star,
        "seconds": round(res.seconds, 3),
    }
    _print_metrics(res.metrics, extra, args.format)
    return EXIT_OK


def cmd_predict(args) -> int:
    model = load_model(args.model)
    data = _features_for(model, args.data)
    yhat = model.predict(data.features)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["prediction"])
    writer.writerows([repr(float(v))] for v in yhat)
    if args.out:
        Path(args.out).write_text(buf.getvalue(), encoding="utf-8")
    else:
        sys.stdout.write(buf.getvalue())
    return EXIT_OK


def cmd_eval(args) -> int:
    model = load_model(args.model)
    data = _rows_for(_features_for(model, args.data, args.target), args.split, args.seed)
    yhat = model.predict(data.features)
    metrics = {"n": data.n_rows, "r2": r2(data.target, yhat)}
    try:
        metrics["nrmse"] = nrmse_sigma(data.target, yhat)
    except UndefinedMetricError:
        metrics["nrmse"] = math.nan
    if args.format == "json":
        print(json.dumps(metrics, indent=2))
    else:
        print(f"rows {metrics['n']}  R2 {_fmt(metrics['r2'])}  NRMSE {_fmt(metrics['nrmse'])}")
    return EXIT_OK


def _importance_dict(model, args) -> tuple[dict, bool]:
    data = _rows_for(_features_for(model, args.data, args.target), args.split, args.seed)
    report = sensitivity_report(model, data.features)
    names = model.feature_names or data.feature_names
    return {n: float(v) for n, v in zip(names, report.importance)}, report.degenerate


def cmd_explain(args) -> int:
    model = load_model(args.model)
    print(render_expression(model, top_n=args.top))
    if args.data:
        scores, _ = _importance_dict(model, args)
        print(json.dumps(scores, indent=2))
    return EXIT_OK


def cmd_importance(args) -> int:
    model = load_model(args.model)
    scores, degenerate = _importance_dict(model, args)
    if args.out:
        _emit_table([{"feature": k, "importance": v} for k, v in scores.items()], "csv", args.out)
    if args.format == "json":
        print(json.dumps({"importance": scores, "degenerate": degenerate}, indent=2))
    else:
        width = max(len(k) for k in scores)
        for k, v in sorted(scores.items(), key=lambda kv: -kv[1]):
            print(f"{k:<{width}}  {100.0 * v:6.2f}%")
        if degenerate:
            print("(all sensitivities are zero; importances set to uniform)")
    return EXIT_OK


def cmd_trace_report(args) -> int:
    model = load_model(args.model)
    rows = [dict(r, kind="trace") for r in model.fit_trace]
    if args.data:
        if not args.target:
            raise UsageError("--data requires --target for the capacity curve")
        data = _features_for(model, args.data, args.target)
        idx = split(data.n_rows, args.seed)
        curve = capacity_curve(
            model,
            data.features[idx.train], data.target[idx.train],
            data.features[idx.val], data.target[idx.val],
        )
        rows += [dict(r, kind="capacity") for r in curve]
    rows = [{k: (json.dumps(v) if isinstance(v, (list, dict)) else v) for k, v in r.items()}
            for r in rows]
    _emit_table(rows, args.format, args.out)
    return EXIT_OK


def cmd_benchmark(args) -> int:
    rows = benchmark(args.manifest, config_from_args(args), baseline=args.baseline == "ridge")
    _emit_table(rows, args.format, args.out)
    return EXIT_OK


def cmd_sweep(args) -> int:
    data = load_csv(args.data, args.target)
    config = config_from_args(args)
    if args.mode == "lambda":
        res = run(data, config)
        rows = lambda_sweep(data, res, config.lambda_grid)
    else:
        rows = seed_sweep(data, args.seeds, config)
    _emit_table(rows, args.format, args.out)
    return EXIT_OK


COMMANDS = {
    "fit": cmd_fit,
    "predict": cmd_predict,
    "eval": cmd_eval,
    "explain": cmd_explain,
    "importance": cmd_importance,
    "trace-report": cmd_trace_report,
    "benchmark": cmd_benchmark,
    "sweep": cmd_sweep,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose > 1 else logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    start = time.perf_counter()
    try:
        code = COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"specpath: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SpecPathError as exc:
        print(f"specpath: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except np.linalg.LinAlgError as exc:
        print(f"specpath: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    log.debug("%s finished in %.3f s", args.command, time.perf_counter() - start)
    return code


if __name__ == "__main__":
    sys.exit(main())
