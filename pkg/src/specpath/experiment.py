"""End-to-end runs: split, fit, score, and the sweep/benchmark harnesses.

Every harness returns plain row dictionaries so the CLI can emit them as CSV
or JSON for external plotting.
"""

from __future__ import annotations

import csv
import dataclasses
import logging
import math
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .baseline import fit_ridge_baseline
from .data_io import Dataset, SplitIndices, load_csv, nrmse_sigma, r2, split
from .errors import DataError, SpecPathError
from .greedy import FitConfig, fit, refit_amplitudes
from .model import SpectralModel

log = logging.getLogger(__name__)


@dataclass
class RunResult:
    model: SpectralModel
    indices: SplitIndices
    metrics: dict
    seconds: float


def score(model, X, y) -> dict:
    """R^2 and NRMSE_sigma; NaN where the metric is undefined (constant target)."""
    yhat = model.predict(X)
    out = {}
    for name, fn in (("r2", r2), ("nrmse", nrmse_sigma)):
        try:
            out[name] = fn(y, yhat)
        except SpecPathError:
            out[name] = math.nan
    return out


def split_metrics(model, data: Dataset, idx: SplitIndices) -> dict:
    metrics = {}
    for part in ("train", "val", "test"):
        rows = getattr(idx, part)
        for name, value in score(model, data.features[rows], data.target[rows]).items():
            metrics[f"{part}_{name}"] = value
    return metrics


def run(data: Dataset, config: FitConfig | None = None, seed: int | None = None) -> RunResult:
    """Split with ``seed`` (default ``config.seed``), fit on train/val, score all three."""
    config = config or FitConfig()
    if seed is not None and seed != config.seed:
        config = dataclasses.replace(config, seed=seed)
    idx = split(data.n_rows, config.seed)
    start = time.perf_counter()
    model = fit(
        (data.features[idx.train], data.target[idx.train]),
        (data.features[idx.val], data.target[idx.val]),
        config,
        feature_names=data.feature_names,
    )
    seconds = time.perf_counter() - start
    metrics = split_metrics(model, data, idx)
    metrics["n_paths"] = model.n_paths
    metrics["lambda_star"] = model.lambda_star
    return RunResult(model, idx, metrics, seconds)


def run_baseline(data: Dataset, config: FitConfig | None = None, seed: int | None = None) -> RunResult:
    config = config or FitConfig()
    seed = config.seed if seed is None else seed
    idx = split(data.n_rows, seed)
    start = time.perf_counter()
    model = fit_ridge_baseline(
        (data.features[idx.train], data.target[idx.train]),
        (data.features[idx.val], data.target[idx.val]),
        config.lambda_grid,
    )
    seconds = time.perf_counter() - start
    metrics = split_metrics(model, data, idx)
    metrics["n_paths"] = 0
    metrics["lambda_star"] = model.lam
    return RunResult(model, idx, metrics, seconds)


def lambda_sweep(data: Dataset, result: RunResult, grid) -> list[dict]:
    """Re-solve the fitted dictionary at each lambda and score every split."""
    tr = result.indices.train
    rows = []
    for lam in grid:
        model = refit_amplitudes(result.model, data.features[tr], data.target[tr], float(lam))
        rows.append({"lambda": float(lam), **split_metrics(model, data, result.indices)})
    return rows


def seed_sweep(data: Dataset, seeds, config: FitConfig | None = None) -> list[dict]:
    """One full fit per seed; a failing seed is reported, not raised."""
    rows = []
    for seed in seeds:
        try:
            res = run(data, config, seed=seed)
        except SpecPathError as exc:
            log.error("seed %d failed: %s", seed, exc)
            rows.append({"seed": seed, "status": f"error: {exc}"})
            continue
        rows.append({"seed": seed, "status": "ok", "seconds": res.seconds, **res.metrics})
    return rows


@dataclass(frozen=True)
class ManifestEntry:
    name: str
    path: Path
    target: str


def read_manifest(path) -> list[ManifestEntry]:
    """CSV with columns ``dataset,path,target``; paths are relative to the manifest."""
    path = Path(path)
    if not path.is_file():
        raise DataError(f"manifest not found: {path}")
    with path.open(newline="", encoding="utf-8-sig") as fh:
        reader = csv.DictReader(fh)
        missing = {"dataset", "path", "target"} - set(reader.fieldnames or ())
        if missing:
            raise DataError(f"manifest {path} lacks column(s): {', '.join(sorted(missing))}")
        entries = []
        for row in reader:
            p = Path(row["path"].strip())
            entries.append(
                ManifestEntry(row["dataset"].strip(), p if p.is_absolute() else path.parent / p,
                              row["target"].strip())
            )
    return entries


def benchmark(manifest, config: FitConfig | None = None, baseline: bool = False) -> list[dict]:
    """Fit every manifest dataset with defaults; failures become report rows."""
    rows = []
    for entry in read_manifest(manifest):
        row = {"dataset": entry.name}
        try:
            data = load_csv(entry.path, entry.target)
            row.update(N=data.n_rows, D=data.n_features)
            res = run(data, config)
            row.update(
                paths=res.model.n_paths,
                test_r2=res.metrics["test_r2"],
                seconds=res.seconds,
                status="ok",
            )
            if baseline:
                row["ridge_test_r2"] = run_baseline(data, config).metrics["test_r2"]
        except SpecPathError as exc:
            log.error("benchmark %s failed: %s", entry.name, exc)
            row["status"] = f"error: {exc}"
        rows.append(row)
    return rows


def to_builtin(value):
    if isinstance(value, np.generic):
        return value.item()
    return value
