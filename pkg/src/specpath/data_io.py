"""CSV ingestion, seeded 60:20:20 splits, metrics and model (de)serialisation."""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, DataError, SchemaError, UndefinedMetricError, VersionError
from .paths import FrequencyVector
from .preprocessing import ScalingParams

log = logging.getLogger(__name__)

FORMAT_VERSION = 1
_MASK64 = (1 << 64) - 1


@dataclass
class Dataset:
    features: np.ndarray
    target: np.ndarray
    feature_names: list[str]
    target_name: str
    n_dropped: int = 0

    def __post_init__(self):
        if self.features.shape[0] != self.target.shape[0]:
            raise DataError(
                f"{self.features.shape[0]} feature rows but {self.target.shape[0]} targets"
            )
        if len(self.feature_names) != self.features.shape[1]:
            raise DataError("feature_names does not match the number of columns")

    @property
    def n_rows(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx, dtype=np.intp)
        return Dataset(
            self.features[idx], self.target[idx], list(self.feature_names), self.target_name
        )


def _is_missing(cell: str) -> bool:
    s = cell.strip()
    return s == "" or s.lower() in ("nan", "na", "n/a", "null", "?")


def read_table(path, required: str | None = None) -> tuple[list[str], list[tuple[int, list[str]]]]:
    """Header and ``(line_number, cells)`` rows of an RFC-4180 file."""
    path = Path(path)
    if not path.is_file():
        raise DataError(f"data file not found: {path}")
    with path.open(newline="", encoding="utf-8-sig") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path} is empty; a header row is required") from None
        rows = []
        for cells in reader:
            if not cells or all(not c.strip() for c in cells):
                continue
            rows.append((reader.line_num, cells))
    if required is not None and required not in header:
        raise DataError(
            f"target column {required!r} not found in {path}; available columns: "
            + ", ".join(header)
        )
    return header, rows


def load_csv(path, target_column: str | None, feature_columns: list[str] | None = None) -> Dataset:
    """Read a numeric table; rows with empty or NaN cells are dropped and counted.

    With ``target_column=None`` the target vector is filled with NaN (prediction
    inputs).  ``feature_columns`` selects and orders the features; by default
    every non-target column is a feature.
    """
    header, rows = read_table(path, target_column)
    if len(set(header)) != len(header):
        raise DataError(f"duplicate column names in {path}")
    if feature_columns is None:
        feature_columns = [h for h in header if h != target_column]
    else:
        missing = [c for c in feature_columns if c not in header]
        if missing:
            raise DataError(
                f"feature columns {missing} not found in {path}; available columns: "
                + ", ".join(header)
            )
    if not feature_columns:
        raise DataError(f"{path} has no feature columns")
    col_idx = [header.index(c) for c in feature_columns]
    if target_column is not None:
        col_idx.append(header.index(target_column))

    kept, dropped = [], 0
    for line, cells in rows:
        if len(cells) != len(header):
            raise DataError(
                f"{path}, line {line}: expected {len(header)} cells, found {len(cells)}"
            )
        picked = [cells[i] for i in col_idx]
        if any(_is_missing(c) for c in picked):
            dropped += 1
            continue
        values = []
        for i, c in zip(col_idx, picked):
            try:
                v = float(c.strip())
            except ValueError:
                raise DataError(
                    f"{path}, line {line}: non-numeric value {c!r} in column {header[i]!r}"
                ) from None
            if not math.isfinite(v):
                raise DataError(
                    f"{path}, line {line}: non-finite value {c!r} in column {header[i]!r}"
                )
            values.append(v)
        kept.append(values)
    if dropped:
        log.warning("dropped %d row(s) with missing values from %s", dropped, path)

    n_feat = len(feature_columns)
    arr = np.asarray(kept, dtype=np.float64).reshape(len(kept), len(col_idx))
    target = arr[:, n_feat] if target_column is not None else np.full(len(kept), np.nan)
    return Dataset(
        arr[:, :n_feat].copy(),
        target.copy(),
        list(feature_columns),
        target_column or "",
        n_dropped=dropped,
    )


def save_csv(dataset: Dataset, path) -> None:
    """Write the dataset back out with features first and the target last."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([*dataset.feature_names, dataset.target_name])
        for x, y in zip(dataset.features, dataset.target):
            writer.writerow([repr(float(v)) for v in x] + [repr(float(y))])


class SplitMix64:
    """64-bit SplitMix generator (Steele, Lea and Flood)."""

    def __init__(self, seed: int):
        self.state = int(seed) & _MASK64

    def next(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def below(self, n: int) -> int:
        """Integer in [0, n) by multiply-shift (no rejection)."""
        return (self.next() * n) >> 64


def shuffled_indices(n: int, seed: int) -> list[int]:
    """Fisher-Yates shuffle of ``range(n)``, swapping from the top down."""
    rng = SplitMix64(seed)
    idx = list(range(n))
    for i in range(n - 1, 0, -1):
        j = rng.below(i + 1)
        idx[i], idx[j] = idx[j], idx[i]
    return idx


@dataclass(frozen=True)
class SplitIndices:
    train: np.ndarray
    val: np.ndarray
    test: np.ndarray


def split(n: int, seed: int = 42) -> SplitIndices:
    """Shuffle then cut into floor(0.6n) / floor(0.2n) / remainder."""
    if n < 5:
        raise DataError(f"need at least 5 rows for a train/val/test split, got {n}")
    perm = np.asarray(shuffled_indices(n, seed), dtype=np.intp)
    n_train = (6 * n) // 10
    n_val = (2 * n) // 10
    return SplitIndices(
        perm[:n_train], perm[n_train : n_train + n_val], perm[n_train + n_val :]
    )


def _pair(y, yhat) -> tuple[np.ndarray, np.ndarray]:
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    yhat = np.asarray(yhat, dtype=np.float64).reshape(-1)
    if y.shape != yhat.shape:
        raise ConfigurationError(f"length mismatch: {y.size} targets vs {yhat.size} predictions")
    if y.size == 0:
        raise UndefinedMetricError("metrics need at least one sample")
    return y, yhat


def r2(y, yhat) -> float:
    """Coefficient of determination."""
    y, yhat = _pair(y, yhat)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0.0:
        raise UndefinedMetricError("R^2 is undefined for a constant target")
    return 1.0 - float(np.sum((y - yhat) ** 2)) / ss_tot


def nrmse_sigma(y, yhat) -> float:
    """RMSE divided by the population standard deviation of ``y``."""
    y, yhat = _pair(y, yhat)
    sigma = float(np.std(y))
    if sigma == 0.0:
        raise UndefinedMetricError("NRMSE is undefined for a constant target")
    return float(np.sqrt(np.mean((y - yhat) ** 2))) / sigma


def model_to_dict(model) -> dict:
    model.require_fitted()
    doc = {
        "format_version": FORMAT_VERSION,
        "d": model.scaling.dimension,
        "centers": [float(v) for v in model.scaling.centers],
        "scales": [float(v) for v in model.scaling.scales],
        "target_mean": float(model.scaling.target_mean),
        "lambda_star": float(model.lambda_star),
        "intercept": float(model.intercept),
        "paths": [m.to_dict() for m in model.paths],
        "amplitudes": [float(a) for a in model.amplitudes],
        "fit_trace": list(model.fit_trace),
    }
    if model.feature_names is not None:
        doc["feature_names"] = list(model.feature_names)
    return doc


def _require(doc: dict, key: str, kind):
    if key not in doc:
        raise SchemaError(f"model file is missing field {key!r}")
    value = doc[key]
    if kind is float:
        ok = isinstance(value, (int, float)) and not isinstance(value, bool)
    elif kind is int:
        ok = isinstance(value, int) and not isinstance(value, bool)
    else:
        ok = isinstance(value, kind)
    if not ok:
        raise SchemaError(f"field {key!r} has the wrong type ({type(value).__name__})")
    return value


def model_from_dict(doc: dict):
    from .model import SpectralModel

    if not isinstance(doc, dict):
        raise SchemaError("model file must contain a JSON object")
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise VersionError(
            f"unsupported model format_version {version!r}; this build reads {FORMAT_VERSION}"
        )
    d = _require(doc, "d", int)
    centers = _require(doc, "centers", list)
    scales = _require(doc, "scales", list)
    paths = _require(doc, "paths", list)
    amplitudes = _require(doc, "amplitudes", list)
    trace = _require(doc, "fit_trace", list)
    if len(centers) != d or len(scales) != d:
        raise SchemaError(f"centers/scales must have length d={d}")
    if len(paths) != len(amplitudes):
        raise SchemaError(f"{len(paths)} paths but {len(amplitudes)} amplitudes")
    try:
        scaling = ScalingParams(
            np.array(centers, dtype=np.float64),
            np.array(scales, dtype=np.float64),
            float(_require(doc, "target_mean", float)),
        )
        parsed = []
        for entry in paths:
            if not isinstance(entry, dict) or "support" not in entry or "coeffs" not in entry:
                raise SchemaError("each path needs 'support' and 'coeffs'")
            parsed.append(FrequencyVector.from_dict(d, entry))
        names = doc.get("feature_names")
        if names is not None and (not isinstance(names, list) or len(names) != d):
            raise SchemaError("feature_names must be a list of length d")
        return SpectralModel(
            paths=parsed,
            amplitudes=np.array(amplitudes, dtype=np.float64),
            intercept=float(_require(doc, "intercept", float)),
            scaling=scaling,
            lambda_star=float(_require(doc, "lambda_star", float)),
            fit_trace=list(trace),
            feature_names=names,
        )
    except SchemaError:
        raise
    except (ValueError, TypeError) as exc:
        raise SchemaError(f"invalid model file: {exc}") from None


def dumps_model(model) -> str:
    # float repr is the shortest string that round-trips, so load(save(m)) is exact
    return json.dumps(model_to_dict(model), indent=2, sort_keys=False, allow_nan=False) + "\n"


def save_model(model, path) -> None:
    Path(path).write_text(dumps_model(model), encoding="utf-8")


def load_model(path):
    path = Path(path)
    if not path.is_file():
        raise DataError(f"model file not found: {path}")
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path} is not valid JSON: {exc}") from None
    return model_from_dict(doc)


def write_jsonl(records, path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def read_jsonl(path) -> list[dict]:
    with Path(path).open(encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]
