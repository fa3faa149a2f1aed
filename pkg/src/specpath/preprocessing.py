"""Robust tanh scaling and the arccos map into angular coordinates.

Raw features are centred on the column median, divided by a normal-consistent
IQR scale, squashed with ``tanh`` into (-1, 1) and finally sent through
``arccos`` so every coordinate lives in [0, pi].  Targets are centred on the
training mean; predictions add the mean back.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigurationError, DataError

# IQR of a standard normal; IQR / 1.349 estimates sigma
IQR_TO_SIGMA = 1.349


@dataclass(frozen=True)
class ScalingParams:
    """Per-feature robust centre/scale plus the training target mean."""

    centers: np.ndarray
    scales: np.ndarray
    target_mean: float = 0.0

    def __post_init__(self):
        centers = np.asarray(self.centers, dtype=np.float64).reshape(-1)
        scales = np.asarray(self.scales, dtype=np.float64).reshape(-1)
        if centers.shape != scales.shape:
            raise ConfigurationError(
                f"centers has length {centers.size} but scales has length {scales.size}"
            )
        if not np.all(np.isfinite(centers)) or not np.all(np.isfinite(scales)):
            raise ConfigurationError("scaling parameters must be finite")
        if np.any(scales <= 0):
            raise ConfigurationError("every scale must be strictly positive")
        if not np.isfinite(self.target_mean):
            raise ConfigurationError("target_mean must be finite")
        object.__setattr__(self, "centers", centers)
        object.__setattr__(self, "scales", scales)
        object.__setattr__(self, "target_mean", float(self.target_mean))

    @property
    def dimension(self) -> int:
        return int(self.centers.size)

    def with_target_mean(self, mean: float) -> "ScalingParams":
        return replace(self, target_mean=float(mean))


def _check_finite(X: np.ndarray, what: str = "X") -> None:
    bad = ~np.isfinite(X)
    if bad.any():
        if X.ndim == 2:
            row, col = (int(i) for i in np.argwhere(bad)[0])
            raise DataError(f"non-finite value in {what} at row {row}, column {col}")
        (row,) = (int(i) for i in np.argwhere(bad)[0])
        raise DataError(f"non-finite value in {what} at index {row}")


def _as_matrix(X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    if X.ndim != 2:
        raise ConfigurationError(f"expected a 2-D feature matrix, got shape {X.shape}")
    return X


def fit_scaler(X_train) -> ScalingParams:
    """Estimate median centres and IQR/1.349 scales column by column.

    Quartiles use linear interpolation between order statistics (Hyndman-Fan
    type 7, numpy's default).  A zero IQR falls back to a unit scale so that
    constant columns map to the constant angle pi/2.
    """
    X = _as_matrix(X_train)
    if X.size == 0:
        raise ConfigurationError("cannot fit scaling parameters on an empty matrix")
    if X.shape[0] < 2:
        raise ConfigurationError("at least two rows are required to fit the scaler")
    _check_finite(X, "training features")

    centers = np.median(X, axis=0)
    q25, q75 = np.quantile(X, [0.25, 0.75], axis=0, method="linear")
    scales = (q75 - q25) / IQR_TO_SIGMA
    scales = np.where(scales > 0, scales, 1.0)
    return ScalingParams(centers=centers, scales=scales)


def transform_to_angles(X, params: ScalingParams) -> np.ndarray:
    """Map raw features to angles ``arccos(tanh((x - c) / s))`` in [0, pi]."""
    X = _as_matrix(X)
    if X.shape[1] != params.dimension:
        raise ConfigurationError(
            f"data has {X.shape[1]} features but the scaler was fitted on {params.dimension}"
        )
    _check_finite(X, "features")
    with np.errstate(over="ignore"):
        # (x - c) can overflow to +-inf near the float range; tanh saturates cleanly
        u = (X - params.centers) / params.scales
    t = np.clip(np.tanh(u), -1.0, 1.0)
    return np.arccos(t)


def center_target(y_train):
    """Return ``(y - mean(y), mean(y))``."""
    y = np.asarray(y_train, dtype=np.float64).reshape(-1)
    if y.size == 0:
        raise ConfigurationError("cannot centre an empty target vector")
    _check_finite(y, "target")
    mean = float(np.mean(y))
    return y - mean, mean


def decenter(y_centered, mean: float) -> np.ndarray:
    return np.asarray(y_centered, dtype=np.float64) + mean
