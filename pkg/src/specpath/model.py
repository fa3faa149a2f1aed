"""The fitted artifact: intercept, amplitudes, dictionary and scaling."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, StateError
from .paths import FrequencyVector
from .preprocessing import ScalingParams, transform_to_angles


@dataclass
class SpectralModel:
    """``y = target_mean + intercept + sum_q amplitudes[q] * cos(paths[q] . theta)``.

    ``intercept`` is the ridge intercept in the centred target space; the
    training mean lives in ``scaling.target_mean``.
    """

    paths: list[FrequencyVector] = field(default_factory=list)
    amplitudes: np.ndarray = field(default_factory=lambda: np.zeros(0))
    intercept: float = 0.0
    scaling: ScalingParams | None = None
    lambda_star: float | None = None
    fit_trace: list[dict] = field(default_factory=list)
    feature_names: list[str] | None = None

    def __post_init__(self):
        self.paths = list(self.paths)
        self.amplitudes = np.asarray(self.amplitudes, dtype=np.float64).reshape(-1)
        if len(self.paths) != self.amplitudes.size:
            raise ConfigurationError(
                f"{len(self.paths)} paths but {self.amplitudes.size} amplitudes"
            )
        if self.scaling is not None:
            for m in self.paths:
                if m.dimension != self.scaling.dimension:
                    raise ConfigurationError(
                        f"path {m} has dimension {m.dimension}, model has {self.scaling.dimension}"
                    )

    @property
    def is_fitted(self) -> bool:
        return self.scaling is not None and self.lambda_star is not None

    @property
    def dimension(self) -> int:
        self.require_fitted()
        return self.scaling.dimension

    @property
    def n_paths(self) -> int:
        return len(self.paths)

    @property
    def constant(self) -> float:
        """Prediction offset in target units (intercept plus training mean)."""
        self.require_fitted()
        return self.intercept + self.scaling.target_mean

    def require_fitted(self) -> None:
        if not self.is_fitted:
            raise StateError("model is not fitted")

    def angles(self, X) -> np.ndarray:
        self.require_fitted()
        return transform_to_angles(X, self.scaling)

    def predict(self, X) -> np.ndarray:
        """Predict from raw features."""
        from .features import predict

        return predict(self, self.angles(X))
