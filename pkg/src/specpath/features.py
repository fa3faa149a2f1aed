"""Directional cosine design matrices.

Phases are accumulated sparsely over each path's support.  Paths that share a
primitive direction reuse one phase ``p . theta`` and only differ by the
harmonic multiplier, so ``cos(r * p . theta)`` costs one extra multiply.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ConfigurationError
from .paths import FrequencyVector, primitive_decompose


@dataclass(frozen=True)
class DesignBlock:
    values: np.ndarray
    paths: tuple[FrequencyVector, ...]

    def __post_init__(self):
        if self.values.ndim != 2 or self.values.shape[1] != len(self.paths):
            raise ConfigurationError(
                f"design values of shape {self.values.shape} do not match {len(self.paths)} paths"
            )

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    def with_intercept(self) -> np.ndarray:
        return np.hstack([np.ones((self.n_rows, 1)), self.values])


def sparse_phase(theta: np.ndarray, m: FrequencyVector) -> np.ndarray:
    """``theta @ m`` restricted to the support of ``m``."""
    phase = np.zeros(theta.shape[0])
    for j, c in zip(m.support, m.coeffs):
        phase += c * theta[:, j]
    return phase


def _check_theta(theta, paths: Sequence[FrequencyVector]) -> np.ndarray:
    theta = np.asarray(theta, dtype=np.float64)
    if theta.ndim != 2:
        raise ConfigurationError(f"angular matrix must be 2-D, got shape {theta.shape}")
    D = theta.shape[1]
    for m in paths:
        if m.dimension != D:
            raise ConfigurationError(
                f"path {m} has dimension {m.dimension} but theta has {D} columns"
            )
    return theta


def evaluate_block(theta, paths: Sequence[FrequencyVector]) -> DesignBlock:
    """Evaluate ``cos(m_q . theta_n)`` for every row and path."""
    paths = tuple(paths)
    theta = _check_theta(theta, paths)
    values = np.empty((theta.shape[0], len(paths)))
    phases: dict[FrequencyVector, np.ndarray] = {}
    for q, m in enumerate(paths):
        if m.is_intercept:
            values[:, q] = 1.0
            continue
        r, p = primitive_decompose(m)
        sign = 1 if m.coeffs[0] > 0 else -1
        base = phases.get(p)
        if base is None:
            base = phases[p] = sparse_phase(theta, p)
        # cos is even, so a non-canonical m gives the same column as its canonical form
        values[:, q] = np.cos(base if r == 1 else (sign * r) * base)
    return DesignBlock(values, paths)


def evaluate_dense(theta, paths: Sequence[FrequencyVector]) -> np.ndarray:
    """Reference evaluation through the dense product ``cos(theta @ M.T)``."""
    paths = tuple(paths)
    theta = _check_theta(theta, paths)
    if not paths:
        return np.zeros((theta.shape[0], 0))
    M = np.stack([m.dense() for m in paths]).astype(np.float64)
    return np.cos(theta @ M.T)


def predict(model, theta) -> np.ndarray:
    """De-centred predictions of a fitted model at angular inputs."""
    model.require_fitted()
    theta = np.asarray(theta, dtype=np.float64)
    if theta.ndim != 2 or theta.shape[1] != model.scaling.dimension:
        raise ConfigurationError(
            f"theta has shape {theta.shape}, model expects {model.scaling.dimension} features"
        )
    out = np.full(theta.shape[0], model.intercept + model.scaling.target_mean)
    if model.paths:
        out += evaluate_block(theta, model.paths).values @ model.amplitudes
    return out
