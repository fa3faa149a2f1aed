"""Synthetic regression data drawn from the spectral path model family.

The angles that define the target are computed with the scaler fitted on the
training rows of ``split(n, split_seed)``.  A fit that uses the same split
therefore sees a target that is exactly representable by the generating
paths (up to the added noise).
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .data_io import Dataset, split
from .paths import FrequencyVector
from .preprocessing import fit_scaler, transform_to_angles


def make_synthetic(
    n: int,
    terms: Sequence[tuple[float, Sequence[int]]],
    noise_std: float = 0.0,
    seed: int = 0,
    split_seed: int = 42,
    offset: float = 0.0,
) -> Dataset:
    """Sample ``y = offset + sum_i a_i cos(m_i . theta) + noise``.

    Parameters
    ----------
    n : int
        Number of rows.
    terms : sequence of (amplitude, dense frequency vector)
        All vectors must share the same length D.
    noise_std : float
        Standard deviation of Gaussian noise.
    seed : int
        Seed for the feature and noise draws.
    split_seed : int
        Seed of the train/val/test split whose training rows fix the scaler.
    """
    paths = [(float(a), FrequencyVector.from_dense(m)) for a, m in terms]
    dims = {m.dimension for _, m in paths}
    if len(dims) != 1:
        raise ValueError("all generating paths must have the same dimension")
    D = dims.pop()
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, D)) * rng.uniform(0.5, 3.0, size=D) + rng.uniform(-5, 5, size=D)
    scaler = fit_scaler(X[split(n, split_seed).train])
    theta = transform_to_angles(X, scaler)
    y = np.full(n, float(offset))
    for a, m in paths:
        y += a * np.cos(theta @ m.dense())
    if noise_std > 0:
        y += rng.normal(scale=noise_std, size=n)
    return Dataset(X, y, [f"x{j}" for j in range(D)], "y")
