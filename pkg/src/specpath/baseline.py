"""Plain ridge regression on robustly scaled raw features.

Used as the linear reference column in benchmark reports.  The features are
``(x - c) / s`` with the same median/IQR scaler as the spectral model, and the
penalty is picked on the validation split from the same lambda grid.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .data_io import r2
from .preprocessing import ScalingParams, _as_matrix, center_target, fit_scaler
from .solver import factor_ridge


@dataclass(frozen=True)
class RidgeBaseline:
    scaling: ScalingParams
    beta: np.ndarray
    lam: float

    def predict(self, X) -> np.ndarray:
        Z = (_as_matrix(X) - self.scaling.centers) / self.scaling.scales
        return self.scaling.target_mean + self.beta[0] + Z @ self.beta[1:]


def _design(X, scaling) -> np.ndarray:
    Z = (_as_matrix(X) - scaling.centers) / scaling.scales
    return np.hstack([np.ones((Z.shape[0], 1)), Z])


def fit_ridge_baseline(train, val, lambda_grid) -> RidgeBaseline:
    """Fit ridge for every lambda in the grid; keep the best validation R^2.

    Ties go to the larger lambda, as in the spectral fit.
    """
    X_tr, y_tr = train
    X_val, y_val = val
    scaling = fit_scaler(X_tr)
    y_c, mean = center_target(y_tr)
    scaling = scaling.with_target_mean(mean)
    phi = _design(X_tr, scaling)
    G, b = phi.T @ phi, phi.T @ y_c
    best = None
    for lam in sorted(lambda_grid):
        factor, _ = factor_ridge(G, lam)
        model = RidgeBaseline(scaling, scipy.linalg.cho_solve(factor, b), float(lam))
        score = r2(y_val, model.predict(X_val))
        if best is None or score >= best[0]:
            best = (score, model)
    return best[1]
