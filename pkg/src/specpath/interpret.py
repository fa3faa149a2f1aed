"""Exact input sensitivities, normalised importances and expression rendering.

With ``u = (x - c) / s`` and ``theta = arccos(tanh(u))`` the chain rule gives
``dtheta/du = -sech(u)^2 / sqrt(1 - tanh(u)^2) = -sech(u)``, so

    dy/dx_j = sech(u_j) / s_j * sum_q A_q m_qj sin(m_q . theta).

The cancelled form stays bounded where tanh saturates (sech -> 0) instead of
multiplying a vanishing sech^2 by a diverging arccos derivative.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .model import SpectralModel
from .features import sparse_phase
from .preprocessing import _as_matrix, transform_to_angles


class DegenerateImportanceWarning(UserWarning):
    """All sensitivities vanish; importances fall back to uniform."""


@dataclass(frozen=True)
class SensitivityReport:
    per_sample: np.ndarray
    importance: np.ndarray
    degenerate: bool = False

    def as_percent(self) -> np.ndarray:
        return 100.0 * self.importance


def sech(u) -> np.ndarray:
    """``1 / cosh(u)`` without overflow for large |u|."""
    a = np.exp(-np.abs(np.asarray(u, dtype=np.float64)))
    return 2.0 * a / (1.0 + a * a)


def angle_derivative(X, scaling) -> np.ndarray:
    """``dtheta_j / dx_j = -sech((x_j - c_j) / s_j) / s_j`` elementwise."""
    X = _as_matrix(X)
    with np.errstate(over="ignore"):
        u = (X - scaling.centers) / scaling.scales
    return -sech(u) / scaling.scales


def sensitivity(model: SpectralModel, X) -> np.ndarray:
    """Exact ``dy/dx`` at every sample, shape (N, D), in raw feature units."""
    model.require_fitted()
    X = _as_matrix(X)
    theta = transform_to_angles(X, model.scaling)
    dy_dtheta = np.zeros_like(theta)
    for a, m in zip(model.amplitudes, model.paths):
        s = np.sin(sparse_phase(theta, m))
        for j, c in zip(m.support, m.coeffs):
            dy_dtheta[:, j] -= a * c * s
    return dy_dtheta * angle_derivative(X, model.scaling)


def sensitivity_report(model: SpectralModel, X) -> SensitivityReport:
    per_sample = sensitivity(model, X)
    if per_sample.shape[0] == 0:
        raise ValueError("importance needs at least one sample")
    mean_abs = np.abs(per_sample).mean(axis=0)
    total = float(mean_abs.sum())
    if total == 0.0 or not np.isfinite(total):
        D = per_sample.shape[1]
        warnings.warn(
            "all sensitivities are zero; reporting uniform importances",
            DegenerateImportanceWarning,
            stacklevel=2,
        )
        return SensitivityReport(per_sample, np.full(D, 1.0 / D), degenerate=True)
    return SensitivityReport(per_sample, mean_abs / total)


def importance(model: SpectralModel, X) -> np.ndarray:
    """Mean absolute sensitivity per feature, normalised to sum to one."""
    return sensitivity_report(model, X).importance


def _feature_names(model: SpectralModel, feature_names) -> list[str]:
    D = model.scaling.dimension
    names = feature_names if feature_names is not None else model.feature_names
    if names is None:
        return [f"x{j}" for j in range(D)]
    if len(names) != D:
        raise ValueError(f"expected {D} feature names, got {len(names)}")
    return [str(n) for n in names]


def _phase_text(m, names) -> str:
    parts = []
    for i, (j, c) in enumerate(zip(m.support, m.coeffs)):
        mag = "" if abs(c) == 1 else str(abs(c))
        term = f"{mag}θ_{names[j]}"
        if i == 0:
            parts.append(term if c > 0 else f"−{term}")
        else:
            parts.append(f" + {term}" if c > 0 else f" − {term}")
    return "".join(parts)


def _number(v: float) -> str:
    return f"{v:.2f}".replace("-", "−")


def render_expression(model: SpectralModel, top_n: int = 12, feature_names: Sequence[str] | None = None) -> str:
    """Readable form ``c + A_1·cos(...) − A_2·cos(...) ...`` of the fitted model.

    Terms are the ``top_n`` largest amplitudes (ties keep dictionary order).
    The constant already includes the training target mean.  When terms are
    shown, a footer defines each angle that appears in them.
    """
    model.require_fitted()
    names = _feature_names(model, feature_names)
    order = sorted(range(model.n_paths), key=lambda q: (-abs(model.amplitudes[q]), q))
    shown = order[: max(int(top_n), 0)]
    text = _number(model.constant)
    for q in shown:
        a = float(model.amplitudes[q])
        sign = "+" if a >= 0 else "−"
        text += f" {sign} {abs(a):.2f}·cos({_phase_text(model.paths[q], names)})"
    if len(shown) < model.n_paths:
        text += " + …"
    used = sorted({j for q in shown for j in model.paths[q].support})
    if not used:
        return text
    lines = [text, "", "where"]
    for j in used:
        c, s = model.scaling.centers[j], model.scaling.scales[j]
        shift = f" − {c:.6g}" if c >= 0 else f" + {-c:.6g}"
        lines.append(f"  θ_{names[j]} = arccos(tanh(({names[j]}{shift}) / {s:.6g}))")
    return "\n".join(lines)


def expression_terms(model: SpectralModel, feature_names=None) -> list[dict]:
    """Machine-readable terms, sorted like ``render_expression``."""
    model.require_fitted()
    names = _feature_names(model, feature_names)
    order = sorted(range(model.n_paths), key=lambda q: (-abs(model.amplitudes[q]), q))
    return [
        {
            "amplitude": float(model.amplitudes[q]),
            "support": [names[j] for j in model.paths[q].support],
            "coeffs": list(model.paths[q].coeffs),
        }
        for q in order
    ]


__all__ = [
    "SensitivityReport",
    "angle_derivative",
    "expression_terms",
    "importance",
    "render_expression",
    "sech",
    "sensitivity",
    "sensitivity_report",
]
