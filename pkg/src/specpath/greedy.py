"""Forward greedy block selection of spectral paths.

Each iteration proposes one block of candidate paths per sparsity level k,
grows the training normal equations by that block, solves the ridge problem
exactly and scores the result on the validation split.  The best block is
appended when it improves validation R^2 by at least ``min_improvement``;
otherwise the iteration counts as a strike and ``patience`` consecutive
strikes stop the search.  The ridge penalty is chosen over the whole grid on
the first iteration only and then held fixed, with an optional resweep over
the grid once the dictionary is final.
"""

from __future__ import annotations

import logging
import warnings
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg

from .data_io import nrmse_sigma, r2
from .errors import ConfigurationError, NumericalError
from .features import evaluate_block
from .model import SpectralModel
from .paths import FrequencyVector, iter_candidates, primitive_decompose
from .preprocessing import center_target, fit_scaler, transform_to_angles
from .solver import (
    DEFAULT_CHUNK_ROWS,
    GramSystem,
    RidgeSolution,
    augment,
    build_gram,
    factor_ridge,
    solve_ridge,
    worker_count,
)

log = logging.getLogger(__name__)

DEFAULT_LAMBDA_GRID = (1e-5, 1e-4, 1e-3, 1e-2, 1e-1)


class DegenerateFitWarning(UserWarning):
    """The fit returned an intercept-only model."""


@dataclass(frozen=True)
class FitConfig:
    sparsity_set: tuple[int, ...] = (1, 2, 3, 4)
    max_paths: int = 512
    block_size: int = 8
    block_size_bounds: tuple[int, int] = (1, 32)
    lambda_grid: tuple[float, ...] = DEFAULT_LAMBDA_GRID
    patience: int = 3
    min_improvement: float = 1e-4
    final_resweep: bool = True
    seed: int = 42
    importance_ordering: bool = True
    chunk_rows: int = DEFAULT_CHUNK_ROWS

    def __post_init__(self):
        object.__setattr__(self, "sparsity_set", tuple(sorted({int(k) for k in self.sparsity_set})))
        object.__setattr__(self, "lambda_grid", tuple(float(v) for v in self.lambda_grid))
        lo, hi = (int(v) for v in self.block_size_bounds)
        object.__setattr__(self, "block_size_bounds", (lo, hi))
        if not self.sparsity_set or min(self.sparsity_set) < 1:
            raise ConfigurationError("sparsity_set must be a nonempty set of positive integers")
        if self.max_paths < 1:
            raise ConfigurationError("max_paths must be at least 1")
        if not 1 <= lo <= hi:
            raise ConfigurationError(f"invalid block size bounds {self.block_size_bounds}")
        if not lo <= self.block_size <= hi:
            raise ConfigurationError(f"block_size {self.block_size} outside bounds [{lo}, {hi}]")
        grid = self.lambda_grid
        if not grid:
            raise ConfigurationError("lambda_grid must not be empty")
        if any(not np.isfinite(v) or v <= 0 for v in grid):
            raise ConfigurationError("lambda_grid entries must be positive and finite")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ConfigurationError("lambda_grid must be strictly ascending")
        if self.patience < 1:
            raise ConfigurationError("patience must be at least 1")
        if self.min_improvement < 0:
            raise ConfigurationError("min_improvement must be nonnegative")
        if self.chunk_rows < 1:
            raise ConfigurationError("chunk_rows must be positive")


def importance_order(theta: np.ndarray, y_centered: np.ndarray) -> list[int]:
    """Feature indices sorted by decreasing |Pearson correlation| with the target.

    Constant columns score zero; ties keep index order.
    """
    tc = theta - theta.mean(axis=0)
    yc = y_centered - y_centered.mean()
    denom = np.sqrt((tc**2).sum(axis=0) * float(yc @ yc))
    with np.errstate(invalid="ignore", divide="ignore"):
        corr = np.where(denom > 0, np.abs(tc.T @ yc) / denom, 0.0)
    return [int(j) for j in np.argsort(-corr, kind="stable")]


class CandidateFrontier:
    """Per-k streams of unconsumed candidates in increasing total order.

    ``propose`` only peeks; ``consume`` removes what was actually used, so a
    block that loses to another k in an accepted iteration is offered again.
    Accepting a path ``r * p`` queues the next harmonic ``(r + 1) * p`` at the
    front of its k's next block.
    """

    def __init__(self, D: int, sparsity_set: Iterable[int], importance: Sequence[int] | None = None):
        self.D = D
        self.sparsity_set = tuple(sorted(set(sparsity_set)))
        self._streams = {k: iter_candidates(D, k, importance) for k in self.sparsity_set}
        self._buffer = {k: deque() for k in self.sparsity_set}
        self._ladder = {k: [] for k in self.sparsity_set}
        self.consumed: set[FrequencyVector] = set()

    def _usable(self, m, exclude) -> bool:
        return m not in self.consumed and m not in exclude

    def propose(self, k: int, size: int, exclude=frozenset()) -> list[FrequencyVector]:
        if k not in self._streams or size <= 0:
            return []
        self._ladder[k] = [m for m in self._ladder[k] if self._usable(m, exclude)]
        block = self._ladder[k][:size]
        taken = set(block)
        buf = self._buffer[k]
        i = 0
        while len(block) < size:
            if i == len(buf):
                nxt = next(self._streams[k], None)
                if nxt is None:
                    break
                buf.append(nxt)
            m = buf[i]
            if not self._usable(m, exclude) or m in taken:
                del buf[i]
                continue
            block.append(m)
            taken.add(m)
            i += 1
        return block

    def consume(self, paths: Iterable[FrequencyVector]) -> None:
        paths = set(paths)
        self.consumed |= paths
        for k in self.sparsity_set:
            self._ladder[k] = [m for m in self._ladder[k] if m not in paths]
            self._buffer[k] = deque(m for m in self._buffer[k] if m not in paths)

    def register_accepted(self, paths: Iterable[FrequencyVector], dictionary=frozenset()) -> None:
        for m in paths:
            r, p = primitive_decompose(m)
            nxt = p.scaled(r + 1)
            k = m.sparsity
            if k in self._ladder and self._usable(nxt, dictionary) and nxt not in self._ladder[k]:
                self._ladder[k].append(nxt)

    def next_blocks(self, size: int, exclude=frozenset()) -> dict[int, list[FrequencyVector]]:
        return {k: self.propose(k, size, exclude) for k in self.sparsity_set}


def adapt_block_size(
    current: int,
    history: Sequence[tuple[bool, float]],
    bounds: tuple[int, int] = (1, 32),
    min_improvement: float = 1e-4,
) -> int:
    """Next block size from the (accepted, improvement) history.

    A rejection halves the size.  Every second consecutive strong acceptance
    (improvement >= 10 * min_improvement) doubles it.  Results are clamped to
    ``bounds``.
    """
    lo, hi = bounds
    if not history:
        return int(min(max(current, lo), hi))
    accepted, _ = history[-1]
    if not accepted:
        return max(lo, current // 2)
    run = 0
    for ok, gain in reversed(history):
        if not ok or gain < 10.0 * min_improvement:
            break
        run += 1
    if run >= 2 and run % 2 == 0:
        return min(hi, current * 2)
    return int(min(max(current, lo), hi))


def select_lambda(scores: dict[float, float]) -> float:
    """Grid value with the best validation score; ties go to the larger lambda."""
    if not scores:
        raise ConfigurationError("no lambda scores to choose from")
    best = max(scores.values())
    return max(lam for lam, s in scores.items() if s == best)


@dataclass
class _Trial:
    k: int
    block: list[FrequencyVector]
    system: GramSystem
    val_design: np.ndarray
    scores: dict[float, float]
    solutions: dict[float, RidgeSolution]
    lam: float = 0.0
    score: float = -np.inf

    @property
    def rank_key(self):
        return (-self.score, min(m.total_order for m in self.block), tuple(self.block))


@dataclass
class _State:
    theta_tr: np.ndarray
    y_tr: np.ndarray
    theta_val: np.ndarray
    y_val: np.ndarray
    target_mean: float
    config: FitConfig
    gram: GramSystem = None
    val_design: np.ndarray = None
    trace: list = field(default_factory=list)


def _val_r2(state: _State, design: np.ndarray, beta: np.ndarray) -> float:
    yhat = state.target_mean + beta[0] + design @ beta[1:]
    return r2(state.y_val, yhat)


def _val_nrmse(state: _State, design: np.ndarray, beta: np.ndarray) -> float:
    yhat = state.target_mean + beta[0] + design @ beta[1:]
    return nrmse_sigma(state.y_val, yhat)


def _train_metrics(system: GramSystem, beta: np.ndarray) -> tuple[float, float]:
    rss = max(system.rss(beta), 0.0)
    tss = system.tss()
    return 1.0 - rss / tss, float(np.sqrt(rss / tss))


def _evaluate_trial(state: _State, k: int, block, lambdas) -> _Trial:
    system = augment(state.gram, state.theta_tr, state.y_tr, block, state.config.chunk_rows)
    val_new = evaluate_block(state.theta_val, block).values
    design = np.hstack([state.val_design, val_new])
    trial = _Trial(k, list(block), system, design, {}, {})
    for lam in lambdas:
        sol = solve_ridge(system, lam)
        trial.solutions[lam] = sol
        trial.scores[lam] = _val_r2(state, design, sol.beta)
    trial.lam = select_lambda(trial.scores)
    trial.score = trial.scores[trial.lam]
    return trial


def _record(state, iteration, stage, accepted, k, added, system, design, sol, block_size, cand):
    train_r2, train_nrmse = _train_metrics(system, sol.beta)
    state.trace.append(
        {
            "iteration": iteration,
            "stage": stage,
            "accepted": accepted,
            "k": k,
            "paths_added": [m.to_dict() for m in added],
            "n_paths": len(system.paths),
            "train_r2": train_r2,
            "val_r2": _val_r2(state, design, sol.beta),
            "train_nrmse": train_nrmse,
            "val_nrmse": _val_nrmse(state, design, sol.beta),
            "lambda": sol.lam,
            "block_size": block_size,
            "candidate_val_r2": cand,
        }
    )


def _intercept_only(scaling, lam, trace, names, why) -> SpectralModel:
    warnings.warn(f"intercept-only model: {why}", DegenerateFitWarning, stacklevel=3)
    return SpectralModel([], np.zeros(0), 0.0, scaling, lam, trace, names)


def fit(train, val, config: FitConfig | None = None, feature_names=None) -> SpectralModel:
    """Fit a spectral path model.

    Parameters
    ----------
    train, val : tuple of (X, y)
        Raw feature matrices and targets.  Scaling and target centring are
        estimated on ``train`` only.
    config : FitConfig, optional
    feature_names : list of str, optional
        Stored on the model for rendering and CSV column matching.

    Returns
    -------
    SpectralModel
        With ``fit_trace`` holding one record per greedy iteration plus a
        final ``resweep`` record when enabled.
    """
    config = config or FitConfig()
    X_tr, y_tr = (np.asarray(a, dtype=np.float64) for a in train)
    X_val, y_val = (np.asarray(a, dtype=np.float64) for a in val)
    if X_tr.ndim != 2 or X_val.ndim != 2 or X_tr.shape[1] != X_val.shape[1]:
        raise ConfigurationError(
            f"train and validation features disagree: {X_tr.shape} vs {X_val.shape}"
        )
    if X_tr.shape[0] < 2:
        raise ConfigurationError("at least two training rows are required")
    if y_tr.shape != (X_tr.shape[0],) or y_val.shape != (X_val.shape[0],):
        raise ConfigurationError("targets must be vectors matching the feature rows")
    D = X_tr.shape[1]
    names = list(feature_names) if feature_names is not None else None

    scaling = fit_scaler(X_tr)
    y_c, mean = center_target(y_tr)
    scaling = scaling.with_target_mean(mean)
    theta_tr = transform_to_angles(X_tr, scaling)
    theta_val = transform_to_angles(X_val, scaling)
    lambdas = config.lambda_grid

    if np.ptp(y_tr) == 0 or y_val.size < 2 or np.ptp(y_val) == 0:
        return _intercept_only(scaling, lambdas[-1], [], names, "constant training or validation target")

    state = _State(theta_tr, y_c, theta_val, y_val, mean, config)
    state.gram = build_gram(theta_tr, y_c, (), config.chunk_rows)
    state.val_design = np.zeros((theta_val.shape[0], 0))

    order = importance_order(theta_tr, y_c) if config.importance_ordering else None
    frontier = CandidateFrontier(D, config.sparsity_set, order)
    workers = worker_count()

    lam_star = None
    current = solve_ridge(state.gram, lambdas[-1])
    best_val = _val_r2(state, state.val_design, current.beta)
    B = config.block_size
    history: list[tuple[bool, float]] = []
    strikes = 0
    iteration = 0

    while len(state.gram.paths) < config.max_paths and strikes < config.patience:
        room = config.max_paths - len(state.gram.paths)
        blocks = frontier.next_blocks(min(B, room), exclude=set(state.gram.paths))
        blocks = {k: b for k, b in blocks.items() if b}
        if not blocks:
            log.info("candidate frontier exhausted after %d iterations", iteration)
            break
        iteration += 1
        grid = lambdas if lam_star is None else (lam_star,)
        jobs = sorted(blocks.items())
        if workers > 1 and len(jobs) > 1:
            with ThreadPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
                trials = list(pool.map(lambda kb: _evaluate_trial(state, kb[0], kb[1], grid), jobs))
        else:
            trials = [_evaluate_trial(state, k, b, grid) for k, b in jobs]
        best = min(trials, key=lambda t: t.rank_key)

        if lam_star is None:
            lam_star = best.lam
            current = solve_ridge(state.gram, lam_star)
            best_val = _val_r2(state, state.val_design, current.beta)

        gain = best.score - best_val
        accepted = gain >= config.min_improvement
        if accepted:
            sol = best.solutions[lam_star]
            frontier.consume(best.block)
            state.gram = best.system
            state.val_design = best.val_design
            frontier.register_accepted(best.block, set(state.gram.paths))
            current, best_val = sol, best.score
            strikes = 0
        else:
            for t in trials:
                frontier.consume(t.block)
            strikes += 1
        history.append((accepted, gain))
        _record(
            state, iteration, "greedy", accepted, best.k,
            best.block if accepted else [], state.gram, state.val_design, current, B, best.score,
        )
        B = adapt_block_size(B, history, config.block_size_bounds, config.min_improvement)

    if lam_star is None:
        lam_star = lambdas[-1]
        current = solve_ridge(state.gram, lam_star)

    if config.final_resweep and state.gram.paths:
        sols = {lam: solve_ridge(state.gram, lam) for lam in lambdas}
        scores = {lam: _val_r2(state, state.val_design, s.beta) for lam, s in sols.items()}
        lam_star = select_lambda(scores)
        current = sols[lam_star]
        _record(
            state, iteration + 1, "resweep", False, 0, [], state.gram, state.val_design,
            current, B, scores[lam_star],
        )

    if not state.gram.paths:
        return _intercept_only(scaling, lam_star, state.trace, names, "no candidate block improved validation R^2")

    return SpectralModel(
        paths=list(state.gram.paths),
        amplitudes=current.beta[1:].copy(),
        intercept=float(current.beta[0]),
        scaling=scaling,
        lambda_star=float(lam_star),
        fit_trace=state.trace,
        feature_names=names,
    )


def refit_amplitudes(model: SpectralModel, X_train, y_train, lam: float) -> SpectralModel:
    """Re-solve the ridge problem for a fixed dictionary at another lambda."""
    model.require_fitted()
    theta = transform_to_angles(X_train, model.scaling)
    y_c = np.asarray(y_train, dtype=np.float64) - model.scaling.target_mean
    sol = solve_ridge(build_gram(theta, y_c, model.paths), lam)
    return SpectralModel(
        list(model.paths), sol.beta[1:].copy(), float(sol.beta[0]), model.scaling, float(lam),
        list(model.fit_trace), model.feature_names,
    )


def capacity_curve(model: SpectralModel, X_train, y_train, X_val, y_val) -> list[dict]:
    """Train/validation metrics of the first q accepted paths, q = 0..Q, at lambda*.

    The Cholesky factor of the full system restricted to its leading block is
    the factor of the leading sub-system, so one factorisation serves every q.
    """
    model.require_fitted()
    theta_tr = transform_to_angles(X_train, model.scaling)
    theta_val = transform_to_angles(X_val, model.scaling)
    y_c = np.asarray(y_train, dtype=np.float64) - model.scaling.target_mean
    y_val = np.asarray(y_val, dtype=np.float64)
    system = build_gram(theta_tr, y_c, model.paths)
    design = evaluate_block(theta_val, model.paths).values
    lam = model.lambda_star
    (L, _), jitter = factor_ridge(system.G, lam)
    L = np.tril(L)
    rows = []
    for q in range(len(model.paths) + 1):
        n = q + 1
        if jitter == 0.0:
            Lq = L[:n, :n]
            z = scipy.linalg.solve_triangular(Lq, system.b[:n], lower=True)
            beta = scipy.linalg.solve_triangular(Lq.T, z, lower=False)
        else:
            beta = solve_ridge(system.leading(q), lam).beta
        sub = system.leading(q)
        train_r2, train_nrmse = _train_metrics(sub, beta)
        yhat = model.scaling.target_mean + beta[0] + design[:, :q] @ beta[1:]
        rows.append(
            {
                "n_paths": q,
                "train_r2": train_r2,
                "val_r2": r2(y_val, yhat),
                "train_nrmse": train_nrmse,
                "val_nrmse": nrmse_sigma(y_val, yhat),
                "lambda": lam,
            }
        )
    return rows


__all__ = [
    "CandidateFrontier",
    "DegenerateFitWarning",
    "FitConfig",
    "NumericalError",
    "SpectralModel",
    "adapt_block_size",
    "capacity_curve",
    "fit",
    "importance_order",
    "refit_amplitudes",
    "select_lambda",
]
