"""Streaming normal equations and closed-form ridge solves.

``GramSystem`` carries ``G = Phi^T Phi`` and ``b = Phi^T y`` for a design
whose first column is the intercept.  Rows are folded in chunk by chunk so
the full design matrix never has to exist, and ``augment`` grows the system
by a block of new paths with the block layout::

    G_trial = [[G_old, C    ],      b_trial = [b_old,
               [C^T,   G_new]]                 b_new]
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg

from .errors import ConfigurationError, InvalidCandidateError, NumericalError, UndefinedMetricError
from .features import DesignBlock, evaluate_block
from .paths import FrequencyVector

DEFAULT_CHUNK_ROWS = 4096
JITTER_SCALE = 1e-10
JITTER_RETRIES = 3


def worker_count() -> int:
    """Worker cap from ``SPECPATH_THREADS`` (default 1)."""
    raw = os.environ.get("SPECPATH_THREADS", "").strip()
    if not raw:
        return 1
    try:
        return max(1, int(raw))
    except ValueError:
        raise ConfigurationError(f"SPECPATH_THREADS must be an integer, got {raw!r}") from None


@dataclass(frozen=True)
class GramSystem:
    G: np.ndarray
    b: np.ndarray
    n_rows: int = 0
    y_sq_sum: float = 0.0
    paths: tuple[FrequencyVector, ...] = field(default_factory=tuple)

    def __post_init__(self):
        n = 1 + len(self.paths)
        if self.G.shape != (n, n) or self.b.shape != (n,):
            raise ConfigurationError(
                f"Gram of shape {self.G.shape} / {self.b.shape} does not match {len(self.paths)} paths"
            )

    @classmethod
    def empty(cls, paths: Sequence[FrequencyVector] = ()) -> "GramSystem":
        n = 1 + len(paths)
        return cls(np.zeros((n, n)), np.zeros(n), 0, 0.0, tuple(paths))

    @property
    def size(self) -> int:
        return self.b.size

    def rss(self, beta: np.ndarray) -> float:
        """Residual sum of squares recovered from Gram quantities alone."""
        return float(self.y_sq_sum - 2.0 * beta @ self.b + beta @ self.G @ beta)

    def tss(self) -> float:
        if self.n_rows == 0:
            return 0.0
        return float(self.y_sq_sum - self.b[0] ** 2 / self.n_rows)

    def leading(self, q: int) -> "GramSystem":
        """Sub-system for the intercept and the first ``q`` paths."""
        n = 1 + q
        return GramSystem(
            self.G[:n, :n].copy(), self.b[:n].copy(), self.n_rows, self.y_sq_sum, self.paths[:q]
        )


@dataclass(frozen=True)
class RidgeSolution:
    beta: np.ndarray
    lam: float
    jitter_used: float = 0.0

    @property
    def intercept(self) -> float:
        return float(self.beta[0])

    @property
    def amplitudes(self) -> np.ndarray:
        return self.beta[1:]


def _check_rows(phi: np.ndarray, y: np.ndarray) -> None:
    if phi.ndim != 2 or y.ndim != 1 or phi.shape[0] != y.shape[0]:
        raise ConfigurationError(
            f"design with shape {phi.shape} does not match target of shape {y.shape}"
        )


def accumulate(system: GramSystem, block, y) -> GramSystem:
    """Fold a chunk of rows into the normal equations.

    ``block`` is either a raw matrix whose first column is the intercept or a
    ``DesignBlock`` (the ones column is then prepended here).
    """
    phi = block.with_intercept() if isinstance(block, DesignBlock) else np.asarray(block, float)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    _check_rows(phi, y)
    if phi.shape[1] != system.size:
        raise ConfigurationError(
            f"chunk has {phi.shape[1]} columns but the system has {system.size}"
        )
    if phi.shape[0] == 0:
        return system
    G = system.G + phi.T @ phi
    G = 0.5 * (G + G.T)
    return GramSystem(
        G,
        system.b + phi.T @ y,
        system.n_rows + phi.shape[0],
        system.y_sq_sum + float(y @ y),
        system.paths,
    )


def _row_chunks(n: int, chunk_rows: int):
    if chunk_rows < 1:
        raise ConfigurationError("chunk_rows must be positive")
    for start in range(0, n, chunk_rows):
        yield slice(start, min(start + chunk_rows, n))


def merge(a: GramSystem, b: GramSystem) -> GramSystem:
    """Sum of two systems built over disjoint rows of the same dictionary."""
    if a.paths != b.paths:
        raise ConfigurationError("cannot merge systems over different dictionaries")
    return GramSystem(a.G + b.G, a.b + b.b, a.n_rows + b.n_rows, a.y_sq_sum + b.y_sq_sum, a.paths)


def tree_merge(systems: Sequence[GramSystem]) -> GramSystem:
    """Pairwise reduction in chunk-index order; the tree shape depends only on the count."""
    systems = list(systems)
    if not systems:
        raise ConfigurationError("nothing to merge")
    while len(systems) > 1:
        paired = [merge(systems[i], systems[i + 1]) for i in range(0, len(systems) - 1, 2)]
        if len(systems) % 2:
            paired.append(systems[-1])
        systems = paired
    return systems[0]


def build_gram(
    theta,
    y,
    paths: Sequence[FrequencyVector] = (),
    chunk_rows: int = DEFAULT_CHUNK_ROWS,
    workers: int | None = None,
) -> GramSystem:
    """Accumulate the system for ``paths`` from scratch over row chunks.

    Chunks are independent and may run on a thread pool; results are merged
    with ``tree_merge`` so the outcome does not depend on scheduling.
    """
    theta = np.asarray(theta, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    _check_rows(theta, y)
    empty = GramSystem.empty(paths)
    chunks = list(_row_chunks(theta.shape[0], chunk_rows))
    if not chunks:
        return empty

    def one(rows):
        return accumulate(empty, evaluate_block(theta[rows], paths), y[rows])

    workers = worker_count() if workers is None else workers
    if workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(one, chunks))
    else:
        parts = [one(rows) for rows in chunks]
    return tree_merge(parts)


def augment(
    old: GramSystem,
    theta,
    y,
    new_paths: Sequence[FrequencyVector],
    chunk_rows: int = DEFAULT_CHUNK_ROWS,
) -> GramSystem:
    """Trial system for ``old.paths + new_paths``, leaving ``old`` untouched.

    Only the cross block ``C``, ``G_new`` and ``b_new`` are computed; each
    row chunk is visited once and the old features are re-evaluated on that
    chunk rather than stored.
    """
    new_paths = tuple(new_paths)
    existing = set(old.paths)
    seen = set()
    for m in new_paths:
        if m in existing or m in seen:
            raise InvalidCandidateError(f"path {m} is already part of the dictionary")
        seen.add(m)
    if not new_paths:
        return GramSystem(old.G.copy(), old.b.copy(), old.n_rows, old.y_sq_sum, old.paths)

    theta = np.asarray(theta, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if theta.shape[0] != old.n_rows or y.shape[0] != old.n_rows:
        raise ConfigurationError(
            f"augment needs the {old.n_rows} rows the system was built from, got {theta.shape[0]}"
        )
    n_old, n_new = old.size, len(new_paths)
    C = np.zeros((n_old, n_new))
    G_new = np.zeros((n_new, n_new))
    b_new = np.zeros(n_new)
    for rows in _row_chunks(theta.shape[0], chunk_rows):
        phi_old = evaluate_block(theta[rows], old.paths).with_intercept()
        phi_new = evaluate_block(theta[rows], new_paths).values
        C += phi_old.T @ phi_new
        G_new += phi_new.T @ phi_new
        b_new += phi_new.T @ y[rows]
    G_new = 0.5 * (G_new + G_new.T)
    G = np.block([[old.G, C], [C.T, G_new]])
    return GramSystem(
        G, np.concatenate([old.b, b_new]), old.n_rows, old.y_sq_sum, old.paths + new_paths
    )


def _cholesky(A: np.ndarray):
    try:
        factor = scipy.linalg.cho_factor(A, lower=True, check_finite=False)
    except np.linalg.LinAlgError:
        return None
    if not np.all(np.isfinite(factor[0])) or np.any(np.diag(factor[0]) <= 0):
        return None
    return factor


def factor_ridge(G: np.ndarray, lam: float):
    """Cholesky factor of ``G + lam I`` with the jitter ladder; returns (factor, jitter)."""
    if lam < 0 or not np.isfinite(lam):
        raise ConfigurationError(f"lambda must be a finite nonnegative number, got {lam}")
    n = G.shape[0]
    A = G + lam * np.eye(n)
    factor = _cholesky(A)
    if factor is not None:
        return factor, 0.0
    base = JITTER_SCALE * float(np.trace(G)) / n
    if base <= 0:
        base = JITTER_SCALE
    jitter = base
    for _ in range(JITTER_RETRIES):
        factor = _cholesky(A + jitter * np.eye(n))
        if factor is not None:
            return factor, jitter
        jitter *= 10.0
    with np.errstate(all="ignore"):
        cond = float(np.linalg.cond(A))
    raise NumericalError(
        f"ridge system of size {n} is not positive definite at lambda={lam:g} "
        f"even with jitter {jitter / 10.0:.3g} (condition number {cond:.3g})",
        condition=cond,
        jitter=jitter / 10.0,
    )


def solve_ridge(system: GramSystem, lam: float) -> RidgeSolution:
    """Solve ``(G + lam I) beta = b``; the intercept is penalised like every other coefficient."""
    if system.size == 0:
        raise ConfigurationError("cannot solve an empty system")
    factor, jitter = factor_ridge(system.G, lam)
    beta = scipy.linalg.cho_solve(factor, system.b, check_finite=False)
    if not np.all(np.isfinite(beta)):
        raise NumericalError(f"ridge solution is not finite at lambda={lam:g}")
    return RidgeSolution(beta, float(lam), jitter)


def penalized_objective(system: GramSystem, solution: RidgeSolution) -> float:
    """``||y - Phi beta||^2 + lam ||beta||^2`` evaluated from Gram quantities."""
    beta = solution.beta
    return system.rss(beta) + solution.lam * float(beta @ beta)


def validation_score(
    solution: RidgeSolution, val_design: DesignBlock, val_y, target_mean: float = 0.0
) -> float:
    """R^2 of the solution on a validation design, in de-centred target units."""
    from .data_io import r2

    val_y = np.asarray(val_y, dtype=np.float64).reshape(-1)
    if val_design.values.shape[1] + 1 != solution.beta.size:
        raise ConfigurationError(
            f"validation design has {val_design.values.shape[1]} paths, "
            f"solution has {solution.beta.size - 1}"
        )
    _check_rows(val_design.values, val_y)
    yhat = target_mean + solution.beta[0] + val_design.values @ solution.beta[1:]
    try:
        return r2(val_y, yhat)
    except UndefinedMetricError as exc:
        raise UndefinedMetricError(f"validation score undefined: {exc}") from None
