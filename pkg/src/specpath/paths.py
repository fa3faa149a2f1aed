"""Sparse integer frequency vectors ("spectral paths") and their enumeration.

A path ``m`` in Z^D is stored as its support (sorted feature indices) and the
matching nonzero integer coefficients.  Since ``cos`` is even, ``m`` and
``-m`` describe the same feature; the canonical representative has a
positive coefficient on its smallest support index.

Every path factors uniquely as ``r * p`` with ``r >= 1`` and ``p`` primitive
(gcd of |p| equal to one), so the features along a direction form a ladder of
harmonics ``cos(r * p.theta)``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .errors import ConfigurationError, InvalidPathError


@dataclass(frozen=True, order=True)
class FrequencyVector:
    """Sparse signed integer vector identifying one directional cosine."""

    dimension: int
    support: tuple[int, ...]
    coeffs: tuple[int, ...]

    def __post_init__(self):
        support = tuple(int(i) for i in self.support)
        coeffs = tuple(int(c) for c in self.coeffs)
        if len(support) != len(coeffs):
            raise InvalidPathError("support and coeffs must have equal length")
        if any(b <= a for a, b in zip(support, support[1:])):
            raise InvalidPathError(f"support must be strictly increasing, got {support}")
        if any(c == 0 for c in coeffs):
            raise InvalidPathError("coefficients on the support must be nonzero")
        if support and (support[0] < 0 or support[-1] >= self.dimension):
            raise InvalidPathError(
                f"support {support} out of range for dimension {self.dimension}"
            )
        object.__setattr__(self, "dimension", int(self.dimension))
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "coeffs", coeffs)

    @classmethod
    def from_dense(cls, values: Sequence[int]) -> "FrequencyVector":
        values = [int(v) for v in values]
        support = tuple(j for j, v in enumerate(values) if v != 0)
        return cls(len(values), support, tuple(values[j] for j in support))

    @classmethod
    def from_mapping(cls, dimension: int, entries: dict[int, int]) -> "FrequencyVector":
        items = sorted((int(j), int(c)) for j, c in entries.items() if c != 0)
        return cls(dimension, tuple(j for j, _ in items), tuple(c for _, c in items))

    def dense(self) -> np.ndarray:
        out = np.zeros(self.dimension, dtype=np.int64)
        out[list(self.support)] = self.coeffs
        return out

    @property
    def sparsity(self) -> int:
        return len(self.support)

    @property
    def total_order(self) -> int:
        return sum(abs(c) for c in self.coeffs)

    @property
    def is_intercept(self) -> bool:
        return not self.support

    @property
    def is_canonical(self) -> bool:
        return bool(self.coeffs) and self.coeffs[0] > 0

    def __neg__(self) -> "FrequencyVector":
        return FrequencyVector(self.dimension, self.support, tuple(-c for c in self.coeffs))

    def scaled(self, r: int) -> "FrequencyVector":
        if r == 0:
            raise InvalidPathError("cannot scale a path by zero")
        return FrequencyVector(self.dimension, self.support, tuple(r * c for c in self.coeffs))

    def coefficient(self, j: int) -> int:
        try:
            return self.coeffs[self.support.index(j)]
        except ValueError:
            return 0

    def to_dict(self) -> dict:
        return {"support": list(self.support), "coeffs": list(self.coeffs)}

    @classmethod
    def from_dict(cls, dimension: int, data: dict) -> "FrequencyVector":
        return cls(dimension, tuple(data["support"]), tuple(data["coeffs"]))

    def __str__(self) -> str:
        return "(" + ", ".join(str(v) for v in self.dense()) + ")"


@dataclass
class PrimitiveRay:
    """A primitive direction together with the harmonic orders in use."""

    direction: FrequencyVector
    harmonics: set[int] = field(default_factory=set)

    def __post_init__(self):
        if not self.direction.support:
            raise InvalidPathError("a primitive ray needs a nonempty direction")
        if math.gcd(*(abs(c) for c in self.direction.coeffs)) != 1:
            raise InvalidPathError(f"direction {self.direction} is not primitive")
        if any(int(r) < 1 for r in self.harmonics):
            raise InvalidPathError("harmonic orders must be positive")

    def paths(self) -> list[FrequencyVector]:
        return [self.direction.scaled(r) for r in sorted(self.harmonics)]


def canonicalize(m: FrequencyVector) -> FrequencyVector:
    """Pick the representative of {m, -m} whose leading coefficient is positive."""
    if not m.support:
        raise InvalidPathError("the zero vector is the intercept, not a spectral path")
    return m if m.coeffs[0] > 0 else -m


def primitive_decompose(m: FrequencyVector) -> tuple[int, FrequencyVector]:
    """Split a canonical path into harmonic order ``r`` and primitive direction ``p``."""
    m = canonicalize(m)
    r = math.gcd(*(abs(c) for c in m.coeffs))
    p = FrequencyVector(m.dimension, m.support, tuple(c // r for c in m.coeffs))
    return r, p


def group_by_ray(paths: Sequence[FrequencyVector]) -> dict[FrequencyVector, PrimitiveRay]:
    """Collect paths into primitive rays, keyed by direction in first-seen order."""
    rays: dict[FrequencyVector, PrimitiveRay] = {}
    for m in paths:
        r, p = primitive_decompose(m)
        rays.setdefault(p, PrimitiveRay(p)).harmonics.add(r)
    return rays


def compositions(total: int, parts: int) -> Iterator[tuple[int, ...]]:
    """Ordered compositions of ``total`` into ``parts`` positive integers, lexicographic."""
    if parts == 1:
        if total >= 1:
            yield (total,)
        return
    for first in range(1, total - parts + 2):
        for rest in compositions(total - first, parts - 1):
            yield (first, *rest)


def enumerate_candidates(
    D: int,
    k: int,
    L: int,
    importance_order: Sequence[int] | None = None,
) -> list[FrequencyVector]:
    """All canonical paths with exactly ``k`` nonzeros and total order ``L``.

    Supports are k-subsets drawn in combination order over ``importance_order``
    (feature indices, most important first) or over ``range(D)``.  For each
    support, compositions of ``L`` are assigned to the features in increasing
    index order and then every sign pattern of the non-leading entries is
    applied, ``+`` before ``-``.  The result has
    ``C(D, k) * C(L-1, k-1) * 2**(k-1)`` entries.
    """
    if k < 1 or k > D or k > L:
        return []
    order = list(range(D)) if importance_order is None else [int(j) for j in importance_order]
    if sorted(order) != list(range(D)):
        raise ConfigurationError("importance_order must be a permutation of range(D)")

    out = []
    sign_patterns = list(itertools.product((1, -1), repeat=k - 1))
    for subset in itertools.combinations(order, k):
        support = tuple(sorted(subset))
        for comp in compositions(L, k):
            for signs in sign_patterns:
                coeffs = (comp[0], *(s * c for s, c in zip(signs, comp[1:])))
                out.append(FrequencyVector(D, support, coeffs))
    return out


def iter_candidates(
    D: int, k: int, importance_order: Sequence[int] | None = None
) -> Iterator[FrequencyVector]:
    """Endless stream of canonical k-sparse paths in increasing total order."""
    if k < 1 or k > D:
        return
    for L in itertools.count(k):
        yield from enumerate_candidates(D, k, L, importance_order)


def tensor_expand(m_tensor) -> list[tuple[float, FrequencyVector]]:
    """Rewrite ``prod_j cos(m_j theta_j)`` as a sum of directional cosines.

    With support size k the product equals ``2**-(k-1)`` times the sum of
    ``cos(sum_j sigma_j m_j theta_j)`` over sign patterns with the first sign
    fixed to +1.  An empty support returns the single intercept term.
    """
    if not isinstance(m_tensor, FrequencyVector):
        m_tensor = FrequencyVector.from_dense(m_tensor)
    if any(c < 0 for c in m_tensor.coeffs):
        raise InvalidPathError("tensor degrees must be nonnegative")
    k = m_tensor.sparsity
    if k == 0:
        return [(1.0, m_tensor)]
    weight = 2.0 ** -(k - 1)
    terms = []
    for signs in itertools.product((1, -1), repeat=k - 1):
        coeffs = (m_tensor.coeffs[0], *(s * c for s, c in zip(signs, m_tensor.coeffs[1:])))
        terms.append((weight, FrequencyVector(m_tensor.dimension, m_tensor.support, coeffs)))
    return terms
