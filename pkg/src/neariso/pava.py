"""Weighted isotonic regression by pooling adjacent violators.

Solves min over nondecreasing mu of (1/2) sum w_i (x_i - mu_i)^2 with a
single left-to-right stack pass: each new point starts its own block and
is merged backwards while it violates the previous block's level.  Equal
adjacent levels are never merged (the violation test is strict), so tied
data keeps its blocks distinct; downstream piece counting decides how to
treat coincident levels.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyInputError, NonpositiveWeightError

INCREASING = "increasing"
DECREASING = "decreasing"


@dataclass(frozen=True)
class WeightedSeries:
    """Ordered observations with positive weights and a trend direction.

    ``direction`` is ``"increasing"`` or ``"decreasing"``; the decreasing
    case is handled everywhere by index reversal, so solvers only ever see
    increasing problems.
    """

    values: np.ndarray
    weights: np.ndarray
    direction: str = INCREASING

    def __init__(self, values, weights=None, direction=INCREASING):
        values = np.atleast_1d(np.asarray(values, dtype=float))
        if values.size == 0:
            raise EmptyInputError("series must contain at least one value")
        if weights is None:
            weights = np.ones_like(values)
        else:
            weights = np.atleast_1d(np.asarray(weights, dtype=float))
        if weights.shape != values.shape:
            raise NonpositiveWeightError(
                f"weights length {weights.size} != values length {values.size}"
            )
        if not np.all(weights > 0.0):
            raise NonpositiveWeightError("weights must be strictly positive")
        if direction not in (INCREASING, DECREASING):
            raise ValueError(f"direction must be increasing or decreasing: {direction!r}")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "direction", direction)

    @property
    def n(self) -> int:
        return self.values.size

    def reversed(self) -> "WeightedSeries":
        """The same data in reversed index order, with the direction flipped."""
        other = DECREASING if self.direction == INCREASING else INCREASING
        return WeightedSeries(self.values[::-1].copy(), self.weights[::-1].copy(), other)


@dataclass(frozen=True)
class ClusterPartition:
    """Contiguous blocks with one fitted level each.

    ``starts[j]`` is the first index of block j; block j covers
    ``starts[j] .. starts[j+1]-1`` (the last block ends at n-1).
    """

    starts: tuple
    levels: tuple
    n: int

    @property
    def size(self) -> int:
        return len(self.starts)

    def blocks(self):
        """Yield (lo, hi) half-open index ranges, one per block."""
        bounds = list(self.starts) + [self.n]
        for j in range(len(self.starts)):
            yield bounds[j], bounds[j + 1]


def expand(partition: ClusterPartition, n: int | None = None) -> np.ndarray:
    """Length-n vector that is constant on each block of the partition."""
    if n is None:
        n = partition.n
    out = np.empty(n, dtype=float)
    bounds = list(partition.starts) + [n]
    for j, level in enumerate(partition.levels):
        out[bounds[j]:bounds[j + 1]] = level
    return out


def _pava_increasing(values: np.ndarray, weights: np.ndarray) -> ClusterPartition:
    starts = []
    levels = []
    wsums = []
    for i, (v, w) in enumerate(zip(values, weights)):
        starts.append(i)
        levels.append(float(v))
        wsums.append(float(w))
        # merge backwards while the new block violates monotonicity
        while len(levels) > 1 and levels[-1] < levels[-2]:
            tot = wsums[-2] + wsums[-1]
            levels[-2] = (wsums[-2] * levels[-2] + wsums[-1] * levels[-1]) / tot
            wsums[-2] = tot
            del levels[-1], wsums[-1], starts[-1]
    return ClusterPartition(tuple(starts), tuple(levels), values.size)


def isotonic_fit(series: WeightedSeries) -> ClusterPartition:
    """Weighted isotonic regression of the series.

    Returns the block partition of the unique minimizer; use
    :func:`expand` to materialize the fitted vector.  For a decreasing
    series the solve runs on reversed indices and the partition is mapped
    back to original order.
    """
    if series.direction == INCREASING:
        return _pava_increasing(series.values, series.weights)
    rev = _pava_increasing(series.values[::-1], series.weights[::-1])
    n = series.n
    bounds = list(rev.starts) + [n]
    # block [a, b) in reversed coordinates is [n-b, n-a) in the original
    starts = tuple(n - bounds[j + 1] for j in range(rev.size - 1, -1, -1))
    levels = tuple(rev.levels[::-1])
    return ClusterPartition(starts, levels, n)
