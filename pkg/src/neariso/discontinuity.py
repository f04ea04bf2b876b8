"""Discontinuity detection in count sequences with a decreasing trend.

Event counts that drift downward along an ordering (ages, time, a
running variable with a policy threshold) are fitted as Poisson
observations whose mean sequence is penalized for upward steps only.
Genuine discontinuities survive the penalty as isolated upward jumps;
the jump report lists each one with its location and size.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .families import POISSON, validate_support
from .path import Fit, SolutionPath, generalized_fit_at, solve_path
from .pava import DECREASING, WeightedSeries
from .selection import CriterionTrace, select_lambda


@dataclass(frozen=True)
class Jump:
    """An upward step of the fitted mean between ``index`` and ``index + 1``."""

    index: int
    left_value: float
    right_value: float

    @property
    def rise(self) -> float:
        return self.right_value - self.left_value


@dataclass(frozen=True)
class RddResult:
    """Decreasing-trend Poisson fit plus its upward-jump report."""

    fit: Fit
    jumps: tuple
    lam: float
    path: SolutionPath
    trace: CriterionTrace | None


def find_jumps(eta) -> tuple:
    """Strict increases of a fitted sequence, in original index order."""
    eta = np.atleast_1d(np.asarray(eta, dtype=float))
    jumps = []
    for i in range(eta.size - 1):
        if eta[i + 1] > eta[i]:
            jumps.append(Jump(index=i, left_value=float(eta[i]), right_value=float(eta[i + 1])))
    return tuple(jumps)


def rdd_fit(counts, weights=None, criterion="aic") -> RddResult:
    """Fit a decreasing Poisson mean sequence and report upward jumps.

    ``counts`` are Poisson observations (rates are accepted when the
    exposure weights justify a continuous scale), ``weights`` optional
    positive exposures (default 1), and ``criterion`` either ``"aic"``
    or an explicit nonnegative lambda.
    """
    counts = np.atleast_1d(np.asarray(counts, dtype=float))
    w = np.ones_like(counts) if weights is None else np.broadcast_to(
        np.asarray(weights, dtype=float), counts.shape
    ).astype(float)
    validate_support(POISSON, counts, w)
    path = solve_path(WeightedSeries(counts / w, w, direction=DECREASING))
    trace = None
    if isinstance(criterion, str):
        if criterion != "aic":
            raise DomainError(f"unknown rdd criterion: {criterion!r}")
        trace = select_lambda(counts, w, POISSON, path, criterion="aic")
        lam = trace.selected_lambda
    else:
        lam = float(criterion)
    fit = generalized_fit_at(path, POISSON, lam)
    return RddResult(fit=fit, jumps=find_jumps(fit.eta), lam=lam, path=path, trace=trace)
