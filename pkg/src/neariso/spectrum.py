"""Spectral density estimation from the periodogram.

The periodogram ordinate at frequency j/T is

    p_j = |sum_t x_t exp(-2 pi i j t / T)|^2 / (2 pi T),   j = 1..floor(T/2),

and each ordinate is approximately an independent chi-square(2) variable
scaled by half the spectral density at that frequency.  Spectra of many
natural series decay with frequency, so the fit runs in the decreasing
direction with a hinge penalty on upward steps; lambda is chosen by AIC
over the path knots unless an explicit value is given.  The raw
periodogram is fitted (never its logarithm); logs are for display only.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, EmptyInputError
from .families import GAMMA_SCALE
from .path import Fit, SolutionPath, generalized_fit_at, solve_path
from .pava import DECREASING, WeightedSeries
from .selection import CriterionTrace, select_lambda


@dataclass(frozen=True)
class Periodogram:
    """Nonnegative periodogram ordinates at frequencies j/T, j=1..floor(T/2)."""

    freqs: np.ndarray
    power: np.ndarray
    T: int


@dataclass(frozen=True)
class SpectrumFit:
    """A fitted spectral density: ``fitted[j]`` estimates p(freqs[j])."""

    periodogram: Periodogram
    fitted: np.ndarray
    lam: float
    fit: Fit
    path: SolutionPath
    trace: CriterionTrace | None


def periodogram(series) -> Periodogram:
    """Periodogram of a real series at the nonzero Fourier frequencies."""
    x = np.atleast_1d(np.asarray(series, dtype=float))
    t = x.size
    if t < 2:
        raise EmptyInputError("periodogram needs a series of length at least 2")
    m = t // 2
    spectrum = np.fft.rfft(x)[1 : m + 1]
    power = (spectrum.real**2 + spectrum.imag**2) / (2.0 * np.pi * t)
    freqs = np.arange(1, m + 1, dtype=float) / t
    return Periodogram(freqs=freqs, power=power, T=t)


def spectrum_fit(series, criterion="aic") -> SpectrumFit:
    """Monotone-trend spectral density estimate of a real series.

    Each ordinate p_j is treated as a chi-square(2) observation with
    scale p(j/T)/2, i.e. a unit-weight gamma observation with mean
    p(j/T), and the mean sequence is fitted in the decreasing direction.
    ``criterion`` is ``"aic"`` (select lambda over the knots) or an
    explicit nonnegative lambda.
    """
    x = np.atleast_1d(np.asarray(series, dtype=float))
    if x.size < 4:
        raise EmptyInputError("spectral fit needs a series of length at least 4")
    pg = periodogram(x)
    w = np.ones_like(pg.power)
    path = solve_path(WeightedSeries(pg.power, w, direction=DECREASING))
    trace = None
    if isinstance(criterion, str):
        if criterion != "aic":
            raise DomainError(f"unknown spectrum criterion: {criterion!r}")
        trace = select_lambda(pg.power, w, GAMMA_SCALE, path, criterion="aic")
        lam = trace.selected_lambda
    else:
        lam = float(criterion)
    fit = generalized_fit_at(path, GAMMA_SCALE, lam)
    return SpectrumFit(
        periodogram=pg,
        fitted=fit.eta.copy(),
        lam=lam,
        fit=fit,
        path=path,
        trace=trace,
    )


def dominant_plateau(fit: SpectrumFit) -> tuple[np.ndarray, float]:
    """Frequencies of the plateau with the largest fitted value.

    Returns the frequency slice sharing the maximal fitted level (ties in
    value extend the plateau only when contiguous) and that level.
    """
    fitted = fit.fitted
    top = int(np.argmax(fitted))
    level = fitted[top]
    lo = top
    while lo > 0 and fitted[lo - 1] == level:
        lo -= 1
    hi = top
    while hi + 1 < fitted.size and fitted[hi + 1] == level:
        hi += 1
    return fit.periodogram.freqs[lo : hi + 1], float(level)
