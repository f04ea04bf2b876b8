"""One-parameter exponential families in natural / expectation coordinates.

Each family is described by its unit-weight cumulant ``psi``; an
observation with weight ``w`` follows the density

    p(x | theta) = h(x) * exp(theta * x - w * psi(theta)),

so the weight enters only as a multiplier of the cumulant.  Weights carry
the usual meaning per family: number of trials for the binomial, half the
degrees of freedom for a scaled chi-square (gamma scale), the inverse
variance for the normal, and an exposure for the Poisson.  ``x`` is the
natural sufficient statistic of the weighted observation (the count, the
chi-square statistic, ``w`` times the measurement for the normal), which
makes ``x / w`` an unbiased estimate of the expectation parameter ``eta``.

The expectation parameter ``eta = psi'(theta)`` and natural parameter
``theta`` are linked bijectively; ``mean_map`` / ``mean_map_inv`` convert
between them, with boundary mean values mapped to signed infinities so
that fits touching the boundary (for example a binomial success fraction
of exactly one) remain representable.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .errors import DomainError, NonpositiveWeightError, SupportError

_LOG_TWO_PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class Family:
    """Descriptor of a one-parameter exponential family.

    Attributes
    ----------
    kind : str
        One of ``"normal"``, ``"binomial"``, ``"poisson"``, ``"gamma"``.
        ``"gamma"`` is the gamma-scale family in which a chi-square
        statistic with d degrees of freedom and scale s has weight d/2
        and natural parameter theta = -1/(2 s).
    """

    kind: str

    def __post_init__(self):
        if self.kind not in ("normal", "binomial", "poisson", "gamma"):
            raise DomainError(f"unknown family kind: {self.kind!r}")


NORMAL = Family("normal")
BINOMIAL = Family("binomial")
POISSON = Family("poisson")
GAMMA_SCALE = Family("gamma")

_BY_NAME = {
    "normal": NORMAL,
    "binomial": BINOMIAL,
    "poisson": POISSON,
    "gamma": GAMMA_SCALE,
    # scaled chi-square data is the gamma-scale family with weight d/2
    "chisq": GAMMA_SCALE,
}


def family_by_name(name: str) -> Family:
    """Look up a family by its command-line token.

    Accepts ``normal``, ``binomial``, ``poisson``, ``gamma`` and the alias
    ``chisq`` (scaled chi-square observations; pass d/2 as the weight).
    """
    try:
        return _BY_NAME[name.lower()]
    except KeyError:
        raise DomainError(f"unknown family name: {name!r}") from None


def chi_square(dof: float) -> tuple[Family, float]:
    """Gamma-scale view of a scaled chi-square with ``dof`` degrees of freedom.

    Returns the family together with the per-observation weight d/2.  A
    statistic x ~ s * chisq(d) then has eta = 2 s and theta = -1/(2 s).
    """
    if dof <= 0:
        raise DomainError("degrees of freedom must be positive")
    return GAMMA_SCALE, 0.5 * float(dof)


def natural_domain(family: Family) -> tuple[float, float]:
    """Open interval of valid natural parameters."""
    if family.kind == "gamma":
        return (-math.inf, 0.0)
    return (-math.inf, math.inf)


def mean_range(family: Family) -> tuple[float, float]:
    """Open interval of mean parameters; closure is accepted by mean_map_inv."""
    if family.kind == "normal":
        return (-math.inf, math.inf)
    if family.kind == "binomial":
        return (0.0, 1.0)
    return (0.0, math.inf)


def _check_theta(family: Family, theta):
    arr = np.asarray(theta, dtype=float)
    if np.any(np.isnan(arr)):
        raise DomainError("natural parameter is NaN")
    lo, hi = natural_domain(family)
    if np.any(arr <= lo) or np.any(arr >= hi):
        raise DomainError(
            f"natural parameter outside the open domain ({lo}, {hi}) "
            f"of the {family.kind} family"
        )
    return arr


def psi(family: Family, theta):
    """Unit-weight cumulant value at ``theta``.

    Normal: theta^2/2; binomial (per trial): log(1+e^theta);
    Poisson: e^theta; gamma scale (per half dof): -log(-theta).
    """
    arr = _check_theta(family, theta)
    if family.kind == "normal":
        out = 0.5 * arr * arr
    elif family.kind == "binomial":
        out = np.logaddexp(0.0, arr)
    elif family.kind == "poisson":
        out = np.exp(arr)
    else:
        out = -np.log(-arr)
    return out if isinstance(theta, np.ndarray) else float(out)


def mean_map(family: Family, theta):
    """Expectation parameter eta = psi'(theta)."""
    arr = _check_theta(family, theta)
    if family.kind == "normal":
        out = arr + 0.0
    elif family.kind == "binomial":
        # logistic, written via tanh for symmetric overflow behavior
        out = 0.5 * (1.0 + np.tanh(0.5 * arr))
    elif family.kind == "poisson":
        out = np.exp(arr)
    else:
        out = -1.0 / arr
    return out if isinstance(theta, np.ndarray) else float(out)


def mean_map_inv(family: Family, eta):
    """Natural parameter theta = (psi')^{-1}(eta).

    Accepts the closure of the mean range; boundary values map to signed
    infinities (binomial eta in {0, 1} -> -inf/+inf, Poisson or gamma
    eta = 0 -> -inf) rather than raising.
    """
    arr = np.asarray(eta, dtype=float)
    if np.any(np.isnan(arr)):
        raise DomainError("mean parameter is NaN")
    if family.kind == "normal":
        if not np.all(np.isfinite(arr)):
            raise DomainError("normal mean must be finite")
        out = arr + 0.0
    elif family.kind == "binomial":
        if np.any(arr < 0.0) or np.any(arr > 1.0):
            raise DomainError("binomial mean must lie in [0, 1]")
        with np.errstate(divide="ignore"):
            out = np.log(arr) - np.log1p(-arr)
    elif family.kind == "poisson":
        if np.any(arr < 0.0) or not np.all(arr < math.inf):
            raise DomainError("Poisson mean must lie in [0, inf)")
        with np.errstate(divide="ignore"):
            out = np.log(arr)
    else:
        if np.any(arr < 0.0) or not np.all(arr < math.inf):
            raise DomainError("gamma-scale mean must lie in [0, inf)")
        with np.errstate(divide="ignore"):
            out = -1.0 / arr
    return out if isinstance(eta, np.ndarray) else float(out)


def _check_weight(weight):
    arr = np.asarray(weight, dtype=float)
    if np.any(~(arr > 0.0)):
        raise NonpositiveWeightError("weights must be strictly positive")
    return arr


def _check_eta_closed(family: Family, eta):
    arr = np.asarray(eta, dtype=float)
    if np.any(np.isnan(arr)):
        raise DomainError("mean parameter is NaN")
    lo, hi = mean_range(family)
    if np.any(arr < lo) or np.any(arr > hi):
        raise DomainError(f"mean parameter outside [{lo}, {hi}]")
    return arr


def _xlogy(x, y):
    # x*log(y) with the 0*log(0) = 0 convention
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(x == 0.0, 0.0, x * np.log(y))
    return out


def validate_support(family: Family, x, weight) -> None:
    """Raise SupportError unless every x lies in its weighted family's support."""
    xs = np.asarray(x, dtype=float)
    w = np.asarray(weight, dtype=float)
    if family.kind == "normal":
        if np.any(~np.isfinite(xs)):
            raise SupportError("normal observation must be finite")
    elif family.kind == "binomial":
        trials = np.round(w)
        if np.any(np.abs(w - trials) > 1e-9) or np.any(trials < 1):
            raise SupportError("binomial weight must be a positive integer trial count")
        if np.any(np.abs(xs - np.round(xs)) > 1e-9) or np.any(xs < 0) or np.any(xs > trials):
            raise SupportError("binomial count must be an integer in [0, trials]")
    elif family.kind == "poisson":
        if np.any(xs < 0) or np.any(~np.isfinite(xs)):
            raise SupportError("Poisson observation must be a nonnegative real")
    else:
        if np.any(xs <= 0) or np.any(~np.isfinite(xs)):
            raise SupportError("gamma-scale observation must be positive")


def log_density(family: Family, x, eta, weight):
    """Full log-density of ``x`` (normalizer included) at mean ``eta``.

    ``x`` is the weighted sufficient statistic: binomial count out of
    ``weight`` trials, chi-square statistic with weight d/2, Poisson count
    with exposure ``weight``, or ``weight`` times the measurement for the
    normal (whose observation then has variance 1/weight).  Poisson
    support is the nonnegative reals, extended continuously through
    ``lgamma(x+1)``, so rate-like data can be scored directly.
    """
    w = _check_weight(weight)
    e = _check_eta_closed(family, eta)
    xs = np.asarray(x, dtype=float)
    scalar = np.isscalar(x) or (isinstance(x, np.ndarray) and x.ndim == 0)
    validate_support(family, xs, w)

    if family.kind == "normal":
        out = -0.5 * (np.log(2.0 * math.pi * w) + (xs - w * e) ** 2 / w)
    elif family.kind == "binomial":
        trials = np.round(w)
        xr = np.round(xs)
        log_choose = (
            gammaln(trials + 1.0) - gammaln(xr + 1.0) - gammaln(trials - xr + 1.0)
        )
        out = log_choose + _xlogy(xr, e) + _xlogy(trials - xr, 1.0 - e)
    elif family.kind == "poisson":
        out = _xlogy(xs, w * e) - w * e - gammaln(xs + 1.0)
    else:
        # a zero scale puts no mass on x > 0
        with np.errstate(divide="ignore", invalid="ignore"):
            raw = (w - 1.0) * np.log(xs) - xs / e - w * np.log(e) - gammaln(w)
            out = np.where(np.asarray(e) == 0.0, -math.inf, raw)
    return float(out) if scalar and np.ndim(out) == 0 else out


def log_likelihood(family: Family, x, eta, weights) -> float:
    """Sum of log densities over a series."""
    x = np.asarray(x, dtype=float)
    eta = np.asarray(eta, dtype=float)
    w = np.broadcast_to(np.asarray(weights, dtype=float), x.shape)
    return float(np.sum(log_density(family, x, eta, w)))


def sample(family: Family, eta, weight, rng):
    """One draw of the weighted sufficient statistic with mean ``weight * eta``.

    ``eta`` must lie in the open mean range (boundary means admit no
    nondegenerate draw).  ``rng`` is a ``numpy.random.Generator``; the
    caller owns seeding, one generator per thread of execution.
    """
    w = _check_weight(weight)
    e = np.asarray(eta, dtype=float)
    lo, hi = mean_range(family)
    if np.any(~(e > lo)) or np.any(~(e < hi)):
        raise DomainError("mean parameter must lie strictly inside the mean range")
    if family.kind == "normal":
        out = w * rng.normal(loc=e, scale=np.sqrt(1.0 / w))
    elif family.kind == "binomial":
        trials = np.round(w)
        if np.any(np.abs(w - trials) > 1e-9) or np.any(trials < 1):
            raise SupportError("binomial weight must be a positive integer trial count")
        out = rng.binomial(trials.astype(np.int64), e).astype(float)
    elif family.kind == "poisson":
        out = rng.poisson(w * e).astype(float)
    else:
        out = rng.gamma(shape=w, scale=e)
    if np.ndim(out) == 0:
        return float(out)
    return out
