"""Solution path of nearly isotonic regression, with exponential-family mapping.

The estimator minimizes, over mu,

    (1/2) sum_i w_i (x_i - mu_i)^2 + lambda * sum_i (mu_i - mu_{i+1})_+ ,

whose solution is piecewise linear in lambda: clusters of consecutive
indices share a value and move with constant velocity until two clusters
collide and merge.  :func:`solve_path` simulates those merge events from
lambda = 0 (the raw data) to the terminal knot, beyond which the fit is
the isotonic regression.  Collision times are computed from the exact
per-cluster weighted means rather than by accumulating increments, which
keeps knot values reproducible to the last bit.

For a one-parameter exponential family the same path applied to
x~_i = x_i / w_i yields the expectation-parameter estimate, and the
natural-parameter estimate follows through the inverse mean map; that is
what :func:`fit_generalized` and :func:`generalized_fit_at` do.  Bound
constraints on the natural parameter reduce to clipping the unconstrained
fit (:func:`clip_bounds`), and :func:`kkt_check` certifies optimality of
any candidate fit by reconstructing the hinge subgradients.
"""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import families
from .errors import DomainError, InvalidBoundsError
from .families import Family, validate_support
from .pava import DECREASING, INCREASING, ClusterPartition, WeightedSeries

_EQ_RTOL = 1e-12       # relative tolerance for "two cluster values are equal"
_TIME_RTOL = 1e-12     # relative tolerance for event-time comparisons


def value_runs(vector) -> int:
    """Number of maximal runs of equal consecutive values."""
    arr = np.asarray(vector)
    if arr.size == 0:
        return 0
    return 1 + int(np.count_nonzero(np.diff(arr) != 0))


@dataclass(frozen=True)
class PathState:
    """Cluster configuration valid on one segment [lam, next knot).

    ``levels`` are the cluster values at ``lam``; between knots each
    cluster moves linearly with its ``slope``.  ``violations[j]`` is the
    indicator that cluster j sits strictly above cluster j+1.
    """

    lam: float
    starts: tuple
    levels: tuple
    slopes: tuple
    violations: tuple

    @property
    def size(self) -> int:
        return len(self.starts)


class MergeEvent(NamedTuple):
    lam: float
    clusters_after: int


class PathFit(NamedTuple):
    """Interpolated fit at one lambda: the fitted vector and its cluster count."""

    lam: float
    eta: np.ndarray
    pieces: int


@dataclass(frozen=True)
class SolutionPath:
    """Complete merge history of the nearly isotonic path for one series.

    ``knots`` is strictly increasing and starts at 0; ``states[k]``
    describes the solution on ``[knots[k], knots[k+1])`` after all merges
    at ``knots[k]``.  ``states[0]`` may already contain merges of exactly
    tied neighbors (zero-duration events at lambda 0); the untouched data
    is kept separately so that the fit at lambda = 0 is the raw series
    with one piece per observation.  Instances are immutable and safe to
    query concurrently.
    """

    series: WeightedSeries
    knots: np.ndarray
    states: tuple
    events: tuple
    final_partition: ClusterPartition
    _reversed: bool

    @property
    def n(self) -> int:
        return self.series.n

    @property
    def terminal_lambda(self) -> float:
        return float(self.knots[-1])


def _expand_state(starts, levels, n) -> np.ndarray:
    out = np.empty(n, dtype=float)
    bounds = list(starts) + [n]
    for j, level in enumerate(levels):
        out[bounds[j]:bounds[j + 1]] = level
    return out


def _solve_increasing(x, w):
    """Run the merge-event simulation; returns (states, events, terminal lam)."""
    n = len(x)
    starts = list(range(n))
    wsum = list(w)
    swx = [w[i] * x[i] for i in range(n)]    # exact per-cluster sum of w*x
    y = list(x)
    lam = 0.0
    states = []
    events = []
    due = {}                                  # left cluster index -> was violating

    while True:
        K = len(starts)
        sb = [0.0] * (K + 1)
        for t in range(1, K):
            sb[t] = 1.0 if y[t - 1] > y[t] else 0.0
        m = [(sb[j] - sb[j + 1]) / wsum[j] for j in range(K)]

        # merge one touching pair per pass, smallest index first
        jmerge = None
        for j in range(K - 1):
            gap = y[j] - y[j + 1]
            if abs(gap) > _EQ_RTOL * (1.0 + abs(y[j])):
                continue
            dm = m[j] - m[j + 1]
            # merge on strict violation, on converging slopes at a tie, or
            # when the pair's collision time was reached this advance while
            # it was violating; an ascending touch whose chaser slowed down
            # stays split
            if gap > 0.0 or dm > 0.0 or due.get(j, False):
                jmerge = j
                break
        if jmerge is not None:
            a = jmerge
            tot = wsum[a] + wsum[a + 1]
            y[a] = (wsum[a] * y[a] + wsum[a + 1] * y[a + 1]) / tot
            wsum[a] = tot
            swx[a] += swx[a + 1]
            del y[a + 1], wsum[a + 1], starts[a + 1], swx[a + 1]
            due = {(p if p < a else p - 1): v for p, v in due.items() if p != a}
            events.append(MergeEvent(lam, len(starts)))
            continue

        # next collision per adjacent pair, from exact cluster means:
        # y_j(t) = mean_j + t * m_j, so pairs meet at
        # t = (mean_{j+1} - mean_j) / (m_j - m_{j+1})
        tol = _TIME_RTOL * (1.0 + abs(lam))
        times = [math.inf] * max(K - 1, 0)
        for j in range(K - 1):
            dm = m[j] - m[j + 1]
            if dm == 0.0:
                continue
            tj = (swx[j + 1] / wsum[j + 1] - swx[j] / wsum[j]) / dm
            if tj > lam + tol:
                times[j] = tj
        states.append(
            PathState(
                lam,
                tuple(starts),
                tuple(y),
                tuple(m),
                tuple(1.0 if y[j] > y[j + 1] else 0.0 for j in range(K - 1)),
            )
        )
        best_t = min(times, default=math.inf)
        if not math.isfinite(best_t):
            return states, events, lam
        due = {}
        for j in range(K - 1):
            if times[j] <= best_t + _TIME_RTOL * (1.0 + abs(best_t)):
                due[j] = y[j] > y[j + 1]
        y = [y[j] + m[j] * (best_t - lam) for j in range(K)]
        lam = best_t


def solve_path(series: WeightedSeries) -> SolutionPath:
    """Compute every knot of the nearly isotonic path for the series.

    The path starts at lambda 0 with the raw data and ends at the first
    lambda whose fit is isotonic; each knot merges at least one adjacent
    cluster pair, so there are at most n - 1 of them.  Simultaneous
    collisions are resolved smallest index first, rescanning at the same
    lambda, so a knot's recorded state is the configuration after the
    whole cascade.  A decreasing-direction series is solved on reversed
    indices; fits are mapped back to original order transparently.
    """
    reversed_input = series.direction == DECREASING
    if reversed_input:
        x = series.values[::-1]
        w = series.weights[::-1]
    else:
        x = series.values
        w = series.weights
    states, events, lam_t = _solve_increasing(
        [float(v) for v in x], [float(v) for v in w]
    )
    n = series.n
    term = states[-1]
    if reversed_input:
        bounds = list(term.starts) + [n]
        starts = tuple(n - bounds[j + 1] for j in range(term.size - 1, -1, -1))
        levels = tuple(term.levels[::-1])
    else:
        starts, levels = term.starts, term.levels
    return SolutionPath(
        series=series,
        knots=np.array([s.lam for s in states]),
        states=tuple(states),
        events=tuple(events),
        final_partition=ClusterPartition(starts, levels, n),
        _reversed=reversed_input,
    )


def fit_at(path: SolutionPath, lam: float) -> PathFit:
    """Fitted vector at an arbitrary lambda by per-cluster interpolation.

    At lambda 0 this is the raw series with n pieces; past the terminal
    knot it is the isotonic fit.  Exactly at a knot the post-merge state
    is reported, so the piece count is left-continuous along the path.
    """
    lam = float(lam)
    if not lam >= 0.0:
        raise DomainError("lambda must be nonnegative")
    n = path.n
    if lam == 0.0:
        return PathFit(0.0, path.series.values.copy(), n)
    knots = path.knots
    k = min(bisect.bisect_right(knots, lam) - 1, len(path.states) - 1)
    state = path.states[k]
    dl = min(lam, path.terminal_lambda) - state.lam
    levels = [state.levels[j] + state.slopes[j] * dl for j in range(state.size)]
    eta = _expand_state(state.starts, levels, n)
    if path._reversed:
        eta = eta[::-1].copy()
    return PathFit(lam, eta, state.size)


@dataclass(frozen=True)
class Fit:
    """A fit at one lambda in both parametrizations.

    ``pieces`` is the number of clusters of the path state (with bounds
    applied it is recomputed as the number of distinct-value runs, since
    clipping can merge neighboring pieces into a shared boundary value).
    """

    lam: float
    eta: np.ndarray
    theta: np.ndarray
    pieces: int
    family: Family
    bounds_applied: tuple | None = None


def generalized_fit_at(
    path: SolutionPath,
    family: Family,
    lam: float,
    alpha: float | None = None,
    beta: float | None = None,
) -> Fit:
    """Map the path fit at ``lam`` into a family's natural parameters."""
    pf = fit_at(path, lam)
    eta = pf.eta
    if family.kind == "normal":
        theta = eta.copy()
    else:
        theta = families.mean_map_inv(family, eta)
    fit = Fit(pf.lam, eta, theta, pf.pieces, family)
    if alpha is None and beta is None:
        return fit
    return clip_bounds(fit, alpha, beta)


def fit_generalized(
    data,
    weights,
    family: Family,
    lam: float,
    direction: str = INCREASING,
    alpha: float | None = None,
    beta: float | None = None,
) -> Fit:
    """Nearly isotonic fit of exponential-family data at one lambda.

    Forms x~_i = x_i / w_i, runs the weighted path on (x~, w), and maps
    the fitted means through the inverse mean map.  For the normal family
    the mapping is the identity, so this coincides exactly with the plain
    weighted path fit.
    """
    data = np.atleast_1d(np.asarray(data, dtype=float))
    w = np.broadcast_to(np.asarray(weights, dtype=float), data.shape).astype(float)
    validate_support(family, data, w)
    series = WeightedSeries(data / w, w, direction)
    return generalized_fit_at(solve_path(series), family, lam, alpha, beta)


def _mean_from_theta_extended(family: Family, theta: np.ndarray) -> np.ndarray:
    """mean_map extended to signed-infinite theta (boundary mean values)."""
    lo, hi = families.mean_range(family)
    out = np.empty_like(theta)
    finite = np.isfinite(theta)
    if np.any(finite):
        out[finite] = np.asarray(families.mean_map(family, theta[finite]))
    out[theta == -math.inf] = lo
    out[theta == math.inf] = hi
    return out


def clip_bounds(fit: Fit, alpha: float | None, beta: float | None) -> Fit:
    """Constrain the fit's natural parameters to [alpha, beta].

    The bounded estimator is the pointwise clip of the unbounded one;
    the mean vector is re-derived from the clipped thetas and the piece
    count is recomputed from the clipped values.
    """
    a = -math.inf if alpha is None else float(alpha)
    b = math.inf if beta is None else float(beta)
    if math.isnan(a) or math.isnan(b) or a > b:
        raise InvalidBoundsError(f"invalid bounds ({a}, {b})")
    lo, hi = families.natural_domain(fit.family)
    if a > hi or b < lo:
        raise InvalidBoundsError("bounds lie outside the family's natural domain")
    theta = np.minimum(np.maximum(fit.theta, a), min(b, hi))
    eta = _mean_from_theta_extended(fit.family, theta)
    return Fit(fit.lam, eta, theta, value_runs(theta), fit.family, (a, b))


@dataclass(frozen=True)
class KktCertificate:
    """Hinge-subgradient sequence certifying (or refuting) optimality.

    ``xi`` has length n + 1 with xi[0] = 0 pinned; a valid certificate has
    xi[n] = 0, every interior multiplier in [0, 1], and the multiplier
    pinned to 1 (resp. 0) wherever the fit strictly decreases (resp.
    increases) across the pair.
    """

    xi: np.ndarray
    valid: bool
    max_violation: float


def kkt_check(series: WeightedSeries, lam: float, eta_hat) -> KktCertificate:
    """Certify stationarity of a candidate fit at ``lam``.

    The per-coordinate stationarity condition is
    w_i (eta_i - x~_i) + lam * (xi_i - xi_{i-1}) = 0, which determines the
    subgradient sequence xi by forward recursion.  The certificate reports
    the worst violation of the terminal, box, and sign conditions; a
    failing certificate is an ordinary return value, not an error.
    """
    lam = float(lam)
    if not lam > 0.0:
        raise DomainError("a KKT certificate requires lambda > 0")
    eta = np.atleast_1d(np.asarray(eta_hat, dtype=float))
    x = series.values
    w = series.weights
    if series.direction == DECREASING:
        eta = eta[::-1]
        x = x[::-1]
        w = w[::-1]
    n = x.size
    if eta.size != n:
        raise DomainError("fitted vector length does not match the series")
    xi = np.zeros(n + 1)
    xi[1:] = -np.cumsum(w * (eta - x)) / lam
    v_terminal = abs(xi[n])
    interior = xi[1:n]
    v_box = 0.0
    if interior.size:
        v_box = max(float(np.max(-interior, initial=0.0)),
                    float(np.max(interior - 1.0, initial=0.0)), 0.0)
    tol_sign = 1e-9 * (1.0 + float(np.max(np.abs(eta), initial=0.0)))
    v_sign = 0.0
    for i in range(n - 1):
        if eta[i] > eta[i + 1] + tol_sign:
            v_sign = max(v_sign, abs(xi[i + 1] - 1.0))
        elif eta[i] < eta[i + 1] - tol_sign:
            v_sign = max(v_sign, abs(xi[i + 1]))
    max_violation = max(v_terminal, v_box, v_sign)
    scale = 1.0 + float(np.max(np.abs(series.values)))
    return KktCertificate(xi, bool(max_violation <= 1e-8 * scale), float(max_violation))
