"""Solution-path solver: closed forms, identities, and oracle agreement."""
from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from neariso import (
    BINOMIAL,
    DECREASING,
    GAMMA_SCALE,
    NORMAL,
    POISSON,
    DomainError,
    InvalidBoundsError,
    ObjectiveSpec,
    WeightedSeries,
    certification_suite,
    clip_bounds,
    expand,
    fit_at,
    fit_generalized,
    generalized_fit_at,
    isotonic_fit,
    kkt_check,
    objective_value,
    reformulation_minimize,
    solve_path,
    value_runs,
)
from neariso import families

from conftest import ALL_FAMILIES, lambda_pool, random_instance


def gaussian_objective(series: WeightedSeries, lam: float, eta) -> float:
    spec = ObjectiveSpec(
        family=NORMAL,
        data=series.values * series.weights,
        weights=series.weights,
        lam=lam,
        direction=series.direction,
    )
    return objective_value(spec, eta)


# ---------------------------------------------------------------- value_runs


def test_value_runs():
    assert value_runs([]) == 0
    assert value_runs([5.0]) == 1
    assert value_runs([1.0, 1.0, 1.0]) == 1
    assert value_runs([1.0, 2.0, 1.0]) == 3
    assert value_runs([1.0, 1.0, 2.0, 2.0, 1.0]) == 3


# ---------------------------------------------------------------- closed forms


def test_two_point_path_closed_form():
    path = solve_path(WeightedSeries([2.0, 1.0]))
    # the only knot beyond zero is where the clusters meet: lam = 0.5
    assert np.allclose(path.knots, [0.0, 0.5])
    fit = fit_at(path, 0.25)
    assert np.allclose(fit.eta, [1.75, 1.25], rtol=0.0, atol=1e-15)
    assert fit.pieces == 2
    merged = fit_at(path, 0.5)
    assert np.allclose(merged.eta, [1.5, 1.5], rtol=0.0, atol=1e-15)
    assert merged.pieces == 1


def test_two_point_weighted_closed_form():
    # collision when 2 - lam / w1 = 1 + lam / w2, i.e. lam = (w1 w2) / (w1 + w2)
    w1, w2 = 3.0, 1.0
    path = solve_path(WeightedSeries([2.0, 1.0], [w1, w2]))
    lam_t = (w1 * w2) / (w1 + w2)
    assert path.terminal_lambda == pytest.approx(lam_t, rel=1e-15)
    lam = 0.5 * lam_t
    fit = fit_at(path, lam)
    assert np.allclose(fit.eta, [2.0 - lam / w1, 1.0 + lam / w2], rtol=1e-15)
    # merged level is the weighted mean
    assert fit_at(path, lam_t).eta[0] == pytest.approx(1.75, rel=1e-15)


def test_isotonic_data_has_trivial_path():
    values = np.array([1.0, 2.0, 3.0])
    path = solve_path(WeightedSeries(values))
    assert path.terminal_lambda == 0.0
    assert np.array_equal(fit_at(path, 0.0).eta, values)
    assert np.array_equal(fit_at(path, 5.0).eta, values)


# ---------------------------------------------------------------- endpoints


@given(st.integers(1, 12), st.integers(0, 2**31 - 1))
@settings(max_examples=50, deadline=None)
def test_endpoint_identities(n, seed):
    rng = np.random.default_rng(seed)
    series = WeightedSeries(rng.normal(size=n), rng.uniform(0.25, 4.0, n))
    path = solve_path(series)
    at_zero = fit_at(path, 0.0)
    assert np.array_equal(at_zero.eta, series.values)
    assert at_zero.pieces == n
    iso = expand(isotonic_fit(series), n)
    for lam in (path.terminal_lambda, 2.0 * path.terminal_lambda + 1.0):
        terminal = fit_at(path, lam)
        assert np.allclose(terminal.eta, iso, rtol=0.0, atol=1e-10)


def test_fit_at_rejects_negative_lambda():
    path = solve_path(WeightedSeries([2.0, 1.0]))
    with pytest.raises(DomainError):
        fit_at(path, -0.5)


# ---------------------------------------------------------------- path structure


@given(st.integers(2, 14), st.integers(0, 2**31 - 1))
@settings(max_examples=60, deadline=None)
def test_path_structure(n, seed):
    rng = np.random.default_rng(seed)
    series = WeightedSeries(rng.normal(size=n), rng.uniform(0.25, 4.0, n))
    path = solve_path(series)
    knots = np.asarray(path.knots)
    assert knots[0] == 0.0
    assert np.all(np.diff(knots) > 0.0)
    assert knots.size <= n
    # cluster counts decrease strictly across knots; penalties shrink
    sizes = [s.size for s in path.states]
    assert all(a > b for a, b in zip(sizes, sizes[1:]))
    hinge = [
        float(np.sum(np.maximum(np.diff(fit_at(path, k).eta) * -1.0, 0.0)))
        for k in knots
    ]
    assert all(a >= b - 1e-12 for a, b in zip(hinge, hinge[1:]))


@given(st.integers(2, 12), st.integers(0, 2**31 - 1))
@settings(max_examples=50, deadline=None)
def test_fit_is_piecewise_linear_and_continuous(n, seed):
    rng = np.random.default_rng(seed)
    series = WeightedSeries(rng.normal(size=n), rng.uniform(0.25, 4.0, n))
    path = solve_path(series)
    knots = np.asarray(path.knots)
    for a, b in zip(knots[:-1], knots[1:]):
        mid = 0.5 * (a + b)
        left = fit_at(path, float(a)).eta
        right_lim = fit_at(path, float(b) - 1e-13 * (1.0 + b)).eta
        interp = fit_at(path, mid).eta
        assert np.allclose(interp, 0.5 * (left + right_lim), rtol=1e-6, atol=1e-9)
        # continuity at the right knot: the post-merge state agrees with
        # the segment limit (merging clusters have touched)
        at_knot = fit_at(path, float(b)).eta
        assert np.allclose(at_knot, right_lim, rtol=1e-6, atol=1e-7)


def test_exact_ties_survive_at_lambda_zero():
    series = WeightedSeries([1.0, 1.0, 0.5])
    path = solve_path(series)
    at_zero = fit_at(path, 0.0)
    assert np.array_equal(at_zero.eta, [1.0, 1.0, 0.5])
    assert at_zero.pieces == 3
    assert value_runs(at_zero.eta) == 2


def test_decreasing_direction_matches_reversed_increasing():
    rng = np.random.default_rng(8)
    values = rng.normal(size=12)
    weights = rng.uniform(0.5, 2.0, 12)
    dec_path = solve_path(WeightedSeries(values, weights, direction=DECREASING))
    inc_path = solve_path(WeightedSeries(values[::-1], weights[::-1]))
    assert np.allclose(dec_path.knots, inc_path.knots, rtol=1e-15)
    for lam in lambda_pool(dec_path):
        a = fit_at(dec_path, lam).eta
        b = fit_at(inc_path, lam).eta[::-1]
        assert np.array_equal(a, b)


# ---------------------------------------------------------------- optimality


def test_gaussian_path_optimal_against_reference():
    rng = np.random.default_rng(17)
    for _ in range(12):
        n = int(rng.integers(2, 16))
        series = WeightedSeries(rng.normal(size=n), rng.uniform(0.25, 4.0, n))
        path = solve_path(series)
        for lam in lambda_pool(path):
            if lam == 0.0:
                continue
            mine = gaussian_objective(series, lam, fit_at(path, lam).eta)
            spec = ObjectiveSpec(
                family=NORMAL,
                data=series.values * series.weights,
                weights=series.weights,
                lam=lam,
            )
            ref = reformulation_minimize(spec)
            assert mine <= ref.value + 1e-8 * (1.0 + abs(ref.value))
            assert mine >= ref.value - 1e-8 * (1.0 + abs(ref.value))


def test_kkt_certificates_along_path():
    rng = np.random.default_rng(23)
    for _ in range(10):
        n = int(rng.integers(2, 20))
        series = WeightedSeries(rng.normal(size=n), rng.uniform(0.25, 4.0, n))
        path = solve_path(series)
        for lam in lambda_pool(path):
            if lam <= 0.0:
                continue
            cert = kkt_check(series, lam, fit_at(path, lam).eta)
            assert cert.valid, f"violation {cert.max_violation} at lam={lam}"
            assert cert.xi[0] == 0.0
            assert cert.xi.size == n + 1


def test_kkt_rejects_suboptimal_vector():
    series = WeightedSeries([2.0, 1.0, 3.0])
    cert = kkt_check(series, 0.2, np.array([2.5, 0.5, 3.5]))
    assert not cert.valid
    assert cert.max_violation > 1e-3


def test_kkt_requires_positive_lambda():
    series = WeightedSeries([2.0, 1.0])
    with pytest.raises(DomainError):
        kkt_check(series, 0.0, np.array([2.0, 1.0]))


# ---------------------------------------------------------------- generalized fits


def test_normal_generalized_fit_is_bitwise_path_fit():
    rng = np.random.default_rng(31)
    for _ in range(20):
        n = int(rng.integers(1, 25))
        series = WeightedSeries(rng.normal(size=n), rng.uniform(0.25, 4.0, n))
        path = solve_path(series)
        for lam in lambda_pool(path):
            pf = fit_at(path, lam)
            gf = generalized_fit_at(path, NORMAL, lam)
            assert np.array_equal(gf.eta, pf.eta)
            assert np.array_equal(gf.theta, pf.eta)
            assert gf.pieces == pf.pieces


@pytest.mark.parametrize("family", ALL_FAMILIES, ids=lambda f: f.kind)
def test_generalized_fit_theta_eta_consistency(family):
    rng = np.random.default_rng(41)
    x, w = random_instance(rng, family, 12)
    fit = fit_generalized(x, w, family, 0.3)
    lo, hi = families.natural_domain(family)
    assert np.all(fit.theta > lo) and np.all(fit.theta < hi)
    assert np.allclose(
        np.asarray(families.mean_map(family, fit.theta)), fit.eta, rtol=1e-12, atol=1e-12
    )


def test_generalized_path_optimal_against_reference():
    rng = np.random.default_rng(53)
    for family in ALL_FAMILIES:
        for _ in range(5):
            n = int(rng.integers(2, 14))
            x, w = random_instance(rng, family, n)
            path = solve_path(WeightedSeries(x / w, w))
            for lam in lambda_pool(path):
                spec = ObjectiveSpec(family=family, data=x, weights=w, lam=lam)
                mine = objective_value(spec, generalized_fit_at(path, family, lam).theta)
                ref = reformulation_minimize(spec)
                assert mine <= ref.value + 1e-8 * (1.0 + abs(ref.value))
                assert mine >= ref.value - 1e-8 * (1.0 + abs(ref.value))


# ---------------------------------------------------------------- bounds


def test_clip_bounds_validation():
    fit = fit_generalized(np.array([2.0, 1.0]), np.ones(2), NORMAL, 0.1)
    with pytest.raises(InvalidBoundsError):
        clip_bounds(fit, 1.0, 0.0)
    with pytest.raises(InvalidBoundsError):
        clip_bounds(fit, float("nan"), None)
    gfit = fit_generalized(np.array([2.0, 1.0]), np.ones(2), GAMMA_SCALE, 0.1)
    with pytest.raises(InvalidBoundsError):
        clip_bounds(gfit, 0.5, 1.0)  # gamma thetas live below zero


def test_clip_bounds_recomputes_pieces():
    fit = fit_generalized(np.array([3.0, 1.0, 2.0]), np.ones(3), NORMAL, 0.0)
    assert fit.pieces == 3
    clipped = clip_bounds(fit, 1.9, 2.1)
    assert np.allclose(clipped.theta, [2.1, 1.9, 2.0])
    assert clipped.pieces == 3
    hard = clip_bounds(fit, 2.0, 2.0)
    assert np.array_equal(hard.theta, [2.0, 2.0, 2.0])
    assert hard.pieces == 1
    assert hard.bounds_applied == (2.0, 2.0)


def test_bounded_normal_fits_match_reference_two_sided():
    # lower-bounded normal instances: clipping at zero from below must
    # give the exact constrained optimum
    rng = np.random.default_rng(67)
    for _ in range(25):
        series_values = rng.normal(size=10)
        weights = rng.uniform(0.5, 2.0, 10)
        data = series_values * weights
        path = solve_path(WeightedSeries(series_values, weights))
        for lam in [0.0, 0.5 * path.terminal_lambda, path.terminal_lambda]:
            fit = generalized_fit_at(path, NORMAL, lam, alpha=0.0)
            spec = ObjectiveSpec(
                family=NORMAL, data=data, weights=weights, lam=lam, alpha=0.0
            )
            mine = objective_value(spec, fit.theta)
            ref = reformulation_minimize(spec)
            assert abs(mine - ref.value) <= 1e-6 * (1.0 + abs(ref.value))


def test_bounded_fits_match_reference_all_families():
    rng = np.random.default_rng(71)
    for family in ALL_FAMILIES:
        for _ in range(4):
            n = int(rng.integers(2, 12))
            x, w = random_instance(rng, family, n)
            path = solve_path(WeightedSeries(x / w, w))
            theta_data = families.mean_map_inv(family, x / w)
            lo, hi = float(np.min(theta_data)), float(np.max(theta_data))
            alpha = lo + 0.3 * (hi - lo)
            beta = lo + 0.8 * (hi - lo)
            if not alpha < beta:
                continue
            for lam in [0.0, 0.5 * path.terminal_lambda, 2.0 * path.terminal_lambda + 0.1]:
                fit = generalized_fit_at(path, family, lam, alpha, beta)
                assert np.all(fit.theta >= alpha - 1e-15)
                assert np.all(fit.theta <= beta + 1e-15)
                spec = ObjectiveSpec(
                    family=family, data=x, weights=w, lam=lam, alpha=alpha, beta=beta
                )
                mine = objective_value(spec, fit.theta)
                ref = reformulation_minimize(spec)
                assert abs(mine - ref.value) <= 1e-6 * (1.0 + abs(ref.value))


# ---------------------------------------------------------------- certification


def test_certification_suite_small_run():
    records = certification_suite(seed=1, instances=24, n_max=12)
    assert len(records) == 24
    assert all(r.ok for r in records)
    assert any(r.bounded for r in records)
    families_seen = {r.family for r in records}
    assert families_seen == {"normal", "binomial", "poisson", "gamma"}
