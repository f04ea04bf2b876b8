"""Tests for block residuals, error-scale fitting, and the oscillator demo."""

from __future__ import annotations

import numpy as np
import pytest

from neariso import (
    DomainError,
    FnExperimentConfig,
    FnParams,
    InvalidBoundsError,
    block_residuals,
    fn_simulate,
    ode_error_quantify,
    run_fn_experiment,
)
from neariso.oracle import ObjectiveSpec, objective_value, reformulation_minimize
from neariso.families import GAMMA_SCALE
from neariso.pava import INCREASING


class TestBlockResiduals:
    def test_closed_form_sums(self) -> None:
        b = block_residuals([1.0, -1.0, 2.0, 0.0], d=2, gamma2=0.5)
        np.testing.assert_array_equal(b.sums, [2.0, 4.0])
        assert b.block_size == 2
        assert b.gamma2 == 0.5
        assert b.dropped == 0

    def test_trailing_remainder_dropped(self) -> None:
        b = block_residuals(np.ones(7), d=3, gamma2=0.0)
        np.testing.assert_array_equal(b.sums, [3.0, 3.0])
        assert b.dropped == 1

    def test_block_size_validation(self) -> None:
        with pytest.raises(DomainError):
            block_residuals([1.0, 2.0], d=0, gamma2=0.1)

    def test_chi_square_mean(self) -> None:
        rng = np.random.default_rng(17)
        d = 3
        r = rng.standard_normal(3000)
        b = block_residuals(r, d=d, gamma2=1.0)
        assert b.sums.mean() == pytest.approx(d, abs=0.2)


class TestOdeErrorQuantify:
    def test_negative_gamma2_rejected(self) -> None:
        b = block_residuals([1.0, 2.0, 1.5, 0.5], d=2, gamma2=-0.1)
        with pytest.raises(InvalidBoundsError):
            ode_error_quantify(b)

    def test_nonpositive_block_sums_rejected(self) -> None:
        b = block_residuals([0.0, 0.0, 1.0, 2.0], d=2, gamma2=0.1)
        with pytest.raises(DomainError):
            ode_error_quantify(b)

    def test_unknown_criterion_rejected(self) -> None:
        b = block_residuals([1.0, 2.0, 1.5, 0.5], d=2, gamma2=0.1)
        with pytest.raises(DomainError):
            ode_error_quantify(b, criterion="cp")

    def test_scale_floor_holds_exactly(self) -> None:
        # Truth sigma~ = 0 everywhere: pure noise residuals, so unbounded
        # scale estimates fall below gamma^2 and the floor must activate.
        rng = np.random.default_rng(3)
        gamma2 = 0.01
        r = rng.normal(0.0, np.sqrt(gamma2), size=150)
        b = block_residuals(r, d=3, gamma2=gamma2)
        res = ode_error_quantify(b, criterion=0.0)
        assert np.all(res.c_hat >= gamma2)
        assert np.any(res.c_hat == gamma2)
        np.testing.assert_allclose(
            res.sigma_tilde, np.sqrt(res.c_hat - gamma2), atol=0
        )
        unbounded = ode_error_quantify(
            block_residuals(r, d=3, gamma2=0.0), criterion=0.0
        )
        assert np.any(unbounded.c_hat < gamma2)
        selected = ode_error_quantify(b)
        assert np.all(selected.c_hat >= gamma2)

    def test_bounded_fit_matches_constrained_oracle(self) -> None:
        rng = np.random.default_rng(3)
        gamma2 = 0.01
        r = rng.normal(0.0, np.sqrt(gamma2), size=150)
        b = block_residuals(r, d=3, gamma2=gamma2)
        res = ode_error_quantify(b)
        s = np.asarray(b.sums)
        w = np.full(s.shape, 1.5)
        spec = ObjectiveSpec(
            data=s,
            weights=w,
            family=GAMMA_SCALE,
            lam=res.lam,
            direction=INCREASING,
            alpha=-1.0 / (2.0 * gamma2),
            beta=None,
        )
        oracle = reformulation_minimize(spec)
        mine = objective_value(spec, np.asarray(res.fit.theta))
        scale = 1.0 + abs(oracle.value)
        assert abs(mine - oracle.value) <= 1e-6 * scale

    def test_gamma2_zero_skips_clipping(self) -> None:
        b = block_residuals([1.0, -2.0, 0.5, 3.0, 1.0, -1.0], d=2, gamma2=0.0)
        res = ode_error_quantify(b, criterion=0.0)
        np.testing.assert_allclose(res.c_hat, np.asarray(b.sums) / 2.0)
        np.testing.assert_allclose(res.sigma_tilde, np.sqrt(res.c_hat))
        assert res.fit.bounds_applied is None

    def test_sigma_tilde_increasing_trend_recovered(self) -> None:
        rng = np.random.default_rng(12)
        gamma2 = 0.04
        sigma = np.repeat([0.0, 0.3, 0.8], 60)
        r = rng.normal(0.0, np.sqrt(gamma2 + sigma**2))
        b = block_residuals(r, d=4, gamma2=gamma2)
        res = ode_error_quantify(b)
        third = res.sigma_tilde.size // 3
        assert res.sigma_tilde[:third].mean() < res.sigma_tilde[-third:].mean()
        assert res.sigma_tilde[-third:].mean() == pytest.approx(0.8, rel=0.25)


class TestFnSimulate:
    def test_single_euler_step_closed_form(self) -> None:
        p = FnParams(a=0.2, b=0.2, c=3.0)
        v0, r0, dt = -1.0, 1.0, 0.025
        sim = fn_simulate(p, (v0, r0), dt=dt, steps=1, refine=10)
        dv = p.c * (v0 - v0**3 / 3.0 + r0)
        dr = -(v0 - p.a + p.b * r0) / p.c
        assert sim.v[1] == pytest.approx(v0 + dt * dv, abs=0)
        assert sim.r[1] == pytest.approx(r0 + dt * dr, abs=0)
        assert sim.t[1] == pytest.approx(dt)

    def test_validation(self) -> None:
        with pytest.raises(DomainError):
            fn_simulate(FnParams(), (-1.0, 1.0), dt=0.0, steps=5)
        with pytest.raises(DomainError):
            fn_simulate(FnParams(), (-1.0, 1.0), dt=0.01, steps=0)

    def test_euler_error_halves_with_step(self) -> None:
        p = FnParams()
        coarse = fn_simulate(p, (-1.0, 1.0), dt=0.05, steps=200, refine=100)
        fine = fn_simulate(p, (-1.0, 1.0), dt=0.025, steps=400, refine=100)
        err_coarse = np.max(np.abs(coarse.v - coarse.v_ref))
        err_fine = np.max(np.abs(fine.v - fine.v_ref))
        ratio = err_coarse / err_fine
        assert 1.7 <= ratio <= 2.3

    def test_reference_matches_euler_at_tiny_step(self) -> None:
        p = FnParams()
        sim = fn_simulate(p, (-1.0, 1.0), dt=1e-4, steps=50, refine=10)
        np.testing.assert_allclose(sim.v, sim.v_ref, atol=1e-6)
        np.testing.assert_allclose(sim.r, sim.r_ref, atol=1e-6)


class TestRunFnExperiment:
    def test_seeded_reproducibility(self) -> None:
        cfg = FnExperimentConfig(steps=600, obs_start=100, obs_count=200, seed=42)
        a = run_fn_experiment(cfg)
        b = run_fn_experiment(cfg)
        np.testing.assert_array_equal(a.observations, b.observations)
        np.testing.assert_array_equal(a.quantification.c_hat, b.quantification.c_hat)
        np.testing.assert_array_equal(a.quantification.sigma_tilde, b.quantification.sigma_tilde)

    def test_floor_and_shapes(self) -> None:
        cfg = FnExperimentConfig(steps=600, obs_start=100, obs_count=200, seed=1)
        out = run_fn_experiment(cfg)
        q = out.quantification
        nblocks = 200 // cfg.block_size
        assert q.c_hat.shape == (nblocks,)
        assert out.block_rms_error.shape == (nblocks,)
        assert out.block_times.shape == (nblocks,)
        assert np.all(q.c_hat >= cfg.noise_var)

    def test_observation_window_validation(self) -> None:
        cfg = FnExperimentConfig(steps=100, obs_start=50, obs_count=100)
        with pytest.raises(DomainError):
            run_fn_experiment(cfg)
