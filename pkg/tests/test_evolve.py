"""Pruebas de la integración RK4 y de los monitores"""

import numpy as np
import pytest

from domain_grid import Grid, ScalarField
from evolve import (
    EvolveConfig, Policy, RejectionReason, evolve, rhs, rt_holds, rt_monitor,
    smallness_monitor, step, with_solved_pressure,
)
from lagrangian_state import LagrangianState, cauchy_invariance_residual, initial_state, initial_vorticity
from presets import generic_datum, random_vector, rest_datum, shear_datum, shear_state
from sobolev_norms import make_cutoffs, vector_norm


def _with_linear_pressure(grid: Grid, b0: float):
    q = ScalarField.from_function(grid, lambda x1, x2, x3: b0 * (1.0 - x3))
    return initial_state(rest_datum(grid), q)


class TestConfig:
    def test_end_time_is_clamped(self):
        cfg = EvolveConfig(t_end=2.0)
        assert cfg.t_end == 1.0

    def test_invalid_values(self):
        with pytest.raises(ValueError):
            EvolveConfig(dt=0.0)
        with pytest.raises(ValueError):
            EvolveConfig(delta=0.75)
        with pytest.raises(ValueError):
            EvolveConfig(epsilon=0.0)

    def test_policy_from_string(self):
        assert EvolveConfig(rt_policy='abort').rt_policy is Policy.ABORT
        assert EvolveConfig(dt=0.01, t_end=0.1).n_steps == 10


class TestMonitors:
    @pytest.mark.parametrize('b0,holds', [(0.5, True), (0.75, True), (0.49, False), (0.0, False)])
    def test_rayleigh_taylor_threshold(self, small_grid, b0, holds):
        cfg = EvolveConfig(b=1.0)
        margin = rt_monitor(_with_linear_pressure(small_grid, b0), cfg)
        assert margin == pytest.approx(0.5 - b0, abs=1e-12)
        assert rt_holds(margin, cfg) is holds

    def test_monitor_needs_pressure(self, small_grid):
        with pytest.raises(ValueError):
            rt_monitor(initial_state(rest_datum(small_grid)), EvolveConfig())

    def test_smallness_at_initial_time(self, small_grid):
        record = smallness_monitor(initial_state(generic_datum(small_grid)), EvolveConfig())
        assert record.max_deviation < 1e-12
        assert record.eta_norm == 0.0
        assert record.a_norm > 0


class TestStepping:
    def test_rest_state_stays_at_rest(self, small_grid):
        cfg = EvolveConfig(dt=0.01, t_end=0.03)
        result = evolve(initial_state(rest_datum(small_grid)), cfg)
        assert result.steps == 3
        assert np.max(np.abs(result.final_state.v.array)) == 0.0
        assert np.max(np.abs(result.final_state.xi.array)) == 0.0
        for report in result.reports:
            assert report.det_dev == 0.0
            assert report.boundary_energy == 0.0

    def test_rhs_of_shear_flow(self, small_grid):
        deta, dv = rhs(initial_state(shear_datum(small_grid)), EvolveConfig())
        assert np.allclose(deta.array, shear_datum(small_grid).array)
        assert np.max(np.abs(dv.array)) < 1e-12

    def test_shear_flow_on_coarse_grid(self, small_grid):
        cfg = EvolveConfig(dt=1e-2, t_end=0.1)
        result = evolve(initial_state(shear_datum(small_grid)), cfg)
        exact = shear_state(small_grid, result.final_state.t)
        assert result.final_state.t == pytest.approx(0.1)
        assert vector_norm(result.final_state.v - exact.v, 0.0) < 1e-8
        assert np.max(np.abs(result.final_state.xi.array - exact.xi.array)) < 1e-8

    def test_shear_smallness_grows_linearly(self, small_grid):
        cfg = EvolveConfig(dt=1e-2, t_end=0.05)
        result = evolve(initial_state(shear_datum(small_grid)), cfg)
        slopes = [r.smallness.d_grad / r.t for r in result.reports]
        assert len(slopes) == 5
        assert np.allclose(slopes, slopes[0], rtol=1e-6)
        exact = smallness_monitor(shear_state(small_grid, 1.0), cfg).d_grad
        assert slopes[0] == pytest.approx(exact, rel=1e-6)

    def test_abort_policy_rejects_shear_immediately(self, small_grid):
        cfg = EvolveConfig(dt=1e-2, t_end=0.05, rt_policy=Policy.ABORT)
        result = evolve(initial_state(shear_datum(small_grid)), cfg)
        assert result.rejection is RejectionReason.RAYLEIGH_TAYLOR
        assert result.steps == 0
        assert result.initial_report.rt_margin > 0

    def test_rejected_step_returns_input_state(self, small_grid):
        cfg = EvolveConfig(dt=1e-2, rt_policy=Policy.ABORT)
        state = with_solved_pressure(initial_state(shear_datum(small_grid)), cfg)
        outcome = step(state, cfg, make_cutoffs(small_grid))
        assert not outcome.accepted
        assert outcome.state is state
        assert outcome.rejection_reason is RejectionReason.RAYLEIGH_TAYLOR

    def test_pressure_failure_before_step_is_a_rejection(self, small_grid):
        cfg = EvolveConfig(dt=1e-2, pressure_max_iter=1)
        state = LagrangianState(0.0, random_vector(small_grid, np.random.default_rng(3)) * 0.1,
                                generic_datum(small_grid), initial_vorticity(generic_datum(small_grid)))
        outcome = step(state, cfg, make_cutoffs(small_grid))
        assert not outcome.accepted
        assert outcome.state is state
        assert outcome.rejection_reason is RejectionReason.PRESSURE

    def test_fourth_order_in_time(self, small_grid):
        finals = []
        for dt in (0.1, 0.05, 0.025):
            cfg = EvolveConfig(dt=dt, t_end=0.4)
            result = evolve(initial_state(generic_datum(small_grid)), cfg)
            assert result.rejection is None
            finals.append(result.final_state)
        coarse = vector_norm(finals[0].v - finals[1].v, 0.0)
        fine = vector_norm(finals[1].v - finals[2].v, 0.0)
        assert coarse / fine == pytest.approx(16.0, rel=0.25)


@pytest.mark.slow
class TestShearOracle:
    """Solución exacta de cizalla en la malla 32×32×33 con 100 pasos"""

    def test_shear_reproduction(self):
        grid = Grid(32, 32, 33)
        cfg = EvolveConfig(dt=1e-3, t_end=0.1)
        result = evolve(initial_state(shear_datum(grid)), cfg)
        assert result.steps == 100
        final = result.final_state
        exact = shear_state(grid, final.t)
        assert vector_norm(final.v - shear_datum(grid), 0.0) <= 1e-8
        assert np.max(np.abs(final.eta.array - exact.eta.array)) <= 1e-8
        assert max(r.det_dev for r in result.reports) <= 1e-8
        assert np.max(np.abs(cauchy_invariance_residual(final).array)) <= 1e-8
        assert all(r.cauchy_res <= 1e-8 for r in result.reports)
