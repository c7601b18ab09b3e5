"""Pruebas del álgebra del cofactor y de las identidades lagrangianas"""

import numpy as np
import pytest

from domain_grid import ScalarField, VectorField, divergence
from lagrangian_state import (
    JacobianTensor, LagrangianState, bottom_cofactor_residual, cauchy_invariance_residual,
    cofactor, cofactor_time_derivative, curl_identity_residual, identity_entries,
    initial_state, jacobian_det, lagrangian_divergence, piola_residual,
)
from presets import generic_datum, random_vector, shear_profile_derivative, shear_state


def _constant_tensor(grid, matrix):
    return JacobianTensor(grid, np.broadcast_to(np.asarray(matrix)[:, :, None, None, None],
                                                (3, 3) + grid.shape).copy())


class TestCofactor:
    def test_diagonal_case(self, small_grid):
        m = _constant_tensor(small_grid, np.diag([2.0, 3.0, 1.0 / 6.0]))
        a = cofactor(m).entries[:, :, 0, 0, 0]
        assert np.allclose(a, np.diag([0.5, 1.0 / 3.0, 6.0]), rtol=0, atol=1e-15)
        assert jacobian_det(m).values[0, 0, 0] == pytest.approx(1.0, abs=1e-15)

    def test_identity_is_its_own_cofactor(self, small_grid):
        a = cofactor(JacobianTensor.identity(small_grid))
        assert np.array_equal(a.entries, identity_entries(small_grid))

    def test_cofactor_inverts_jacobian_on_random_maps(self, small_grid, rng):
        for _ in range(20):
            xi = random_vector(small_grid, rng) * 0.1
            m = JacobianTensor.of_displacement(xi)
            a = cofactor(m)
            det = jacobian_det(m).values
            product = np.einsum('ik...,jk...->ij...', m.entries, a.entries)
            assert np.max(np.abs(product - identity_entries(small_grid) * det)) < 1e-10

    def test_piola_identity_on_random_maps(self, small_grid, rng):
        for _ in range(20):
            xi = random_vector(small_grid, rng) * 0.1
            a = cofactor(JacobianTensor.of_displacement(xi))
            assert np.max(np.abs(piola_residual(a).array)) < 1e-9

    def test_time_derivative_matches_finite_difference(self, small_grid, rng):
        xi = random_vector(small_grid, rng) * 0.1
        v = random_vector(small_grid, rng) * 0.1
        h = 1e-6
        grad_v = JacobianTensor.of_displacement(v).entries - identity_entries(small_grid)
        analytic = cofactor_time_derivative(JacobianTensor.of_displacement(xi), grad_v)
        plus = cofactor(JacobianTensor.of_displacement(xi + v * h)).entries
        minus = cofactor(JacobianTensor.of_displacement(xi - v * h)).entries
        assert np.max(np.abs((plus - minus) / (2 * h) - analytic)) < 1e-6

    def test_tensor_shape_is_checked(self, small_grid):
        with pytest.raises(ValueError):
            JacobianTensor(small_grid, np.zeros((3, 3, 8, 8, 5)))


class TestState:
    def test_initial_cauchy_residual_vanishes(self, grid16):
        state = initial_state(generic_datum(grid16))
        assert np.max(np.abs(cauchy_invariance_residual(state).array)) <= 1e-12
        assert np.max(np.abs(curl_identity_residual(state).array)) <= 1e-12

    def test_initial_lagrangian_divergence_is_eulerian(self, grid16):
        v0 = generic_datum(grid16)
        state = initial_state(v0)
        assert np.allclose(lagrangian_divergence(state).values, divergence(v0).values, atol=1e-12)

    def test_shear_state_identities(self, small_grid):
        state = shear_state(small_grid, 0.3)
        assert np.max(np.abs(state.det.values - 1.0)) < 1e-12
        assert bottom_cofactor_residual(state) < 1e-12
        assert np.max(np.abs(cauchy_invariance_residual(state).array)) < 1e-11

    def test_shear_cofactor_closed_form(self, grid16):
        t = 0.3
        state = shear_state(grid16, t)
        expected = np.array(identity_entries(grid16))
        expected[0, 2] = -t * shear_profile_derivative(grid16.points[2])
        assert np.allclose(state.a.entries, expected, rtol=0.0, atol=1e-11)

    def test_bottom_cofactor_vanishes_on_evolved_states(self, small_grid):
        from evolve import EvolveConfig, evolve
        result = evolve(initial_state(generic_datum(small_grid)), EvolveConfig(dt=0.01, t_end=0.03))
        assert result.steps == 3
        for report in result.reports:
            assert report.bottom_cofactor <= 1e-10
        assert bottom_cofactor_residual(result.final_state) <= 1e-10

    def test_eta_adds_the_identity_map(self, small_grid):
        state = shear_state(small_grid, 0.5)
        x1 = small_grid.points[0]
        expected = x1 + 0.5 * np.sin(np.pi * small_grid.points[2] / 2)
        assert np.allclose(state.eta.array[0], expected)

    def test_with_pressure_keeps_cached_geometry(self, small_grid):
        state = shear_state(small_grid, 0.2)
        a = state.a
        updated = state.with_pressure(ScalarField.zeros(small_grid))
        assert updated.a is a
        assert updated.q is not None and state.q is not None

    def test_mixed_grids_are_rejected(self, small_grid, grid16):
        with pytest.raises(ValueError):
            LagrangianState(0.0, VectorField.zeros(small_grid), VectorField.zeros(grid16),
                            VectorField.zeros(small_grid))
