"""Pruebas del desplazamiento/reescalado, la molificación y la corrección de divergencia"""

import numpy as np
import pytest

from domain_grid import ScalarField, VectorField, curl, divergence
from presets import generic_datum, rest_datum
from regularize import (
    REFLECTION_RATIOS, bump, divergence_correction, mollifier_multiplier, mollify,
    reflection_coefficients, reflection_sampler, regularization_sweep, regularize_datum,
    rescaled_curl_residual, shift_rescale,
)
from sobolev_norms import aniso_norm, make_cutoffs


class TestShiftRescale:
    def test_curl_identity(self, grid16):
        v0 = generic_datum(grid16)
        for r in (0.2, 0.1, 0.05, 0.025):
            assert rescaled_curl_residual(v0, r) <= 1e-10

    def test_third_component_is_rescaled(self, small_grid):
        v0 = VectorField.from_functions(small_grid, (
            lambda x1, x2, x3: 1.0, lambda x1, x2, x3: 1.0, lambda x1, x2, x3: 1.0))
        shifted = shift_rescale(v0, 0.25)
        assert np.allclose(shifted.array[0], 1.0)
        assert np.allclose(shifted.array[2], 1.0 / 1.5)

    def test_radius_must_be_in_unit_interval(self, small_grid):
        with pytest.raises(ValueError):
            shift_rescale(rest_datum(small_grid), 0.0)
        with pytest.raises(ValueError):
            shift_rescale(rest_datum(small_grid), 1.5)


class TestMollifier:
    def test_bump_support(self):
        values = bump(np.array([0.0, 0.5, 1.0, 2.0]))
        assert values[0] == pytest.approx(np.exp(-1.0))
        assert values[2] == 0.0 and values[3] == 0.0

    def test_multiplier_preserves_constants_and_damps_high_modes(self, grid16):
        m = mollifier_multiplier(grid16, 0.2)
        assert m[0, 0] == pytest.approx(1.0, abs=1e-12)
        assert abs(m[7, 0]) < abs(m[1, 0]) <= 1.0

    def test_mollifying_a_constant_is_exact(self, small_grid):
        f = VectorField.from_functions(small_grid, (
            lambda x1, x2, x3: 2.0, lambda x1, x2, x3: -1.0, lambda x1, x2, x3: 0.5))
        smoothed = mollify(f, 0.1)
        assert np.allclose(smoothed.array, f.array, atol=1e-12)

    def test_reflection_extension_is_c3(self):
        lam = reflection_coefficients()
        mu = np.array(REFLECTION_RATIOS)
        for n in range(4):
            assert np.sum(lam * (-mu) ** n) == pytest.approx(1.0, abs=1e-12)

    def test_reflection_sampler_matches_inside(self, small_grid):
        f = VectorField.from_functions(small_grid, (
            lambda x1, x2, x3: x3 ** 2, lambda x1, x2, x3: np.cos(x1), lambda x1, x2, x3: x3))
        sample = reflection_sampler(f)
        assert np.allclose(sample(small_grid.x3), f.array, atol=1e-12)
        below = sample(np.array([-0.05]))[2, 0, 0, 0]
        assert below == pytest.approx(-0.05, abs=1e-10)


class TestDivergenceCorrection:
    def test_corrected_field_is_solenoidal_inside(self, grid16):
        w = VectorField.from_functions(grid16, (
            lambda x1, x2, x3: np.sin(x1) * x3,
            lambda x1, x2, x3: np.cos(x2),
            lambda x1, x2, x3: np.cos(x1) * (1 + x3 ** 2),
        ))
        v, h = divergence_correction(w)
        assert np.max(np.abs(divergence(v).values[..., 1:-1])) < 1e-10
        assert np.max(np.abs(v.array[2, :, :, 0])) < 1e-11
        assert np.max(np.abs(h.values[..., -1])) < 1e-12


class TestPipeline:
    def test_rest_datum_gives_zero_columns(self, small_grid):
        result = regularize_datum(rest_datum(small_grid), 0.1)
        row = result.as_row()
        for key in ('datum_error', 'curl_ratio', 'div_residual', 'bottom_residual', 'h_norm', 'n4_norm'):
            assert row[key] == 0.0

    def test_sweep_on_generic_datum(self, grid16):
        v0 = generic_datum(grid16)
        results = regularization_sweep(v0, (0.2, 0.1, 0.05, 0.025), 0.25, make_cutoffs(grid16))
        errors = [r.datum_error for r in results]
        assert all(b < a for a, b in zip(errors, errors[1:]))
        for r in results:
            assert r.div_residual <= 1e-10
            assert r.bottom_residual <= 1e-10
            assert r.curl_identity <= 1e-10
            assert np.isfinite(r.n4_norm)
        curl_constant = max(r.curl_ratio for r in results)
        assert np.isfinite(curl_constant) and curl_constant > 0

    def test_regularized_datum_has_bounded_curl(self, grid16):
        result = regularize_datum(generic_datum(grid16), 0.05)
        omega = curl(result.v0r)
        assert np.all(np.isfinite(omega.array))
        assert isinstance(result.hr, ScalarField)

    def test_divergence_residual_covers_whole_domain(self, grid16):
        result = regularize_datum(generic_datum(grid16), 0.1)
        assert result.div_residual == aniso_norm(divergence(result.v0r), 0.0)
        assert result.div_residual <= 1e-10
        assert result.div_interior_max <= 1e-10
        assert result.as_row()['div_interior_max'] == result.div_interior_max
