"""Pruebas de la malla espectral y de los operadores básicos"""

import numpy as np
import pytest

from domain_grid import (
    Boundary, BoundaryTrace, Grid, GridError, ScalarField, VectorField,
    curl, dealiased_product, divergence, fft_workers, gradient, integrate,
    restrict, tangential_derivative, vertical_derivative,
)


class TestGrid:
    def test_rejects_odd_tangential_sizes(self):
        with pytest.raises(GridError):
            Grid(7, 8, 9)
        with pytest.raises(GridError):
            Grid(8, 5, 9)

    def test_rejects_too_few_vertical_nodes(self):
        with pytest.raises(GridError):
            Grid(8, 8, 4)

    def test_vertical_nodes_span_the_slab(self, small_grid):
        x3 = small_grid.x3
        assert x3[0] == pytest.approx(0.0, abs=1e-15)
        assert x3[-1] == pytest.approx(1.0, abs=1e-15)
        assert np.all(np.diff(x3) > 0)

    def test_grid_is_hashable_and_comparable(self):
        assert Grid(8, 8, 9) == Grid(8, 8, 9)
        assert hash(Grid(8, 8, 9)) == hash(Grid(8, 8, 9))

    def test_vertical_derivative_is_exact_on_polynomials(self, small_grid):
        x3 = small_grid.x3
        assert np.allclose(small_grid.d3 @ x3 ** 5, 5 * x3 ** 4, atol=1e-11)

    def test_clenshaw_curtis_weights_integrate_polynomials(self, small_grid):
        x3 = small_grid.x3
        assert small_grid.weights.sum() == pytest.approx(1.0, abs=1e-14)
        assert small_grid.weights @ x3 ** 2 == pytest.approx(1.0 / 3.0, abs=1e-14)

    def test_interpolation_reproduces_polynomials(self, small_grid):
        values = np.broadcast_to(small_grid.x3 ** 3, small_grid.shape)
        heights = np.array([0.1, 0.37, 0.99])
        out = small_grid.interpolate_vertical(values, heights)
        assert np.allclose(out, heights ** 3, atol=1e-13)


class TestFields:
    def test_field_copies_and_freezes_values(self, small_grid):
        raw = np.ones(small_grid.shape)
        f = ScalarField(small_grid, raw)
        raw[0, 0, 0] = 5.0
        assert f.values[0, 0, 0] == 1.0
        with pytest.raises(ValueError):
            f.values[0, 0, 0] = 2.0

    def test_shape_mismatch_raises(self, small_grid):
        with pytest.raises(GridError):
            ScalarField(small_grid, np.zeros((8, 8, 5)))

    def test_mixed_grids_raise(self, small_grid):
        other = Grid(8, 8, 11)
        with pytest.raises(GridError):
            ScalarField.zeros(small_grid) + ScalarField.zeros(other)

    def test_vector_arithmetic(self, small_grid):
        u = VectorField.from_functions(small_grid, (
            lambda x1, x2, x3: np.sin(x1), lambda x1, x2, x3: x3, lambda x1, x2, x3: 1.0))
        w = 2.0 * u - u
        assert np.allclose(w.array, u.array)
        assert w.array.shape == (3,) + small_grid.shape


class TestOperators:
    def test_tangential_derivative_is_spectral(self, small_grid):
        f = ScalarField.from_function(small_grid, lambda x1, x2, x3: np.sin(2 * x1) * np.cos(x2))
        expected = ScalarField.from_function(small_grid, lambda x1, x2, x3: 2 * np.cos(2 * x1) * np.cos(x2))
        assert np.allclose(tangential_derivative(f, 1).values, expected.values, atol=1e-13)
        with pytest.raises(GridError):
            tangential_derivative(f, 3)

    def test_vertical_derivative_of_field(self, small_grid):
        f = ScalarField.from_function(small_grid, lambda x1, x2, x3: np.cos(x1) * x3 ** 2)
        expected = ScalarField.from_function(small_grid, lambda x1, x2, x3: 2 * np.cos(x1) * x3)
        assert np.allclose(vertical_derivative(f).values, expected.values, atol=1e-12)

    def test_integral_of_squared_cosine(self, small_grid):
        f = ScalarField.from_function(small_grid, lambda x1, x2, x3: np.cos(x1) ** 2)
        assert integrate(f) == pytest.approx(2 * np.pi ** 2, rel=1e-13)

    def test_curl_of_gradient_and_divergence_of_curl_vanish(self, small_grid):
        f = ScalarField.from_function(small_grid, lambda x1, x2, x3: np.sin(x1) * np.cos(2 * x2) * x3 ** 3)
        assert np.max(np.abs(curl(gradient(f)).array)) < 1e-11
        u = VectorField.from_functions(small_grid, (
            lambda x1, x2, x3: np.cos(x2) * x3 ** 2,
            lambda x1, x2, x3: np.sin(x1) * x3,
            lambda x1, x2, x3: np.cos(x1 + x2)))
        assert np.max(np.abs(divergence(curl(u)).values)) < 1e-11

    def test_dealiased_product_drops_unresolved_modes(self, small_grid):
        f = ScalarField.from_function(small_grid, lambda x1, x2, x3: np.cos(3 * x1))
        product = dealiased_product(f, f)
        assert np.allclose(product.values, 0.5, atol=1e-13)

    def test_restrict_and_trace_integral(self, small_grid):
        f = ScalarField.from_function(small_grid, lambda x1, x2, x3: 1.0 + x3)
        top = restrict(f, Boundary.GAMMA1)
        bottom = restrict(f, Boundary.GAMMA0)
        assert top.integrate() == pytest.approx(2 * 4 * np.pi ** 2)
        assert bottom.integrate() == pytest.approx(4 * np.pi ** 2)

    def test_trace_shape_is_checked(self, small_grid):
        with pytest.raises(GridError):
            BoundaryTrace(small_grid, Boundary.GAMMA0, np.zeros((8, 4)))


class TestThreads:
    def test_workers_from_environment(self, monkeypatch):
        monkeypatch.setenv('LELAB_THREADS', '2')
        assert fft_workers() == 2
        monkeypatch.setenv('LELAB_THREADS', 'muchos')
        assert fft_workers() is None
        monkeypatch.delenv('LELAB_THREADS')
        assert fft_workers() is None
