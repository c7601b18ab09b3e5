"""
Datos de prueba y soluciones exactas

- rest: fluido en reposo
- shear: v = (U(x3), 0, 0) con U = sin(πx3/2), solución exacta con q = 0
- generic: dato suave, de divergencia nula y con v3 = 0 en Γ0
"""

from typing import Optional

import numpy as np
from numpy.polynomial import chebyshev

from domain_grid import Grid, ScalarField, VectorField
from lagrangian_state import LagrangianState, initial_vorticity

PRESETS = ('rest', 'shear', 'generic')


def shear_profile(x3):
    return np.sin(np.pi * x3 / 2.0)


def shear_profile_derivative(x3):
    return np.pi / 2.0 * np.cos(np.pi * x3 / 2.0)


def rest_datum(grid: Grid) -> VectorField:
    return VectorField.zeros(grid)


def shear_datum(grid: Grid) -> VectorField:
    return VectorField.from_functions(grid, (
        lambda x1, x2, x3: shear_profile(x3),
        lambda x1, x2, x3: 0.0,
        lambda x1, x2, x3: 0.0,
    ))


def shear_state(grid: Grid, t: float) -> LagrangianState:
    """Solución exacta de cizalla en tiempo t: η = x + tU(x3)e1, v = U(x3)e1, q = 0"""
    v = shear_datum(grid)
    xi = VectorField.from_array(grid, np.stack([t * v.array[0], np.zeros(grid.shape), np.zeros(grid.shape)]))
    return LagrangianState(t=t, xi=xi, v=v, omega0=initial_vorticity(v), q=ScalarField.zeros(grid))


def generic_datum(grid: Grid) -> VectorField:
    return VectorField.from_functions(grid, (
        lambda x1, x2, x3: 0.5 * np.cos(x2) * np.cos(x3) - 0.3 * np.sin(x1) * np.cos(x3),
        lambda x1, x2, x3: 0.5 * np.cos(x1) * (1.0 + x3 ** 2),
        lambda x1, x2, x3: 0.3 * np.cos(x1) * np.sin(x3),
    ))


def generic_perturbation(grid: Grid) -> VectorField:
    """Perturbación de divergencia nula con tercera componente nula"""
    return VectorField.from_functions(grid, (
        lambda x1, x2, x3: np.sin(x2) * np.cos(x3),
        lambda x1, x2, x3: np.sin(x1) * x3 ** 2,
        lambda x1, x2, x3: 0.0,
    ))


def datum_for(preset: str, grid: Grid) -> VectorField:
    builders = {'rest': rest_datum, 'shear': shear_datum, 'generic': generic_datum}
    if preset not in builders:
        raise ValueError(f"Preset desconocido: {preset} (disponibles: {', '.join(PRESETS)})")
    return builders[preset](grid)


# --- soluciones manufacturadas ----------------------------------------------

def manufactured_pressure(grid: Grid, mode: int = 1) -> ScalarField:
    """q = cos(x1) cos(mπx3/2): nula en Γ1 y con ∂3q = 0 en Γ0 para m impar"""
    return ScalarField.from_function(grid, lambda x1, x2, x3: np.cos(x1) * np.cos(mode * np.pi * x3 / 2.0))


def manufactured_rhs(grid: Grid, mode: int = 1) -> ScalarField:
    return manufactured_pressure(grid, mode) * -(1.0 + (mode * np.pi / 2.0) ** 2)


def swirl_datum(grid: Grid) -> VectorField:
    """v0 = (sin x2, sin x1, 0), con presión inicial cos x1 cos x2 (1 - cosh(√2 x3)/cosh √2)"""
    return VectorField.from_functions(grid, (
        lambda x1, x2, x3: np.sin(x2),
        lambda x1, x2, x3: np.sin(x1),
        lambda x1, x2, x3: 0.0,
    ))


def swirl_pressure(grid: Grid) -> ScalarField:
    root = np.sqrt(2.0)
    return ScalarField.from_function(
        grid, lambda x1, x2, x3: np.cos(x1) * np.cos(x2) * (1.0 - np.cosh(root * x3) / np.cosh(root)))


# --- campos aleatorios de banda limitada ------------------------------------

def random_band_limited(grid: Grid, rng: np.random.Generator, bandwidth: Optional[int] = None,
                        degree: int = 3, leading: tuple = ()) -> np.ndarray:
    """
    Arreglo (*leading, n1, n2, n3) con modos |k1|, |k2| ≤ bandwidth y grado ≤ degree en x3

    El ancho de banda por defecto es n/6, de modo que los productos de dos campos
    siguen resueltos sin aliasing.
    """
    if bandwidth is None:
        bandwidth = max(1, min(grid.n1, grid.n2) // 6)
    k1 = np.abs(np.fft.fftfreq(grid.n1, 1.0 / grid.n1))[:, None]
    k2 = np.fft.rfftfreq(grid.n2, 1.0 / grid.n2)[None, :]
    mask = (k1 <= bandwidth) & (k2 <= bandwidth)
    shape = leading + (degree + 1, grid.n1, grid.n2 // 2 + 1)
    coeffs = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) * mask
    planes = np.fft.irfft2(coeffs, s=(grid.n1, grid.n2), axes=(-2, -1)) * grid.n1 * grid.n2 / 8.0
    vertical = chebyshev.chebvander(2.0 * grid.x3 - 1.0, degree)
    return np.einsum('...pab,jp->...abj', planes, vertical)


def random_scalar(grid: Grid, rng: np.random.Generator, **kwargs) -> ScalarField:
    return ScalarField(grid, random_band_limited(grid, rng, **kwargs))


def random_vector(grid: Grid, rng: np.random.Generator, **kwargs) -> VectorField:
    return VectorField.from_array(grid, random_band_limited(grid, rng, leading=(3,), **kwargs))
