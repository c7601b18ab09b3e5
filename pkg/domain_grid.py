"""
Discretización del dominio Ω = T² × (0,1)
Fourier en (x1, x2) con período 2π y colocación Chebyshev–Lobatto en x3
"""

import os
import logging
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Callable, Optional, Tuple, Union

import numpy as np
from scipy import fft as sfft
from scipy.interpolate import barycentric_interpolate

logger = logging.getLogger(__name__)

PERIOD = 2.0 * np.pi
TORUS_AREA = PERIOD ** 2


class GridError(ValueError):
    """Malla inválida o campos definidos sobre mallas distintas"""


class Boundary(Enum):
    GAMMA0 = 0  # fondo, x3 = 0
    GAMMA1 = 1  # frontera libre, x3 = 1


def fft_workers() -> Optional[int]:
    """Número de hilos para scipy.fft, tomado de LELAB_THREADS"""
    raw = os.environ.get('LELAB_THREADS')
    if not raw:
        return None
    try:
        workers = int(raw)
    except ValueError:
        logger.warning(f"⚠️ LELAB_THREADS inválido ({raw!r}), se usa un solo hilo")
        return None
    return workers if workers > 0 else None


def chebyshev_matrix(n: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Nodos y matriz de diferenciación Chebyshev en [-1, 1]

    Args:
        n: grado N (se devuelven N+1 nodos cos(πj/N))

    Returns:
        Tupla (nodos, D)
    """
    j = np.arange(n + 1)
    xi = np.cos(np.pi * j / n)
    c = np.hstack((2.0, np.ones(n - 1), 2.0)) * (-1.0) ** j
    dx = xi[:, None] - xi[None, :]
    d = np.outer(c, 1.0 / c) / (dx + np.eye(n + 1))
    d = d - np.diag(d.sum(axis=1))
    return xi, d


def clenshaw_curtis(n: int) -> np.ndarray:
    """Pesos de Clenshaw–Curtis en [-1, 1] para los nodos cos(πj/N)"""
    theta = np.pi * np.arange(n + 1) / n
    w = np.zeros(n + 1)
    inner = np.arange(1, n)
    v = np.ones(n - 1)
    if n % 2 == 0:
        w[0] = w[n] = 1.0 / (n ** 2 - 1)
        for k in range(1, n // 2):
            v -= 2.0 * np.cos(2 * k * theta[inner]) / (4 * k * k - 1)
        v -= np.cos(n * theta[inner]) / (n ** 2 - 1)
    else:
        w[0] = w[n] = 1.0 / n ** 2
        for k in range(1, (n - 1) // 2 + 1):
            v -= 2.0 * np.cos(2 * k * theta[inner]) / (4 * k * k - 1)
    w[inner] = 2.0 * v / n
    return w


@dataclass(frozen=True)
class Grid:
    """
    Malla espectral de Ω

    Los arreglos físicos tienen forma (..., n1, n2, n3): los ejes -3 y -2 son
    tangenciales, el eje -1 recorre los nodos verticales de Γ0 (j=0) a Γ1 (j=n3-1).
    """
    n1: int
    n2: int
    n3: int

    def __post_init__(self):
        for name in ('n1', 'n2'):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or value <= 0 or value % 2:
                raise GridError(f"{name} debe ser un entero par positivo (recibido {value})")
        if not isinstance(self.n3, (int, np.integer)) or self.n3 < 5:
            raise GridError(f"n3 debe ser un entero ≥ 5 (recibido {self.n3})")

    @property
    def shape(self) -> Tuple[int, int, int]:
        return (self.n1, self.n2, self.n3)

    @property
    def spectral_shape(self) -> Tuple[int, int, int]:
        return (self.n1, self.n2 // 2 + 1, self.n3)

    # --- coordenadas -------------------------------------------------------

    @cached_property
    def x1(self) -> np.ndarray:
        return PERIOD * np.arange(self.n1) / self.n1

    @cached_property
    def x2(self) -> np.ndarray:
        return PERIOD * np.arange(self.n2) / self.n2

    @cached_property
    def x3(self) -> np.ndarray:
        n = self.n3 - 1
        return (1.0 - np.cos(np.pi * np.arange(self.n3) / n)) / 2.0

    @cached_property
    def points(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Coordenadas (X1, X2, X3) de todos los nodos, cada una de forma (n1, n2, n3)"""
        return tuple(np.broadcast_to(a, self.shape) for a in np.meshgrid(
            self.x1, self.x2, self.x3, indexing='ij'))

    # --- números de onda ---------------------------------------------------

    @cached_property
    def k1(self) -> np.ndarray:
        """Números de onda enteros en x1 (forma (n1, 1, 1)), Nyquist anulado"""
        k = np.fft.fftfreq(self.n1, 1.0 / self.n1)
        k[self.n1 // 2] = 0.0
        return k[:, None, None]

    @cached_property
    def k2(self) -> np.ndarray:
        k = np.fft.rfftfreq(self.n2, 1.0 / self.n2)
        k[-1] = 0.0
        return k[None, :, None]

    @cached_property
    def ksq(self) -> np.ndarray:
        """|k|² con los números de onda completos (incluye Nyquist)"""
        k1 = np.fft.fftfreq(self.n1, 1.0 / self.n1)[:, None, None]
        k2 = np.fft.rfftfreq(self.n2, 1.0 / self.n2)[None, :, None]
        return k1 ** 2 + k2 ** 2

    # --- dirección vertical ------------------------------------------------

    @cached_property
    def d3(self) -> np.ndarray:
        """Matriz de diferenciación en x3 ∈ [0,1] (x3 = (1-ξ)/2 ⇒ d/dx3 = -2 d/dξ)"""
        _, d = chebyshev_matrix(self.n3 - 1)
        return -2.0 * d

    @cached_property
    def weights(self) -> np.ndarray:
        return clenshaw_curtis(self.n3 - 1) / 2.0

    # --- transformadas -----------------------------------------------------

    def forward(self, values: np.ndarray) -> np.ndarray:
        return sfft.rfft2(values, axes=(-3, -2), workers=fft_workers())

    def backward(self, coeffs: np.ndarray) -> np.ndarray:
        return sfft.irfft2(coeffs, s=(self.n1, self.n2), axes=(-3, -2), workers=fft_workers())

    def apply_multiplier(self, values: np.ndarray, multiplier: np.ndarray) -> np.ndarray:
        return self.backward(self.forward(values) * multiplier)

    def d1(self, values: np.ndarray, order: int = 1) -> np.ndarray:
        return self.apply_multiplier(values, (1j * self.k1) ** order)

    def d2(self, values: np.ndarray, order: int = 1) -> np.ndarray:
        return self.apply_multiplier(values, (1j * self.k2) ** order)

    def dz(self, values: np.ndarray, order: int = 1) -> np.ndarray:
        out = values
        for _ in range(order):
            out = out @ self.d3.T
        return out

    def partial(self, values: np.ndarray, axis: int) -> np.ndarray:
        """∂_axis con axis ∈ {1, 2, 3}"""
        if axis == 1:
            return self.d1(values)
        if axis == 2:
            return self.d2(values)
        if axis == 3:
            return self.dz(values)
        raise GridError(f"Dirección inválida: {axis}")

    def trace_multiplier(self, values: np.ndarray, multiplier: np.ndarray) -> np.ndarray:
        """Multiplicador tangencial sobre arreglos de traza (..., n1, n2)"""
        coeffs = sfft.rfft2(values, axes=(-2, -1), workers=fft_workers())
        return sfft.irfft2(coeffs * multiplier, s=(self.n1, self.n2), axes=(-2, -1),
                           workers=fft_workers())

    def trace_partial(self, values: np.ndarray, axis: int) -> np.ndarray:
        k = self.k1[:, :, 0] if axis == 1 else self.k2[:, :, 0]
        return self.trace_multiplier(values, 1j * k)

    def integrate_values(self, values: np.ndarray) -> np.ndarray:
        return TORUS_AREA * np.mean(values, axis=(-3, -2)) @ self.weights

    def interpolate_vertical(self, values: np.ndarray, heights: np.ndarray) -> np.ndarray:
        """Evalúa el polinomio de colocación en alturas arbitrarias (eje -1)"""
        return barycentric_interpolate(self.x3, values, np.asarray(heights, dtype=float), axis=-1)

    # --- productos sin aliasing --------------------------------------------

    @property
    def padded_shape(self) -> Tuple[int, int]:
        return (3 * self.n1 // 2, 3 * self.n2 // 2)

    def _pad(self, coeffs: np.ndarray) -> np.ndarray:
        m1, m2 = self.padded_shape
        h1, h2 = self.n1 // 2, self.n2 // 2
        out = np.zeros(coeffs.shape[:-3] + (m1, m2 // 2 + 1, self.n3), dtype=complex)
        out[..., :h1, :h2, :] = coeffs[..., :h1, :h2, :]
        out[..., m1 - h1 + 1:, :h2, :] = coeffs[..., self.n1 - h1 + 1:, :h2, :]
        return out * (m1 * m2 / (self.n1 * self.n2))

    def _truncate(self, coeffs: np.ndarray) -> np.ndarray:
        m1, m2 = self.padded_shape
        h1, h2 = self.n1 // 2, self.n2 // 2
        out = np.zeros(coeffs.shape[:-3] + self.spectral_shape, dtype=complex)
        out[..., :h1, :h2, :] = coeffs[..., :h1, :h2, :]
        out[..., self.n1 - h1 + 1:, :h2, :] = coeffs[..., m1 - h1 + 1:, :h2, :]
        return out * (self.n1 * self.n2 / (m1 * m2))

    def to_padded(self, values: np.ndarray) -> np.ndarray:
        m = self.padded_shape
        return sfft.irfft2(self._pad(self.forward(values)), s=m, axes=(-3, -2), workers=fft_workers())

    def from_padded(self, values: np.ndarray) -> np.ndarray:
        coeffs = sfft.rfft2(values, axes=(-3, -2), workers=fft_workers())
        return self.backward(self._truncate(coeffs))

    def multiply(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Producto tangencialmente sin aliasing (relleno 3/2, equivalente a la regla 2/3)"""
        return self.from_padded(self.to_padded(a) * self.to_padded(b))


@dataclass(frozen=True, eq=False)
class ScalarField:
    """Campo escalar en los nodos de colocación"""
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != self.grid.shape:
            raise GridError(f"Forma {values.shape} incompatible con la malla {self.grid.shape}")
        values.setflags(write=False)
        object.__setattr__(self, 'values', values)

    @classmethod
    def zeros(cls, grid: Grid) -> 'ScalarField':
        return cls(grid, np.zeros(grid.shape))

    @classmethod
    def from_function(cls, grid: Grid, fn: Callable) -> 'ScalarField':
        x1, x2, x3 = grid.points
        return cls(grid, np.broadcast_to(fn(x1, x2, x3), grid.shape).astype(float))

    @cached_property
    def spectral(self) -> np.ndarray:
        return self.grid.forward(self.values)

    def _check(self, other: 'ScalarField'):
        if other.grid != self.grid:
            raise GridError("Los campos están definidos sobre mallas distintas")

    def __add__(self, other: Union['ScalarField', float]) -> 'ScalarField':
        if isinstance(other, ScalarField):
            self._check(other)
            return ScalarField(self.grid, self.values + other.values)
        return ScalarField(self.grid, self.values + other)

    def __sub__(self, other: Union['ScalarField', float]) -> 'ScalarField':
        if isinstance(other, ScalarField):
            self._check(other)
            return ScalarField(self.grid, self.values - other.values)
        return ScalarField(self.grid, self.values - other)

    def __neg__(self) -> 'ScalarField':
        return ScalarField(self.grid, -self.values)

    def __mul__(self, scale: float) -> 'ScalarField':
        return ScalarField(self.grid, self.values * scale)

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class VectorField:
    """Tres componentes escalares sobre una misma malla"""
    components: Tuple[ScalarField, ScalarField, ScalarField]

    def __post_init__(self):
        comps = tuple(self.components)
        if len(comps) != 3:
            raise GridError(f"Un campo vectorial necesita 3 componentes (recibidas {len(comps)})")
        if any(c.grid != comps[0].grid for c in comps):
            raise GridError("Las componentes no comparten la misma malla")
        object.__setattr__(self, 'components', comps)

    @property
    def grid(self) -> Grid:
        return self.components[0].grid

    def __getitem__(self, i: int) -> ScalarField:
        return self.components[i]

    def __iter__(self):
        return iter(self.components)

    @cached_property
    def array(self) -> np.ndarray:
        """Arreglo apilado de forma (3, n1, n2, n3)"""
        stacked = np.stack([c.values for c in self.components])
        stacked.setflags(write=False)
        return stacked

    @classmethod
    def from_array(cls, grid: Grid, array: np.ndarray) -> 'VectorField':
        return cls(tuple(ScalarField(grid, array[i]) for i in range(3)))

    @classmethod
    def zeros(cls, grid: Grid) -> 'VectorField':
        return cls.from_array(grid, np.zeros((3,) + grid.shape))

    @classmethod
    def from_functions(cls, grid: Grid, fns) -> 'VectorField':
        return cls(tuple(ScalarField.from_function(grid, fn) for fn in fns))

    def __add__(self, other: 'VectorField') -> 'VectorField':
        return VectorField(tuple(a + b for a, b in zip(self, other)))

    def __sub__(self, other: 'VectorField') -> 'VectorField':
        return VectorField(tuple(a - b for a, b in zip(self, other)))

    def __neg__(self) -> 'VectorField':
        return VectorField(tuple(-a for a in self))

    def __mul__(self, scale: float) -> 'VectorField':
        return VectorField(tuple(a * scale for a in self))

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class BoundaryTrace:
    grid: Grid
    which: Boundary
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.grid.n1, self.grid.n2):
            raise GridError(f"Traza de forma {values.shape} incompatible con la malla {self.grid.shape}")
        object.__setattr__(self, 'values', values)

    @classmethod
    def zeros(cls, grid: Grid, which: Boundary) -> 'BoundaryTrace':
        return cls(grid, which, np.zeros((grid.n1, grid.n2)))

    def integrate(self) -> float:
        return float(TORUS_AREA * np.mean(self.values))


# --- operaciones ------------------------------------------------------------

def tangential_derivative(f: ScalarField, axis: int, order: int = 1) -> ScalarField:
    """Derivada espectral exacta ∂_axis^order con axis ∈ {1, 2}"""
    if axis == 1:
        return ScalarField(f.grid, f.grid.d1(f.values, order))
    if axis == 2:
        return ScalarField(f.grid, f.grid.d2(f.values, order))
    raise GridError(f"Dirección tangencial inválida: {axis}")


def vertical_derivative(f: ScalarField, order: int = 1) -> ScalarField:
    return ScalarField(f.grid, f.grid.dz(f.values, order))


def restrict(f: ScalarField, which: Boundary) -> BoundaryTrace:
    index = 0 if which is Boundary.GAMMA0 else -1
    return BoundaryTrace(f.grid, which, f.values[:, :, index])


def integrate(f: ScalarField) -> float:
    """∫_Ω f dx: trapecio tangencial por pesos de Clenshaw–Curtis"""
    return float(f.grid.integrate_values(f.values))


def gradient(f: ScalarField) -> VectorField:
    return VectorField.from_array(f.grid, np.stack([f.grid.partial(f.values, i) for i in (1, 2, 3)]))


def grad_tensor(u: VectorField) -> np.ndarray:
    """Arreglo (3, 3, n1, n2, n3) con entrada [i, j] = ∂_i u_j"""
    grid = u.grid
    return np.stack([grid.partial(u.array, i) for i in (1, 2, 3)])


def divergence(u: VectorField) -> ScalarField:
    grid = u.grid
    return ScalarField(grid, sum(grid.partial(u.array[i], i + 1) for i in range(3)))


def curl(u: VectorField) -> VectorField:
    g = grad_tensor(u)
    return VectorField.from_array(u.grid, np.stack([
        g[1, 2] - g[2, 1],
        g[2, 0] - g[0, 2],
        g[0, 1] - g[1, 0],
    ]))


def dealiased_product(f: ScalarField, g: ScalarField) -> ScalarField:
    f._check(g)
    return ScalarField(f.grid, f.grid.multiply(f.values, g.values))
