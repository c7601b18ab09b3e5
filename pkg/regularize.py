"""
Regularización del dato inicial

v0 -> ṽ0 (desplazamiento y reescalado vertical) -> w = φ_r * ṽ0 (molificación)
   -> v0r = w - ∇h, con Δh = div w, h = 0 en Γ1, ∂3h = w3 en Γ0
"""

import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable, List, Optional, Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import fft as sfft
from scipy.special import j0

from domain_grid import (
    Boundary, BoundaryTrace, Grid, ScalarField, VectorField,
    curl, divergence, fft_workers, gradient, restrict,
)
from elliptic import MixedBVP, solve_constant_poisson
from sobolev_norms import CutoffPair, aniso_norm, localized_norm, make_cutoffs, vector_norm

logger = logging.getLogger(__name__)

# Muestreador vertical: alturas (H,) -> valores (3, n1, n2, H)
Sampler = Callable[[np.ndarray], np.ndarray]

DEFAULT_RADII = (0.2, 0.1, 0.05, 0.025)
QUADRATURE_POINTS = 32
REFLECTION_RATIOS = (1.0, 1.0 / 2.0, 1.0 / 3.0, 1.0 / 4.0)


def _check_radius(r: float):
    if not 0.0 < r <= 1.0:
        raise ValueError(f"El radio de molificación debe estar en (0, 1] (recibido {r})")


@dataclass(frozen=True, eq=False)
class RegularizationResult:
    r: float
    v0r: VectorField
    hr: ScalarField
    datum_error: float
    curl_ratio: float
    div_residual: float
    bottom_residual: float
    h_norm: float
    n4_norm: float
    curl_identity: float = 0.0
    div_interior_max: float = 0.0

    def as_row(self) -> dict:
        return {
            'r': self.r,
            'datum_error': self.datum_error,
            'curl_ratio': self.curl_ratio,
            'div_residual': self.div_residual,
            'bottom_residual': self.bottom_residual,
            'h_norm': self.h_norm,
            'n4_norm': self.n4_norm,
            'curl_identity': self.curl_identity,
            'div_interior_max': self.div_interior_max,
        }


# --- desplazamiento y reescalado --------------------------------------------

def rescaled_sampler(v0: VectorField, r: float) -> Sampler:
    """
    ṽ0 en alturas x3 ∈ [-r, 1+r]: las tres componentes se muestrean en
    (x3 + r)/(1 + 2r) y la tercera se multiplica además por (1 + 2r)^{-1}
    """
    _check_radius(r)
    grid = v0.grid
    scale = 1.0 / (1.0 + 2.0 * r)
    factors = np.array([1.0, 1.0, scale])[:, None, None, None]

    def sample(heights: np.ndarray) -> np.ndarray:
        y = np.clip((np.asarray(heights, dtype=float) + r) * scale, 0.0, 1.0)
        return grid.interpolate_vertical(v0.array, y) * factors

    return sample


def shift_rescale(v0: VectorField, r: float) -> VectorField:
    return VectorField.from_array(v0.grid, rescaled_sampler(v0, r)(v0.grid.x3))


def rescaled_vorticity(omega0: VectorField, r: float) -> VectorField:
    """
    rot ṽ0 expresado con ω0 = rot v0

    Las componentes 1 y 2 llevan el factor (1 + 2r)^{-1}; la tercera no,
    pues solo involucra derivadas tangenciales de componentes sin reescalar.
    """
    _check_radius(r)
    grid = omega0.grid
    scale = 1.0 / (1.0 + 2.0 * r)
    y = (grid.x3 + r) * scale
    sampled = grid.interpolate_vertical(omega0.array, y)
    return VectorField.from_array(grid, sampled * np.array([scale, scale, 1.0])[:, None, None, None])


def rescaled_curl_residual(v0: VectorField, r: float) -> float:
    """max |rot ṽ0 - rescaled_vorticity(rot v0, r)| sobre la malla"""
    residual = curl(shift_rescale(v0, r)) - rescaled_vorticity(curl(v0), r)
    return float(np.max(np.abs(residual.array)))


# --- extensión por reflexión ------------------------------------------------

@lru_cache(maxsize=1)
def reflection_coefficients() -> np.ndarray:
    """λ_j con Σ_j λ_j (-μ_j)^n = 1 para n = 0..3 (extensión C³)"""
    mu = np.array(REFLECTION_RATIOS)
    system = np.vander(-mu, 4, increasing=True).T
    return np.linalg.solve(system, np.ones(4))


def reflection_sampler(f: VectorField) -> Sampler:
    """Extensión de f más allá de [0, 1] por reflexión de alto orden en ambas caras"""
    grid = f.grid
    lam = reflection_coefficients()
    mu = np.array(REFLECTION_RATIOS)

    def sample(heights: np.ndarray) -> np.ndarray:
        heights = np.asarray(heights, dtype=float)
        out = grid.interpolate_vertical(f.array, np.clip(heights, 0.0, 1.0))
        below = heights < 0.0
        above = heights > 1.0
        if np.any(below):
            y = heights[below]
            out[..., below] = sum(
                lj * grid.interpolate_vertical(f.array, np.clip(-mj * y, 0.0, 1.0))
                for lj, mj in zip(lam, mu))
        if np.any(above):
            y = heights[above] - 1.0
            out[..., above] = sum(
                lj * grid.interpolate_vertical(f.array, np.clip(1.0 - mj * y, 0.0, 1.0))
                for lj, mj in zip(lam, mu))
        return out

    return sample


# --- molificación -----------------------------------------------------------

def bump(rho: np.ndarray) -> np.ndarray:
    """exp(-1/(1 - ρ²)) en ρ < 1, cero fuera"""
    rho = np.asarray(rho, dtype=float)
    inside = rho < 1.0
    out = np.zeros_like(rho)
    out[inside] = np.exp(-1.0 / (1.0 - rho[inside] ** 2))
    return out


@lru_cache(maxsize=16)
def _vertical_kernel(grid: Grid, r: float) -> Tuple[np.ndarray, np.ndarray]:
    """
    Núcleo K_k(z3) = 2π ∫ φ_r(ρ, z3) J0(|k|ρ) ρ dρ en los nodos de Gauss–Legendre de z3

    Returns:
        Tupla (z3, pesos·K) con pesos·K de forma (n1, n2//2+1, Q), normalizada a masa 1
    """
    t, w = leggauss(QUADRATURE_POINTS)
    z3 = r * t
    wz = r * w
    radius = np.sqrt(np.maximum(r * r - z3 * z3, 0.0))
    rho = radius[:, None] * (t[None, :] + 1.0) / 2.0
    wrho = radius[:, None] * w[None, :] / 2.0
    profile = bump(np.sqrt(rho ** 2 + z3[:, None] ** 2) / r) * rho * wrho

    knorm = np.sqrt(grid.ksq[:, :, 0])
    bessel = j0(knorm[:, :, None, None] * rho[None, None, :, :])
    kernel = 2.0 * np.pi * np.sum(bessel * profile, axis=-1)
    mass = float(np.sum(wz * 2.0 * np.pi * np.sum(profile, axis=-1)))
    logger.debug(f"Núcleo molificador r={r}: {QUADRATURE_POINTS}×{QUADRATURE_POINTS} nodos, masa {mass:.6e}")
    return z3, kernel * wz / mass


def mollifier_multiplier(grid: Grid, r: float) -> np.ndarray:
    """m̂(k): multiplicador tangencial del molificador sobre funciones independientes de x3"""
    _check_radius(r)
    _, weighted = _vertical_kernel(grid, float(r))
    return np.sum(weighted, axis=-1)


def mollify(f: VectorField, r: float, sampler: Optional[Sampler] = None) -> VectorField:
    """
    w = φ_r * f evaluado en Ω

    Tangencialmente es un multiplicador de Fourier exacto; verticalmente una
    cuadratura de Gauss–Legendre en z3 ∈ [-r, r] sobre el campo extendido.
    Sin muestreador se usa la extensión por reflexión de f.
    """
    _check_radius(r)
    grid = f.grid
    sample = sampler if sampler is not None else reflection_sampler(f)
    z3, weighted = _vertical_kernel(grid, float(r))

    heights = (grid.x3[:, None] - z3[None, :]).ravel()
    shifted = sample(heights).reshape((3,) + grid.shape[:2] + (grid.n3, z3.size))
    coeffs = sfft.rfft2(shifted, axes=(1, 2), workers=fft_workers())
    smoothed = np.einsum('cabjq,abq->cabj', coeffs, weighted)
    values = sfft.irfft2(smoothed, s=grid.shape[:2], axes=(1, 2), workers=fft_workers())
    return VectorField.from_array(grid, values)


# --- corrección de divergencia ----------------------------------------------

def divergence_correction(w: VectorField, r: Optional[float] = None) -> Tuple[VectorField, ScalarField]:
    """
    v0r = w - ∇h con Δh = div w, h = 0 en Γ1, ∂3h = w3 en Γ0

    Returns:
        Tupla (v0r, h)
    """
    grid = w.grid
    bvp = MixedBVP(
        rhs=divergence(w),
        dirichlet_top=BoundaryTrace.zeros(grid, Boundary.GAMMA1),
        neumann_bottom=restrict(w[2], Boundary.GAMMA0),
    )
    h = solve_constant_poisson(bvp)
    logger.debug(f"Corrección de divergencia (r={r}): max|h| = {np.max(np.abs(h.values)):.3e}")
    return w - gradient(h), h


def regularize_datum(v0: VectorField, r: float, delta: float = 0.25,
                     cutoffs: Optional[CutoffPair] = None) -> RegularizationResult:
    """
    Desplazamiento/reescalado, molificación y corrección de divergencia

    Args:
        v0: dato inicial
        r: radio de molificación en (0, 1]
        delta: δ de los índices 2+δ y 2.5+δ
        cutoffs: par (χ, ψ); por defecto make_cutoffs(grid)

    Returns:
        RegularizationResult con las métricas de convergencia
    """
    _check_radius(r)
    grid = v0.grid
    cutoffs = cutoffs or make_cutoffs(grid)

    w = mollify(v0, r, sampler=rescaled_sampler(v0, r))
    v0r, h = divergence_correction(w, r)
    div_v0r = divergence(v0r)

    reference = localized_norm(curl(v0), cutoffs.chi, 2.0 + delta)
    result = RegularizationResult(
        r=r,
        v0r=v0r,
        hr=h,
        datum_error=vector_norm(v0r - v0, 2.5 + delta),
        curl_ratio=localized_norm(curl(v0r), cutoffs.chi, 2.0 + delta) / (1.0 + reference),
        div_residual=aniso_norm(div_v0r, 0.0),
        bottom_residual=float(np.max(np.abs(restrict(v0r[2], Boundary.GAMMA0).values))),
        h_norm=aniso_norm(h, 0.0),
        n4_norm=vector_norm(v0r, 4.0) if grid.n3 >= 6 else float('nan'),
        curl_identity=rescaled_curl_residual(v0, r),
        div_interior_max=float(np.max(np.abs(div_v0r.values[..., 1:-1]))),
    )
    logger.info(f"🔧 Regularización r={r}: error del dato {result.datum_error:.3e}, "
                f"cociente de rotacional {result.curl_ratio:.3e}, div {result.div_residual:.3e}")
    return result


def regularization_sweep(v0: VectorField, radii: Iterable[float] = DEFAULT_RADII,
                         delta: float = 0.25, cutoffs: Optional[CutoffPair] = None) -> List[RegularizationResult]:
    cutoffs = cutoffs or make_cutoffs(v0.grid)
    return [regularize_datum(v0, r, delta, cutoffs) for r in radii]
