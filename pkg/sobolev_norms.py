"""
Normas de Sobolev anisótropas y cálculo tangencial
Λ = (I - Δ2)^{1/2}, cocientes de diferencias D, traslaciones τ y
la descomposición div-rot de la norma
"""

import math
import logging
from dataclasses import dataclass
from typing import Dict, Iterable, Union

import numpy as np

from domain_grid import (
    Boundary, BoundaryTrace, Grid, ScalarField, VectorField,
    curl, divergence, restrict,
)

logger = logging.getLogger(__name__)

SobolevIndex = float


class ResolutionError(ValueError):
    """La malla vertical no resuelve el número de derivadas pedido"""


def standard_indices(delta: float) -> Dict[str, SobolevIndex]:
    """
    Índices usados por la teoría para un δ dado

    Args:
        delta: δ ∈ (0, 1/2]

    Returns:
        Diccionario etiqueta -> índice
    """
    if not 0.0 < delta <= 0.5:
        raise ValueError(f"δ debe estar en (0, 1/2] (recibido {delta})")
    return {
        '1.5+d': 1.5 + delta,
        '2+d': 2.0 + delta,
        '2.5+d': 2.5 + delta,
        '3+d': 3.0 + delta,
        '4': 4.0,
        '4.5': 4.5,
    }


# --- multiplicador tangencial -----------------------------------------------

def lambda_multiplier(grid: Grid, sigma: float) -> np.ndarray:
    return (1.0 + grid.ksq) ** (sigma / 2.0)


def lambda_power(f: ScalarField, sigma: float) -> ScalarField:
    """Λ^σ aplicado modo a modo; σ puede ser negativo"""
    if sigma == 0:
        return f
    return ScalarField(f.grid, f.grid.apply_multiplier(f.values, lambda_multiplier(f.grid, sigma)))


def norm_squared(grid: Grid, values: np.ndarray, s: SobolevIndex) -> float:
    """
    N_s(f)² sumado sobre todos los ejes iniciales de un arreglo (..., n1, n2, n3)

    N_s(f)² = Σ_{j=0}^{⌊s⌋} ‖Λ^{s-j} ∂3^j f‖²
    """
    if s < 0:
        raise ValueError(f"El índice de Sobolev debe ser no negativo (recibido {s})")
    top = int(math.floor(s))
    if top > grid.n3 - 2:
        raise ResolutionError(
            f"N_{s} necesita {top} derivadas verticales; n3 = {grid.n3} resuelve a lo sumo {grid.n3 - 2}")
    coeffs = grid.forward(values)
    total = 0.0
    for j in range(top + 1):
        term = grid.backward(coeffs * lambda_multiplier(grid, s - j))
        total += float(np.sum(grid.integrate_values(term * term)))
        if j < top:
            coeffs = coeffs @ grid.d3.T
    return max(total, 0.0)


def aniso_norm(f: ScalarField, s: SobolevIndex) -> float:
    return math.sqrt(norm_squared(f.grid, f.values, s))


def vector_norm(u: VectorField, s: SobolevIndex) -> float:
    return math.sqrt(norm_squared(u.grid, u.array, s))


def tensor_norm(grid: Grid, entries: np.ndarray, s: SobolevIndex) -> float:
    """Norma de un tensor de campos (3, 3, n1, n2, n3): raíz de la suma de cuadrados"""
    return math.sqrt(norm_squared(grid, entries, s))


def trace_norm(trace: Union[BoundaryTrace, np.ndarray], sigma: float, grid: Grid = None) -> float:
    """Norma tangencial ‖Λ^σ g‖_{L²(T²)} de una traza (o de un arreglo (..., n1, n2))"""
    if isinstance(trace, BoundaryTrace):
        grid, values = trace.grid, trace.values
    else:
        values = trace
    mult = (1.0 + grid.ksq[:, :, 0]) ** (sigma / 2.0)
    g = grid.trace_multiplier(values, mult)
    area = (2.0 * np.pi) ** 2
    return math.sqrt(max(float(area * np.sum(np.mean(g * g, axis=(-2, -1)))), 0.0))


# --- funciones de corte -----------------------------------------------------

def smoothstep(t: np.ndarray) -> np.ndarray:
    """Escalón C∞ construido con exp(-1/t): 0 para t ≤ 0, 1 para t ≥ 1"""
    t = np.asarray(t, dtype=float)
    with np.errstate(divide='ignore', over='ignore', invalid='ignore'):
        up = np.where(t > 0, np.exp(-1.0 / np.where(t > 0, t, 1.0)), 0.0)
        down = np.where(t < 1, np.exp(-1.0 / np.where(t < 1, 1.0 - t, 1.0)), 0.0)
    return up / (up + down)


@dataclass(frozen=True, eq=False)
class CutoffPair:
    chi: ScalarField
    psi: ScalarField
    chi_lo: float
    chi_width: float
    psi_lo: float
    psi_width: float


def make_cutoffs(grid: Grid, chi_lo: float = 0.6, chi_width: float = 0.1,
                 psi_lo: float = 0.8, psi_width: float = 0.05) -> CutoffPair:
    """
    Construye χ y ψ, funciones solo de x3

    χ = σ((x3 - chi_lo)/chi_width), ψ = σ((x3 - psi_lo)/psi_width). Se exige
    que el soporte de ψ quede dentro de {χ = 1} y que ψ = 1 cerca de Γ1.
    """
    if chi_width <= 0 or psi_width <= 0:
        raise ValueError("Los anchos de las funciones de corte deben ser positivos")
    if not 0.0 < chi_lo < psi_lo < 1.0:
        raise ValueError(f"Alturas de corte inválidas: chi_lo={chi_lo}, psi_lo={psi_lo}")
    if psi_lo <= chi_lo + chi_width:
        raise ValueError("El soporte de ψ debe estar contenido en {χ = 1}")
    if psi_lo + psi_width >= 1.0:
        raise ValueError("ψ debe valer 1 en un entorno de Γ1")

    chi = ScalarField.from_function(grid, lambda x1, x2, x3: smoothstep((x3 - chi_lo) / chi_width))
    psi = ScalarField.from_function(grid, lambda x1, x2, x3: smoothstep((x3 - psi_lo) / psi_width))
    return CutoffPair(chi, psi, chi_lo, chi_width, psi_lo, psi_width)


def localized_norm(f: Union[ScalarField, VectorField], cutoff: ScalarField, s: SobolevIndex) -> float:
    """N_s(cutoff·f) con el producto formado sin aliasing"""
    grid = f.grid
    values = f.array if isinstance(f, VectorField) else f.values
    return math.sqrt(norm_squared(grid, grid.multiply(cutoff.values, values), s))


# --- cocientes de diferencias -----------------------------------------------

@dataclass(frozen=True)
class QuotientSpec:
    """Dirección tangencial l ∈ {1, 2} e incremento h"""
    direction: int
    h: float

    def __post_init__(self):
        if self.direction not in (1, 2):
            raise ValueError(f"D y τ solo actúan en direcciones tangenciales (recibido {self.direction})")
        if not self.h > 0:
            raise ValueError(f"El incremento h debe ser positivo (recibido {self.h})")


def shift_multiplier(grid: Grid, q: QuotientSpec) -> np.ndarray:
    k = grid.k1 if q.direction == 1 else grid.k2
    return np.exp(1j * k * q.h)


def shift(f: ScalarField, q: QuotientSpec) -> ScalarField:
    """τf(x) = f(x + h e_l), traslación espectral exacta"""
    return ScalarField(f.grid, f.grid.apply_multiplier(f.values, shift_multiplier(f.grid, q)))


def diff_quotient(f: ScalarField, q: QuotientSpec) -> ScalarField:
    """Df = (τf - f)/h"""
    if q.h > 1.0:
        logger.debug(f"Cociente de diferencias con h = {q.h} > 1")
    return ScalarField(f.grid, (shift(f, q).values - f.values) / q.h)


def shift_values(grid: Grid, values: np.ndarray, q: QuotientSpec) -> np.ndarray:
    return grid.apply_multiplier(values, shift_multiplier(grid, q))


def diff_quotient_values(grid: Grid, values: np.ndarray, q: QuotientSpec) -> np.ndarray:
    return (shift_values(grid, values, q) - values) / q.h


# --- descomposición div-rot -------------------------------------------------

@dataclass(frozen=True)
class DivCurlRecord:
    lhs: float
    l2: float
    curl: float
    div: float
    boundary: float

    @property
    def rhs_sum(self) -> float:
        return self.l2 + self.curl + self.div + self.boundary


def div_curl_decomposition(f: VectorField, s: SobolevIndex) -> DivCurlRecord:
    """
    N_s(f) frente a ‖f‖, N_{s-1}(rot f), N_{s-1}(div f) y la norma tangencial
    de índice s - 1.5 del gradiente tangencial de las trazas en Γ0 ∪ Γ1
    """
    if s < 1:
        raise ValueError(f"La descomposición necesita s ≥ 1 (recibido {s})")
    grid = f.grid
    traces = np.stack([
        restrict(component, which).values
        for which in (Boundary.GAMMA0, Boundary.GAMMA1)
        for component in f
    ])
    tangential = np.stack([grid.trace_partial(traces, axis) for axis in (1, 2)])
    return DivCurlRecord(
        lhs=vector_norm(f, s),
        l2=vector_norm(f, 0.0),
        curl=vector_norm(curl(f), s - 1.0),
        div=aniso_norm(divergence(f), s - 1.0),
        boundary=trace_norm(tangential, s - 1.5, grid),
    )


def fit_decomposition_constant(records: Iterable[DivCurlRecord]) -> float:
    """Menor C con lhs ≤ C·(suma de términos) sobre la muestra"""
    ratios = [r.lhs / r.rhs_sum for r in records if r.rhs_sum > 0]
    if not ratios:
        return 0.0
    constant = max(ratios)
    logger.info(f"📊 Constante div-rot ajustada: C = {constant:.6g} sobre {len(ratios)} campos")
    return constant
