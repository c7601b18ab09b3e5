"""
Problemas de Poisson del laboratorio

- solve_constant_poisson: Δh = f con h = g en Γ1 y ∂3h = n en Γ0, modo a modo
- solve_initial_pressure: presión inicial q0
- solve_pressure: ecuación de presión con coeficientes variables, resuelta
  como punto fijo sobre el problema de coeficientes constantes
"""

import logging
from dataclasses import dataclass, field
from functools import lru_cache
from typing import List, Optional, Tuple

import numpy as np
from scipy import fft as sfft

from domain_grid import (
    Boundary, BoundaryTrace, Grid, ScalarField, VectorField,
    fft_workers, grad_tensor, restrict, vertical_derivative,
)
from lagrangian_state import LagrangianState, identity_entries
from sobolev_norms import aniso_norm, tensor_norm

logger = logging.getLogger(__name__)


class EllipticSolveError(RuntimeError):
    """Sistema de colocación singular"""


class PressureNotConverged(RuntimeError):
    def __init__(self, message: str, report: 'PressureSolveReport'):
        super().__init__(message)
        self.report = report


@dataclass(frozen=True, eq=False)
class MixedBVP:
    rhs: ScalarField
    dirichlet_top: BoundaryTrace
    neumann_bottom: BoundaryTrace

    def __post_init__(self):
        if self.dirichlet_top.which is not Boundary.GAMMA1:
            raise ValueError("El dato de Dirichlet debe vivir en Γ1")
        if self.neumann_bottom.which is not Boundary.GAMMA0:
            raise ValueError("El dato de Neumann debe vivir en Γ0")
        grid = self.rhs.grid
        if self.dirichlet_top.grid != grid or self.neumann_bottom.grid != grid:
            raise ValueError("Las trazas y el término fuente deben compartir la malla")

    @classmethod
    def homogeneous(cls, rhs: ScalarField) -> 'MixedBVP':
        grid = rhs.grid
        return cls(rhs, BoundaryTrace.zeros(grid, Boundary.GAMMA1), BoundaryTrace.zeros(grid, Boundary.GAMMA0))


@dataclass
class PressureSolveReport:
    iterations: int = 0
    final_residual: float = float('inf')
    contraction_estimate: float = 0.0
    coefficient_deviation: float = 0.0
    history: List[float] = field(default_factory=list)


@lru_cache(maxsize=8)
def _mode_operators(grid: Grid) -> np.ndarray:
    """Matrices (∂33 - |k|²) por modo con las filas de contorno ya impuestas"""
    d = grid.d3
    n = grid.n3
    ops = np.broadcast_to(d @ d, grid.spectral_shape[:2] + (n, n)).copy()
    ops -= grid.ksq[:, :, :, None] * np.eye(n)
    ops[:, :, 0, :] = d[0, :]
    ops[:, :, -1, :] = 0.0
    ops[:, :, -1, -1] = 1.0
    return ops


def _trace_coeffs(grid: Grid, values: np.ndarray) -> np.ndarray:
    return sfft.rfft2(values, axes=(-2, -1), workers=fft_workers())


def solve_constant_poisson(bvp: MixedBVP) -> ScalarField:
    """
    Resuelve (∂33 - |k|²)ĥ = r̂ para cada modo tangencial por colocación

    La fila j = 0 impone ∂3ĥ(0) = neumann y la fila j = n3-1 impone ĥ(1) = dirichlet.
    """
    grid = bvp.rhs.grid
    b = np.array(grid.forward(bvp.rhs.values))
    b[:, :, 0] = _trace_coeffs(grid, bvp.neumann_bottom.values)
    b[:, :, -1] = _trace_coeffs(grid, bvp.dirichlet_top.values)
    try:
        coeffs = np.linalg.solve(_mode_operators(grid), b[..., None])[..., 0]
    except np.linalg.LinAlgError as e:
        raise EllipticSolveError(f"Sistema de colocación singular en la malla {grid.shape}: {e}") from e
    return ScalarField(grid, grid.backward(coeffs))


def laplacian(f: ScalarField) -> ScalarField:
    grid = f.grid
    return ScalarField(grid, grid.d1(f.values, 2) + grid.d2(f.values, 2) + grid.dz(f.values, 2))


def _partials(grid: Grid, values: np.ndarray) -> np.ndarray:
    return np.stack([grid.partial(values, i) for i in (1, 2, 3)])


def solve_initial_pressure(v0: VectorField) -> Tuple[ScalarField, BoundaryTrace]:
    """
    Δq0 = -∂_i(v0)_j ∂_j(v0)_i con q0 = 0 en Γ1 y ∂3q0 = 0 en Γ0

    Returns:
        Tupla (q0, traza de ∂3q0 en Γ1)
    """
    grid = v0.grid
    g = grid.to_padded(grad_tensor(v0))
    source = -grid.from_padded(np.einsum('ij...,ji...->...', g, g))
    q0 = solve_constant_poisson(MixedBVP.homogeneous(ScalarField(grid, source)))
    top = restrict(vertical_derivative(q0), Boundary.GAMMA1)
    logger.debug(f"Presión inicial: max|q0| = {np.max(np.abs(q0.values)):.3e}")
    return q0, top


def solve_pressure(state: LagrangianState, tol: float = 1e-11, max_iter: int = 60,
                   initial_guess: Optional[ScalarField] = None,
                   delta: float = 0.25) -> Tuple[ScalarField, PressureSolveReport]:
    """
    Punto fijo para la presión con coeficientes a(t)

    Δq^{m+1} = ∂_j((δ_jk - a_ji a_ki) ∂_k q^m) + ∂_t a_ji ∂_j v_i,
    q^{m+1} = 0 en Γ1, ∂3q^{m+1} = (δ_k3 - a_k3) ∂_k q^m en Γ0.

    Args:
        state: estado lagrangiano (q se ignora)
        tol: distancia N_1 absoluta entre iterados sucesivos
        max_iter: número máximo de resoluciones
        initial_guess: iterado inicial (por defecto q = 0)
        delta: δ del índice 1.5+δ con que se informa ‖I - aaᵀ‖

    Returns:
        Tupla (q, reporte)
    """
    grid = state.grid
    a = state.a.entries
    report = PressureSolveReport()

    pa = grid.to_padded(a)
    aat = grid.from_padded(np.einsum('ji...,ki...->jk...', pa, pa))
    coeff = identity_entries(grid) - aat
    padded_coeff = grid.to_padded(coeff)
    report.coefficient_deviation = tensor_norm(grid, coeff, 1.5 + delta)
    logger.debug(f"‖I - aaᵀ‖_(1.5+δ) = {report.coefficient_deviation:.3e}")

    source = grid.from_padded(np.einsum('ji...,ji...->...',
                                        grid.to_padded(state.a_t), grid.to_padded(state.grad_v)))
    bottom_weights = identity_entries(grid)[:, 2, :, :, 0] - a[:, 2, :, :, 0]
    top = BoundaryTrace.zeros(grid, Boundary.GAMMA1)

    q = initial_guess.values if initial_guess is not None else np.zeros(grid.shape)
    warned = False
    for iteration in range(1, max_iter + 1):
        dq = _partials(grid, q)
        flux = grid.from_padded(np.einsum('jk...,k...->j...', padded_coeff, grid.to_padded(dq)))
        rhs = source + sum(grid.partial(flux[j], j + 1) for j in range(3))
        neumann = np.sum(bottom_weights * dq[:, :, :, 0], axis=0)

        new_q = solve_constant_poisson(MixedBVP(
            ScalarField(grid, rhs), top, BoundaryTrace(grid, Boundary.GAMMA0, neumann))).values
        distance = aniso_norm(ScalarField(grid, new_q - q), 1.0)
        report.history.append(distance)
        report.iterations = iteration
        report.final_residual = distance
        if len(report.history) > 1 and report.history[-2] > 0:
            report.contraction_estimate = distance / report.history[-2]
            if report.contraction_estimate >= 1.0 and distance > 100.0 * tol and not warned:
                warned = True
                logger.warning(f"⚠️ Cociente de contracción observado {report.contraction_estimate:.3f} ≥ 1: "
                               f"fuera del régimen de contracción")
        q = new_q
        logger.debug(f"Punto fijo de presión: iteración {iteration}, distancia {distance:.3e}")
        if distance <= tol:
            return ScalarField(grid, q), report

    raise PressureNotConverged(
        f"La presión no convergió en {max_iter} iteraciones (distancia {report.final_residual:.3e})",
        report)
