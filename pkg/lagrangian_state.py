"""
Estado lagrangiano (η, v, a, q) e identidades algebraicas exactas:
matriz cofactor, determinante unitario, invariancia de Cauchy,
divergencia y rotacional lagrangianos, identidad de Piola
"""

import logging
from dataclasses import dataclass, replace
from functools import cached_property
from typing import Optional

import numpy as np

from domain_grid import Grid, ScalarField, VectorField, grad_tensor

logger = logging.getLogger(__name__)

# Símbolo de permutación ε_ijk
LEVI_CIVITA = np.zeros((3, 3, 3))
LEVI_CIVITA[0, 1, 2] = LEVI_CIVITA[1, 2, 0] = LEVI_CIVITA[2, 0, 1] = 1.0
LEVI_CIVITA[0, 2, 1] = LEVI_CIVITA[2, 1, 0] = LEVI_CIVITA[1, 0, 2] = -1.0


def identity_entries(grid: Grid) -> np.ndarray:
    return np.broadcast_to(np.eye(3)[:, :, None, None, None], (3, 3) + grid.shape)


@dataclass(frozen=True, eq=False)
class JacobianTensor:
    """Nueve campos m_ij; para ∇η, m_ij = ∂_i η_j"""
    grid: Grid
    entries: np.ndarray

    def __post_init__(self):
        if self.entries.shape != (3, 3) + self.grid.shape:
            raise ValueError(f"Tensor de forma {self.entries.shape} incompatible con la malla")

    @classmethod
    def identity(cls, grid: Grid) -> 'JacobianTensor':
        return cls(grid, np.array(identity_entries(grid)))

    @classmethod
    def of_displacement(cls, xi: VectorField) -> 'JacobianTensor':
        """∇η con η = x + ξ"""
        return cls(xi.grid, identity_entries(xi.grid) + grad_tensor(xi))

    def entry(self, i: int, j: int) -> ScalarField:
        return ScalarField(self.grid, self.entries[i, j])

    def deviation(self) -> np.ndarray:
        """I - m"""
        return identity_entries(self.grid) - self.entries


def cofactor(grad_eta: JacobianTensor) -> JacobianTensor:
    """a_ij = ½ ε_imn ε_jkl ∂_m η_k ∂_n η_l, punto a punto"""
    m = grad_eta.entries
    a = 0.5 * np.einsum('imn,jkl,mk...,nl...->ij...', LEVI_CIVITA, LEVI_CIVITA, m, m, optimize=True)
    return JacobianTensor(grad_eta.grid, a)


def jacobian_det(grad_eta: JacobianTensor) -> ScalarField:
    m = grad_eta.entries
    det = np.einsum('ijk,i...,j...,k...->...', LEVI_CIVITA, m[0], m[1], m[2], optimize=True)
    return ScalarField(grad_eta.grid, det)


def cofactor_time_derivative(grad_eta: JacobianTensor, grad_v: np.ndarray) -> np.ndarray:
    """∂_t a_ij = ε_imn ε_jkl ∂_m v_k ∂_n η_l (derivada temporal de la fórmula del cofactor)"""
    return np.einsum('imn,jkl,mk...,nl...->ij...', LEVI_CIVITA, LEVI_CIVITA,
                     grad_v, grad_eta.entries, optimize=True)


def transported_vorticity(grad_v: np.ndarray, grad_eta: np.ndarray) -> np.ndarray:
    """ε_ijk ∂_j v_m ∂_k η_m"""
    return np.einsum('ijk,jm...,km...->i...', LEVI_CIVITA, grad_v, grad_eta, optimize=True)


def initial_vorticity(v0: VectorField) -> VectorField:
    """ω0 = rot v0 evaluado con la misma contracción que la invariancia de Cauchy"""
    grid = v0.grid
    return VectorField.from_array(grid, transported_vorticity(grad_tensor(v0), identity_entries(grid)))


def piola_residual(a: JacobianTensor) -> VectorField:
    """∂_k a_ki para i = 1, 2, 3"""
    grid = a.grid
    return VectorField.from_array(grid, np.stack([
        sum(grid.partial(a.entries[k, i], k + 1) for k in range(3)) for i in range(3)
    ]))


@dataclass(frozen=True, eq=False)
class LagrangianState:
    """
    Instantánea inmutable del sistema lagrangiano

    La aplicación de partículas se guarda como desplazamiento periódico
    ξ = η - x; ∇η, a y det ∇η se calculan una sola vez por estado.
    """
    t: float
    xi: VectorField
    v: VectorField
    omega0: VectorField
    q: Optional[ScalarField] = None

    def __post_init__(self):
        grid = self.xi.grid
        if self.v.grid != grid or self.omega0.grid != grid or (self.q is not None and self.q.grid != grid):
            raise ValueError("Todos los campos del estado deben compartir la malla")

    @property
    def grid(self) -> Grid:
        return self.xi.grid

    @property
    def eta(self) -> VectorField:
        """η = x + ξ en los nodos"""
        x = np.stack(self.grid.points)
        return VectorField.from_array(self.grid, x + self.xi.array)

    @cached_property
    def grad_eta(self) -> JacobianTensor:
        return JacobianTensor.of_displacement(self.xi)

    @cached_property
    def grad_v(self) -> np.ndarray:
        return grad_tensor(self.v)

    @cached_property
    def a(self) -> JacobianTensor:
        return cofactor(self.grad_eta)

    @cached_property
    def det(self) -> ScalarField:
        return jacobian_det(self.grad_eta)

    @cached_property
    def a_t(self) -> np.ndarray:
        return cofactor_time_derivative(self.grad_eta, self.grad_v)

    def with_pressure(self, q: ScalarField) -> 'LagrangianState':
        new = replace(self, q=q)
        for name in ('grad_eta', 'grad_v', 'a', 'det', 'a_t'):
            if name in self.__dict__:
                new.__dict__[name] = self.__dict__[name]
        return new


def initial_state(v0: VectorField, q: Optional[ScalarField] = None) -> LagrangianState:
    """Estado en t = 0: η = x, ω0 = rot v0"""
    return LagrangianState(
        t=0.0,
        xi=VectorField.zeros(v0.grid),
        v=v0,
        omega0=initial_vorticity(v0),
        q=q,
    )


def cauchy_invariance_residual(state: LagrangianState) -> VectorField:
    """R_i = ε_ijk ∂_j v_m ∂_k η_m - (ω0)_i"""
    transported = transported_vorticity(state.grad_v, state.grad_eta.entries)
    return VectorField.from_array(state.grid, transported - state.omega0.array)


def curl_identity_residual(state: LagrangianState) -> VectorField:
    """rot v - [ε_ijk (δ_km - ∂_k η_m) ∂_j v_m + (ω0)_i]"""
    g = state.grad_v
    curl_v = np.einsum('ijk,jk...->i...', LEVI_CIVITA, g)
    rhs = transported_vorticity(g, state.grad_eta.deviation()) + state.omega0.array
    return VectorField.from_array(state.grid, curl_v - rhs)


def lagrangian_divergence(state: LagrangianState) -> ScalarField:
    """a_ik ∂_i v_k"""
    return ScalarField(state.grid, np.einsum('ik...,ik...->...', state.a.entries, state.grad_v))


def bottom_cofactor_residual(state: LagrangianState) -> float:
    """max |a_3i| en Γ0 para i = 1, 2"""
    return float(np.max(np.abs(state.a.entries[2, :2, :, :, 0])))
