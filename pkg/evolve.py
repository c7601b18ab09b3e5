"""
Integración temporal del sistema lagrangiano

η_t = v, ∂_t v_i = -a_ki ∂_k q, con q resuelta en cada etapa de RK4,
más los monitores de Rayleigh–Taylor y de pequeñez
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, List, Optional, Tuple

import numpy as np

from domain_grid import ScalarField, VectorField
from elliptic import PressureNotConverged, solve_pressure
from lagrangian_state import LagrangianState, identity_entries
from sobolev_norms import CutoffPair, make_cutoffs, tensor_norm, vector_norm

logger = logging.getLogger(__name__)
monitor_logger = logging.getLogger('lelab.monitors')


class Policy(str, Enum):
    WARN = 'warn'
    ABORT = 'abort'


class RejectionReason(str, Enum):
    PRESSURE = 'pressure_not_converged'
    RAYLEIGH_TAYLOR = 'rayleigh_taylor'
    SMALLNESS = 'smallness_exceeded'


@dataclass(frozen=True)
class EvolveConfig:
    """
    Parámetros de la integración

    t_end se recorta a 1 (convención T0 ≤ 1). rt_tolerance es la holgura con
    que se considera satisfecha la condición ∂3q ≤ -b/2 en el umbral exacto.
    """
    dt: float = 1e-3
    t_end: float = 0.1
    b: float = 1.0
    rt_policy: Policy = Policy.WARN
    smallness_policy: Policy = Policy.WARN
    epsilon: float = 0.25
    delta: float = 0.25
    pressure_tol: float = 1e-11
    pressure_max_iter: int = 60
    rt_tolerance: float = 1e-12
    quotient_h: float = 1e-2

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt debe ser positivo (recibido {self.dt})")
        if not self.b > 0:
            raise ValueError(f"b debe ser positivo (recibido {self.b})")
        if not 0.0 < self.epsilon <= 1.0:
            raise ValueError(f"ε debe estar en (0, 1] (recibido {self.epsilon})")
        if not 0.0 < self.delta <= 0.5:
            raise ValueError(f"δ debe estar en (0, 1/2] (recibido {self.delta})")
        if self.t_end > 1.0:
            logger.warning(f"⚠️ t_end = {self.t_end} > 1; se recorta a 1")
            object.__setattr__(self, 't_end', 1.0)
        object.__setattr__(self, 'rt_policy', Policy(self.rt_policy))
        object.__setattr__(self, 'smallness_policy', Policy(self.smallness_policy))

    @property
    def n_steps(self) -> int:
        return max(1, int(round(self.t_end / self.dt)))


@dataclass(frozen=True)
class SmallnessRecord:
    d_a: float
    d_aat: float
    d_grad: float
    eta_norm: float
    a_norm: float

    @property
    def max_deviation(self) -> float:
        return max(self.d_a, self.d_aat, self.d_grad)


@dataclass(frozen=True, eq=False)
class StepOutcome:
    state: LagrangianState
    report: Optional[object]
    accepted: bool
    rejection_reason: Optional[RejectionReason] = None


@dataclass
class EvolutionResult:
    initial_report: Optional[object] = None
    reports: List[object] = field(default_factory=list)
    final_state: Optional[LagrangianState] = None
    rejection: Optional[RejectionReason] = None
    steps: int = 0


# --- monitores --------------------------------------------------------------

def rt_monitor(state: LagrangianState, cfg: EvolveConfig) -> float:
    """Margen max_{Γ1}(∂3q + b/2); la condición se cumple si es ≤ 0"""
    if state.q is None:
        raise ValueError("El monitor de Rayleigh–Taylor necesita la presión resuelta")
    dq3_top = (state.q.values @ state.grid.d3[-1])
    return float(np.max(dq3_top + cfg.b / 2.0))


def rt_holds(margin: float, cfg: EvolveConfig) -> bool:
    return margin <= cfg.rt_tolerance


def smallness_monitor(state: LagrangianState, cfg: EvolveConfig) -> SmallnessRecord:
    """Desviaciones N_{1.5+δ} de a, aaᵀ y ∇η respecto de I, con ‖η - x‖_{2.5+δ} y ‖a‖_{1.5+δ}"""
    grid = state.grid
    s = 1.5 + cfg.delta
    a = state.a.entries
    eye = identity_entries(grid)
    pa = grid.to_padded(a)
    aat = grid.from_padded(np.einsum('ji...,ki...->jk...', pa, pa))
    return SmallnessRecord(
        d_a=tensor_norm(grid, eye - a, s),
        d_aat=tensor_norm(grid, eye - aat, s),
        d_grad=tensor_norm(grid, state.grad_eta.deviation(), s),
        eta_norm=vector_norm(state.xi, 2.5 + cfg.delta),
        a_norm=tensor_norm(grid, a, s),
    )


# --- lado derecho y paso --------------------------------------------------

def with_solved_pressure(state: LagrangianState, cfg: EvolveConfig,
                         guess: Optional[ScalarField] = None) -> LagrangianState:
    q, report = solve_pressure(state, cfg.pressure_tol, cfg.pressure_max_iter,
                               initial_guess=guess, delta=cfg.delta)
    logger.debug(f"t={state.t:.6f}: presión en {report.iterations} iteraciones, "
                 f"contracción {report.contraction_estimate:.3e}")
    return state.with_pressure(q)


def _rates(state: LagrangianState) -> Tuple[np.ndarray, np.ndarray]:
    grid = state.grid
    dq = np.stack([grid.partial(state.q.values, i) for i in (1, 2, 3)])
    force = grid.from_padded(np.einsum('ki...,k...->i...',
                                       grid.to_padded(state.a.entries), grid.to_padded(dq)))
    return state.v.array, -force


def rhs(state: LagrangianState, cfg: EvolveConfig) -> Tuple[VectorField, VectorField]:
    """(dη/dt, dv/dt) = (v, -a_ki ∂_k q), resolviendo la presión del estado"""
    solved = with_solved_pressure(state, cfg, guess=state.q)
    deta, dv = _rates(solved)
    return VectorField.from_array(state.grid, deta), VectorField.from_array(state.grid, dv)


def _advance(state: LagrangianState, cfg: EvolveConfig) -> LagrangianState:
    grid = state.grid
    dt = cfg.dt
    xi0, v0 = state.xi.array, state.v.array

    def stage(t: float, xi: np.ndarray, v: np.ndarray, guess: ScalarField) -> LagrangianState:
        candidate = LagrangianState(t, VectorField.from_array(grid, xi), VectorField.from_array(grid, v),
                                    state.omega0)
        return with_solved_pressure(candidate, cfg, guess)

    k1 = _rates(state)
    s2 = stage(state.t + dt / 2, xi0 + dt / 2 * k1[0], v0 + dt / 2 * k1[1], state.q)
    k2 = _rates(s2)
    s3 = stage(state.t + dt / 2, xi0 + dt / 2 * k2[0], v0 + dt / 2 * k2[1], s2.q)
    k3 = _rates(s3)
    s4 = stage(state.t + dt, xi0 + dt * k3[0], v0 + dt * k3[1], s3.q)
    k4 = _rates(s4)

    xi = xi0 + dt / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0])
    v = v0 + dt / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])
    return stage(state.t + dt, xi, v, s4.q)


def check_monitors(report, cfg: EvolveConfig) -> Optional[RejectionReason]:
    """Aplica las políticas a un reporte; devuelve el motivo de rechazo si corresponde"""
    if not rt_holds(report.rt_margin, cfg):
        monitor_logger.warning(f"t={report.t:.6f}: Rayleigh–Taylor violado, margen {report.rt_margin:.6e}")
        if cfg.rt_policy is Policy.ABORT:
            return RejectionReason.RAYLEIGH_TAYLOR
    if report.smallness.max_deviation > cfg.epsilon:
        monitor_logger.warning(f"t={report.t:.6f}: régimen de pequeñez excedido, "
                               f"desviación {report.smallness.max_deviation:.6e} > ε = {cfg.epsilon}")
        if cfg.smallness_policy is Policy.ABORT:
            return RejectionReason.SMALLNESS
    monitor_logger.debug(f"t={report.t:.6f}: margen RT {report.rt_margin:.6e}, "
                         f"pequeñez {report.smallness.max_deviation:.6e}")
    return None


def step(state: LagrangianState, cfg: EvolveConfig, cutoffs: Optional[CutoffPair] = None) -> StepOutcome:
    """
    Un paso RK4 con cuatro resoluciones de presión

    Si el estado no trae presión se resuelve antes del paso. En caso de
    rechazo se devuelve el mismo estado sin modificar.
    """
    from diagnostics import report as build_report

    cutoffs = cutoffs or make_cutoffs(state.grid)
    try:
        solved = state if state.q is not None else with_solved_pressure(state, cfg)
        candidate = _advance(solved, cfg)
    except PressureNotConverged as e:
        logger.error(f"❌ Paso rechazado en t={state.t:.6f}: {e}")
        return StepOutcome(state, None, False, RejectionReason.PRESSURE)

    report = build_report(candidate, cutoffs, cfg)
    reason = check_monitors(report, cfg)
    if reason is not None:
        logger.error(f"❌ Paso rechazado en t={candidate.t:.6f}: {reason.value}")
        return StepOutcome(state, report, False, reason)
    return StepOutcome(candidate, report, True)


def evolve(state: LagrangianState, cfg: EvolveConfig, cutoffs: Optional[CutoffPair] = None,
           on_step: Optional[Callable[[StepOutcome], None]] = None) -> EvolutionResult:
    """
    Integra hasta t_end aplicando los monitores al estado inicial y tras cada paso

    Args:
        state: estado inicial
        cfg: configuración de la integración
        cutoffs: par (χ, ψ) para las normas localizadas
        on_step: se llama con cada StepOutcome aceptado

    Returns:
        EvolutionResult con los reportes de los pasos aceptados
    """
    from diagnostics import report as build_report

    cutoffs = cutoffs or make_cutoffs(state.grid)
    result = EvolutionResult()
    try:
        if state.q is None:
            state = with_solved_pressure(state, cfg)
    except PressureNotConverged as e:
        logger.error(f"❌ No se pudo resolver la presión inicial: {e}")
        result.final_state = state
        result.rejection = RejectionReason.PRESSURE
        return result

    result.initial_report = build_report(state, cutoffs, cfg)
    result.final_state = state
    reason = check_monitors(result.initial_report, cfg)
    if reason is not None:
        logger.error(f"❌ El estado inicial no cumple la política: {reason.value}")
        result.rejection = reason
        return result

    logger.info(f"🚀 Integrando {cfg.n_steps} pasos con dt = {cfg.dt}")
    for _ in range(cfg.n_steps):
        outcome = step(state, cfg, cutoffs)
        if not outcome.accepted:
            result.rejection = outcome.rejection_reason
            break
        state = outcome.state
        result.reports.append(outcome.report)
        result.steps += 1
        result.final_state = state
        if on_step is not None:
            on_step(outcome)

    logger.info(f"✅ Integración terminada en t = {result.final_state.t:.6f} ({result.steps} pasos)")
    return result
