"""
Diagnósticos por paso y experimento de estabilidad con dos corridas

- report: invariantes, normas, margen de Rayleigh–Taylor y energía de frontera
- boundary_energy: ½ ∫_{Γ1} (τa_3i ∂^α D η_i)² τ∂3q
- twin_run: dos evoluciones en paralelo y las cantidades de la diferencia
"""

import math
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import cumulative_trapezoid

from domain_grid import ScalarField, VectorField, TORUS_AREA
from evolve import (
    EvolveConfig, RejectionReason, SmallnessRecord,
    check_monitors, rt_monitor, smallness_monitor, step, with_solved_pressure,
)
from elliptic import PressureNotConverged
from lagrangian_state import (
    LagrangianState, bottom_cofactor_residual, cauchy_invariance_residual,
    initial_state, lagrangian_divergence,
)
from sobolev_norms import (
    CutoffPair, QuotientSpec, aniso_norm, localized_norm, make_cutoffs,
    norm_squared, shift_values, diff_quotient_values, trace_norm, vector_norm,
)

logger = logging.getLogger(__name__)

BOUNDARY_ALPHAS = ((3, 0), (2, 1), (1, 2), (0, 3))
NORM_LABELS = ('v_2.5+d', 'q_2.5+d', 'chi_q_3+d', 'chi_xi_3+d', 'psi_q_3+d')
GRONWALL_FLOOR = 1e-13
RATIO_FLOOR = 1e-14
IDENTITY_KEYS = ('displacement_vs_velocity', 'cofactor_vs_displacement', 'cofactor_rate', 'localized_displacement',
                 'pressure_vs_energy', 'energy_gronwall', 'velocity_l2_growth')


@dataclass(frozen=True)
class DiagnosticsReport:
    t: float
    det_dev: float
    cauchy_res: float
    div_res: float
    rt_margin: float
    smallness: SmallnessRecord
    norms: Dict[str, float]
    boundary_energy: float
    bottom_cofactor: float = 0.0

    def as_row(self) -> dict:
        row = {
            't': self.t,
            'det_dev': self.det_dev,
            'cauchy_res': self.cauchy_res,
            'div_res': self.div_res,
            'rt_margin': self.rt_margin,
        }
        row.update(asdict(self.smallness))
        row.update(self.norms)
        row['boundary_energy'] = self.boundary_energy
        row['bottom_cofactor'] = self.bottom_cofactor
        return row


def boundary_energy(state: LagrangianState, alpha: Tuple[int, int], quotient: QuotientSpec) -> float:
    """
    ½ ∫_{Γ1} (Σ_i τa_3i ∂^α D η_i)² τ∂3q dσ con α tangencial de orden 3

    Como D x es constante, ∂^α D η = ∂^α D (η - x).
    """
    if len(alpha) != 2 or sum(alpha) != 3 or min(alpha) < 0:
        raise ValueError(f"α debe ser un multiíndice tangencial de orden 3 (recibido {alpha})")
    if state.q is None:
        raise ValueError("La energía de frontera necesita la presión resuelta")
    grid = state.grid
    tau_a3 = shift_values(grid, state.a.entries[2], quotient)[..., -1]
    d_xi = grid.d2(grid.d1(diff_quotient_values(grid, state.xi.array, quotient), alpha[0]), alpha[1])
    tau_dq3 = shift_values(grid, grid.dz(state.q.values), quotient)[..., -1]
    inner = np.sum(tau_a3 * d_xi[..., -1], axis=0)
    return float(0.5 * TORUS_AREA * np.mean(inner * inner * tau_dq3))


def report(state: LagrangianState, cutoffs: CutoffPair, cfg: EvolveConfig) -> DiagnosticsReport:
    """
    Reporte completo de un estado con la presión resuelta

    La norma localizada de la trayectoria se toma sobre el desplazamiento
    ξ = η - x (etiqueta chi_xi_3+d): x no es periódico en x1, x2.
    """
    delta = cfg.delta
    quotient = QuotientSpec(1, cfg.quotient_h)
    norms = {
        'v_2.5+d': vector_norm(state.v, 2.5 + delta),
        'q_2.5+d': aniso_norm(state.q, 2.5 + delta),
        'chi_q_3+d': localized_norm(state.q, cutoffs.chi, 3.0 + delta),
        'chi_xi_3+d': localized_norm(state.xi, cutoffs.chi, 3.0 + delta),
        'psi_q_3+d': localized_norm(state.q, cutoffs.psi, 3.0 + delta),
    }
    return DiagnosticsReport(
        t=state.t,
        det_dev=float(np.max(np.abs(state.det.values - 1.0))),
        cauchy_res=vector_norm(cauchy_invariance_residual(state), delta),
        div_res=aniso_norm(lagrangian_divergence(state), 0.0),
        rt_margin=rt_monitor(state, cfg),
        smallness=smallness_monitor(state, cfg),
        norms=norms,
        boundary_energy=sum(boundary_energy(state, alpha, quotient) for alpha in BOUNDARY_ALPHAS),
        bottom_cofactor=bottom_cofactor_residual(state),
    )


# --- sistema diferencia -----------------------------------------------------

@dataclass(frozen=True, eq=False)
class DifferenceState:
    V: VectorField
    Q: ScalarField
    E: VectorField
    A: np.ndarray
    A_t: np.ndarray
    Y: float


def difference_state(first: LagrangianState, second: LagrangianState,
                     cutoffs: CutoffPair, delta: float) -> DifferenceState:
    """(V, Q, E, A) = diferencia de dos estados; Y = ‖V‖_{1.5+δ} + ‖χE‖_{2+δ}"""
    V = first.v - second.v
    E = first.xi - second.xi
    return DifferenceState(
        V=V,
        Q=first.q - second.q,
        E=E,
        A=first.a.entries - second.a.entries,
        A_t=first.a_t - second.a_t,
        Y=vector_norm(V, 1.5 + delta) + localized_norm(E, cutoffs.chi, 2.0 + delta),
    )


@dataclass(frozen=True)
class TwinRecord:
    t: float
    Y: float
    q_norm: float
    psi_q_norm: float
    v_l2: float
    v_norm: float
    e_norm: float
    chi_e_norm: float
    chi2_a_l2: float
    chi_e_1: float
    a_t_norm: float
    se3_top: float


def summarize_difference(t: float, diff: DifferenceState, cutoffs: CutoffPair, delta: float) -> TwinRecord:
    grid = diff.V.grid
    chi = cutoffs.chi.values
    s = 1.5 + delta
    return TwinRecord(
        t=t,
        Y=diff.Y,
        q_norm=aniso_norm(diff.Q, s),
        psi_q_norm=localized_norm(diff.Q, cutoffs.psi, 2.0 + delta),
        v_l2=vector_norm(diff.V, 0.0),
        v_norm=vector_norm(diff.V, s),
        e_norm=vector_norm(diff.E, s),
        chi_e_norm=localized_norm(diff.E, cutoffs.chi, 2.0 + delta),
        chi2_a_l2=math.sqrt(norm_squared(grid, grid.multiply(chi * chi, diff.A), 0.0)),
        chi_e_1=localized_norm(diff.E, cutoffs.chi, 1.0),
        a_t_norm=math.sqrt(norm_squared(grid, diff.A_t, 0.5 + delta)),
        se3_top=trace_norm(diff.E.array[2, :, :, -1], s, grid),
    )


@dataclass
class TwinRunResult:
    records: List[TwinRecord] = field(default_factory=list)
    gronwall_C: float = 0.0
    envelope_rate: float = 0.0
    rejection: Optional[RejectionReason] = None
    final_states: Tuple[Optional[LagrangianState], Optional[LagrangianState]] = (None, None)


def fit_gronwall(times: Sequence[float], values: Sequence[float]) -> Tuple[float, float]:
    """
    Ajuste log-lineal de Y(t) ≈ Y(0) e^{Ct}, ignorando Y < 1e-13

    Returns:
        Tupla (C por mínimos cuadrados, tasa de la envolvente max log(Y(t)/Y(0))/t)
    """
    t = np.asarray(times, dtype=float)
    y = np.asarray(values, dtype=float)
    keep = y >= GRONWALL_FLOOR
    if np.count_nonzero(keep) < 2:
        return 0.0, 0.0
    slope, _ = np.polyfit(t[keep], np.log(y[keep]), 1)
    t0, y0 = t[keep][0], y[keep][0]
    later = t[keep] > t0
    envelope = float(np.max(np.log(y[keep][later] / y0) / (t[keep][later] - t0))) if np.any(later) else 0.0
    return float(slope), envelope


def _step_pair(pool: ThreadPoolExecutor, states, cfg: EvolveConfig, cutoffs: CutoffPair):
    futures = [pool.submit(step, s, cfg, cutoffs) for s in states]
    return [f.result() for f in futures]


def twin_evolve(datum_a: VectorField, datum_b: VectorField, cfg: EvolveConfig,
                cutoffs: Optional[CutoffPair] = None) -> TwinRunResult:
    """Evoluciona dos datos paso a paso (barrera por paso) y registra la diferencia"""
    cutoffs = cutoffs or make_cutoffs(datum_a.grid)
    result = TwinRunResult()

    with ThreadPoolExecutor(max_workers=2) as pool:
        try:
            states = list(pool.map(lambda d: with_solved_pressure(initial_state(d), cfg), (datum_a, datum_b)))
        except PressureNotConverged as e:
            logger.error(f"❌ Corrida gemela: presión inicial sin convergencia: {e}")
            result.rejection = RejectionReason.PRESSURE
            return result

        for s in states:
            reason = check_monitors(report(s, cutoffs, cfg), cfg)
            if reason is not None:
                result.rejection = reason
                result.final_states = tuple(states)
                return result

        result.records.append(summarize_difference(
            0.0, difference_state(states[0], states[1], cutoffs, cfg.delta), cutoffs, cfg.delta))
        for _ in range(cfg.n_steps):
            outcomes = _step_pair(pool, states, cfg, cutoffs)
            rejected = [o for o in outcomes if not o.accepted]
            if rejected:
                result.rejection = rejected[0].rejection_reason
                break
            states = [o.state for o in outcomes]
            diff = difference_state(states[0], states[1], cutoffs, cfg.delta)
            result.records.append(summarize_difference(states[0].t, diff, cutoffs, cfg.delta))

    result.final_states = tuple(states)
    result.gronwall_C, result.envelope_rate = fit_gronwall(
        [r.t for r in result.records], [r.Y for r in result.records])
    logger.info(f"📊 Corrida gemela: {len(result.records)} registros, C = {result.gronwall_C:.6g}")
    return result


def twin_run(datum: VectorField, perturbation: VectorField, kappa: float, cfg: EvolveConfig,
             cutoffs: Optional[CutoffPair] = None) -> TwinRunResult:
    """Corridas desde datum y datum + κ·perturbación"""
    return twin_evolve(datum, datum + perturbation * kappa, cfg, cutoffs)


def difference_identities(records: Sequence[TwinRecord]) -> Dict[str, float]:
    """
    Máximo en el tiempo de LHS/RHS para cada desigualdad del sistema diferencia

    Solo se consideran los instantes con RHS > 1e-14; si no hay ninguno, 0.
    Las integrales en el tiempo usan la regla del trapecio.
    """
    if not records:
        return {key: 0.0 for key in IDENTITY_KEYS}
    t = np.array([r.t for r in records])
    y = np.array([r.Y for r in records])
    v_norm = np.array([r.v_norm for r in records])
    energy = v_norm ** 2 + np.array([r.chi_e_norm for r in records]) ** 2
    int_v = cumulative_trapezoid(v_norm, t, initial=0.0)
    int_y = cumulative_trapezoid(y, t, initial=0.0)
    int_energy = cumulative_trapezoid(energy, t, initial=0.0)
    v_l2 = np.array([r.v_l2 for r in records])

    def ratio(lhs: np.ndarray, rhs: np.ndarray) -> float:
        mask = rhs > RATIO_FLOOR
        return float(np.max(lhs[mask] / rhs[mask])) if np.any(mask) else 0.0

    def field_of(name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in records])

    identities = {
        'displacement_vs_velocity': ratio(field_of('e_norm'), int_v),
        'cofactor_vs_displacement': ratio(field_of('chi2_a_l2'), field_of('chi_e_1')),
        'cofactor_rate': ratio(field_of('a_t_norm'), v_norm + field_of('e_norm')),
        'localized_displacement': ratio(field_of('chi_e_norm'), field_of('se3_top') + int_y),
        'pressure_vs_energy': ratio(field_of('q_norm'), y + int_y),
        'energy_gronwall': ratio(energy, energy[0] + int_energy),
        'velocity_l2_growth': ratio(np.abs(v_l2 - v_l2[0]), int_y),
    }
    logger.info("📊 Cocientes observados: " + ", ".join(f"{k}={v:.4g}" for k, v in identities.items()))
    return identities
