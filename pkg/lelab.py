#!/usr/bin/env python3
"""
Laboratorio numérico para Euler incompresible con frontera libre en
coordenadas lagrangianas

Uso:
    python lelab.py <regularize|evolve|stability|mms|norms> --config <archivo>
                    [--preset rest|shear|generic] [--out <dir>] [--log-level INFO]
"""

import sys
import os
import math
import logging
import argparse
from datetime import datetime
from typing import Dict, List, Optional

import numpy as np

from run_config import ConfigError, RunConfig, load_run_config
from presets import PRESETS

EXIT_OK = 0
EXIT_INVARIANT = 1
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_ABORT = 4

COMMANDS = ('regularize', 'evolve', 'stability', 'mms', 'norms')
INVARIANT_TOL = 1e-10
MMS_TOL = 1e-10

logger = logging.getLogger(__name__)


def setup_logging(log_level: str = 'INFO', log_dir: str = 'logs') -> str:
    """Configura logging a archivo con timestamp y a consola"""
    log_format = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
    os.makedirs(log_dir, exist_ok=True)
    stamp = datetime.now().strftime("%Y%m%d_%H%M%S")
    log_filename = os.path.join(log_dir, f'lelab_{stamp}.log')

    for handler in logging.root.handlers[:]:
        logging.root.removeHandler(handler)

    logging.basicConfig(
        level=getattr(logging, log_level.upper()),
        format=log_format,
        handlers=[
            logging.FileHandler(log_filename, encoding='utf-8'),
            logging.StreamHandler(sys.stdout)
        ],
        force=True
    )

    # Logger de monitores (Rayleigh–Taylor y pequeñez) en su propio archivo
    monitor_logger = logging.getLogger('lelab.monitors')
    for handler in monitor_logger.handlers[:]:
        monitor_logger.removeHandler(handler)
        handler.close()
    monitor_handler = logging.FileHandler(os.path.join(log_dir, f'monitors_{stamp}.log'), encoding='utf-8')
    monitor_handler.setFormatter(logging.Formatter(log_format))
    monitor_logger.addHandler(monitor_handler)
    monitor_logger.setLevel(logging.DEBUG)

    print(f"Logs guardándose en: {log_filename}")
    return log_filename


def decreasing_above_floor(errors: List[float], floor: float) -> bool:
    """Errores estrictamente decrecientes hasta caer bajo floor; por debajo solo queda redondeo"""
    return all(later < earlier for earlier, later in zip(errors, errors[1:]) if earlier > floor)


def _banner(title: str):
    print("\n" + "=" * 60)
    print(title)
    print("=" * 60)


class LabRunner:
    """Ejecuta los comandos del laboratorio y arma sus resúmenes"""

    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.out_dir = cfg.out_dir
        os.makedirs(self.out_dir, exist_ok=True)

    def new_summary(self, command: str) -> Dict:
        return {
            'command': command,
            'timestamp': datetime.now().isoformat(),
            'config': self.cfg.to_dict(),
            'exit_code': EXIT_OK,
            'outputs': [],
            'errors': [],
            'warnings': [],
        }

    def _fail(self, summary: Dict, code: int, message: str, exc_info: bool = False) -> Dict:
        logger.error(f"❌ {message}", exc_info=exc_info)
        print(f"❌ {message}")
        summary['errors'].append(message)
        summary['exit_code'] = max(summary['exit_code'], code)
        return summary

    def _datum(self, cutoffs=None):
        from presets import datum_for
        from regularize import regularize_datum

        cfg = self.cfg
        datum = datum_for(cfg.preset, cfg.grid())
        if cfg.regularize_datum:
            logger.info(f"🔧 Regularizando el dato con r = {cfg.r}")
            datum = regularize_datum(datum, cfg.r, cfg.delta, cutoffs).v0r
        return datum

    # --- regularize ---------------------------------------------------------

    def run_regularize(self) -> Dict:
        from csv_output import write_csv
        from elliptic import EllipticSolveError
        from presets import datum_for
        from regularize import regularization_sweep
        from sobolev_norms import ResolutionError, make_cutoffs

        _banner("🔧 REGULARIZACIÓN DEL DATO INICIAL")
        cfg = self.cfg
        summary = self.new_summary('regularize')
        grid = cfg.grid()
        try:
            results = regularization_sweep(datum_for(cfg.preset, grid), cfg.r_sweep, cfg.delta, make_cutoffs(grid))
        except (EllipticSolveError, ResolutionError) as e:
            return self._fail(summary, EXIT_SOLVER, f"Error en la regularización: {e}", exc_info=True)

        path = write_csv(os.path.join(self.out_dir, 'regularize.csv'), [r.as_row() for r in results], 'regularize')
        summary['outputs'].append(path)
        summary['curl_constant'] = max(r.curl_ratio for r in results)

        for r in results:
            print(f"   • r = {r.r:<6}: error {r.datum_error:.3e}, rot {r.curl_ratio:.3e}, "
                  f"div {r.div_residual:.3e}")
            if r.div_residual > INVARIANT_TOL:
                summary['errors'].append(f"r={r.r}: divergencia {r.div_residual:.3e} > {INVARIANT_TOL}")
            if r.bottom_residual > INVARIANT_TOL:
                summary['errors'].append(f"r={r.r}: traza v3 en Γ0 {r.bottom_residual:.3e} > {INVARIANT_TOL}")
            if r.curl_identity > INVARIANT_TOL:
                summary['errors'].append(f"r={r.r}: identidad del rotacional {r.curl_identity:.3e} > {INVARIANT_TOL}")

        ordered = sorted(results, key=lambda r: -r.r)
        errors = [r.datum_error for r in ordered]
        if any(later > earlier for earlier, later in zip(errors, errors[1:])):
            summary['warnings'].append("datum_error no es monótono en r")
            logger.warning("⚠️ datum_error no decrece monótonamente con r")

        if summary['errors']:
            summary['exit_code'] = EXIT_INVARIANT
            print(f"\n❌ Invariantes fallidos: {len(summary['errors'])}")
        else:
            print("\n✅ Todos los invariantes se cumplen")
        return summary

    # --- evolve -------------------------------------------------------------

    def run_evolve(self) -> Dict:
        from checkpoint import Checkpoint, save_checkpoint
        from csv_output import write_csv
        from elliptic import EllipticSolveError, PressureNotConverged
        from evolve import RejectionReason, evolve, with_solved_pressure
        from lagrangian_state import initial_state
        from sobolev_norms import ResolutionError, make_cutoffs

        _banner("🚀 EVOLUCIÓN LAGRANGIANA")
        cfg = self.cfg
        summary = self.new_summary('evolve')
        ecfg = cfg.evolve_config()
        grid = cfg.grid()
        cutoffs = make_cutoffs(grid)
        checkpoint_dir = os.path.join(self.out_dir, 'checkpoints')
        summary['checkpoints'] = []

        def keep(state, step_index: int):
            path = os.path.join(checkpoint_dir, f'step_{step_index:06d}.lelb')
            save_checkpoint(path, Checkpoint.from_state(state, cfg.delta, cfg.r))
            summary['checkpoints'].append(path)

        try:
            state = with_solved_pressure(initial_state(self._datum(cutoffs)), ecfg)
        except (PressureNotConverged, EllipticSolveError) as e:
            return self._fail(summary, EXIT_SOLVER, f"Presión inicial sin solución: {e}", exc_info=True)
        keep(state, 0)

        accepted = [0]

        def on_step(outcome):
            accepted[0] += 1
            if accepted[0] % cfg.checkpoint_interval == 0:
                keep(outcome.state, accepted[0])

        try:
            result = evolve(state, ecfg, cutoffs, on_step=on_step)
        except (EllipticSolveError, ResolutionError) as e:
            return self._fail(summary, EXIT_SOLVER, f"Error en la evolución: {e}", exc_info=True)

        if result.steps and result.steps % cfg.checkpoint_interval != 0:
            keep(result.final_state, result.steps)

        reports = ([result.initial_report] if result.initial_report is not None else []) + result.reports
        if reports:
            path = write_csv(os.path.join(self.out_dir, 'trajectory.csv'), [r.as_row() for r in reports], 'trajectory')
            summary['outputs'].append(path)
            summary['max_det_dev'] = max(r.det_dev for r in reports)
            summary['max_cauchy_res'] = max(r.cauchy_res for r in reports)
            summary['rt_violations'] = sum(1 for r in reports if r.rt_margin > ecfg.rt_tolerance)
        summary['steps'] = result.steps
        summary['final_t'] = result.final_state.t if result.final_state is not None else 0.0

        print(f"\n⏱️ Pasos aceptados: {result.steps} (t final = {summary['final_t']:.6f})")
        print(f"📦 Puntos de control: {len(summary['checkpoints'])}")
        if result.rejection is not None:
            summary['rejection'] = result.rejection.value
            code = EXIT_SOLVER if result.rejection is RejectionReason.PRESSURE else EXIT_ABORT
            return self._fail(summary, code, f"Evolución detenida: {result.rejection.value}")
        if summary.get('rt_violations'):
            summary['warnings'].append(f"Rayleigh–Taylor violado en {summary['rt_violations']} reportes")
        print("✅ Evolución completada")
        return summary

    # --- stability ----------------------------------------------------------

    def run_stability(self) -> Dict:
        from csv_output import write_csv
        from diagnostics import difference_identities, twin_run
        from elliptic import EllipticSolveError
        from evolve import RejectionReason
        from presets import generic_perturbation
        from sobolev_norms import ResolutionError, make_cutoffs

        _banner("📊 ESTABILIDAD: CORRIDAS GEMELAS")
        cfg = self.cfg
        summary = self.new_summary('stability')
        ecfg = cfg.evolve_config()
        grid = cfg.grid()
        cutoffs = make_cutoffs(grid)
        doubling = cfg.kappa_doubling and cfg.kappa > 0

        try:
            datum = self._datum(cutoffs)
            perturbation = generic_perturbation(grid)
            base = twin_run(datum, perturbation, cfg.kappa, ecfg, cutoffs)
            doubled = twin_run(datum, perturbation, 2.0 * cfg.kappa, ecfg, cutoffs) if doubling else None
        except (EllipticSolveError, ResolutionError) as e:
            return self._fail(summary, EXIT_SOLVER, f"Error en la corrida gemela: {e}", exc_info=True)

        rows = []
        for i, record in enumerate(base.records):
            row = {
                't': record.t,
                'Y': record.Y,
                'Q_1.5+d': record.q_norm,
                'psiQ_2+d': record.psi_q_norm,
                'V_L2': record.v_l2,
                'V_1.5+d': record.v_norm,
                'chiE_2+d': record.chi_e_norm,
            }
            if doubled is not None:
                y2 = doubled.records[i].Y if i < len(doubled.records) else float('nan')
                row['Y_2k'] = y2
                row['Y_ratio'] = y2 / record.Y if record.Y > 0 else float('nan')
            rows.append(row)

        path = write_csv(os.path.join(self.out_dir, 'stability.csv'), rows, 'stability',
                         footer=('gronwall_C', base.gronwall_C, base.envelope_rate))
        summary['outputs'].append(path)
        summary['gronwall_C'] = base.gronwall_C
        summary['envelope_rate'] = base.envelope_rate
        summary['identities'] = difference_identities(base.records)
        if doubled is not None:
            ratios = [r['Y_ratio'] for r in rows[1:] if not math.isnan(r['Y_ratio'])]
            summary['max_ratio_deviation'] = max((abs(x - 2.0) for x in ratios), default=0.0)

        print(f"\n📈 Constante de Gronwall ajustada: C = {base.gronwall_C:.6g}")
        for key, value in summary['identities'].items():
            print(f"   • {key}: {value:.4g}")

        rejection = base.rejection or (doubled.rejection if doubled is not None else None)
        if rejection is not None:
            summary['rejection'] = rejection.value
            code = EXIT_SOLVER if rejection is RejectionReason.PRESSURE else EXIT_ABORT
            return self._fail(summary, code, f"Corrida gemela detenida: {rejection.value}")
        if not math.isfinite(base.gronwall_C):
            summary['exit_code'] = EXIT_INVARIANT
            summary['errors'].append("Constante de Gronwall no finita")
        return summary

    # --- mms ----------------------------------------------------------------

    def run_mms(self) -> Dict:
        from csv_output import write_csv
        from domain_grid import Grid, ScalarField
        from elliptic import EllipticSolveError, MixedBVP, solve_constant_poisson, solve_initial_pressure
        from presets import manufactured_pressure, manufactured_rhs, swirl_datum, swirl_pressure
        from sobolev_norms import aniso_norm

        _banner("🧪 SOLUCIONES MANUFACTURADAS (PRESIÓN)")
        cfg = self.cfg
        summary = self.new_summary('mms')
        rows = []
        for n3 in cfg.mms_n3_sweep:
            grid = Grid(cfg.n1, cfg.n2, n3)
            if cfg.preset == 'rest':
                exact = ScalarField.zeros(grid)
                rhs = ScalarField.zeros(grid)
            else:
                exact = manufactured_pressure(grid, cfg.mms_vertical_mode)
                rhs = manufactured_rhs(grid, cfg.mms_vertical_mode)
            try:
                q = solve_constant_poisson(MixedBVP.homogeneous(rhs))
                q0, _ = solve_initial_pressure(swirl_datum(grid))
            except EllipticSolveError as e:
                return self._fail(summary, EXIT_SOLVER, f"Error del solver en n3 = {n3}: {e}", exc_info=True)
            error = q - exact
            rows.append({
                'n3': n3,
                'max_error': float(np.max(np.abs(error.values))),
                'l2_error': aniso_norm(error, 0.0),
                'initial_pressure_error': float(np.max(np.abs((q0 - swirl_pressure(grid)).values))),
            })
            print(f"   • n3 = {n3:>3}: error máximo {rows[-1]['max_error']:.3e}")

        path = write_csv(os.path.join(self.out_dir, 'mms.csv'), rows, 'mms')
        summary['outputs'].append(path)

        errors = [row['max_error'] for row in sorted(rows, key=lambda row: row['n3'])]
        if errors[-1] > MMS_TOL:
            summary['exit_code'] = EXIT_INVARIANT
            summary['errors'].append(f"Error en la malla más fina {errors[-1]:.3e} > {MMS_TOL}")
        if not decreasing_above_floor(errors, MMS_TOL):
            message = f"Los errores por encima de {MMS_TOL:g} no decrecen estrictamente con n3"
            summary['warnings'].append(message)
            logger.warning(f"⚠️ {message}")
        return summary

    # --- norms --------------------------------------------------------------

    def run_norms(self) -> Dict:
        from csv_output import write_csv
        from domain_grid import VectorField
        from presets import datum_for, random_vector
        from sobolev_norms import (
            ResolutionError, div_curl_decomposition, fit_decomposition_constant,
            localized_norm, make_cutoffs, standard_indices, vector_norm,
        )

        _banner("📐 CÁLCULO DE NORMAS")
        cfg = self.cfg
        summary = self.new_summary('norms')
        grid = cfg.grid()
        cutoffs = make_cutoffs(grid)
        rng = np.random.default_rng(cfg.seed)
        s = 2.5 + cfg.delta

        constants = [VectorField.from_array(grid, np.broadcast_to(np.eye(3)[i][:, None, None, None], (3,) + grid.shape))
                     for i in range(3)]
        samples: List[VectorField] = constants[:cfg.norm_samples]
        while len(samples) < cfg.norm_samples:
            samples.append(random_vector(grid, rng))

        try:
            datum = datum_for(cfg.preset, grid)
            summary['datum_norms'] = {label: vector_norm(datum, index)
                                      for label, index in standard_indices(cfg.delta).items()
                                      if math.floor(index) <= grid.n3 - 2}
            summary['datum_localized'] = {
                'chi_3+d': localized_norm(datum, cutoffs.chi, 3.0 + cfg.delta),
                'psi_3+d': localized_norm(datum, cutoffs.psi, 3.0 + cfg.delta),
            }
            records = [div_curl_decomposition(f, s) for f in samples]
        except ResolutionError as e:
            return self._fail(summary, EXIT_CONFIG, f"Malla insuficiente para las normas pedidas: {e}")

        constant = fit_decomposition_constant(records)
        rows = [{
            'sample': i,
            'lhs': rec.lhs,
            'l2': rec.l2,
            'curl': rec.curl,
            'div': rec.div,
            'boundary': rec.boundary,
            'ratio': rec.lhs / rec.rhs_sum if rec.rhs_sum > 0 else 0.0,
        } for i, rec in enumerate(records)]
        path = write_csv(os.path.join(self.out_dir, 'norms.csv'), rows, 'norms', footer=('fitted_C', constant))
        summary['outputs'].append(path)
        summary['fitted_C'] = constant
        print(f"\n📊 Constante div-rot ajustada sobre {len(records)} campos: C = {constant:.6g}")
        return summary

    def run(self, command: str) -> Dict:
        from csv_output import save_summary

        handlers = {
            'regularize': self.run_regularize,
            'evolve': self.run_evolve,
            'stability': self.run_stability,
            'mms': self.run_mms,
            'norms': self.run_norms,
        }
        summary = handlers[command]()
        summary_path = save_summary(self.out_dir, command, summary)
        logger.info(f"📄 Resumen guardado en: {summary_path}")
        if summary['exit_code'] == EXIT_OK:
            print("✅ Comando completado sin errores")
        return summary


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description='Laboratorio de Euler con frontera libre (coordenadas lagrangianas)')
    parser.add_argument('command', choices=COMMANDS, help='Experimento a ejecutar')
    parser.add_argument('--config', default=None, help='Archivo de configuración clave = valor')
    parser.add_argument('--preset', choices=PRESETS, default=None, help='Dato inicial predefinido')
    parser.add_argument('--out', default=None, help='Directorio de salida')
    parser.add_argument('--log-level', default='INFO',
                        choices=['DEBUG', 'INFO', 'WARNING', 'ERROR'],
                        help='Nivel de logging')
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Función principal; devuelve el código de salida"""
    args = build_parser().parse_args(argv)

    try:
        cfg = load_run_config(args.config).with_overrides(preset=args.preset, out_dir=args.out)
    except ConfigError as e:
        print(f"❌ Error de configuración: {e}", file=sys.stderr)
        return EXIT_CONFIG

    log_filename = setup_logging(args.log_level, os.path.join(cfg.out_dir, 'logs'))
    logger.info(f"Iniciando lelab: comando {args.command}, preset {cfg.preset}, malla {cfg.n1}×{cfg.n2}×{cfg.n3}")
    logger.info(f"Logs guardándose en: {log_filename}")

    try:
        summary = LabRunner(cfg).run(args.command)
    except KeyboardInterrupt:
        logger.info("Proceso interrumpido por el usuario")
        print("\nProceso interrumpido por el usuario")
        return EXIT_ABORT
    except Exception as e:
        logger.error(f"Error inesperado: {e}", exc_info=True)
        print(f"Error inesperado: {e}")
        return EXIT_SOLVER
    return summary['exit_code']


if __name__ == "__main__":
    sys.exit(main())
