"""
Configuración de las corridas

Archivo plano `clave = valor`, un solo espacio de nombres, comentarios con `#`.
"""

import configparser
import logging
import os
from dataclasses import asdict, dataclass, fields, replace
from typing import Callable, Dict, Optional, Tuple

from domain_grid import Grid, GridError
from evolve import EvolveConfig, Policy
from presets import PRESETS

logger = logging.getLogger(__name__)

SECTION = 'lelab'


class ConfigError(ValueError):
    def __init__(self, message: str, lineno: Optional[int] = None, source: str = '<config>'):
        self.lineno = lineno
        self.source = source
        where = f"{source}:{lineno}" if lineno is not None else source
        super().__init__(f"{where}: {message}")


def _float_list(raw: str) -> Tuple[float, ...]:
    return tuple(float(item) for item in raw.split(',') if item.strip())


def _int_list(raw: str) -> Tuple[int, ...]:
    return tuple(int(item) for item in raw.split(',') if item.strip())


def _boolean(raw: str) -> bool:
    value = raw.strip().lower()
    if value in ('true', 'yes', '1', 'on'):
        return True
    if value in ('false', 'no', '0', 'off'):
        return False
    raise ValueError(f"valor booleano inválido: {raw!r}")


def _policy(raw: str) -> str:
    return Policy(raw.strip().lower()).value


def _preset(raw: str) -> str:
    if raw not in PRESETS:
        raise ValueError(f"preset desconocido: {raw!r}")
    return raw


CONVERTERS: Dict[str, Callable[[str], object]] = {
    'n1': int, 'n2': int, 'n3': int,
    'delta': float, 'r': float, 'r_sweep': _float_list,
    'dt': float, 't_end': float, 'b': float,
    'rt_policy': _policy, 'smallness_policy': _policy, 'epsilon': float,
    'out_dir': str, 'seed': int, 'checkpoint_interval': int,
    'preset': _preset, 'kappa': float, 'kappa_doubling': _boolean,
    'regularize_datum': _boolean, 'quotient_h': float,
    'pressure_tol': float, 'pressure_max_iter': int,
    'mms_vertical_mode': int, 'mms_n3_sweep': _int_list, 'norm_samples': int,
}


@dataclass(frozen=True)
class RunConfig:
    n1: int = 16
    n2: int = 16
    n3: int = 17
    delta: float = 0.25
    r: float = 0.1
    r_sweep: Tuple[float, ...] = (0.2, 0.1, 0.05, 0.025)
    dt: float = 1e-3
    t_end: float = 0.1
    b: float = 1.0
    rt_policy: str = 'warn'
    smallness_policy: str = 'warn'
    epsilon: float = 0.25
    out_dir: str = 'out'
    seed: int = 0
    checkpoint_interval: int = 10
    preset: str = 'generic'
    kappa: float = 1e-4
    kappa_doubling: bool = True
    regularize_datum: bool = False
    quotient_h: float = 1e-2
    pressure_tol: float = 1e-11
    pressure_max_iter: int = 60
    mms_vertical_mode: int = 1
    mms_n3_sweep: Tuple[int, ...] = (9, 17, 33)
    norm_samples: int = 50

    def validate(self, lines: Optional[Dict[str, int]] = None, source: str = '<config>'):
        """Comprueba los invariantes; el error señala la línea de la clave culpable"""
        lines = lines or {}

        def fail(key: str, message: str):
            raise ConfigError(message, lines.get(key), source)

        if not 0.0 < self.delta <= 0.5:
            fail('delta', f"δ debe estar en (0, 1/2] (recibido {self.delta})")
        for key in ('n1', 'n2', 'n3', 'checkpoint_interval', 'pressure_max_iter', 'norm_samples'):
            value = getattr(self, key)
            if value <= 0:
                fail(key, f"{key} debe ser positivo (recibido {value})")
        if self.seed < 0:
            fail('seed', f"la semilla debe ser no negativa (recibido {self.seed})")
        try:
            self.grid()
        except GridError as e:
            fail('n1' if self.n1 % 2 else 'n2' if self.n2 % 2 else 'n3', str(e))
        for key in ('dt', 'b', 'quotient_h', 'pressure_tol'):
            if not getattr(self, key) > 0:
                fail(key, f"{key} debe ser positivo (recibido {getattr(self, key)})")
        if not 0.0 < self.t_end <= 1.0:
            fail('t_end', f"t_end debe estar en (0, 1] (recibido {self.t_end})")
        if not 0.0 < self.epsilon <= 1.0:
            fail('epsilon', f"ε debe estar en (0, 1] (recibido {self.epsilon})")
        if not 0.0 < self.r <= 1.0:
            fail('r', f"r debe estar en (0, 1] (recibido {self.r})")
        if not self.r_sweep or any(not 0.0 < r <= 1.0 for r in self.r_sweep):
            fail('r_sweep', f"los radios deben estar en (0, 1] (recibido {self.r_sweep})")
        if self.kappa < 0:
            fail('kappa', f"κ debe ser no negativo (recibido {self.kappa})")
        if self.mms_vertical_mode <= 0 or self.mms_vertical_mode % 2 == 0:
            fail('mms_vertical_mode', "el modo vertical manufacturado debe ser impar y positivo")
        if not self.mms_n3_sweep or any(n < 5 for n in self.mms_n3_sweep):
            fail('mms_n3_sweep', f"cada n3 del barrido debe ser ≥ 5 (recibido {self.mms_n3_sweep})")

    def grid(self) -> Grid:
        return Grid(self.n1, self.n2, self.n3)

    def evolve_config(self) -> EvolveConfig:
        return EvolveConfig(
            dt=self.dt, t_end=self.t_end, b=self.b,
            rt_policy=Policy(self.rt_policy), smallness_policy=Policy(self.smallness_policy),
            epsilon=self.epsilon, delta=self.delta,
            pressure_tol=self.pressure_tol, pressure_max_iter=self.pressure_max_iter,
            quotient_h=self.quotient_h,
        )

    def with_overrides(self, **overrides) -> 'RunConfig':
        present = {k: v for k, v in overrides.items() if v is not None}
        updated = replace(self, **present)
        updated.validate()
        return updated

    def to_dict(self) -> dict:
        return asdict(self)


def _key_lines(text: str) -> Dict[str, int]:
    lines = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split('#', 1)[0].strip()
        if '=' in stripped:
            lines[stripped.split('=', 1)[0].strip()] = lineno
    return lines


def parse_run_config(text: str, source: str = '<config>') -> RunConfig:
    """
    Interpreta el texto de un archivo de configuración

    Raises:
        ConfigError: con el número de línea del problema
    """
    parser = configparser.ConfigParser(
        interpolation=None, delimiters=('=',), comment_prefixes=('#',),
        inline_comment_prefixes=('#',), strict=True, empty_lines_in_values=False,
    )
    parser.optionxform = str
    try:
        parser.read_string(f"[{SECTION}]\n{text}", source=source)
    except configparser.DuplicateOptionError as e:
        raise ConfigError(f"clave repetida: {e.option}", e.lineno - 1, source) from e
    except configparser.DuplicateSectionError as e:
        raise ConfigError("no se admiten secciones", (e.lineno or 1) - 1, source) from e
    except configparser.ParsingError as e:
        lineno, line = e.errors[0]
        raise ConfigError(f"línea mal formada: {line.strip()}", lineno - 1, source) from e

    lines = _key_lines(text)
    if parser.sections() != [SECTION]:
        extra = [s for s in parser.sections() if s != SECTION][0]
        raise ConfigError(f"no se admiten secciones ([{extra}])", None, source)

    known = {f.name for f in fields(RunConfig)}
    values = {}
    for key, raw in parser.items(SECTION):
        if key not in known:
            raise ConfigError(f"clave desconocida: {key}", lines.get(key), source)
        try:
            values[key] = CONVERTERS[key](raw.strip())
        except ValueError as e:
            raise ConfigError(f"valor inválido para {key}: {raw.strip()!r} ({e})", lines.get(key), source) from e

    config = RunConfig(**values)
    config.validate(lines, source)
    return config


def load_run_config(path: Optional[str]) -> RunConfig:
    """Carga la configuración; sin archivo se usan los valores por defecto"""
    if path is None:
        logger.info("Sin archivo de configuración: usando valores por defecto")
        return RunConfig()
    if not os.path.exists(path):
        raise ConfigError("archivo no encontrado", None, path)
    with open(path, 'r', encoding='utf-8') as f:
        text = f.read()
    config = parse_run_config(text, source=path)
    logger.info(f"✅ Configuración cargada desde {path}")
    return config
