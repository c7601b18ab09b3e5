"""
Puntos de control binarios

Cabecera: magic "LELB", versión u32, dimensiones u32×3, t, δ, r (f64),
seguida de arreglos little-endian f64 en este orden: η, v y q. Al
reconstruir el estado se recupera el desplazamiento ξ = η - x.
"""

import os
import logging
from dataclasses import dataclass
from typing import Dict

import numpy as np

from domain_grid import Grid, ScalarField, VectorField
from lagrangian_state import LagrangianState

logger = logging.getLogger(__name__)

MAGIC = b'LELB'
FORMAT_VERSION = 1
HEADER_DTYPE = np.dtype([
    ('magic', 'S4'),
    ('version', '<u4'),
    ('dims', '<u4', (3,)),
    ('t', '<f8'),
    ('delta', '<f8'),
    ('r', '<f8'),
])
FIELD_DTYPE = np.dtype('<f8')


class CheckpointError(ValueError):
    """Archivo de punto de control ilegible o inconsistente"""


@dataclass(frozen=True, eq=False)
class Checkpoint:
    dims: tuple
    t: float
    delta: float
    r: float
    eta: np.ndarray
    v: np.ndarray
    q: np.ndarray

    @classmethod
    def from_state(cls, state: LagrangianState, delta: float, r: float) -> 'Checkpoint':
        if state.q is None:
            raise CheckpointError("El estado no tiene presión resuelta")
        return cls(state.grid.shape, state.t, delta, r,
                   np.array(state.eta.array), np.array(state.v.array), np.array(state.q.values))

    def to_state(self, omega0: VectorField) -> LagrangianState:
        grid = Grid(*self.dims)
        return LagrangianState(
            t=self.t,
            xi=VectorField.from_array(grid, self.eta - np.stack(grid.points)),
            v=VectorField.from_array(grid, self.v),
            omega0=omega0,
            q=ScalarField(grid, self.q),
        )

    def to_bytes(self) -> bytes:
        header = np.zeros((), dtype=HEADER_DTYPE)
        header['magic'] = MAGIC
        header['version'] = FORMAT_VERSION
        header['dims'] = self.dims
        header['t'] = self.t
        header['delta'] = self.delta
        header['r'] = self.r
        body = [np.ascontiguousarray(a, dtype=FIELD_DTYPE).tobytes() for a in (self.eta, self.v, self.q)]
        return header.tobytes() + b''.join(body)

    @classmethod
    def from_bytes(cls, data: bytes) -> 'Checkpoint':
        if len(data) < HEADER_DTYPE.itemsize:
            raise CheckpointError(f"Archivo truncado: {len(data)} bytes")
        header = np.frombuffer(data, dtype=HEADER_DTYPE, count=1)[0]
        if header['magic'] != MAGIC:
            raise CheckpointError(f"Magic inválido: {header['magic']!r}")
        if int(header['version']) != FORMAT_VERSION:
            raise CheckpointError(f"Versión de formato no soportada: {int(header['version'])}")
        dims = tuple(int(d) for d in header['dims'])
        n = int(np.prod(dims))
        expected = HEADER_DTYPE.itemsize + 7 * n * FIELD_DTYPE.itemsize
        if len(data) != expected:
            raise CheckpointError(f"Tamaño inconsistente: {len(data)} bytes, se esperaban {expected}")
        body = np.frombuffer(data, dtype=FIELD_DTYPE, offset=HEADER_DTYPE.itemsize)
        return cls(
            dims=dims,
            t=float(header['t']),
            delta=float(header['delta']),
            r=float(header['r']),
            eta=body[:3 * n].reshape((3,) + dims).copy(),
            v=body[3 * n:6 * n].reshape((3,) + dims).copy(),
            q=body[6 * n:].reshape(dims).copy(),
        )


def save_checkpoint(path: str, checkpoint: Checkpoint) -> str:
    os.makedirs(os.path.dirname(path) or '.', exist_ok=True)
    with open(path, 'wb') as f:
        f.write(checkpoint.to_bytes())
    logger.debug(f"Punto de control guardado en {path} (t = {checkpoint.t:.6f})")
    return path


def load_checkpoint(path: str) -> Checkpoint:
    with open(path, 'rb') as f:
        return Checkpoint.from_bytes(f.read())


def validate_checkpoint(path: str) -> Dict:
    """
    Valida un archivo de punto de control

    Returns:
        Diccionario con is_valid, errores, advertencias y la cabecera leída
    """
    validation_result = {
        'file_path': path,
        'is_valid': False,
        'errors': [],
        'warnings': [],
        'header': None,
    }

    if not os.path.exists(path):
        validation_result['errors'].append("Archivo no encontrado")
        return validation_result
    if os.path.getsize(path) == 0:
        validation_result['errors'].append("Archivo vacío")
        return validation_result

    try:
        checkpoint = load_checkpoint(path)
    except CheckpointError as e:
        validation_result['errors'].append(str(e))
        return validation_result

    validation_result['header'] = {
        'dims': checkpoint.dims,
        't': checkpoint.t,
        'delta': checkpoint.delta,
        'r': checkpoint.r,
    }
    for name in ('eta', 'v', 'q'):
        if not np.all(np.isfinite(getattr(checkpoint, name))):
            validation_result['warnings'].append(f"El campo {name} contiene valores no finitos")
    if not 0.0 < checkpoint.delta <= 0.5:
        validation_result['warnings'].append(f"δ fuera de (0, 1/2]: {checkpoint.delta}")

    validation_result['is_valid'] = True
    return validation_result
