"""Pruebas del formato binario de puntos de control"""

import numpy as np
import pytest

from checkpoint import (
    HEADER_DTYPE, MAGIC, Checkpoint, CheckpointError, load_checkpoint,
    save_checkpoint, validate_checkpoint,
)
from lagrangian_state import initial_state
from presets import shear_state


@pytest.fixture
def checkpoint(small_grid):
    return Checkpoint.from_state(shear_state(small_grid, 0.25), delta=0.25, r=0.1)


class TestCheckpoint:
    def test_header_layout(self):
        assert HEADER_DTYPE.itemsize == 44
        assert MAGIC == b'LELB'

    def test_round_trip_is_bitwise(self, tmp_path, checkpoint):
        path = save_checkpoint(str(tmp_path / 'c.lelb'), checkpoint)
        loaded = load_checkpoint(path)
        assert loaded.dims == (8, 8, 9)
        assert loaded.t == 0.25 and loaded.delta == 0.25 and loaded.r == 0.1
        for name in ('eta', 'v', 'q'):
            assert np.array_equal(getattr(loaded, name), getattr(checkpoint, name))
        assert loaded.to_bytes() == checkpoint.to_bytes()

    def test_state_round_trip(self, small_grid, checkpoint):
        state = shear_state(small_grid, 0.25)
        restored = Checkpoint.from_bytes(checkpoint.to_bytes()).to_state(state.omega0)
        assert np.allclose(restored.xi.array, state.xi.array, rtol=0.0, atol=1e-14)
        assert np.array_equal(restored.v.array, state.v.array)
        assert np.array_equal(restored.q.values, state.q.values)
        assert restored.t == state.t

    def test_file_starts_with_magic(self, tmp_path, checkpoint):
        path = save_checkpoint(str(tmp_path / 'c.lelb'), checkpoint)
        with open(path, 'rb') as f:
            assert f.read(4) == b'LELB'

    def test_bad_magic(self, checkpoint):
        data = bytearray(checkpoint.to_bytes())
        data[:4] = b'XXXX'
        with pytest.raises(CheckpointError):
            Checkpoint.from_bytes(bytes(data))

    def test_truncated_file(self, checkpoint):
        with pytest.raises(CheckpointError):
            Checkpoint.from_bytes(checkpoint.to_bytes()[:-8])
        with pytest.raises(CheckpointError):
            Checkpoint.from_bytes(b'LELB')

    def test_state_without_pressure(self, small_grid):
        from presets import rest_datum
        with pytest.raises(CheckpointError):
            Checkpoint.from_state(initial_state(rest_datum(small_grid)), 0.25, 0.1)

    def test_stores_particle_map_not_displacement(self, small_grid, checkpoint):
        state = shear_state(small_grid, 0.25)
        assert np.array_equal(checkpoint.eta, state.eta.array)
        x1 = np.stack(small_grid.points)[0]
        n = int(np.prod(small_grid.shape))
        body = np.frombuffer(checkpoint.to_bytes(), dtype='<f8', offset=HEADER_DTYPE.itemsize)
        first = body[:n].reshape(small_grid.shape)
        assert np.allclose(first - x1, state.xi.array[0], atol=1e-14)

class TestValidation:
    def test_valid_file(self, tmp_path, checkpoint):
        path = save_checkpoint(str(tmp_path / 'c.lelb'), checkpoint)
        result = validate_checkpoint(path)
        assert result['is_valid']
        assert result['errors'] == []
        assert result['header']['dims'] == (8, 8, 9)

    def test_missing_and_empty_files(self, tmp_path):
        assert validate_checkpoint(str(tmp_path / 'nada.lelb'))['errors'] == ["Archivo no encontrado"]
        empty = tmp_path / 'vacio.lelb'
        empty.write_bytes(b'')
        assert validate_checkpoint(str(empty))['errors'] == ["Archivo vacío"]

    def test_corrupt_file(self, tmp_path, checkpoint):
        path = tmp_path / 'roto.lelb'
        path.write_bytes(checkpoint.to_bytes()[:100])
        result = validate_checkpoint(str(path))
        assert not result['is_valid']
        assert len(result['errors']) == 1
