"""
Salida CSV y resúmenes JSON de los comandos

Formato: primera línea `# lelab-csv v1 <nombre>`, luego la fila de encabezado
y los datos con 17 cifras significativas en notación científica.
"""

import os
import json
import logging
from typing import Dict, Iterable, List, Optional, Sequence

import pandas as pd

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
FLOAT_FORMAT = '%.16e'


def schema_line(name: str) -> str:
    return f"# lelab-csv v{SCHEMA_VERSION} {name}\n"


def _format_cell(value) -> str:
    if isinstance(value, (int, str)) and not isinstance(value, bool):
        return str(value)
    return FLOAT_FORMAT % float(value)


def write_csv(path: str, rows: Iterable[Dict], name: str,
              columns: Optional[Sequence[str]] = None,
              footer: Optional[Sequence] = None) -> str:
    """
    Escribe filas de diccionarios como CSV versionado

    Args:
        path: archivo de destino
        rows: una fila por registro
        name: nombre del esquema (va en la primera línea)
        columns: orden de columnas; por defecto el de la primera fila
        footer: fila final opcional, p. ej. ('gronwall_C', C)

    Returns:
        Ruta del archivo escrito
    """
    df = pd.DataFrame(list(rows), columns=list(columns) if columns is not None else None)
    os.makedirs(os.path.dirname(path) or '.', exist_ok=True)
    with open(path, 'w', encoding='utf-8', newline='') as f:
        f.write(schema_line(name))
        df.to_csv(f, index=False, float_format=FLOAT_FORMAT, na_rep='nan', lineterminator='\n')
        if footer is not None:
            f.write(','.join(_format_cell(v) for v in footer) + '\n')
    logger.info(f"📄 {name}: {len(df)} filas escritas en {path}")
    return path


def read_csv(path: str, footer_rows: int = 0) -> pd.DataFrame:
    """Lee un CSV escrito por write_csv, saltando la línea de esquema y el pie"""
    df = pd.read_csv(path, skiprows=1, float_precision='round_trip')
    if footer_rows:
        # el pie deja columnas de texto; float() las reconvierte sin perder el último bit
        df = df.iloc[:-footer_rows].reset_index(drop=True)
        df = df.apply(lambda col: col.map(float) if col.dtype == object else col)
    return df


def read_footer(path: str) -> List[str]:
    with open(path, 'r', encoding='utf-8') as f:
        last = f.read().rstrip('\n').split('\n')[-1]
    return last.split(',')


def save_summary(out_dir: str, command: str, summary: Dict) -> str:
    """Guarda <comando>_summary.json"""
    path = os.path.join(out_dir, f"{command}_summary.json")
    try:
        os.makedirs(out_dir, exist_ok=True)
        with open(path, 'w', encoding='utf-8') as f:
            json.dump(summary, f, indent=2, ensure_ascii=False, default=str)
        return path
    except OSError as e:
        logger.error(f"Error guardando resumen: {e}")
        return ""
