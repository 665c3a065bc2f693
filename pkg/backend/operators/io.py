"""
============================================================================
FORMATO DE FICHERO DE MATRIZ
============================================================================
Linea 1: cabecera JSON {N, measure, spec, mode, label, mesh_ref, config_hash}
Resto:   N*N pares (re, im) float64 little-endian, orden por filas, seguidos
         de los pesos de la medida y los pesos de Leray-Levi (float64 LE).
============================================================================
"""

import json
import logging
from typing import Tuple

import numpy as np

from common.errors import ConfigurationError
from common.schemas import AssemblyMode, KernelSpec, MeasureKind
from operators.matrices import ROW_CONVENTION, OperatorMatrix

logger = logging.getLogger(__name__)

_COMPLEX = np.dtype("<c16")
_REAL = np.dtype("<f8")


def save_matrix(matrix: OperatorMatrix, path: str, config_hash: str = "") -> None:
    header = {
        "N": matrix.size,
        "measure": matrix.measure.value,
        "spec": matrix.spec.model_dump(mode="json") if matrix.spec is not None else None,
        "mode": matrix.mode.value,
        "label": matrix.label,
        "mesh_ref": matrix.mesh_ref,
        "row_convention": matrix.row_convention,
        "config_hash": config_hash,
    }
    with open(path, "wb") as handle:
        handle.write(json.dumps(header, sort_keys=True).encode("utf-8") + b"\n")
        handle.write(np.ascontiguousarray(matrix.entries, dtype=_COMPLEX).tobytes())
        handle.write(np.ascontiguousarray(matrix.weights, dtype=_REAL).tobytes())
        handle.write(np.ascontiguousarray(matrix.lambda_weights, dtype=_REAL).tobytes())
    logger.info(f"Matrix {matrix.name} saved to {path} (N={matrix.size})")


def load_matrix(path: str) -> Tuple[OperatorMatrix, str]:
    """Devuelve (matriz, hash de configuracion)"""
    try:
        with open(path, "rb") as handle:
            header = json.loads(handle.readline().decode("utf-8"))
            payload = handle.read()
    except (OSError, ValueError) as e:
        raise ConfigurationError(f"cannot read matrix file {path}: {e}") from e

    size = int(header["N"])
    expected = size * size * _COMPLEX.itemsize + 2 * size * _REAL.itemsize
    if len(payload) != expected:
        raise ConfigurationError(f"matrix file {path} holds {len(payload)} bytes, expected {expected}")

    split = size * size * _COMPLEX.itemsize
    entries = np.frombuffer(payload[:split], dtype=_COMPLEX).reshape(size, size).astype(complex)
    tail = np.frombuffer(payload[split:], dtype=_REAL).astype(float)
    matrix = OperatorMatrix(
        entries=entries,
        measure=MeasureKind(header["measure"]),
        weights=tail[:size],
        lambda_weights=tail[size:],
        mesh_ref=header["mesh_ref"],
        spec=KernelSpec(**header["spec"]) if header.get("spec") else None,
        mode=AssemblyMode(header.get("mode", "plain")),
        label=header.get("label", ""),
        row_convention=header.get("row_convention", ROW_CONVENTION),
    )
    return matrix, header.get("config_hash", "")
