"""
============================================================================
FORMATO DE FICHERO DE MALLA (JSON)
============================================================================
{nodes: [[[re, im] x n], ...], sigma_weights: [...], lambda_values: [...],
 normals: [...], domain: {...}, resolution: k, config_hash: "..."}

Al cargar, marcos y Lambda se recalculan desde el dominio y se comparan con
los valores guardados.
============================================================================
"""

import json
import logging
from typing import Tuple

import numpy as np
from pydantic import ValidationError

from common.errors import MeshingError
from common.schemas import DomainSpec
from domain.catalog import build_domain
from mesh.boundary_mesh import BoundaryMesh, mesh_from_nodes

logger = logging.getLogger(__name__)

_LAMBDA_RTOL = 1e-9


def _pairs(values: np.ndarray) -> list:
    return np.stack([values.real, values.imag], axis=-1).tolist()


def _complex(values) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    return arr[..., 0] + 1j * arr[..., 1]


def save_mesh(mesh: BoundaryMesh, path: str, config_hash: str = "") -> None:
    payload = {
        "config_hash": config_hash,
        "domain": mesh.domain_spec.model_dump(mode="json"),
        "resolution": mesh.resolution,
        "nodes": _pairs(mesh.nodes),
        "sigma_weights": mesh.sigma_weights.tolist(),
        "lambda_values": mesh.lambda_values.tolist(),
        "normals": _pairs(mesh.normals),
    }
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(payload, handle, sort_keys=True)
    logger.info(f"Mesh saved to {path} ({mesh.size} nodes)")


def load_mesh(path: str) -> Tuple[BoundaryMesh, str]:
    """
    Carga una malla y devuelve (malla, hash de configuracion).
    """
    try:
        with open(path, "r", encoding="utf-8") as handle:
            payload = json.load(handle)
    except (OSError, json.JSONDecodeError) as e:
        raise MeshingError(f"cannot read mesh file {path}: {e}") from e

    try:
        spec = DomainSpec(**payload["domain"])
        nodes = _complex(payload["nodes"])
        sigma = np.asarray(payload["sigma_weights"], dtype=float)
        resolution = int(payload["resolution"])
        stored = np.asarray(payload["lambda_values"], dtype=float)
    except (ValidationError, KeyError, TypeError, ValueError, IndexError) as e:
        raise MeshingError(f"malformed mesh file {path}: {type(e).__name__}: {e}") from e

    domain = build_domain(spec)
    mesh = mesh_from_nodes(domain, spec, nodes, sigma, resolution)
    if stored.shape != mesh.lambda_values.shape or not np.allclose(
        stored, mesh.lambda_values, rtol=_LAMBDA_RTOL, atol=0.0
    ):
        raise MeshingError(f"stored Leray-Levi values in {path} do not match the domain")
    return mesh, payload.get("config_hash", "")
