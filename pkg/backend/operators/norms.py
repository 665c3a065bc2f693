"""
============================================================================
NORMAS DE OPERADORES, SERIES DE NEUMANN Y PARTICION EN CUBOS
============================================================================
Norma L^p ponderada: ||f||_p = (sum |f|^p w)^(1/p)

- p = 2:        mayor valor singular de W^(1/2) T W^(-1/2)
- p = 1, inf:   sumas ponderadas de columnas / filas (cotas de Schur)
- otro p:       [cota inferior por ascenso de potencias desde 20 arranques,
                 cota superior por interpolacion de Riesz-Thorin]
============================================================================
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, Tuple

import numpy as np

from common.config import settings
from common.errors import DivergenceRiskError
from mesh.boundary_mesh import BoundaryMesh
from operators.matrices import OperatorMatrix, WeightVector

logger = logging.getLogger(__name__)

MULTISTART = 20
ASCENT_ITERATIONS = 100


@dataclass(frozen=True)
class NeumannResult:
    solution: np.ndarray
    residual: float
    terms: int


@dataclass(frozen=True)
class SchurConstants:
    """Sumas maximas de filas y columnas de |W^(1/2) T W^(-1/2)|"""

    row: float
    column: float

    @property
    def bound(self) -> float:
        return float(np.sqrt(self.row * self.column))


# ============================================================================
# NORMAS
# ============================================================================

def _norm_one(entries: np.ndarray, w_rows: np.ndarray, w_cols: np.ndarray) -> float:
    column_sums = (np.abs(entries) * w_rows[:, None]).sum(axis=0)
    return float((column_sums / w_cols).max())


def _norm_inf(entries: np.ndarray) -> float:
    return float(np.abs(entries).sum(axis=1).max())


def _norm_two(entries: np.ndarray, w_rows: np.ndarray, w_cols: np.ndarray) -> float:
    scaled = np.sqrt(w_rows)[:, None] * entries / np.sqrt(w_cols)[None, :]
    return float(np.linalg.norm(scaled, 2))


def _riesz_thorin(one: float, two: float, inf: float, p: float) -> float:
    if p < 2:
        theta = 2.0 * (1.0 - 1.0 / p)
        via_two = one ** (1.0 - theta) * two ** theta
    else:
        theta = 1.0 - 2.0 / p
        via_two = two ** (1.0 - theta) * inf ** theta
    via_ends = one ** (1.0 / p) * inf ** (1.0 - 1.0 / p)
    return float(min(via_two, via_ends))


def _ascent_run(scaled: np.ndarray, p: float, seed: int) -> float:
    """Iteracion de potencias no lineal sobre l^p"""
    q = p / (p - 1.0)
    rng = np.random.default_rng(seed)
    size = scaled.shape[1]
    x = rng.standard_normal(size) + 1j * rng.standard_normal(size)
    x /= np.linalg.norm(x, p)
    for _ in range(ASCENT_ITERATIONS):
        y = scaled @ x
        if not np.any(y):
            break
        dual = np.abs(y) ** (p - 1) * np.exp(1j * np.angle(y))
        g = scaled.conj().T @ dual
        x_new = np.abs(g) ** (q - 1) * np.exp(1j * np.angle(g))
        x_new /= np.linalg.norm(x_new, p)
        if np.linalg.norm(x_new - x, p) < 1e-12:
            x = x_new
            break
        x = x_new
    return float(np.linalg.norm(scaled @ x, p))


def _ascent_lower(entries: np.ndarray, weights: np.ndarray, p: float, seed: int) -> float:
    scaled = (weights ** (1.0 / p))[:, None] * entries / (weights ** (1.0 / p))[None, :]
    seeds = [seed + k for k in range(MULTISTART)]
    with ThreadPoolExecutor(max_workers=settings.thread_count) as pool:
        values = list(pool.map(lambda s: _ascent_run(scaled, p, s), seeds))
    return max(values)


def _bracket(
    entries: np.ndarray,
    w_rows: np.ndarray,
    w_cols: np.ndarray,
    p: float,
    mode: str,
    seed: int,
) -> Tuple[float, float]:
    if p == 2:
        value = _norm_two(entries, w_rows, w_cols)
        return value, value
    if p == 1:
        value = _norm_one(entries, w_rows, w_cols)
        return value, value
    if np.isinf(p):
        value = _norm_inf(entries)
        return value, value
    if mode == "exact":
        raise ValueError(f"exact mode supports p in {{1, 2, inf}}, got p = {p}")
    upper = _riesz_thorin(
        _norm_one(entries, w_rows, w_cols), _norm_two(entries, w_rows, w_cols), _norm_inf(entries), p
    )
    if entries.shape[0] != entries.shape[1] or not np.array_equal(w_rows, w_cols):
        return 0.0, upper
    return min(_ascent_lower(entries, w_rows, p, seed), upper), upper


def operator_norm(t: OperatorMatrix, p: float = 2.0, mode: str = "interpolate", seed: int = 0) -> Tuple[float, float]:
    """
    (cota inferior, cota superior) de ||T||_{L^p(W) -> L^p(W)}.

    Las dos cotas coinciden para p en {1, 2, inf}.
    """
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    if mode not in ("exact", "interpolate"):
        raise ValueError(f"unknown norm mode '{mode}'")
    return _bracket(t.entries, t.weights, t.weights, p, mode, seed)


def schur_constants(t: OperatorMatrix) -> SchurConstants:
    a = np.abs(t.weighted())
    return SchurConstants(row=float(a.sum(axis=1).max()), column=float(a.sum(axis=0).max()))


# ============================================================================
# NEUMANN Y CONMUTADORES
# ============================================================================

def neumann_invert(
    a: OperatorMatrix,
    rhs: np.ndarray,
    max_terms: int = 200,
    tol: float = 1e-12,
    side: str = "left",
) -> NeumannResult:
    """
    Resuelve (I + A) x = rhs (side='left') o x (I + A) = rhs (side='right')
    con la serie sum (-A)^k.

    Raises:
        DivergenceRiskError: si ||A||_2 >= 1
    """
    if side not in ("left", "right"):
        raise ValueError(f"side must be 'left' or 'right', got {side}")
    norm = _norm_two(a.entries, a.weights, a.weights)
    if norm >= 1.0:
        raise DivergenceRiskError(f"||A||_2 = {norm:.4f} >= 1, Neumann series may diverge")

    rhs = np.asarray(rhs, dtype=complex)
    eye = np.eye(a.size)

    def residual_of(x: np.ndarray) -> float:
        applied = (eye + a.entries) @ x if side == "left" else x @ (eye + a.entries)
        return float(np.linalg.norm(applied - rhs) / max(np.linalg.norm(rhs), 1e-300))

    term = rhs.copy()
    total = rhs.copy()
    terms = 0
    residual = residual_of(total)
    while residual >= tol and terms < max_terms:
        term = -(a.entries @ term) if side == "left" else -(term @ a.entries)
        total = total + term
        terms += 1
        residual = residual_of(total)

    logger.debug(f"Neumann {side}: ||A||={norm:.4f} terms={terms} residual={residual:.2e}")
    return NeumannResult(solution=total, residual=residual, terms=terms)


def commutator(t: OperatorMatrix, phi) -> OperatorMatrix:
    """[T, phi] = T diag(phi) - diag(phi) T"""
    values = phi.phi if isinstance(phi, WeightVector) else np.asarray(phi)
    entries = t.entries * values[None, :] - values[:, None] * t.entries
    return t.with_entries(entries, label=f"[{t.name},phi]")


# ============================================================================
# PARTICION EN CUBOS
# ============================================================================

def cube_indices(mesh: BoundaryMesh, gamma: float) -> np.ndarray:
    """Indice entero (2n,) del cubo de lado gamma de cada nodo"""
    if gamma <= 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    coords = np.concatenate([mesh.nodes.real, mesh.nodes.imag], axis=1)
    return np.floor(coords / gamma).astype(np.int64)


def touching_count(n: int) -> int:
    return 3 ** (2 * n)


def cube_partition_bound(
    t: OperatorMatrix,
    mesh: BoundaryMesh,
    gamma: float,
    p: float = 2.0,
) -> Tuple[float, bool]:
    """
    Cota A N de ||T||_p con A = max ||1_k T 1_j||_p sobre cubos que se tocan.

    Returns:
        (cota, hipotesis de soporte: T nula entre cubos que no se tocan)
    """
    index = cube_indices(mesh, gamma)
    cubes, labels = np.unique(index, axis=0, return_inverse=True)
    labels = labels.ravel()
    members: Dict[int, np.ndarray] = {k: np.flatnonzero(labels == k) for k in range(len(cubes))}

    gap = np.abs(cubes[:, None, :] - cubes[None, :, :]).max(axis=-1)
    touching = gap <= 1
    far_pairs = ~touching[labels[:, None], labels[None, :]]
    hypothesis_ok = bool(not np.any(t.entries[far_pairs] != 0))

    a_const = 0.0
    for k, j in zip(*np.nonzero(touching)):
        rows, cols = members[int(k)], members[int(j)]
        block = t.entries[np.ix_(rows, cols)]
        if not np.any(block):
            continue
        a_const = max(a_const, _bracket(block, t.weights[rows], t.weights[cols], p, "interpolate", 0)[1])

    bound = a_const * touching_count(mesh.domain.dim_n)
    if not hypothesis_ok:
        logger.warning(f"cube bound at gamma={gamma:.4f}: operator couples non-touching cubes")
    return float(bound), hypothesis_ok


def truncated_norm_ratio(truncated: OperatorMatrix, full: OperatorMatrix) -> float:
    """||T^s||_2 / ||T||_2: control del operador truncado sin ganancia en eps"""
    base = operator_norm(full, 2.0)[1]
    if base == 0:
        return 0.0
    return operator_norm(truncated, 2.0)[1] / base
