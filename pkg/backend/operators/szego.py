"""
============================================================================
PROYECCION DE CAUCHY-SZEGO Y ADJUNTOS
============================================================================
P = B (B^H W B)^(-1) B^H W  via QR de W^(1/2) B:
    W^(1/2) B = Q R  ->  P = W^(-1/2) Q Q^H W^(1/2),  Gram = R^H R

Adjuntos:
    T*  = W_lambda^(-1) T^H W_lambda
    T^dagger = phi^(-1) T* phi

Las identidades se miden en norma ponderada completa y restringidas a un
subespacio de prueba suave (polinomios en z, conj z de grado <= d_test).
============================================================================
"""

import logging
from typing import Optional, Tuple

import numpy as np

from common.config import settings
from common.errors import RankDeficiencyError
from common.observability import ASSEMBLY_DURATION, track_duration
from common.schemas import AssemblyMode, KernelKind, KernelSpec, MeasureKind
from kernels.cauchy import KernelContext
from mesh.boundary_mesh import BoundaryMesh
from operators.matrices import (
    HardyBasis,
    OperatorMatrix,
    WeightVector,
    assemble,
    build_hardy_basis,
    supports_extrapolation,
)
from operators.norms import neumann_invert

logger = logging.getLogger(__name__)


@track_duration(ASSEMBLY_DURATION, kind="szego")
def szego_project(
    mesh: BoundaryMesh,
    weights: np.ndarray,
    basis: HardyBasis,
    measure: MeasureKind = MeasureKind.LAMBDA,
) -> OperatorMatrix:
    """Proyeccion ortogonal de L^2(W) sobre el span de la base de Hardy"""
    weights = np.asarray(weights, dtype=float)
    root = np.sqrt(weights)
    q, r = np.linalg.qr(root[:, None] * basis.columns)
    condition = float(np.linalg.cond(r) ** 2)
    if not np.isfinite(condition) or condition > settings.GRAM_COND_MAX:
        raise RankDeficiencyError(
            f"Gram condition number {condition:.3e} exceeds {settings.GRAM_COND_MAX:.1e} "
            f"at degree {basis.degree_cutoff}"
        )
    entries = (q @ q.conj().T) * root[None, :] / root[:, None]
    logger.info(f"Szego projection degree={basis.degree_cutoff} rank={q.shape[1]} cond={condition:.3e}")
    return OperatorMatrix(
        entries=entries,
        measure=measure,
        weights=weights,
        lambda_weights=mesh.lambda_weights,
        mesh_ref=mesh.mesh_hash(),
        label=f"szego_{measure.value}",
    )


def choose_degree(mesh: BoundaryMesh, weights: np.ndarray, d_max: int) -> int:
    """Mayor grado <= d_max con condicion de Gram < GRAM_COND_TARGET"""
    best = 0
    for degree in range(d_max + 1):
        if build_hardy_basis(mesh, degree).condition_number(weights) < settings.GRAM_COND_TARGET:
            best = degree
        else:
            break
    return best


# ============================================================================
# ADJUNTOS
# ============================================================================

def adjoint_lambda(t: OperatorMatrix) -> OperatorMatrix:
    w = t.lambda_weights
    entries = t.entries.conj().T * w[None, :] / w[:, None]
    return t.with_entries(entries, label=f"{t.name}*")


def adjoint_dagger(t: OperatorMatrix, phi) -> OperatorMatrix:
    values = phi.phi if isinstance(phi, WeightVector) else np.asarray(phi, dtype=float)
    star = adjoint_lambda(t).entries
    entries = star * values[None, :] / values[:, None]
    return t.with_entries(entries, label=f"{t.name}+")


def omega_inner(f1: np.ndarray, f2: np.ndarray, weights: np.ndarray) -> complex:
    """(f1, f2) = sum f1 conj(f2) w"""
    return complex(np.sum(f1 * np.conj(f2) * weights))


# ============================================================================
# NORMAS RESTRINGIDAS E IDENTIDADES
# ============================================================================

def weighted_two_norm(matrix: np.ndarray, weights: np.ndarray) -> float:
    s = np.sqrt(weights)
    return float(np.linalg.norm(s[:, None] * matrix / s[None, :], 2))


def smooth_test_basis(mesh: BoundaryMesh, weights: np.ndarray, degree: int) -> np.ndarray:
    """Base W-ortonormal de polinomios z^a conj(z)^b con |a| + |b| <= degree"""
    n = mesh.domain.dim_n
    z = mesh.nodes
    columns = []
    for total in range(degree + 1):
        for a_total in range(total + 1):
            for alpha in _exponents_of_degree(n, a_total):
                for beta in _exponents_of_degree(n, total - a_total):
                    columns.append(
                        np.prod(z ** np.asarray(alpha), axis=-1) * np.prod(np.conj(z) ** np.asarray(beta), axis=-1)
                    )
    root = np.sqrt(weights)
    u, s, _ = np.linalg.svd(root[:, None] * np.stack(columns, axis=1), full_matrices=False)
    keep = s > s[0] * 1e-10
    return u[:, keep] / root[:, None]


def _exponents_of_degree(n: int, total: int):
    if n == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _exponents_of_degree(n - 1, total - first):
            yield (first,) + rest


def restricted_norm(matrix: np.ndarray, weights: np.ndarray, test_basis: np.ndarray) -> float:
    """||M Q|| en l2 ponderado, Q W-ortonormal"""
    s = np.sqrt(weights)
    return float(np.linalg.norm(s[:, None] * (matrix @ test_basis), 2))


def identity_c_residual(p: OperatorMatrix, c: OperatorMatrix) -> np.ndarray:
    """P(I + C - C*) - C"""
    star = adjoint_lambda(c).entries
    eye = np.eye(p.size)
    return p.entries @ (eye + c.entries - star) - c.entries


def reproducing_correction(c: OperatorMatrix, p: OperatorMatrix) -> OperatorMatrix:
    """
    C + (I - C) P: coincide con C sobre el nucleo de P y reproduce
    exactamente la base de Hardy (C P = P).
    """
    eye = np.eye(c.size)
    return c.with_entries(c.entries + (eye - c.entries) @ p.entries, label=f"{c.name}_reproducing")


def szego_identities(p: OperatorMatrix, c: OperatorMatrix) -> Tuple[np.ndarray, np.ndarray]:
    """(C P - P, P C - C)"""
    return c.entries @ p.entries - p.entries, p.entries @ c.entries - c.entries


def reconstruct_szego(
    c: OperatorMatrix,
    c_trunc: OperatorMatrix,
    p: OperatorMatrix,
    max_terms: int = 200,
    tol: float = 1e-12,
) -> Tuple[np.ndarray, float, int]:
    """
    S = (C + P R* - P R)(I + A)^(-1),  R = C - C^s,  A = C^s - (C^s)*

    Returns:
        (S reconstruida, residuo de Neumann, terminos)
    """
    remainder = c.with_entries(c.entries - c_trunc.entries, label="R")
    remainder_star = adjoint_lambda(remainder).entries
    lhs = c.entries + p.entries @ remainder_star - p.entries @ remainder.entries
    a = c_trunc.with_entries(c_trunc.entries - adjoint_lambda(c_trunc).entries, label="A")
    result = neumann_invert(a, lhs, max_terms=max_terms, tol=tol, side="right")
    return result.solution, result.residual, result.terms


def cauchy_operator(mesh: BoundaryMesh, context: KernelContext, eps: float, p: OperatorMatrix) -> OperatorMatrix:
    """
    Operador de Cauchy-Fantappie C^# sobre la malla.

    Dominios de Reinhardt (n = 2): modo extrapolado. Resto: sustraccion
    con la correccion que reproduce la base de Hardy de P.
    """
    spec = KernelSpec(kind=KernelKind.CF_DENSITY, eps=eps, measure=MeasureKind.SIGMA)
    if supports_extrapolation(mesh):
        return assemble(spec, mesh, context, AssemblyMode.EXTRAPOLATED)
    c = assemble(spec, mesh, context, AssemblyMode.SUBTRACTION)
    logger.info(f"{mesh.domain.name}: subtraction assembly with Hardy reproducing correction")
    return reproducing_correction(c, p)
