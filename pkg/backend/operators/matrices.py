"""
============================================================================
OPERADORES DISCRETIZADOS (NYSTROM)
============================================================================
Convenio: fila i = salida en el nodo i; columna j ponderada con el peso de
la medida en el nodo j:

    entries[i, j] = K(node_j, node_i) * weight_j

Modos de diagonal:
- plain:        diagonal nula (uso en normas)
- subtraction:  diagonal = 1 - sum_{j != i} entries[i, j] (reproduce constantes)
- offset:       filas evaluadas en z^delta, con extrapolacion de Richardson
                2 T_{delta/2} - T_delta
- extrapolated: dominios de Reinhardt (n = 2). Columna j = funcion cardinal
                e_j (Lagrange en el angulo polar, trigonometrica en las
                fases); C(e_j)(z_i^delta) con cuadratura producto fina en
                tres profundidades, extrapolacion cuadratica a delta = 0.
                Solo se calculan las filas de fase nula; el resto sale de
                la equivariancia bajo el toro.
============================================================================
"""

import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from itertools import combinations_with_replacement
from typing import List, Optional, Tuple

import numpy as np

from common.config import settings
from common.errors import ConfigurationError, NearSingularityError
from common.observability import record_assembly
from common.schemas import AssemblyMode, KernelKind, KernelSpec, MeasureKind, PhiFamily
from kernels.cauchy import KernelContext, evaluate_kernel
from mesh.boundary_mesh import BoundaryMesh, delta_max, normal_offset, polar_slabs

logger = logging.getLogger(__name__)

ROW_CONVENTION = "row i = output at node i, column j weighted by measure weight of node j"
_PAIRS_PER_BLOCK = 400_000

# profundidades de extrapolacion (fraccion de delta_max) y decaimiento de fase
EXTRAPOLATION_DEPTHS = (0.5, 0.7, 0.9)
FINE_PHASE_DECAY = 18.0
FINE_POLAR_FACTOR = 3


# ============================================================================
# TIPOS
# ============================================================================

@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    """Matriz compleja densa de un operador discretizado"""

    entries: np.ndarray
    measure: MeasureKind
    weights: np.ndarray          # pesos de la medida de la etiqueta
    lambda_weights: np.ndarray   # pesos de Leray-Levi de la malla
    mesh_ref: str
    spec: Optional[KernelSpec] = None
    mode: AssemblyMode = AssemblyMode.PLAIN
    label: str = ""
    row_convention: str = field(default=ROW_CONVENTION)

    @property
    def size(self) -> int:
        return self.entries.shape[0]

    @property
    def name(self) -> str:
        if self.label:
            return self.label
        return self.spec.kind.value if self.spec is not None else "matrix"

    def with_entries(self, entries: np.ndarray, label: Optional[str] = None) -> "OperatorMatrix":
        return replace(self, entries=entries, label=label if label is not None else self.label)

    def weighted(self) -> np.ndarray:
        """W^(1/2) T W^(-1/2): isometria al l2 ponderado"""
        s = np.sqrt(self.weights)
        return s[:, None] * self.entries / s[None, :]

    def apply(self, values: np.ndarray) -> np.ndarray:
        return self.entries @ values


@dataclass(frozen=True, eq=False)
class WeightVector:
    """omega d(sigma) = phi d(lambda)"""

    phi: np.ndarray
    omega: np.ndarray  # phi * Lambda (densidad respecto de sigma)

    def weights(self, mesh: BoundaryMesh) -> np.ndarray:
        return self.phi * mesh.lambda_weights


@dataclass(frozen=True, eq=False)
class HardyBasis:
    """Restricciones de monomios holomorfos z^alpha, |alpha| <= d"""

    degree_cutoff: int
    exponents: Tuple[Tuple[int, ...], ...]
    columns: np.ndarray  # (N, C(n+d, n))

    def condition_number(self, weights: np.ndarray) -> float:
        r = np.linalg.qr(np.sqrt(weights)[:, None] * self.columns, mode="r")
        return float(np.linalg.cond(r) ** 2)


# ============================================================================
# CONSTRUCTORES
# ============================================================================

def build_phi(mesh: BoundaryMesh, family: PhiFamily, a: float = 0.5) -> WeightVector:
    """Catalogo fijo: const, 1 + a Re w1, 1 + a |w1|^2"""
    w1 = mesh.nodes[:, 0]
    if family == PhiFamily.CONST:
        phi = np.ones(mesh.size)
    elif family == PhiFamily.RE1:
        phi = 1.0 + a * w1.real
    elif family == PhiFamily.ABS1:
        phi = 1.0 + a * np.abs(w1) ** 2
    else:
        raise ConfigurationError(f"Familia phi desconocida: {family}")
    if np.any(phi <= 0):
        raise ConfigurationError(f"phi={family.value} with a={a} is not positive on the mesh")
    return WeightVector(phi=phi, omega=phi * mesh.lambda_values)


def monomial_exponents(n: int, degree: int) -> List[Tuple[int, ...]]:
    """Multi-indices |alpha| <= degree en orden graduado"""
    out = []
    for total in range(degree + 1):
        for combo in combinations_with_replacement(range(n), total):
            alpha = [0] * n
            for k in combo:
                alpha[k] += 1
            out.append(tuple(alpha))
    return out


def build_hardy_basis(mesh: BoundaryMesh, degree: int) -> HardyBasis:
    exponents = monomial_exponents(mesh.domain.dim_n, degree)
    powers = np.asarray(exponents)
    columns = np.prod(mesh.nodes[:, None, :] ** powers[None, :, :], axis=-1)
    return HardyBasis(degree_cutoff=degree, exponents=tuple(exponents), columns=columns)


# ============================================================================
# ENSAMBLADO
# ============================================================================

def _row_blocks(count: int, columns: int) -> List[Tuple[int, int]]:
    step = max(1, _PAIRS_PER_BLOCK // max(columns, 1))
    return [(start, min(start + step, count)) for start in range(0, count, step)]


def _kernel_block(
    spec: KernelSpec,
    context: KernelContext,
    mesh: BoundaryMesh,
    targets: np.ndarray,
    row_start: int,
    exclude_diagonal: bool,
) -> np.ndarray:
    """K(node_j, target_i) para un bloque de filas; 0 en la diagonal excluida"""
    rows = targets.shape[0]
    count = mesh.size
    mask = np.ones((rows, count), dtype=bool)
    if exclude_diagonal:
        local = np.arange(rows)
        mask[local, row_start + local] = False
    ii, jj = np.nonzero(mask)
    frames = mesh.frames[jj] if spec.kind == KernelKind.CF_DENSITY else None
    try:
        values = evaluate_kernel(spec, context, mesh.nodes[jj], targets[ii], frames=frames)
    except NearSingularityError as e:
        flat = e.pair[0] if e.pair else 0
        raise NearSingularityError((int(row_start + ii[flat]), int(jj[flat])), 0.0) from e
    block = np.zeros((rows, count), dtype=complex)
    block[ii, jj] = values
    return block


def _assemble_rows(
    spec: KernelSpec,
    context: KernelContext,
    mesh: BoundaryMesh,
    targets: np.ndarray,
    exclude_diagonal: bool,
) -> np.ndarray:
    count = targets.shape[0]
    blocks = _row_blocks(count, mesh.size)
    kernel = np.zeros((count, mesh.size), dtype=complex)

    def work(bounds):
        start, stop = bounds
        kernel[start:stop] = _kernel_block(spec, context, mesh, targets[start:stop], start, exclude_diagonal)

    # filas disjuntas por bloque: escritura sin conflictos y resultado determinista
    with ThreadPoolExecutor(max_workers=settings.thread_count) as pool:
        list(pool.map(work, blocks))
    return kernel


# ============================================================================
# MODO EXTRAPOLADO (DOMINIOS DE REINHARDT)
# ============================================================================

def supports_extrapolation(mesh: BoundaryMesh) -> bool:
    """Malla producto n = 2 sobre un dominio invariante bajo el toro"""
    return (
        mesh.domain.torus_invariant
        and mesh.domain.dim_n == 2
        and mesh.size == mesh.resolution ** 3
    )


def phase_cardinals(count: int, fine: int) -> np.ndarray:
    """Funciones cardinales trigonometricas de count fases en fine fases: (fine, count)"""
    offsets = 2.0 * np.pi * (np.arange(fine)[:, None] / fine - np.arange(count)[None, :] / count)
    modes = np.arange(count // 2 + 1)
    factor = np.full(modes.size, 2.0)
    factor[0] = 1.0
    if count % 2 == 0:
        factor[-1] = 1.0
    return np.einsum("m,fkm->fk", factor, np.cos(offsets[..., None] * modes)) / count


def polar_cardinals(count: int, fine: int) -> np.ndarray:
    """Lagrange en los nodos de Gauss-Legendre de count puntos, evaluado en los de fine: (fine, count)"""
    coarse, weights = np.polynomial.legendre.leggauss(count)
    target, _ = np.polynomial.legendre.leggauss(fine)
    scale = (2.0 * np.arange(count) + 1.0) / 2.0
    v_fine = np.polynomial.legendre.legvander(target, count - 1)
    v_coarse = np.polynomial.legendre.legvander(coarse, count - 1)
    return (v_fine * scale[None, :]) @ v_coarse.T * weights[None, :]


def extrapolation_weights(depths) -> np.ndarray:
    """Pesos de Lagrange en delta = 0 para las profundidades dadas"""
    depths = np.asarray(depths, dtype=float)
    out = np.ones(depths.size)
    for k in range(depths.size):
        for j in range(depths.size):
            if j != k:
                out[k] *= -depths[j] / (depths[k] - depths[j])
    return out


def _extrapolated_entries(spec: KernelSpec, mesh: BoundaryMesh, context: KernelContext) -> np.ndarray:
    if not supports_extrapolation(mesh):
        raise ConfigurationError(
            f"extrapolated assembly needs a torus-invariant product mesh with n = 2 ({mesh.domain.name})"
        )
    if spec.measure == MeasureKind.OMEGA:
        raise ConfigurationError("extrapolated assembly supports sigma and lambda measures")

    res = mesh.resolution
    domain = mesh.domain
    depths = delta_max(domain) * np.asarray(EXTRAPOLATION_DEPTHS)
    combine = extrapolation_weights(depths)
    polar_count = FINE_POLAR_FACTOR * res
    phase_count = max(2 * res, 2 * math.ceil(0.5 * FINE_PHASE_DECAY / depths[0]))

    # nodos de fase nula: indice i_t * res^2
    base = mesh.nodes[:: res * res]
    targets = np.concatenate([normal_offset(domain, base, d) for d in depths])
    lt = polar_cardinals(res, polar_count)
    lp = phase_cardinals(res, phase_count)

    rows = np.zeros((targets.shape[0], res, res, res), dtype=complex)
    for k, slab in enumerate(polar_slabs(domain, polar_count, phase_count, mesh.domain_spec)):
        weights = slab.weights(spec.measure)
        for start, stop in _row_blocks(targets.shape[0], slab.size):
            frames = slab.frames if spec.kind == KernelKind.CF_DENSITY else None
            values = evaluate_kernel(spec, context, slab.nodes[None, :, :], targets[start:stop, None, :], frames=frames)
            values = (values * weights[None, :]).reshape(stop - start, phase_count, phase_count)
            coarse = np.einsum("tab,aj,bk->tjk", values, lp, lp, optimize=True)
            rows[start:stop] += lt[k][None, :, None, None] * coarse[:, None, :, :]

    base_rows = np.einsum("d,dtcjk->tcjk", combine, rows.reshape(len(depths), res, res, res, res))
    entries = np.empty((res, res, res, res, res, res), dtype=complex)
    for a in range(res):
        for b in range(res):
            entries[:, a, b] = np.roll(base_rows, (a, b), axis=(2, 3))
    logger.debug(f"Extrapolated rows: fine quadrature {polar_count}x{phase_count}^2, depths {depths.round(4).tolist()}")
    return entries.reshape(mesh.size, mesh.size)


def assemble(
    spec: KernelSpec,
    mesh: BoundaryMesh,
    context: KernelContext,
    mode: AssemblyMode = AssemblyMode.PLAIN,
    phi: Optional[WeightVector] = None,
    delta: Optional[float] = None,
    richardson: bool = True,
) -> OperatorMatrix:
    """Matriz de Nystrom del nucleo contra la medida de la especificacion"""
    start = time.perf_counter()
    weights = mesh.weights(spec.measure, phi.phi if phi is not None else None)

    if spec.kind == KernelKind.IDENTITY:
        entries = np.diag(weights).astype(complex)
    elif mode == AssemblyMode.OFFSET:
        if delta is None:
            raise ConfigurationError("offset assembly needs delta")
        shifted = normal_offset(mesh.domain, mesh.nodes, delta)
        entries = _assemble_rows(spec, context, mesh, shifted, False) * weights[None, :]
        if richardson:
            half = normal_offset(mesh.domain, mesh.nodes, 0.5 * delta)
            entries_half = _assemble_rows(spec, context, mesh, half, False) * weights[None, :]
            entries = 2.0 * entries_half - entries
    elif mode == AssemblyMode.EXTRAPOLATED:
        entries = _extrapolated_entries(spec, mesh, context)
    else:
        entries = _assemble_rows(spec, context, mesh, mesh.nodes, True) * weights[None, :]
        if mode == AssemblyMode.SUBTRACTION:
            np.fill_diagonal(entries, 1.0 - entries.sum(axis=1))

    duration = time.perf_counter() - start
    record_assembly(spec.kind.value, mode.value, mesh.size, duration)
    logger.info(f"Assembled {spec.kind.value} ({mode.value}) N={mesh.size} in {duration:.2f}s")
    return OperatorMatrix(
        entries=entries,
        measure=spec.measure,
        weights=weights,
        lambda_weights=mesh.lambda_weights,
        mesh_ref=mesh.mesh_hash(),
        spec=spec,
        mode=mode,
    )


def apply_cauchy_boundary(
    mesh: BoundaryMesh,
    context: KernelContext,
    spec: KernelSpec,
    f: np.ndarray,
    phi: Optional[WeightVector] = None,
) -> np.ndarray:
    """f(z) + sum_{w != z} K(w,z) [f(w) - f(z)] weight(w), por bloques de filas"""
    f = np.asarray(f, dtype=complex)
    if not np.all(np.isfinite(f)):
        raise ValueError("f must be finite at every node")
    weights = mesh.weights(spec.measure, phi.phi if phi is not None else None)
    out = np.empty(mesh.size, dtype=complex)
    for start, stop in _row_blocks(mesh.size, mesh.size):
        block = _kernel_block(spec, context, mesh, mesh.nodes[start:stop], start, True) * weights[None, :]
        local = f[start:stop]
        out[start:stop] = local + block @ f - block.sum(axis=1) * local
    return out
