"""
============================================================================
MALLA DE FRONTERA Y CUADRATURA
============================================================================
Parametrizacion producto de S^(2n-1) proyectada radialmente sobre {rho = 0}:

- n = 2: u = (cos t e^{i p1}, sin t e^{i p2}),          t en [0, pi/2]
- n = 3: u = (cos t1 e^{i p1}, sin t1 cos t2 e^{i p2},
              sin t1 sin t2 e^{i p3})

Gauss-Legendre en los angulos polares, trapecio periodico en las fases.
Peso sigma = peso esferico * t(u)^(2n-1) |grad rho| / (grad rho . u).
============================================================================
"""

import hashlib
import logging
from dataclasses import dataclass
from typing import Callable, Iterator, Optional, Union

import numpy as np

from common.config import settings
from common.errors import (
    ConfigurationError,
    DeltaRangeError,
    MeshingError,
    NonFiniteIntegrandError,
    UnsupportedDimensionError,
)
from common.observability import record_mesh
from common.schemas import DomainSpec, MeasureKind
from domain.catalog import Domain, inradius_proxy
from geometry.frames import FrameBundle, frames_at
from geometry.measure import leray_levi_density

logger = logging.getLogger(__name__)

MIN_RESOLUTION = 8
DELTA_MAX_FRACTION = 0.2


@dataclass(frozen=True, eq=False)
class BoundaryMesh:
    """Nodos de cuadratura en bD con pesos para sigma y lambda"""

    domain: Domain
    domain_spec: DomainSpec
    nodes: np.ndarray           # (N, n) complejo
    sigma_weights: np.ndarray   # (N,)
    lambda_values: np.ndarray   # Lambda(nodo)
    lambda_weights: np.ndarray  # Lambda * sigma
    frames: FrameBundle
    resolution: int

    @property
    def size(self) -> int:
        return self.nodes.shape[0]

    @property
    def normals(self) -> np.ndarray:
        return self.frames.inner_normal

    def weights(self, measure: MeasureKind, phi: Optional[np.ndarray] = None) -> np.ndarray:
        if measure == MeasureKind.SIGMA:
            return self.sigma_weights
        if measure == MeasureKind.LAMBDA:
            return self.lambda_weights
        if phi is None:
            raise ConfigurationError("omega measure requires a phi weight vector")
        return np.asarray(phi, dtype=float) * self.lambda_weights

    def mesh_hash(self) -> str:
        digest = hashlib.sha256()
        digest.update(np.ascontiguousarray(self.nodes).tobytes())
        digest.update(np.ascontiguousarray(self.sigma_weights).tobytes())
        return digest.hexdigest()[:16]


# ============================================================================
# CONSTRUCCION
# ============================================================================

def _sphere_quadrature(n: int, resolution: int, phase_count: Optional[int] = None):
    """Direcciones unitarias y pesos de S^(2n-1); orden de aplanado (polares, fases)"""
    phase_count = phase_count or resolution
    nodes, weights = np.polynomial.legendre.leggauss(resolution)
    theta = 0.25 * np.pi * (nodes + 1.0)
    w_theta = 0.25 * np.pi * weights
    phases = 2.0 * np.pi * np.arange(phase_count) / phase_count
    w_phase = 2.0 * np.pi / phase_count

    if n == 2:
        t, p1, p2 = np.meshgrid(theta, phases, phases, indexing="ij")
        wt = np.meshgrid(w_theta, phases, phases, indexing="ij")[0]
        u = np.stack([np.cos(t) * np.exp(1j * p1), np.sin(t) * np.exp(1j * p2)], axis=-1)
        weight = wt * np.cos(t) * np.sin(t) * w_phase ** 2
    elif n == 3:
        t1, t2, p1, p2, p3 = np.meshgrid(theta, theta, phases, phases, phases, indexing="ij")
        grids = np.meshgrid(w_theta, w_theta, phases, phases, phases, indexing="ij")
        u = np.stack([
            np.cos(t1) * np.exp(1j * p1),
            np.sin(t1) * np.cos(t2) * np.exp(1j * p2),
            np.sin(t1) * np.sin(t2) * np.exp(1j * p3),
        ], axis=-1)
        weight = (
            grids[0] * grids[1]
            * np.cos(t1) * np.sin(t1) ** 3 * np.cos(t2) * np.sin(t2)
            * w_phase ** 3
        )
    else:
        raise UnsupportedDimensionError(f"meshes are built for n in {{2, 3}}, got n = {n}")
    return u.reshape(-1, n), weight.ravel()


def _project_sphere(domain: Domain, u: np.ndarray, sphere_weights: np.ndarray):
    """Proyeccion radial de la cuadratura esferica: (nodos, pesos sigma)"""
    t = domain.radial_scale(u)
    nodes = t[:, None] * u
    grad = domain.grad_complex(nodes)
    radial = np.real(np.sum(grad * np.conj(u), axis=-1))
    if np.any(radial <= 0):
        raise MeshingError("domain is not star-shaped with respect to the origin")
    sigma = sphere_weights * t ** (2 * domain.dim_n - 1) * np.linalg.norm(grad, axis=-1) / radial
    return nodes, sigma


def mesh_from_nodes(
    domain: Domain,
    spec: DomainSpec,
    nodes: np.ndarray,
    sigma_weights: np.ndarray,
    resolution: int,
) -> BoundaryMesh:
    """Completa marcos y pesos de Leray-Levi para nodos dados"""
    nodes = np.asarray(nodes, dtype=complex)
    sigma_weights = np.asarray(sigma_weights, dtype=float)
    residual = np.abs(domain.rho(nodes))
    worst = int(np.argmax(residual))
    if residual[worst] >= settings.BOUNDARY_TOL:
        raise MeshingError(f"node {worst} off boundary: |rho| = {residual[worst]:.2e}")
    if np.any(sigma_weights <= 0):
        raise MeshingError(f"non-positive sigma weight at node {int(np.argmin(sigma_weights))}")

    frames = frames_at(domain, nodes)
    density = leray_levi_density(domain, frames)
    return BoundaryMesh(
        domain=domain,
        domain_spec=spec,
        nodes=nodes,
        sigma_weights=sigma_weights,
        lambda_values=density,
        lambda_weights=density * sigma_weights,
        frames=frames,
        resolution=resolution,
    )


def build_mesh(domain: Domain, resolution: int, spec: Optional[DomainSpec] = None) -> BoundaryMesh:
    """Malla producto determinista para (dominio, resolucion)"""
    if resolution < MIN_RESOLUTION:
        raise ConfigurationError(f"resolution must be >= {MIN_RESOLUTION}, got {resolution}")
    if domain.dim_n not in (2, 3):
        raise UnsupportedDimensionError(f"meshes are built for n in {{2, 3}}, got n = {domain.dim_n}")

    u, sphere_weights = _sphere_quadrature(domain.dim_n, resolution)
    nodes, sigma = _project_sphere(domain, u, sphere_weights)

    if spec is None:
        spec = spec_from_domain(domain)
    mesh = mesh_from_nodes(domain, spec, nodes, sigma, resolution)
    record_mesh(domain.name, mesh.size)
    logger.info(
        f"Mesh {domain.name} n={domain.dim_n} res={resolution}: {mesh.size} nodes, "
        f"sigma={mesh.sigma_weights.sum():.6f} lambda={mesh.lambda_weights.sum():.6f}"
    )
    return mesh


def polar_slabs(
    domain: Domain,
    polar_count: int,
    phase_count: int,
    spec: Optional[DomainSpec] = None,
) -> Iterator[BoundaryMesh]:
    """
    Malla producto fina (n = 2) recorrida por capas: una capa por nodo de
    Gauss del angulo polar, con phase_count^2 nodos de fase cada una.

    La malla completa no se materializa; cada capa trae sus marcos y pesos.
    """
    if domain.dim_n != 2:
        raise UnsupportedDimensionError(f"polar slabs are built for n = 2, got n = {domain.dim_n}")
    if spec is None:
        spec = spec_from_domain(domain)
    u, sphere_weights = _sphere_quadrature(2, polar_count, phase_count)
    per_slab = phase_count ** 2
    for k in range(polar_count):
        window = slice(k * per_slab, (k + 1) * per_slab)
        nodes, sigma = _project_sphere(domain, u[window], sphere_weights[window])
        yield mesh_from_nodes(domain, spec, nodes, sigma, polar_count)


# ============================================================================
# REGLA LOCAL GRADUADA
# ============================================================================
# Coordenadas polares geodesicas de S^3 en torno a u0:
#   u = cos(theta) u0 + sin(theta) (cos(psi) a + sin(psi)(cos(phi) b1 + sin(phi) b2))
# con a = direccion de Reeb (i nu proyectado) y d(vol) = sin^2(theta) sin(psi).
# Paneles geometricos en theta desde `finest`; en psi, paneles refinados hacia
# psi = pi/2 (direcciones complejas tangentes) hasta una semianchura theta/8.

GRADED_ORDER = 8
GRADED_AZIMUTHS = 32


def _gauss_panels(edges: np.ndarray, order: int):
    x, w = np.polynomial.legendre.leggauss(order)
    lo, hi = edges[:-1, None], edges[1:, None]
    nodes = 0.5 * (hi - lo) * x[None, :] + 0.5 * (hi + lo)
    weights = 0.5 * (hi - lo) * w[None, :]
    return nodes.ravel(), weights.ravel()


def _geometric_edges(finest: float, top: float) -> np.ndarray:
    count = max(1, int(np.ceil(np.log2(top / finest))))
    inner = finest * 2.0 ** np.arange(count)
    return np.concatenate([[0.0], inner[inner < top], [top]])


def _equator_edges(half_width: float) -> np.ndarray:
    """Bordes en [0, pi] refinados hacia pi/2 hasta la semianchura dada"""
    widths = []
    h = 0.5 * np.pi
    while h > half_width:
        widths.append(h)
        h *= 0.5
    widths.append(half_width)
    widths = np.asarray(widths)
    return np.concatenate([0.5 * np.pi - widths, 0.5 * np.pi + widths[::-1]])


def _real_unit(v: np.ndarray, basis) -> np.ndarray:
    """Gram-Schmidt real en C^n = R^(2n)"""
    for e in basis:
        v = v - np.real(np.vdot(e, v)) * e
    return v / np.linalg.norm(v)


def _tangent_axes(u0: np.ndarray, nu: np.ndarray):
    a = _real_unit(1j * nu, [u0])
    e = np.array([-np.conj(u0[1]), np.conj(u0[0])])
    b1 = _real_unit(e, [u0, a])
    b2 = _real_unit(1j * e, [u0, a, b1])
    return a, b1, b2


def graded_mesh(
    domain: Domain,
    center: np.ndarray,
    finest: float,
    spec: Optional[DomainSpec] = None,
    order: int = GRADED_ORDER,
    azimuths: int = GRADED_AZIMUTHS,
) -> BoundaryMesh:
    """Cuadratura de bD (n = 2) graduada en torno a un punto de la frontera"""
    if domain.dim_n != 2:
        raise UnsupportedDimensionError(f"graded meshes are built for n = 2, got n = {domain.dim_n}")
    if not 0.0 < finest < np.pi:
        raise ConfigurationError(f"finest panel must lie in (0, pi), got {finest}")
    center = np.asarray(center, dtype=complex)
    u0 = center / np.linalg.norm(center)
    grad = domain.grad_complex(center)
    a, b1, b2 = _tangent_axes(u0, -grad / np.linalg.norm(grad))

    phi = 2.0 * np.pi * np.arange(azimuths) / azimuths
    ring_phase = np.cos(phi)[:, None] * b1[None, :] + np.sin(phi)[:, None] * b2[None, :]
    theta, w_theta = _gauss_panels(_geometric_edges(finest, np.pi), order)
    directions, weights = [], []
    for th, wt in zip(theta, w_theta):
        psi, w_psi = _gauss_panels(_equator_edges(min(0.25 * np.pi, th / 8.0)), order)
        ring = np.cos(psi)[:, None, None] * a + np.sin(psi)[:, None, None] * ring_phase[None, :, :]
        directions.append((np.cos(th) * u0 + np.sin(th) * ring).reshape(-1, 2))
        w = wt * np.sin(th) ** 2 * (w_psi * np.sin(psi))[:, None] * np.full(azimuths, 2.0 * np.pi / azimuths)
        weights.append(w.ravel())

    u = np.concatenate(directions)
    u /= np.linalg.norm(u, axis=-1, keepdims=True)
    nodes, sigma = _project_sphere(domain, u, np.concatenate(weights))
    if spec is None:
        spec = spec_from_domain(domain)
    mesh = mesh_from_nodes(domain, spec, nodes, sigma, theta.size)
    logger.debug(f"Graded mesh around {np.round(center, 4).tolist()}: {mesh.size} nodes, finest {finest:.2e}")
    return mesh


def spec_from_domain(domain: Domain) -> DomainSpec:
    if domain.name == "ellipsoid":
        return DomainSpec(name="ellipsoid", n=domain.dim_n, a=tuple(domain.params.tolist()))
    if domain.name == "perturbed_ball":
        return DomainSpec(name="perturbed_ball", n=domain.dim_n, kappa=float(domain.params[0]), mu=domain.mu)
    return DomainSpec(name="ball", n=domain.dim_n)


# ============================================================================
# OPERACIONES
# ============================================================================

def mesh_scale(mesh: BoundaryMesh) -> float:
    """Espaciado tipico (area / N)^(1/(2n-1))"""
    return float((mesh.sigma_weights.sum() / mesh.size) ** (1.0 / (2 * mesh.domain.dim_n - 1)))


def delta_max(domain: Domain) -> float:
    return DELTA_MAX_FRACTION * inradius_proxy(domain)


def normal_offset(domain: Domain, z: np.ndarray, delta) -> np.ndarray:
    """z^delta = z + delta nu_z"""
    z = np.asarray(z, dtype=complex)
    delta_arr = np.asarray(delta, dtype=float)
    limit = delta_max(domain)
    if np.any(delta_arr <= 0) or np.any(delta_arr >= limit):
        raise DeltaRangeError(f"delta must lie in (0, {limit:.4f}), got {delta}")
    grad = domain.grad_complex(z)
    nu = -grad / np.linalg.norm(grad, axis=-1, keepdims=True)
    shifted = z + delta_arr[..., None] * nu if delta_arr.ndim else z + float(delta_arr) * nu
    if np.any(domain.rho(shifted) >= 0):
        raise DeltaRangeError(f"offset point left the interior for delta={delta}")
    return shifted


def integrate_boundary(
    mesh: BoundaryMesh,
    integrand: Union[np.ndarray, Callable[[np.ndarray], np.ndarray]],
    measure: MeasureKind = MeasureKind.LAMBDA,
    phi: Optional[np.ndarray] = None,
) -> complex:
    """Suma ponderada de un integrando nodal"""
    values = integrand(mesh.nodes) if callable(integrand) else np.asarray(integrand)
    values = np.broadcast_to(values, (mesh.size,))
    finite = np.isfinite(values)
    if not np.all(finite):
        node = int(np.flatnonzero(~finite)[0])
        raise NonFiniteIntegrandError(node, complex(values[node]))
    return complex(np.sum(values * mesh.weights(measure, phi)))
