"""
============================================================================
ENTORNO DE UNA VERIFICACION
============================================================================
Cada verificacion construye su propio Workspace (dominio, malla, calibracion
del corte) a partir de la RunConfig; nada se comparte entre hilos salvo
objetos inmutables.

s(eps) = min(s0, 1/c_eps, s_sym(eps)), con s_sym la mayor escala en la que
|g_eps(w,z) - conj g_eps(z,w)| / (eps delta^2) <= SYMMETRY_BOUND.
============================================================================
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np

from common.schemas import PhiFamily, RunConfig
from domain.catalog import Domain, build_domain, sample_boundary
from domain.smoothing import SmoothedHessian, smooth_hessian, truncation_cap
from geometry.cutoffs import CutoffCalibration, calibrate_cutoff, cutoff_chi_sym
from kernels.cauchy import KernelContext, truncation_scale
from mesh.boundary_mesh import BoundaryMesh, build_mesh, delta_max, mesh_scale, normal_offset
from mesh.io import load_mesh

logger = logging.getLogger(__name__)

PILOT_SIZE = 400
SYMMETRY_BOUND = 10.0
# la menor escala de corte, en multiplos del espaciado de la malla
HALVING_FLOOR = 2.0


@dataclass(eq=False)
class Workspace:
    """Dominio, malla y calibraciones de una verificacion"""

    config: RunConfig
    domain: Domain
    mesh: BoundaryMesh
    pilot: np.ndarray
    calibration: CutoffCalibration
    rng: np.random.Generator
    _smoothed: Dict[float, SmoothedHessian] = field(default_factory=dict)
    _schedule: Dict[float, float] = field(default_factory=dict)

    @property
    def resolution(self) -> int:
        return self.mesh.resolution

    def smoothed(self, eps: float) -> SmoothedHessian:
        if eps not in self._smoothed:
            self._smoothed[eps] = smooth_hessian(self.domain, eps, self.mesh.nodes)
        return self._smoothed[eps]

    def context(self, eps: Optional[float] = None) -> KernelContext:
        smoothed = self.smoothed(eps) if eps is not None else None
        return KernelContext(domain=self.domain, smoothed=smoothed, calibration=self.calibration)

    def truncation(self, eps: float) -> float:
        """s(eps) del programa de truncamiento"""
        if eps not in self._schedule:
            smoothed = self.smoothed(eps)
            cap = truncation_cap(smoothed, self.config.s_schedule.s0)
            w, z = self.pilot[None, :, :], self.pilot[:, None, :]
            self._schedule[eps] = truncation_scale(self.domain, smoothed, w, z, cap, SYMMETRY_BOUND)
            logger.debug(f"s({eps}) = {self._schedule[eps]:.4f} (cap {cap:.4f})")
        return self._schedule[eps]

    def s_halvings(self, eps: float):
        """s(eps) y sus mitades; la menor escala no baja de HALVING_FLOOR * h"""
        halvings = self.config.s_schedule.halvings
        smallest = max(self.truncation(eps) * 0.5 ** halvings, HALVING_FLOOR * mesh_scale(self.mesh))
        return [smallest * 2.0 ** (halvings - k) for k in range(halvings + 1)]

    def support_nodes(self, s: float) -> float:
        """Mediana, sobre el piloto, de nodos en el soporte de chi_s(., z)"""
        chi = cutoff_chi_sym(self.domain, self.calibration, self.mesh.nodes[None, :, :], self.pilot[:, None, :], s)
        return float(np.median(np.count_nonzero(chi > 0, axis=1)))

    def phi_family(self) -> PhiFamily:
        """Familia phi no constante (const no tiene conmutador)"""
        return self.config.phi if self.config.phi != PhiFamily.CONST else PhiFamily.RE1

    # ------------------------------------------------------------------
    # muestreo
    # ------------------------------------------------------------------

    def boundary_pairs(self, count: int) -> Tuple[np.ndarray, np.ndarray]:
        w = sample_boundary(self.domain, count, self.rng)
        z = sample_boundary(self.domain, count, self.rng)
        return w, z

    def interior_offsets(self, z: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """z^d con d uniforme en (0.05, 0.9) delta_max"""
        d = self.rng.uniform(0.05, 0.9, size=z.shape[0]) * delta_max(self.domain)
        return normal_offset(self.domain, z, d), d

    def nearby(self, z: np.ndarray, scale_range=(1e-3, 1e-1)) -> np.ndarray:
        """Puntos de bD a distancia euclidea ~ 10^U(log rango) de z"""
        lo, hi = np.log10(scale_range[0]), np.log10(scale_range[1])
        step = 10.0 ** self.rng.uniform(lo, hi, size=z.shape[0])
        direction = self.rng.standard_normal(z.shape) + 1j * self.rng.standard_normal(z.shape)
        direction /= np.linalg.norm(direction, axis=-1, keepdims=True)
        moved = z + step[:, None] * direction
        unit = moved / np.linalg.norm(moved, axis=-1, keepdims=True)
        return self.domain.radial_scale(unit)[:, None] * unit


def build_workspace(config: RunConfig, resolution: Optional[int] = None) -> Workspace:
    """Workspace determinista para (config, resolucion)"""
    resolution = resolution if resolution is not None else config.resolution
    domain = build_domain(config.domain)
    if config.mesh_path is not None and resolution == config.resolution:
        mesh, _ = load_mesh(config.mesh_path)
        domain = mesh.domain
    else:
        mesh = build_mesh(domain, resolution, config.domain)

    rng = np.random.default_rng(config.seed)
    take = min(PILOT_SIZE, mesh.size)
    pilot = mesh.nodes[np.sort(rng.choice(mesh.size, size=take, replace=False))]
    calibration = calibrate_cutoff(domain, pilot, seed=config.seed)
    return Workspace(
        config=config,
        domain=domain,
        mesh=mesh,
        pilot=pilot,
        calibration=calibration,
        rng=np.random.default_rng(config.seed + 1),
    )
