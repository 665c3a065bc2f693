"""
============================================================================
CATALOGO DE DOMINIOS
============================================================================
Funciones definidoras cerradas y sus derivadas:

- ball:            rho(z) = |z|^2 - 1
- ellipsoid:       rho(z) = sum a_j |z_j|^2 - 1
- perturbed_ball:  rho(z) = |z|^2 - 1 + kappa |Re z_1|^3

Todas las evaluaciones estan vectorizadas sobre el ultimo eje (..., n).
El gradiente complejo N = d(rho)/dx + i d(rho)/dy = 2 conj(del_rho).
============================================================================
"""

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Optional, Tuple, Union

import numpy as np
from pydantic import ValidationError

from common.config import settings
from common.errors import ConfigurationError, DomainRejectedError, OffBoundaryError
from common.schemas import DomainName, DomainSpec

logger = logging.getLogger(__name__)

# Radio de corte de la funcion chi para el dominio perturbado
DEFAULT_PERTURBED_MU = 0.5


# ============================================================================
# DOMINIOS
# ============================================================================

@dataclass(frozen=True, eq=False)
class Domain(ABC):
    """Dominio estrictamente pseudoconvexo dado por su funcion definidora"""

    name: str
    dim_n: int
    params: np.ndarray
    # None = chi identicamente 1 (polinomio de Levi global)
    mu: Optional[float] = None
    witness: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.witness is None:
            object.__setattr__(self, "witness", np.zeros(self.dim_n, dtype=complex))
        self.params.setflags(write=False)

    @abstractmethod
    def rho(self, z: np.ndarray) -> np.ndarray:
        ...

    @abstractmethod
    def del_rho(self, z: np.ndarray) -> np.ndarray:
        """Componentes d(rho)/dz_j"""

    @abstractmethod
    def holo_hessian(self, z: np.ndarray) -> np.ndarray:
        """d^2 rho / dz_j dz_k"""

    @abstractmethod
    def mixed_hessian(self, z: np.ndarray) -> np.ndarray:
        """d^2 rho / dz_j dconj(z_k)"""

    @abstractmethod
    def radial_scale(self, u: np.ndarray) -> np.ndarray:
        """t > 0 con rho(t u) = 0"""

    def grad_complex(self, z: np.ndarray) -> np.ndarray:
        return 2.0 * np.conj(self.del_rho(z))

    def grad_rho(self, z: np.ndarray) -> np.ndarray:
        """Gradiente real intercalado (x_1, y_1, ..., x_n, y_n)"""
        g = self.grad_complex(z)
        out = np.empty(g.shape[:-1] + (2 * self.dim_n,))
        out[..., 0::2] = g.real
        out[..., 1::2] = g.imag
        return out

    def grad_norm(self, z: np.ndarray) -> np.ndarray:
        return np.linalg.norm(self.grad_complex(z), axis=-1)

    @property
    def has_global_levi(self) -> bool:
        return self.mu is None

    @property
    def torus_invariant(self) -> bool:
        """rho depende solo de |z_1|, ..., |z_n| (dominio de Reinhardt)"""
        return False

    def describe(self) -> dict:
        return {"name": self.name, "n": self.dim_n, "params": self.params.tolist(), "mu": self.mu}


@dataclass(frozen=True, eq=False)
class ComplexEllipsoid(Domain):
    """sum a_j |z_j|^2 < 1"""

    @property
    def torus_invariant(self) -> bool:
        return True

    def rho(self, z):
        z = np.asarray(z, dtype=complex)
        return np.sum(self.params * np.abs(z) ** 2, axis=-1) - 1.0

    def del_rho(self, z):
        z = np.asarray(z, dtype=complex)
        return self.params * np.conj(z)

    def holo_hessian(self, z):
        z = np.asarray(z, dtype=complex)
        return np.zeros(z.shape + (self.dim_n,), dtype=complex)

    def mixed_hessian(self, z):
        z = np.asarray(z, dtype=complex)
        h = np.diag(self.params).astype(complex)
        return np.broadcast_to(h, z.shape + (self.dim_n,)).copy()

    def radial_scale(self, u):
        u = np.asarray(u, dtype=complex)
        return 1.0 / np.sqrt(np.sum(self.params * np.abs(u) ** 2, axis=-1))


@dataclass(frozen=True, eq=False)
class UnitBall(ComplexEllipsoid):
    """|z| < 1"""


@dataclass(frozen=True, eq=False)
class PerturbedBall(Domain):
    """|z|^2 - 1 + kappa |Re z_1|^3 < 0 (segundas derivadas Lipschitz, no C^1)"""

    @property
    def kappa(self) -> float:
        return float(self.params[0])

    def rho(self, z):
        z = np.asarray(z, dtype=complex)
        x = z[..., 0].real
        return np.sum(np.abs(z) ** 2, axis=-1) - 1.0 + self.kappa * np.abs(x) ** 3

    def del_rho(self, z):
        z = np.asarray(z, dtype=complex)
        out = np.conj(z).copy()
        x = z[..., 0].real
        out[..., 0] += 1.5 * self.kappa * x * np.abs(x)
        return out

    def holo_hessian(self, z):
        z = np.asarray(z, dtype=complex)
        out = np.zeros(z.shape + (self.dim_n,), dtype=complex)
        out[..., 0, 0] = 1.5 * self.kappa * np.abs(z[..., 0].real)
        return out

    def mixed_hessian(self, z):
        z = np.asarray(z, dtype=complex)
        out = np.broadcast_to(np.eye(self.dim_n, dtype=complex), z.shape + (self.dim_n,)).copy()
        out[..., 0, 0] += 1.5 * self.kappa * np.abs(z[..., 0].real)
        return out

    def radial_scale(self, u):
        u = np.asarray(u, dtype=complex)
        r2 = np.sum(np.abs(u) ** 2, axis=-1)
        c3 = self.kappa * np.abs(u[..., 0].real) ** 3
        # f(t) = c3 t^3 + r2 t^2 - 1 convexa y creciente en t > 0: Newton monotono
        t = 1.0 / np.sqrt(r2)
        for _ in range(80):
            f = c3 * t ** 3 + r2 * t ** 2 - 1.0
            step = f / (3.0 * c3 * t ** 2 + 2.0 * r2 * t)
            t = t - step
            if np.all(np.abs(step) < 1e-16):
                break
        return t


# ============================================================================
# FABRICA
# ============================================================================

def build_domain(spec: Union[DomainSpec, dict], validate: bool = True) -> Domain:
    """Construye un dominio del catalogo a partir de su especificacion"""
    if isinstance(spec, dict):
        try:
            spec = DomainSpec(**spec)
        except ValidationError as e:
            raise ConfigurationError(f"Dominio invalido: {e}") from e

    n = spec.n
    if spec.name == DomainName.BALL:
        domain = UnitBall(name="ball", dim_n=n, params=np.ones(n))
    elif spec.name == DomainName.ELLIPSOID:
        domain = ComplexEllipsoid(name="ellipsoid", dim_n=n, params=np.asarray(spec.a, dtype=float))
    elif spec.name == DomainName.PERTURBED_BALL:
        mu = spec.mu if spec.mu is not None else DEFAULT_PERTURBED_MU
        domain = PerturbedBall(name="perturbed_ball", dim_n=n, params=np.array([spec.kappa]), mu=mu)
    else:
        raise ConfigurationError(f"Dominio desconocido: {spec.name}")

    if spec.mu is not None and domain.has_global_levi:
        logger.warning(f"mu={spec.mu} ignored for {domain.name}: Levi polynomial is global")

    if validate:
        if domain.rho(domain.witness) >= 0:
            raise ConfigurationError(f"{domain.name}: witness point is not interior")
        samples = sample_boundary(domain, 256, np.random.default_rng(0))
        min_eig = check_strict_psh(domain, samples)
        logger.debug(f"{domain.name}: min Levi eigenvalue {min_eig:.4f}")
    return domain


# ============================================================================
# OPERACIONES
# ============================================================================

def eval_rho(domain: Domain, z) -> np.ndarray:
    return domain.rho(np.asarray(z, dtype=complex))


def eval_del_rho(domain: Domain, w) -> np.ndarray:
    return domain.del_rho(np.asarray(w, dtype=complex))


def eval_hessians(domain: Domain, w) -> Tuple[np.ndarray, np.ndarray]:
    w = np.asarray(w, dtype=complex)
    return domain.holo_hessian(w), domain.mixed_hessian(w)


def project_to_boundary(domain: Domain, u: np.ndarray) -> np.ndarray:
    """Proyeccion radial de direcciones sobre {rho = 0}"""
    u = np.asarray(u, dtype=complex)
    return domain.radial_scale(u)[..., None] * u


def sample_boundary(domain: Domain, count: int, rng: np.random.Generator) -> np.ndarray:
    """Puntos de bD a partir de direcciones gaussianas en C^n"""
    u = rng.standard_normal((count, domain.dim_n)) + 1j * rng.standard_normal((count, domain.dim_n))
    u /= np.linalg.norm(u, axis=-1, keepdims=True)
    return project_to_boundary(domain, u)


def inradius_proxy(domain: Domain) -> float:
    """Minima escala radial sobre direcciones de prueba"""
    if isinstance(domain, ComplexEllipsoid):
        return float(1.0 / np.sqrt(np.max(domain.params)))
    # el minimo del dominio perturbado se alcanza en la direccion Re z_1
    directions = np.zeros((domain.dim_n + 1, domain.dim_n), dtype=complex)
    directions[:domain.dim_n] = np.eye(domain.dim_n)
    directions[domain.dim_n, 0] = 1j
    return float(np.min(domain.radial_scale(directions)))


def check_strict_psh(domain: Domain, samples: np.ndarray) -> float:
    """Minimo autovalor de la forma de Levi sobre muestras de bD"""
    samples = np.atleast_2d(np.asarray(samples, dtype=complex))
    residual = np.abs(domain.rho(samples))
    worst = int(np.argmax(residual))
    if residual[worst] > settings.FRAME_TOL:
        raise OffBoundaryError(
            f"sample {worst} has |rho| = {residual[worst]:.2e} (not on bD)"
        )
    eigenvalues = np.linalg.eigvalsh(domain.mixed_hessian(samples))
    min_eig = float(np.min(eigenvalues))
    if min_eig <= 0:
        raise DomainRejectedError(
            f"{domain.name}: Levi form not positive definite (min eigenvalue {min_eig:.3e})"
        )
    return min_eig


def levi_lower_bound(domain: Domain, g_values: np.ndarray, w: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Re g(w,z) / (-rho(z) + |w-z|^2) para pares dados"""
    w = np.asarray(w, dtype=complex)
    z = np.asarray(z, dtype=complex)
    denom = -domain.rho(z) + np.sum(np.abs(w - z) ** 2, axis=-1)
    return np.real(g_values) / denom
