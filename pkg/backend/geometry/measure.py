"""
============================================================================
MEDIDA DE LERAY-LEVI
============================================================================
d(lambda) = (2 pi i)^(-n) j*(del rho ^ (dbar del rho)^(n-1)) = Lambda d(sigma)

Lambda se obtiene evaluando la forma sobre la base tangente ortonormal
orientada del marco especial (pullback). La formula cerrada solo se usa
para comparar la forma: Lambda = (n-1)! det_T(L) |grad rho| / (4 pi^n),
con det_T(L) el determinante de Levi en la base e_1..e_{n-1}.
============================================================================
"""

import logging
import math

import numpy as np

from common.errors import MeshingError
from domain.catalog import Domain
from geometry.forms import cf_normalisation, evaluate_cf_form
from geometry.frames import FrameBundle

logger = logging.getLogger(__name__)

_DENSITY_FLOOR = 1e-14


def leray_levi_density(domain: Domain, frames: FrameBundle) -> np.ndarray:
    """Lambda(w) en los puntos base de los marcos"""
    w = frames.base
    value = cf_normalisation(domain.dim_n) * evaluate_cf_form(
        domain.del_rho(w), domain.mixed_hessian(w), frames.tangent_vectors()
    )
    density = value.real
    bad = np.flatnonzero(density <= _DENSITY_FLOOR)
    if bad.size:
        raise MeshingError(
            f"Leray-Levi density not positive at nodes {bad[:5].tolist()} (min {density.min():.3e})"
        )
    if np.max(np.abs(value.imag)) > 1e-8 * np.max(density):
        logger.warning("Leray-Levi pullback has a non-negligible imaginary part")
    return density


def levi_determinant(domain: Domain, frames: FrameBundle) -> np.ndarray:
    """det de la forma de Levi restringida a e_1..e_{n-1}"""
    n = domain.dim_n
    tangent = frames.basis[:, : n - 1, :]
    levi = np.einsum("...ab,...ja,...kb->...jk", domain.mixed_hessian(frames.base), tangent, np.conj(tangent))
    return np.linalg.det(levi).real


def leray_levi_closed_form(domain: Domain, frames: FrameBundle) -> np.ndarray:
    """Formula cerrada coherente con el pullback"""
    n = domain.dim_n
    return (
        math.factorial(n - 1)
        * levi_determinant(domain, frames)
        * domain.grad_norm(frames.base)
        / (4.0 * np.pi ** n)
    )


def closed_form_ratio(domain: Domain, frames: FrameBundle, density: np.ndarray) -> np.ndarray:
    """Lambda / ((n-1)! (4 pi)^(-n) det_T |grad rho|); constante 4^(n-1) esperada"""
    n = domain.dim_n
    reference = (
        math.factorial(n - 1)
        * (4.0 * np.pi) ** (-n)
        * np.abs(levi_determinant(domain, frames))
        * domain.grad_norm(frames.base)
    )
    return density / reference
