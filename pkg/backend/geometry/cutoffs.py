"""
============================================================================
FUNCIONES DE CORTE SOBRE BOLAS DE FRONTERA
============================================================================
chi~_{r,c}(w) = chi(|Im<del rho(c), c - w> + i |c - w|^2| / (k r^2))

con chi el perfil C^inf (1 en [0, 1/2], 0 en [1, inf)) y k calibrada por
dominio sobre una malla piloto: si K = sup delta^2 / A, se toma k = 1/(4K),
de modo que chi~ = 0 cuando delta(c, w) >= r. El plato chi~ = 1 se alcanza
en delta(c, w) <= k' r con k' = sqrt(a k / 2), a = inf delta^2 / A.

chi_s(w,z) = chi~_{s,w}(z) chi~_{s,z}(w) (simetrica).
============================================================================
"""

import logging
from dataclasses import dataclass

import numpy as np

from domain.catalog import Domain
from geometry.quasi_distance import quasi_distance
from kernels.denominators import smooth_step

logger = logging.getLogger(__name__)

CALIBRATION_MARGIN = 4.0


@dataclass(frozen=True)
class CutoffCalibration:
    """Constantes del corte calibradas en la malla piloto"""

    c: float              # escala dentro del argumento del corte
    c_prime: float        # radio relativo del plato
    k_equiv: float        # sup delta^2 / A
    a_equiv: float        # inf delta^2 / A
    c_tri: float          # constante cuasi-triangular medida
    difference_constant: float  # admisibilidad delta(w,z) >= c delta(z,z')


def shell_argument(domain: Domain, center, w) -> np.ndarray:
    """A = |Im<del rho(c), c - w> + i |c - w|^2|"""
    center = np.asarray(center, dtype=complex)
    w = np.asarray(w, dtype=complex)
    diff = center - w
    imag = np.imag(np.sum(domain.del_rho(center) * diff, axis=-1))
    return np.hypot(imag, np.sum(np.abs(diff) ** 2, axis=-1))


def calibrate_cutoff(domain: Domain, pilot: np.ndarray, triples: int = 4000, seed: int = 0) -> CutoffCalibration:
    """Mide las constantes de equivalencia delta^2 ~ A y la cuasi-triangular"""
    pilot = np.asarray(pilot, dtype=complex)
    count = pilot.shape[0]
    w = pilot[None, :, :]
    z = pilot[:, None, :]
    off = ~np.eye(count, dtype=bool)
    delta_sq = quasi_distance(domain, w, z)[off] ** 2
    shell = shell_argument(domain, w, z)[off]
    valid = shell > 0
    ratio = delta_sq[valid] / shell[valid]
    k_equiv = float(np.max(ratio))
    a_equiv = float(np.min(ratio))
    c = 1.0 / (CALIBRATION_MARGIN * k_equiv)
    c_prime = float(np.sqrt(a_equiv * c / 2.0))

    rng = np.random.default_rng(seed)
    idx = rng.integers(0, count, size=(triples, 3))
    idx = idx[(idx[:, 0] != idx[:, 1]) & (idx[:, 1] != idx[:, 2]) & (idx[:, 0] != idx[:, 2])]
    a_pt, b_pt, m_pt = pilot[idx[:, 0]], pilot[idx[:, 1]], pilot[idx[:, 2]]
    lhs = quasi_distance(domain, a_pt, b_pt)
    rhs = quasi_distance(domain, a_pt, m_pt) + quasi_distance(domain, m_pt, b_pt)
    c_tri = float(np.max(lhs / rhs)) if len(lhs) else 1.0

    calibration = CutoffCalibration(
        c=c,
        c_prime=c_prime,
        k_equiv=k_equiv,
        a_equiv=a_equiv,
        c_tri=c_tri,
        difference_constant=CALIBRATION_MARGIN * c_tri,
    )
    logger.debug(f"{domain.name}: cutoff calibration {calibration}")
    return calibration


def cutoff_chi_tilde(domain: Domain, calibration: CutoffCalibration, center, r: float, w) -> np.ndarray:
    if r <= 0:
        raise ValueError(f"cut-off scale must be positive, got {r}")
    value, _ = smooth_step(shell_argument(domain, center, w) / (calibration.c * r ** 2))
    return value


def cutoff_chi_sym(domain: Domain, calibration: CutoffCalibration, w, z, s: float) -> np.ndarray:
    return cutoff_chi_tilde(domain, calibration, w, s, z) * cutoff_chi_tilde(domain, calibration, z, s, w)
