"""
Cuasi-distancia delta(w,z) = |g_0(w,z)|^(1/2) sobre bD
"""

import numpy as np

from domain.catalog import Domain
from kernels.denominators import eval_g0


def quasi_distance(domain: Domain, w, z) -> np.ndarray:
    return np.sqrt(np.abs(eval_g0(domain, w, z)))


def quasi_distance_matrix(domain: Domain, sources: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """M[i, j] = delta(sources_j, targets_i) (convenio fila = salida)"""
    return quasi_distance(domain, sources[None, :, :], targets[:, None, :])
