"""
============================================================================
BOLAS DE FRONTERA Y PERFILES RADIALES
============================================================================
B_r(w) = {z en bD : delta(w, z) < r} sobre los nodos de una malla.

Perfil radial: medias sobre centros c (fuera de la malla) de
    lambda(B_r(c)),
    int_{r/2 <= delta < r} delta^a d(lambda)   (capa diadica),
    int_{delta >= r} delta^a d(lambda)          (exterior),
en radios diadicos r_k = r_0 2^(-k). Cada centro aporta sus pares
(centro, nodo); hits cuenta los pares que caen en la bola o en la capa.
============================================================================
"""

from dataclasses import dataclass, field
from typing import Dict, Sequence, Union

import numpy as np

from geometry.quasi_distance import quasi_distance

CENTER_CHUNK = 50


@dataclass(frozen=True, eq=False)
class BoundaryBall:
    center: Union[int, np.ndarray]
    radius: float
    members: np.ndarray  # indices de nodos

    def lambda_mass(self, mesh) -> float:
        return float(np.sum(mesh.lambda_weights[self.members]))


def ball_members(mesh, center, r: float) -> BoundaryBall:
    """Nodos de B_r(center); center es un indice de nodo o un punto de bD"""
    point = mesh.nodes[center] if np.ndim(center) == 0 else np.asarray(center, dtype=complex)
    distances = quasi_distance(mesh.domain, point, mesh.nodes)
    members = np.flatnonzero(distances < r)
    return BoundaryBall(center=center, radius=r, members=members)


@dataclass(frozen=True, eq=False)
class RadialProfile:
    radii: np.ndarray
    centers: int
    hits: np.ndarray        # pares con delta < r
    shell_hits: np.ndarray  # pares con r/2 <= delta < r
    mass: np.ndarray        # media de lambda(B_r)
    shells: Dict[float, np.ndarray] = field(default_factory=dict)
    outer: Dict[float, np.ndarray] = field(default_factory=dict)

    def resolved(self, min_hits: int, shells: bool = False) -> np.ndarray:
        """Prefijo de radios (de mayor a menor) con al menos min_hits pares"""
        counts = self.shell_hits if shells else self.hits
        ok = counts >= min_hits
        stop = int(np.argmin(ok)) if not np.all(ok) else ok.size
        return np.arange(stop)


def dyadic_radii(top: float, smallest: float = 1e-3) -> np.ndarray:
    """2^floor(log2 top), la mitad, ... hasta smallest"""
    r0 = 2.0 ** np.floor(np.log2(top))
    count = max(1, int(np.floor(np.log2(r0 / smallest))) + 1)
    return r0 * 0.5 ** np.arange(count)


def radial_profile(
    mesh,
    centers: np.ndarray,
    radii: Sequence[float],
    exponents: Sequence[float] = (),
) -> RadialProfile:
    """Sumas radiales ponderadas por lambda, acumuladas por bloques de centros"""
    radii = np.asarray(radii, dtype=float)
    centers = np.atleast_2d(np.asarray(centers, dtype=complex))
    weights = mesh.lambda_weights
    hits = np.zeros(radii.size)
    shell_hits = np.zeros(radii.size)
    mass = np.zeros(radii.size)
    shells = {a: np.zeros(radii.size) for a in exponents}
    outer = {a: np.zeros(radii.size) for a in exponents}

    for start in range(0, centers.shape[0], CENTER_CHUNK):
        block = centers[start:start + CENTER_CHUNK]
        d = quasi_distance(mesh.domain, block[:, None, :], mesh.nodes[None, :, :])
        positive = d > 0
        safe = np.where(positive, d, 1.0)
        powers = {a: safe ** a * weights[None, :] for a in exponents}
        for k, r in enumerate(radii):
            inside = d < r
            shell = inside & (d >= 0.5 * r)
            beyond = (~inside) & positive
            hits[k] += np.count_nonzero(inside)
            shell_hits[k] += np.count_nonzero(shell)
            mass[k] += np.sum(inside * weights[None, :])
            for a, power in powers.items():
                shells[a][k] += np.sum(np.where(shell, power, 0.0))
                outer[a][k] += np.sum(np.where(beyond, power, 0.0))

    count = centers.shape[0]
    return RadialProfile(
        radii=radii,
        centers=count,
        hits=hits,
        shell_hits=shell_hits,
        mass=mass / count,
        shells={a: v / count for a, v in shells.items()},
        outer={a: v / count for a, v in outer.items()},
    )
