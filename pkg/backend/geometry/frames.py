"""
============================================================================
MARCOS ESPECIALES EN LA FRONTERA
============================================================================
En cada w de bD: nu_w = -grad rho / |grad rho| (normal interior),
e_n = i nu_w, y e_1..e_{n-1} por Gram-Schmidt sobre la base canonica sin
la componente e_n (columna de mayor pivote primero).

Coordenadas de z: z_j = <z - w, e_j> = sum_k (z - w)_k conj(e_{j,k}).
Con este convenio <del rho(w), w - z> = (i/2)|grad rho(w)| z_n.
============================================================================
"""

import logging
from dataclasses import dataclass

import numpy as np

from common.config import settings
from common.errors import DegenerateGradientError, OffBoundaryError
from domain.catalog import Domain

logger = logging.getLogger(__name__)

GRADIENT_FLOOR = 1e-12
_INDEPENDENCE_FLOOR = 1e-8


@dataclass(frozen=True, eq=False)
class FrameBundle:
    """Marcos de un conjunto de puntos de bD (arrays apilados)"""

    base: np.ndarray           # (N, n)
    inner_normal: np.ndarray   # (N, n)
    basis: np.ndarray          # (N, n, n), fila j = e_{j+1}
    c_w: np.ndarray            # (N,) = |grad rho| / 2

    def __len__(self) -> int:
        return self.base.shape[0]

    def __getitem__(self, index) -> "FrameBundle":
        index = np.atleast_1d(index)
        return FrameBundle(
            base=self.base[index],
            inner_normal=self.inner_normal[index],
            basis=self.basis[index],
            c_w=self.c_w[index],
        )

    def frame(self, i: int) -> "Frame":
        return Frame(
            base=self.base[i],
            inner_normal=self.inner_normal[i],
            basis=self.basis[i],
            c_w=float(self.c_w[i]),
        )

    def coordinates(self, z: np.ndarray) -> np.ndarray:
        """Coordenadas de z[i] en el marco i: (N, n)"""
        z = np.asarray(z, dtype=complex)
        return np.einsum("...k,...jk->...j", z - self.base, np.conj(self.basis))

    def tangent_vectors(self) -> np.ndarray:
        """Base real orientada de T_w bD: (i e_1, e_1, ..., i e_{n-1}, e_{n-1}, e_n)"""
        n = self.basis.shape[-1]
        vectors = []
        for j in range(n - 1):
            vectors.append(1j * self.basis[:, j])
            vectors.append(self.basis[:, j])
        vectors.append(self.basis[:, n - 1])
        return np.stack(vectors, axis=1)


@dataclass(frozen=True, eq=False)
class Frame:
    """Marco especial centrado en un punto de bD"""

    base: np.ndarray
    inner_normal: np.ndarray
    basis: np.ndarray
    c_w: float

    def coordinates(self, z: np.ndarray) -> np.ndarray:
        """(z_1, ..., z_n) de z en el marco"""
        z = np.asarray(z, dtype=complex)
        return np.einsum("...k,jk->...j", z - self.base, np.conj(self.basis))


def frames_at(domain: Domain, points: np.ndarray) -> FrameBundle:
    """Marcos especiales vectorizados en puntos de bD"""
    points = np.atleast_2d(np.asarray(points, dtype=complex))
    count, n = points.shape

    residual = np.abs(domain.rho(points))
    worst = int(np.argmax(residual))
    if residual[worst] > settings.FRAME_TOL:
        raise OffBoundaryError(f"point {worst} has |rho| = {residual[worst]:.2e}")

    grad = domain.grad_complex(points)
    norm = np.linalg.norm(grad, axis=-1)
    bad = np.flatnonzero(norm < GRADIENT_FLOOR)
    if bad.size:
        raise DegenerateGradientError(f"|grad rho| below {GRADIENT_FLOOR} at points {bad[:5].tolist()}")

    nu = -grad / norm[:, None]
    e_n = 1j * nu

    # base canonica sin componente e_n; <s_k, e_n> = conj(e_n[k])
    residuals = np.eye(n, dtype=complex)[None, :, :] - np.conj(e_n)[:, :, None] * e_n[:, None, :]
    order = np.argsort(-np.linalg.norm(residuals, axis=-1), axis=-1, kind="stable")
    ordered = residuals[np.arange(count)[:, None], order]

    tangent = np.zeros((count, n - 1, n), dtype=complex)
    accepted = np.zeros(count, dtype=int)
    for k in range(n):
        v = ordered[:, k, :].copy()
        for e in [e_n] + [tangent[:, m, :] for m in range(n - 1)]:
            v -= np.sum(v * np.conj(e), axis=-1)[:, None] * e
        length = np.linalg.norm(v, axis=-1)
        take = (length > _INDEPENDENCE_FLOOR) & (accepted < n - 1)
        rows = np.flatnonzero(take)
        tangent[rows, accepted[rows]] = v[rows] / length[rows, None]
        accepted += take

    basis = np.concatenate([tangent, e_n[:, None, :]], axis=1)
    return FrameBundle(base=points, inner_normal=nu, basis=basis, c_w=0.5 * norm)


def special_frame(domain: Domain, w: np.ndarray) -> Frame:
    """Marco especial en un unico punto w de bD"""
    return frames_at(domain, np.asarray(w, dtype=complex)[None, :]).frame(0)
