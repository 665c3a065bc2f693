"""
============================================================================
SUAVIZADO DEL HESSIANO HOLOMORFO (tau^eps)
============================================================================
Para el catalogo con Hessiano holomorfo constante (ball, ellipsoid) tau^eps
es el Hessiano exacto y c_eps = 0. En el dominio perturbado la unica
entrada no suave es 1.5 kappa |x| (x = Re w_1), que se mollifica en x con
un nucleo bump C^inf de soporte [-h, h]:

    M_h(x) = int |x - h s| phi(s) ds,    M_h'(x) = S_h(x)

La escala h(eps) se elige por biseccion hasta que el error sup en la
muestra es <= eps, acotada ademas por la cota global h * m1 * 1.5 kappa.
============================================================================
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from common.errors import UnresolvableEpsilonError
from domain.catalog import Domain, PerturbedBall

logger = logging.getLogger(__name__)

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(64)
_BISECTION_STEPS = 60


def _bump(s: np.ndarray) -> np.ndarray:
    out = np.zeros_like(s, dtype=float)
    inside = np.abs(s) < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - s[inside] ** 2))
    return out


def _piece_integral(lo: np.ndarray, hi: np.ndarray, integrand) -> np.ndarray:
    """int_lo^hi integrand(s) ds con Gauss-Legendre por punto"""
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    s = mid[..., None] + half[..., None] * _GL_NODES
    return half * np.sum(_GL_WEIGHTS * integrand(s), axis=-1)


_BUMP_MASS = float(_piece_integral(np.array(-1.0), np.array(1.0), _bump))
# primer momento absoluto del nucleo normalizado: M_1(0)
_BUMP_ABS_MOMENT = float(
    2.0 * _piece_integral(np.array(0.0), np.array(1.0), lambda s: s * _bump(s)) / _BUMP_MASS
)


def mollified_abs(x: np.ndarray, h: float) -> np.ndarray:
    """M_h(x) = (|.| * phi_h)(x)"""
    x = np.asarray(x, dtype=float)
    if h <= 0:
        return np.abs(x)
    c = np.clip(x / h, -1.0, 1.0)
    left = _piece_integral(-np.ones_like(c), c, lambda s: (x[..., None] - h * s) * _bump(s))
    right = _piece_integral(c, np.ones_like(c), lambda s: (h * s - x[..., None]) * _bump(s))
    return (left + right) / _BUMP_MASS


def mollified_sign(x: np.ndarray, h: float) -> np.ndarray:
    """S_h(x) = d/dx M_h(x)"""
    x = np.asarray(x, dtype=float)
    if h <= 0:
        return np.sign(x)
    c = np.clip(x / h, -1.0, 1.0)
    below = _piece_integral(-np.ones_like(c), c, _bump) / _BUMP_MASS
    return 2.0 * below - 1.0


# ============================================================================
# CAMPO SUAVIZADO
# ============================================================================

@dataclass(frozen=True, eq=False)
class SmoothedHessian:
    """Campo tau^eps con su error sup y la cota de gradiente c_eps"""

    domain: Domain
    eps: float
    scale: float          # h(eps); 0 = Hessiano exacto
    c_eps: float
    sup_error: float

    @property
    def is_exact(self) -> bool:
        return self.scale == 0.0

    def _coefficient(self) -> float:
        return 1.5 * self.domain.kappa if isinstance(self.domain, PerturbedBall) else 0.0

    def tau(self, w: np.ndarray) -> np.ndarray:
        w = np.asarray(w, dtype=complex)
        if self.is_exact:
            return self.domain.holo_hessian(w)
        out = np.zeros(w.shape + (self.domain.dim_n,), dtype=complex)
        out[..., 0, 0] = self._coefficient() * mollified_abs(w[..., 0].real, self.scale)
        return out

    def dtau_dwbar(self, w: np.ndarray) -> np.ndarray:
        """d tau_jk / d conj(w_l), indices (..., j, k, l)"""
        w = np.asarray(w, dtype=complex)
        n = self.domain.dim_n
        out = np.zeros(w.shape[:-1] + (n, n, n), dtype=complex)
        if self.is_exact:
            return out
        # d/d conj(w_1) = (1/2) d/dx sobre funciones de x = Re w_1
        out[..., 0, 0, 0] = 0.5 * self._coefficient() * mollified_sign(w[..., 0].real, self.scale)
        return out

    def entry_error(self, w: np.ndarray) -> np.ndarray:
        """max_jk |d^2 rho/dw_j dw_k - tau_jk| por punto"""
        diff = np.abs(self.domain.holo_hessian(w) - self.tau(w))
        return np.max(diff, axis=(-2, -1))


def _exact(domain: Domain, eps: float) -> SmoothedHessian:
    return SmoothedHessian(domain=domain, eps=eps, scale=0.0, c_eps=0.0, sup_error=0.0)


def smooth_hessian(domain: Domain, eps: float, mesh_sample: np.ndarray) -> SmoothedHessian:
    """Construye tau^eps con error sup <= eps en la muestra"""
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    if not isinstance(domain, PerturbedBall) or domain.kappa == 0.0:
        return _exact(domain, eps)

    coef = 1.5 * domain.kappa
    x = np.asarray(mesh_sample, dtype=complex)[..., 0].real.ravel()
    floor = (np.max(x) - np.min(x)) / max(len(x), 1)

    def measured(h: float) -> float:
        return float(np.max(coef * (mollified_abs(x, h) - np.abs(x))))

    # biseccion sobre la escala mas grande que pasa el test en la muestra
    lo, hi = 0.0, 2.0
    if measured(hi) <= eps:
        h = hi
    else:
        for _ in range(_BISECTION_STEPS):
            mid = 0.5 * (lo + hi)
            if measured(mid) <= eps:
                lo = mid
            else:
                hi = mid
        h = lo
    h = min(h, eps / (coef * _BUMP_ABS_MOMENT))
    if h < floor:
        raise UnresolvableEpsilonError(
            f"eps={eps:.2e} needs mollification scale {h:.2e} below sample resolution {floor:.2e}"
        )

    sup_error = measured(h)
    c_eps = float(np.max(coef * np.abs(mollified_sign(x, h))))
    logger.debug(f"tau^eps: eps={eps} h={h:.4e} sup_error={sup_error:.3e} c_eps={c_eps:.4f}")
    return SmoothedHessian(domain=domain, eps=eps, scale=h, c_eps=c_eps, sup_error=sup_error)


def lipschitz_estimate(smoothed: SmoothedHessian, sample: np.ndarray) -> float:
    """Cociente de diferencias maximo de tau^eps entre vecinos en x = Re w_1"""
    sample = np.asarray(sample, dtype=complex)
    if smoothed.is_exact:
        return 0.0
    order = np.argsort(sample[:, 0].real)
    pts = sample[order]
    x = pts[:, 0].real
    values = smoothed.tau(pts)[:, 0, 0]
    dx = np.diff(x)
    keep = dx > 1e-12
    if not np.any(keep):
        return 0.0
    return float(np.max(np.abs(np.diff(values))[keep] / dx[keep]))


def truncation_cap(smoothed: SmoothedHessian, s0: float) -> float:
    """min(s0, 1/c_eps)"""
    if smoothed.c_eps > 0:
        return min(s0, 1.0 / smoothed.c_eps)
    return s0


def resolve_smoothed(smoothed: Optional[SmoothedHessian], domain: Domain) -> SmoothedHessian:
    """Hessiano exacto (g_0) cuando no se adjunta campo suavizado"""
    return smoothed if smoothed is not None else _exact(domain, 0.0)
