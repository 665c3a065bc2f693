"""
============================================================================
NUCLEOS DE CAUCHY-FANTAPPIE
============================================================================
- cf_density:          (2 pi i)^(-n) j*(G ^ (dbar G)^(n-1)) / g^n  (contra sigma)
- essential:           g_eps(w,z)^(-n)                              (contra lambda)
- adjoint_essential:   conj(g_eps(z,w))^(-n)
- truncated_*:         nucleo base * chi_s(w,z)
- antisym_A:           (g_eps(w,z)^(-n) - conj(g_eps(z,w))^(-n)) chi_s(w,z)

Se rechaza |g| < KERNEL_FLOOR: las integrales singulares pasan por la
formula de sustraccion o por desplazamientos z^delta.
============================================================================
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from common.config import settings
from common.errors import NearSingularityError
from common.observability import record_refusal
from common.schemas import KernelKind, KernelSpec
from domain.catalog import Domain
from domain.smoothing import SmoothedHessian
from geometry.cutoffs import CutoffCalibration, cutoff_chi_sym
from geometry.forms import cf_normalisation, evaluate_cf_form
from geometry.frames import FrameBundle
from geometry.quasi_distance import quasi_distance
from kernels.denominators import eval_g0, eval_g_eps, generating_form

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class KernelContext:
    """Datos compartidos (solo lectura) por las evaluaciones de nucleos"""

    domain: Domain
    smoothed: Optional[SmoothedHessian] = None
    calibration: Optional[CutoffCalibration] = None


def _guard(g: np.ndarray, kind: str) -> np.ndarray:
    small = np.abs(g) < settings.KERNEL_FLOOR
    if np.any(small):
        record_refusal(kind)
        flat = int(np.flatnonzero(small.ravel())[0])
        pair = np.unravel_index(flat, g.shape) if g.ndim else ()
        raise NearSingularityError(tuple(int(i) for i in pair), float(np.abs(g.ravel()[flat])))
    return g


def eval_essential(domain: Domain, smoothed: Optional[SmoothedHessian], w, z) -> np.ndarray:
    g = _guard(np.asarray(eval_g_eps(domain, smoothed, w, z)), "essential")
    return g ** (-domain.dim_n)


def eval_adjoint_essential(domain: Domain, smoothed: Optional[SmoothedHessian], w, z) -> np.ndarray:
    g = _guard(np.asarray(eval_g_eps(domain, smoothed, z, w)), "adjoint_essential")
    return np.conj(g) ** (-domain.dim_n)


def eval_cf_density(
    domain: Domain,
    smoothed: Optional[SmoothedHessian],
    w,
    z,
    frames: FrameBundle,
) -> np.ndarray:
    """Densidad de C^1 respecto de sigma en w (marcos alineados con w)"""
    g_coeff, d_coeff = generating_form(domain, smoothed, w, z)
    g = _guard(np.sum(g_coeff * (np.asarray(w) - np.asarray(z)), axis=-1), "cf_density")
    form = evaluate_cf_form(g_coeff, d_coeff, frames.tangent_vectors())
    return cf_normalisation(domain.dim_n) * form / g ** domain.dim_n


def eval_remainder(
    domain: Domain,
    smoothed: Optional[SmoothedHessian],
    w,
    z,
    frames: FrameBundle,
    lambda_values: np.ndarray,
) -> np.ndarray:
    """C^1 - Lambda g^(-n): parte no esencial (densidad respecto de sigma)"""
    density = eval_cf_density(domain, smoothed, w, z, frames)
    return density - lambda_values * eval_essential(domain, smoothed, w, z)


def _chi(context: KernelContext, w, z, s: float) -> np.ndarray:
    if context.calibration is None:
        raise ValueError("truncated kernels need a cut-off calibration")
    return cutoff_chi_sym(context.domain, context.calibration, w, z, s)


def eval_truncated(kind: KernelKind, context: KernelContext, w, z, s: float) -> np.ndarray:
    """Nucleo base por chi_s; cero exacto fuera del soporte"""
    chi = _chi(context, w, z, s)
    support = chi > 0
    out = np.zeros(np.broadcast_shapes(np.shape(w)[:-1], np.shape(z)[:-1], chi.shape), dtype=complex)
    if not np.any(support):
        return out
    wb, zb = np.broadcast_arrays(np.asarray(w, dtype=complex), np.asarray(z, dtype=complex))
    ws, zs = wb[support], zb[support]
    if kind == KernelKind.TRUNCATED_ESSENTIAL:
        base = eval_essential(context.domain, context.smoothed, ws, zs)
    elif kind == KernelKind.TRUNCATED_ADJOINT:
        base = eval_adjoint_essential(context.domain, context.smoothed, ws, zs)
    elif kind == KernelKind.ANTISYM_A:
        base = (
            eval_essential(context.domain, context.smoothed, ws, zs)
            - eval_adjoint_essential(context.domain, context.smoothed, ws, zs)
        )
    else:
        raise ValueError(f"kernel '{kind.value}' has no truncated form")
    out[support] = base * chi[support]
    return out


def eval_antisym(context: KernelContext, w, z, s: float) -> np.ndarray:
    return eval_truncated(KernelKind.ANTISYM_A, context, w, z, s)


# ============================================================================
# COCIENTES DE DIFERENCIAS
# ============================================================================

def kernel_difference_ratio(
    domain: Domain, smoothed: Optional[SmoothedHessian], w, z, z_prime, c: float
) -> np.ndarray:
    """
    |K(w,z) - K(w,z')| delta(w,z)^(2n+1) / delta(z,z').

    NaN en muestras no admisibles (delta(w,z) < c delta(z,z')); 0 si z' = z.
    """
    n = domain.dim_n
    d_wz = quasi_distance(domain, w, z)
    d_zz = quasi_distance(domain, z, z_prime)
    admissible = (d_wz >= c * d_zz) & (d_wz > 0)
    out = np.full(np.shape(d_wz), np.nan)
    same = admissible & (d_zz == 0)
    out[same] = 0.0
    keep = admissible & (d_zz > 0)
    if np.any(keep):
        wb, zb, zpb = np.broadcast_arrays(*(np.asarray(a, dtype=complex) for a in (w, z, z_prime)))
        k1 = eval_essential(domain, smoothed, wb[keep], zb[keep])
        k2 = eval_essential(domain, smoothed, wb[keep], zpb[keep])
        out[keep] = np.abs(k1 - k2) * d_wz[keep] ** (2 * n + 1) / d_zz[keep]
    return out


def kernel_difference_ratio_w(
    domain: Domain, smoothed: Optional[SmoothedHessian], w, w_prime, z, c: float
) -> np.ndarray:
    """Variante en la primera variable: |K(w,z) - K(w',z)| delta(w,z)^(2n+1) / delta(w,w')"""
    n = domain.dim_n
    d_wz = quasi_distance(domain, w, z)
    d_ww = quasi_distance(domain, w, w_prime)
    admissible = (d_wz >= c * d_ww) & (d_wz > 0)
    out = np.full(np.shape(d_wz), np.nan)
    out[admissible & (d_ww == 0)] = 0.0
    keep = admissible & (d_ww > 0)
    if np.any(keep):
        wb, wpb, zb = np.broadcast_arrays(*(np.asarray(a, dtype=complex) for a in (w, w_prime, z)))
        k1 = eval_essential(domain, smoothed, wb[keep], zb[keep])
        k2 = eval_essential(domain, smoothed, wpb[keep], zb[keep])
        out[keep] = np.abs(k1 - k2) * d_wz[keep] ** (2 * n + 1) / d_ww[keep]
    return out


def g_difference_ratio(domain: Domain, smoothed: Optional[SmoothedHessian], w, w_prime, z) -> np.ndarray:
    """|g_eps(w,z) - g_eps(w',z)| / (delta(w,w')^2 + delta(w,w') delta(w,z))"""
    d_ww = quasi_distance(domain, w, w_prime)
    d_wz = quasi_distance(domain, w, z)
    denom = d_ww ** 2 + d_ww * d_wz
    num = np.abs(eval_g_eps(domain, smoothed, w, z) - eval_g_eps(domain, smoothed, w_prime, z))
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(denom > 0, num / np.where(denom > 0, denom, 1.0), np.nan)


def symmetry_ratio(domain: Domain, smoothed: Optional[SmoothedHessian], w, z, eps: float) -> np.ndarray:
    """|g_eps(w,z) - conj g_eps(z,w)| / (eps delta(w,z)^2)"""
    diff = np.abs(eval_g_eps(domain, smoothed, w, z) - np.conj(eval_g_eps(domain, smoothed, z, w)))
    d = quasi_distance(domain, w, z)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(d > 0, diff / (eps * np.where(d > 0, d, 1.0) ** 2), np.nan)


def truncation_scale(
    domain: Domain,
    smoothed: Optional[SmoothedHessian],
    w: np.ndarray,
    z: np.ndarray,
    s_cap: float,
    bound: float,
) -> float:
    """
    s(eps) = min(s_cap, s_sym): s_sym es la mayor escala (biseccion) en la que
    la razon de simetria sobre pares con delta <= s permanece <= bound.
    """
    eps = smoothed.eps if smoothed is not None and smoothed.eps > 0 else 1.0
    ratio = symmetry_ratio(domain, smoothed, w, z, eps)
    d = quasi_distance(domain, w, z)

    def within(s: float) -> bool:
        mask = (d <= s) & np.isfinite(ratio)
        return not np.any(mask) or float(np.max(ratio[mask])) <= bound

    if within(s_cap):
        return s_cap
    lo, hi = 0.0, s_cap
    for _ in range(40):
        mid = 0.5 * (lo + hi)
        if within(mid):
            lo = mid
        else:
            hi = mid
    return max(lo, 1e-6)


# ============================================================================
# DESPACHO POR ESPECIFICACION
# ============================================================================

def evaluate_kernel(spec: KernelSpec, context: KernelContext, w, z, frames: Optional[FrameBundle] = None) -> np.ndarray:
    """K(w, z) segun la especificacion"""
    kind = spec.kind
    domain, smoothed = context.domain, context.smoothed
    if kind == KernelKind.G0:
        return eval_g0(domain, w, z)
    if kind == KernelKind.G_EPS:
        return eval_g_eps(domain, smoothed, w, z)
    if kind == KernelKind.ESSENTIAL:
        return eval_essential(domain, smoothed, w, z)
    if kind == KernelKind.ADJOINT_ESSENTIAL:
        return eval_adjoint_essential(domain, smoothed, w, z)
    if kind == KernelKind.CF_DENSITY:
        if frames is None:
            raise ValueError("cf_density needs the frames at w")
        return eval_cf_density(domain, smoothed, w, z, frames)
    if kind in (KernelKind.TRUNCATED_ESSENTIAL, KernelKind.TRUNCATED_ADJOINT, KernelKind.ANTISYM_A):
        return eval_truncated(kind, context, w, z, spec.s)
    raise ValueError(f"kernel '{kind.value}' is not a pointwise kernel")
