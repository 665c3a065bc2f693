"""
============================================================================
DENOMINADORES DE LEVI
============================================================================
L(w,z) = sum_j b_j(w)(w_j - z_j) - 1/2 sum_jk t_jk(w)(w_j - z_j)(w_k - z_k)
g(w,z) = chi L + (1 - chi)|w - z|^2

con b = del rho(w) y t el Hessiano holomorfo exacto (g_0) o tau^eps (g_eps).
chi = chi(|w - z|) vale 1 en |w-z| <= mu/2 y 0 en |w-z| >= mu (bump C^inf);
los dominios con polinomio de Levi global usan chi = 1.

Todas las funciones admiten broadcasting: w (..., n), z (..., n).
============================================================================
"""

from typing import Optional, Tuple

import numpy as np

from common.errors import ConfigurationError
from domain.catalog import Domain
from domain.smoothing import SmoothedHessian


def smooth_step(t: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Perfil C^inf decreciente: 1 en t <= 1/2, 0 en t >= 1.

    Returns:
        (valor, derivada)
    """
    t = np.asarray(t, dtype=float)
    u = np.clip(2.0 * t - 1.0, 0.0, 1.0)  # 0 -> 1 sobre [1/2, 1]
    inner = (u > 0.0) & (u < 1.0)
    a = np.zeros_like(u)
    b = np.zeros_like(u)
    a[inner] = np.exp(-1.0 / u[inner])
    b[inner] = np.exp(-1.0 / (1.0 - u[inner]))
    a[u >= 1.0] = 1.0
    b[u <= 0.0] = 1.0
    value = b / (a + b)

    derivative = np.zeros_like(u)
    uu = u[inner]
    da = np.exp(-1.0 / uu) / uu ** 2
    db = -np.exp(-1.0 / (1.0 - uu)) / (1.0 - uu) ** 2
    ai, bi = a[inner], b[inner]
    derivative[inner] = 2.0 * (db * ai - bi * da) / (ai + bi) ** 2
    return value, derivative


def local_cutoff(domain: Domain, w: np.ndarray, z: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    chi(|w - z|) del dominio.

    Returns:
        (chi, chi'(r), r)
    """
    r = np.linalg.norm(np.asarray(w) - np.asarray(z), axis=-1)
    if domain.has_global_levi:
        return np.ones_like(r), np.zeros_like(r), r
    value, slope = smooth_step(r / domain.mu)
    return value, slope / domain.mu, r


def levi_polynomial(domain: Domain, w: np.ndarray, z: np.ndarray, hessian: np.ndarray) -> np.ndarray:
    diff = np.asarray(w, dtype=complex) - np.asarray(z, dtype=complex)
    linear = np.sum(domain.del_rho(w) * diff, axis=-1)
    quadratic = np.einsum("...j,...jk,...k->...", diff, hessian, diff)
    return linear - 0.5 * quadratic


def _blend(domain: Domain, w, z, hessian) -> np.ndarray:
    w = np.asarray(w, dtype=complex)
    z = np.asarray(z, dtype=complex)
    w, z = np.broadcast_arrays(w, z)
    chi, _, r = local_cutoff(domain, w, z)
    levi = levi_polynomial(domain, w, z, hessian)
    if domain.has_global_levi:
        return levi
    return chi * levi + (1.0 - chi) * r ** 2


def eval_g0(domain: Domain, w, z) -> np.ndarray:
    """g_0 con el Hessiano holomorfo exacto"""
    w = np.asarray(w, dtype=complex)
    return _blend(domain, w, z, domain.holo_hessian(np.broadcast_to(w, np.broadcast_shapes(w.shape, np.shape(z)))))


def eval_g_eps(domain: Domain, smoothed: Optional[SmoothedHessian], w, z) -> np.ndarray:
    """g_eps con tau^eps en lugar del Hessiano"""
    if smoothed is None or smoothed.is_exact:
        return eval_g0(domain, w, z)
    w = np.asarray(w, dtype=complex)
    wb = np.broadcast_to(w, np.broadcast_shapes(w.shape, np.shape(z)))
    return _blend(domain, w, z, smoothed.tau(wb))


def generating_form(domain: Domain, smoothed: Optional[SmoothedHessian], w, z) -> Tuple[np.ndarray, np.ndarray]:
    """
    Coeficientes de G(w,z) y de dbar_w G.

    G_k = chi [b_k - 1/2 sum_j t_jk (w_j - z_j)] + (1 - chi) conj(w_k - z_k)
    D_kl = d G_k / d conj(w_l)

    Returns:
        (G (..., n), D (..., n, n)) con g = sum_k G_k (w_k - z_k)
    """
    w = np.asarray(w, dtype=complex)
    z = np.asarray(z, dtype=complex)
    w, z = np.broadcast_arrays(w, z)
    n = domain.dim_n
    diff = w - z
    if smoothed is None and not domain.has_global_levi:
        # dbar_w del Hessiano holomorfo no suave no existe
        raise ConfigurationError(f"{domain.name}: the generating form requires a smoothed Hessian")
    exact = smoothed is None or smoothed.is_exact
    t = domain.holo_hessian(w) if exact else smoothed.tau(w)
    b = domain.del_rho(w)
    levi_form = b - 0.5 * np.einsum("...jk,...j->...k", t, diff)
    dlevi = domain.mixed_hessian(w)
    if not exact:
        dlevi = dlevi - 0.5 * np.einsum("...jkl,...j->...kl", smoothed.dtau_dwbar(w), diff)

    if domain.has_global_levi:
        return levi_form, dlevi

    chi, slope, r = local_cutoff(domain, w, z)
    euclid = np.conj(diff)
    g_coeff = chi[..., None] * levi_form + (1.0 - chi[..., None]) * euclid
    safe_r = np.where(r > 0, r, 1.0)
    dchi = (slope / (2.0 * safe_r))[..., None] * diff  # d chi / d conj(w_l)
    d_coeff = (
        dchi[..., None, :] * (levi_form - euclid)[..., :, None]
        + chi[..., None, None] * dlevi
        + (1.0 - chi[..., None, None]) * np.eye(n)
    )
    return g_coeff, d_coeff
