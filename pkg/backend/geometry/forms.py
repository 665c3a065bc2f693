"""
============================================================================
EVALUACION DE FORMAS c ^ (beta)^(n-1) SOBRE MARCOS TANGENTES
============================================================================
c = sum_k c_k dw_k          (1,0)-forma, coeficientes (..., n)
beta = sum_kl D_kl dconj(w_l) ^ dw_k, coeficientes (..., n, n)

Sobre 2m+1 vectores V (m = n-1):
    (c ^ beta^m)(V) = m! sum_i (-1)^i c(V_i) Pf(B sin fila/columna i)
con B_ij = beta(V_i, V_j).
============================================================================
"""

import math

import numpy as np


def _pfaffian(b: np.ndarray) -> np.ndarray:
    """Pfaffiano de matrices antisimetricas 2x2 o 4x4 apiladas"""
    size = b.shape[-1]
    if size == 2:
        return b[..., 0, 1]
    if size == 4:
        return (
            b[..., 0, 1] * b[..., 2, 3]
            - b[..., 0, 2] * b[..., 1, 3]
            + b[..., 0, 3] * b[..., 1, 2]
        )
    raise ValueError(f"pfaffian implemented for sizes 2 and 4, got {size}")


def two_form_matrix(two_form: np.ndarray, vectors: np.ndarray) -> np.ndarray:
    """B_ij = beta(V_i, V_j)"""
    m = np.einsum("...kl,...il,...jk->...ij", two_form, np.conj(vectors), vectors)
    return m - np.swapaxes(m, -1, -2)


def evaluate_cf_form(coeffs: np.ndarray, two_form: np.ndarray, vectors: np.ndarray) -> np.ndarray:
    """Valor de c ^ beta^(n-1) sobre la base tangente orientada"""
    count = vectors.shape[-2]
    m = (count - 1) // 2
    a = np.einsum("...k,...ik->...i", coeffs, vectors)
    b = two_form_matrix(two_form, vectors)
    total = np.zeros(a.shape[:-1], dtype=complex)
    for i in range(count):
        keep = [j for j in range(count) if j != i]
        minor = b[..., keep, :][..., :, keep]
        total = total + (-1) ** i * a[..., i] * _pfaffian(minor)
    return math.factorial(m) * total


def cf_normalisation(n: int) -> complex:
    """(2 pi i)^(-n)"""
    return (2j * np.pi) ** (-n)
