"""
Tests de denominadores de Levi y nucleos de Cauchy-Fantappie
"""

import sys
import os

# Añadir path del backend
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import numpy as np
import pytest

from common.errors import ConfigurationError, NearSingularityError
from common.schemas import KernelKind, KernelSpec, MeasureKind
from domain.catalog import sample_boundary
from domain.smoothing import smooth_hessian
from geometry.cutoffs import calibrate_cutoff
from geometry.frames import frames_at
from geometry.quasi_distance import quasi_distance
from kernels.cauchy import (
    KernelContext,
    eval_adjoint_essential,
    eval_antisym,
    eval_cf_density,
    eval_essential,
    eval_remainder,
    eval_truncated,
    evaluate_kernel,
    g_difference_ratio,
    kernel_difference_ratio,
    symmetry_ratio,
    truncation_scale,
)
from kernels.denominators import eval_g0, eval_g_eps, generating_form, local_cutoff


@pytest.fixture
def pairs(ball, rng):
    return sample_boundary(ball, 100, rng), sample_boundary(ball, 100, rng)


def test_ball_levi_polynomial(ball, pairs):
    """g_0(w,z) = 1 - <z,w> en la bola"""
    w, z = pairs
    expected = 1.0 - np.sum(z * np.conj(w), axis=-1)
    assert np.allclose(eval_g0(ball, w, z), expected)
    assert np.allclose(eval_g0(ball, w, w), 0.0)
    assert np.allclose(eval_g_eps(ball, None, w, z), expected)


def test_generating_form_reproduces_g(perturbed, rng):
    w = sample_boundary(perturbed, 50, rng)
    z = sample_boundary(perturbed, 50, rng)
    smoothed = smooth_hessian(perturbed, 0.05, w)
    g_coeff, _ = generating_form(perturbed, smoothed, w, z)
    assert np.allclose(np.sum(g_coeff * (w - z), axis=-1), eval_g_eps(perturbed, smoothed, w, z))


def test_generating_form_needs_smoothing_off_global_levi(ball, perturbed, rng):
    w = sample_boundary(perturbed, 10, rng)
    z = sample_boundary(perturbed, 10, rng)
    with pytest.raises(ConfigurationError):
        generating_form(perturbed, None, w, z)
    g_coeff, _ = generating_form(ball, None, sample_boundary(ball, 10, rng), sample_boundary(ball, 10, rng))
    assert np.all(np.isfinite(g_coeff))


def test_cf_density_is_holomorphic_in_z(ellipsoid, rng):
    w = sample_boundary(ellipsoid, 30, rng)
    z = 0.5 * sample_boundary(ellipsoid, 30, rng)
    frames = frames_at(ellipsoid, w)
    h = 1e-6
    for k in range(2):
        e = np.zeros(2, dtype=complex)
        e[k] = h
        dx = (eval_cf_density(ellipsoid, None, w, z + e, frames) - eval_cf_density(ellipsoid, None, w, z - e, frames)) / (2 * h)
        dy = (eval_cf_density(ellipsoid, None, w, z + 1j * e, frames) - eval_cf_density(ellipsoid, None, w, z - 1j * e, frames)) / (2 * h)
        assert np.max(np.abs(0.5 * (dx + 1j * dy))) < 1e-5
        assert np.max(np.abs(0.5 * (dx - 1j * dy))) > 1e-3


def test_local_cutoff_blend(perturbed):
    w = np.array([[1.0, 0.0]], dtype=complex)
    near = np.array([[0.99, 0.1]], dtype=complex)
    far = np.array([[-1.0, 0.0]], dtype=complex)
    assert local_cutoff(perturbed, w, near)[0][0] == 1.0
    assert local_cutoff(perturbed, w, far)[0][0] == 0.0
    assert eval_g0(perturbed, w, far)[0] == pytest.approx(4.0), "lejos g = |w - z|^2"


def test_ball_kernel_is_hermitian(ball, pairs):
    w, z = pairs
    assert np.allclose(eval_essential(ball, None, w, z), eval_adjoint_essential(ball, None, w, z))
    assert np.allclose(symmetry_ratio(ball, None, w, z, 0.1), 0.0)


def test_essential_refuses_coincident_points(ball, pairs):
    w, _ = pairs
    with pytest.raises(NearSingularityError):
        eval_essential(ball, None, w[:3], w[:3])


def test_cf_density_equals_essential_part_on_ball(ball, ball_mesh, pairs):
    """En la bola G = del rho: la densidad CF es Lambda g^(-n), resto nulo"""
    w, z = pairs
    frames = frames_at(ball, w)
    lam = 1.0 / (2.0 * np.pi ** 2)
    density = eval_cf_density(ball, None, w, z, frames)
    essential = eval_essential(ball, None, w, z)
    assert np.allclose(density, lam * essential, rtol=1e-9)
    remainder = eval_remainder(ball, None, w, z, frames, np.full(len(w), lam))
    assert np.max(np.abs(remainder) / np.abs(essential)) < 1e-9


def test_truncated_kernels(ball_mesh, pairs):
    domain = ball_mesh.domain
    calibration = calibrate_cutoff(domain, ball_mesh.nodes[::8], triples=200)
    context = KernelContext(domain=domain, calibration=calibration)
    w, z = pairs
    s = 0.5
    truncated = eval_truncated(KernelKind.TRUNCATED_ESSENTIAL, context, w, z, s)
    d = quasi_distance(domain, w, z)
    far = d >= s
    assert np.all(truncated[far] == 0), "nucleo truncado no nulo con delta >= s"
    assert np.all(np.abs(truncated) <= np.abs(eval_essential(domain, None, w, z)) + 1e-12)
    antisym = eval_antisym(context, w, z, s)
    assert np.all(np.abs(antisym) <= 1e-10 * np.abs(eval_essential(domain, None, w, z))), "A^s nulo en la bola"


def test_truncated_kernel_needs_calibration(ball, pairs):
    w, z = pairs
    with pytest.raises(ValueError):
        eval_truncated(KernelKind.TRUNCATED_ESSENTIAL, KernelContext(domain=ball), w, z, 0.5)


def test_evaluate_kernel_dispatch(ball, pairs):
    w, z = pairs
    context = KernelContext(domain=ball)
    spec = KernelSpec(kind=KernelKind.ESSENTIAL, eps=0.1)
    assert np.allclose(evaluate_kernel(spec, context, w, z), eval_essential(ball, None, w, z))
    assert np.allclose(evaluate_kernel(KernelSpec(kind=KernelKind.G0), context, w, z), eval_g0(ball, w, z))
    with pytest.raises(ValueError):
        evaluate_kernel(KernelSpec(kind=KernelKind.IDENTITY), context, w, z)
    with pytest.raises(ValueError):
        evaluate_kernel(KernelSpec(kind=KernelKind.CF_DENSITY, measure=MeasureKind.SIGMA), context, w, z)


def test_difference_ratios(ball, pairs):
    w, z = pairs
    assert np.all(kernel_difference_ratio(ball, None, w, z, z, 1.0)[quasi_distance(ball, w, z) > 0] == 0.0)
    ratio = kernel_difference_ratio(ball, None, w, z, np.roll(z, 1, axis=0), 1e6)
    assert np.all(np.isnan(ratio)), "con c enorme ninguna muestra es admisible"
    g_ratio = g_difference_ratio(ball, None, w, np.roll(w, 1, axis=0), z)
    assert np.all(g_ratio[np.isfinite(g_ratio)] >= 0)


def test_truncation_scale_on_ball(ball_mesh):
    pilot = ball_mesh.nodes[::8]
    smoothed = smooth_hessian(ball_mesh.domain, 0.1, pilot)
    s = truncation_scale(ball_mesh.domain, smoothed, pilot[None], pilot[:, None], 0.5, 10.0)
    assert s == 0.5, "sin asimetria s(eps) es el tope"


def test_truncation_scale_on_perturbed(perturbed_mesh):
    pilot = perturbed_mesh.nodes[::4]
    smoothed = smooth_hessian(perturbed_mesh.domain, 0.05, perturbed_mesh.nodes)
    s = truncation_scale(perturbed_mesh.domain, smoothed, pilot[None], pilot[:, None], 0.5, 10.0)
    assert 0 < s <= 0.5


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
