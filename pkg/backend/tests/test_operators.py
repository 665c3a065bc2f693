"""
Tests de matrices de Nystrom, proyeccion de Szego, adjuntos y normas
"""

import sys
import os

# Añadir path del backend
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import numpy as np
import pytest

from common.config import settings
from common.errors import ConfigurationError, DivergenceRiskError, RankDeficiencyError
from common.schemas import AssemblyMode, KernelKind, KernelSpec, MeasureKind, PhiFamily
from domain.smoothing import smooth_hessian
from geometry.cutoffs import calibrate_cutoff
from kernels.cauchy import KernelContext
from mesh.boundary_mesh import build_mesh
from operators.io import load_matrix, save_matrix
from operators.matrices import (
    OperatorMatrix,
    apply_cauchy_boundary,
    assemble,
    build_hardy_basis,
    build_phi,
    extrapolation_weights,
    monomial_exponents,
    phase_cardinals,
    polar_cardinals,
    supports_extrapolation,
)
from operators.norms import (
    commutator,
    cube_indices,
    cube_partition_bound,
    neumann_invert,
    operator_norm,
    schur_constants,
    touching_count,
    truncated_norm_ratio,
)
from operators.szego import (
    adjoint_dagger,
    adjoint_lambda,
    cauchy_operator,
    choose_degree,
    identity_c_residual,
    omega_inner,
    reconstruct_szego,
    reproducing_correction,
    restricted_norm,
    smooth_test_basis,
    szego_identities,
    szego_project,
    weighted_two_norm,
)


def _matrix(mesh, entries, label="test"):
    return OperatorMatrix(
        entries=np.asarray(entries, dtype=complex),
        measure=MeasureKind.LAMBDA,
        weights=mesh.lambda_weights,
        lambda_weights=mesh.lambda_weights,
        mesh_ref=mesh.mesh_hash(),
        label=label,
    )


@pytest.fixture(scope="module")
def projection(ball_mesh):
    return szego_project(ball_mesh, ball_mesh.lambda_weights, build_hardy_basis(ball_mesh, 3))


@pytest.fixture(scope="module")
def random_matrix(ball_mesh):
    rng = np.random.default_rng(7)
    n = ball_mesh.size
    return _matrix(ball_mesh, rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)), "R")


# ============================================================================
# ENSAMBLADO
# ============================================================================

def test_identity_assembles_to_weight_diagonal(ball_mesh):
    spec = KernelSpec(kind=KernelKind.IDENTITY, measure=MeasureKind.SIGMA)
    t = assemble(spec, ball_mesh, KernelContext(domain=ball_mesh.domain))
    assert np.allclose(t.entries, np.diag(ball_mesh.sigma_weights))
    assert t.mesh_ref == ball_mesh.mesh_hash()


def test_assembly_modes(ball_mesh):
    context = KernelContext(domain=ball_mesh.domain)
    spec = KernelSpec(kind=KernelKind.ESSENTIAL, measure=MeasureKind.LAMBDA)
    plain = assemble(spec, ball_mesh, context, AssemblyMode.PLAIN)
    assert np.all(np.diag(plain.entries) == 0)
    # fila i = salida en el nodo i, columna j = K(node_j, node_i) w_j
    g = 1.0 - np.sum(ball_mesh.nodes[3] * np.conj(ball_mesh.nodes[5]))
    assert plain.entries[3, 5] == pytest.approx(g ** -2 * ball_mesh.lambda_weights[5])

    subtraction = assemble(spec, ball_mesh, context, AssemblyMode.SUBTRACTION)
    assert np.allclose(subtraction.entries.sum(axis=1), 1.0), "las filas deben reproducir constantes"

    with pytest.raises(ConfigurationError):
        assemble(spec, ball_mesh, context, AssemblyMode.OFFSET)
    offset = assemble(spec, ball_mesh, context, AssemblyMode.OFFSET, delta=0.05)
    assert np.all(np.isfinite(offset.entries))


def test_apply_cauchy_reproduces_constants(ball_mesh):
    spec = KernelSpec(kind=KernelKind.ESSENTIAL, measure=MeasureKind.LAMBDA)
    f = np.full(ball_mesh.size, 2.0 - 1.0j)
    out = apply_cauchy_boundary(ball_mesh, KernelContext(domain=ball_mesh.domain), spec, f)
    assert np.allclose(out, f)


def test_apply_cauchy_reproduces_w1_under_refinement(ball_mesh):
    spec = KernelSpec(kind=KernelKind.ESSENTIAL, measure=MeasureKind.LAMBDA)
    errors = []
    for mesh in (ball_mesh, build_mesh(ball_mesh.domain, 12, ball_mesh.domain_spec)):
        w1 = mesh.nodes[:, 0]
        out = apply_cauchy_boundary(mesh, KernelContext(domain=mesh.domain), spec, w1)
        errors.append(np.max(np.abs(out - w1)))
    assert errors[1] < errors[0]


def test_phi_catalog(ball_mesh):
    const = build_phi(ball_mesh, PhiFamily.CONST)
    assert np.all(const.phi == 1.0)
    re1 = build_phi(ball_mesh, PhiFamily.RE1, 0.5)
    assert np.allclose(re1.phi, 1.0 + 0.5 * ball_mesh.nodes[:, 0].real)
    assert np.allclose(re1.weights(ball_mesh), re1.phi * ball_mesh.lambda_weights)
    with pytest.raises(ConfigurationError):
        build_phi(ball_mesh, PhiFamily.RE1, 2.0)


def test_monomial_exponents():
    assert len(monomial_exponents(2, 2)) == 6
    assert monomial_exponents(2, 1) == [(0, 0), (1, 0), (0, 1)]


# ============================================================================
# PROYECCION Y ADJUNTOS
# ============================================================================

def test_szego_projection_laws(ball_mesh, projection):
    p = projection.entries
    assert np.max(np.abs(p @ p - p)) < 1e-8, "P^2 = P"
    assert np.allclose(adjoint_lambda(projection).entries, p, atol=1e-8), "P autoadjunta en L^2(lambda)"
    basis = build_hardy_basis(ball_mesh, 2).columns
    assert np.allclose(p @ basis, basis, atol=1e-8), "P fija los monomios holomorfos"
    assert operator_norm(projection, 2.0)[1] == pytest.approx(1.0, abs=1e-8)


def test_projection_rank_deficiency(ball_mesh, monkeypatch):
    monkeypatch.setattr(settings, "GRAM_COND_MAX", 1.0)
    with pytest.raises(RankDeficiencyError):
        szego_project(ball_mesh, ball_mesh.lambda_weights, build_hardy_basis(ball_mesh, 1))


def test_choose_degree(ball_mesh):
    degree = choose_degree(ball_mesh, ball_mesh.lambda_weights, 3)
    assert 0 <= degree <= 3


def test_identities_hold_for_exact_projection(projection):
    """Con C = P las identidades son algebraicas"""
    assert np.max(np.abs(identity_c_residual(projection, projection))) < 1e-8
    cp, pc = szego_identities(projection, projection)
    assert np.max(np.abs(cp)) < 1e-8 and np.max(np.abs(pc)) < 1e-8


def test_reconstruction_without_antisymmetric_part(ball_mesh, projection):
    zero = projection.with_entries(np.zeros_like(projection.entries), label="0")
    s, residual, terms = reconstruct_szego(projection, zero, projection)
    assert terms == 0
    assert residual < 1e-12
    assert np.allclose(s, projection.entries, atol=1e-8)


def test_adjoint_involution_and_dagger(ball_mesh, random_matrix):
    assert np.allclose(adjoint_lambda(adjoint_lambda(random_matrix)).entries, random_matrix.entries)
    const = build_phi(ball_mesh, PhiFamily.CONST)
    assert np.allclose(adjoint_dagger(random_matrix, const).entries, adjoint_lambda(random_matrix).entries)


def test_dagger_adjoint_identity(ball_mesh, random_matrix):
    """(T^dagger f1, f2)_omega = (f1, T f2)_omega"""
    phi = build_phi(ball_mesh, PhiFamily.RE1, 0.5)
    weights = phi.weights(ball_mesh)
    rng = np.random.default_rng(3)
    f1 = rng.standard_normal(ball_mesh.size) + 1j * rng.standard_normal(ball_mesh.size)
    f2 = rng.standard_normal(ball_mesh.size) + 1j * rng.standard_normal(ball_mesh.size)
    lhs = omega_inner(adjoint_dagger(random_matrix, phi).apply(f1), f2, weights)
    rhs = omega_inner(f1, random_matrix.apply(f2), weights)
    assert abs(lhs - rhs) <= 1e-10 * abs(rhs)


def test_smooth_test_basis_is_orthonormal(ball_mesh):
    weights = ball_mesh.lambda_weights
    q = smooth_test_basis(ball_mesh, weights, 2)
    gram = q.conj().T @ (weights[:, None] * q)
    assert np.allclose(gram, np.eye(q.shape[1]), atol=1e-10)
    assert restricted_norm(np.eye(ball_mesh.size), weights, q) == pytest.approx(1.0)


# ============================================================================
# NORMAS
# ============================================================================

def test_norms_of_identity(ball_mesh):
    eye = _matrix(ball_mesh, np.eye(ball_mesh.size))
    for p in (1.0, 2.0, np.inf):
        assert operator_norm(eye, p, "exact") == pytest.approx((1.0, 1.0))
    lower, upper = operator_norm(eye, 3.0)
    assert upper == pytest.approx(1.0)
    assert 0.999 <= lower <= upper + 1e-12
    with pytest.raises(ValueError):
        operator_norm(eye, 3.0, "exact")
    with pytest.raises(ValueError):
        operator_norm(eye, 0.5)


def test_norm_bracket_ordering(random_matrix):
    lower, upper = operator_norm(random_matrix, 1.5, seed=11)
    assert 0 < lower <= upper
    two = operator_norm(random_matrix, 2.0)[1]
    assert two == pytest.approx(weighted_two_norm(random_matrix.entries, random_matrix.weights))
    schur = schur_constants(random_matrix)
    assert two <= schur.bound * (1 + 1e-10), "test de Schur acota la norma 2"


def test_neumann_series(ball_mesh):
    rng = np.random.default_rng(5)
    raw = rng.standard_normal((ball_mesh.size, ball_mesh.size))
    a = _matrix(ball_mesh, raw)
    a = a.with_entries(0.5 * raw / operator_norm(a, 2.0)[1], label="A")
    rhs = rng.standard_normal((ball_mesh.size, 3))
    left = neumann_invert(a, rhs, tol=1e-12)
    assert np.allclose((np.eye(ball_mesh.size) + a.entries) @ left.solution, rhs, atol=1e-9)
    right = neumann_invert(a, rhs.T, tol=1e-12, side="right")
    assert np.allclose(right.solution @ (np.eye(ball_mesh.size) + a.entries), rhs.T, atol=1e-9)
    with pytest.raises(DivergenceRiskError):
        neumann_invert(a.with_entries(4.0 * a.entries), rhs)
    with pytest.raises(ValueError):
        neumann_invert(a, rhs, side="middle")


def test_commutator_with_constant_vanishes(ball_mesh, random_matrix):
    zero = commutator(random_matrix, build_phi(ball_mesh, PhiFamily.CONST))
    assert np.allclose(zero.entries, 0.0)
    nonzero = commutator(random_matrix, build_phi(ball_mesh, PhiFamily.RE1, 0.5))
    assert operator_norm(nonzero, 2.0)[1] > 0


def test_cube_partition(ball_mesh, random_matrix):
    assert touching_count(2) == 81
    with pytest.raises(ValueError):
        cube_indices(ball_mesh, 0.0)
    bound, ok = cube_partition_bound(random_matrix, ball_mesh, 0.1)
    assert not ok, "matriz densa acopla cubos lejanos"


def test_cube_bound_dominates_truncated_norm(ball_mesh):
    calibration = calibrate_cutoff(ball_mesh.domain, ball_mesh.nodes[::4], triples=500)
    context = KernelContext(domain=ball_mesh.domain, calibration=calibration)
    spec = KernelSpec(kind=KernelKind.TRUNCATED_ESSENTIAL, s=1.0, measure=MeasureKind.LAMBDA)
    t = assemble(spec, ball_mesh, context)
    bound, ok = cube_partition_bound(t, ball_mesh, 10.0)
    assert ok, "con un unico bloque de cubos adyacentes la hipotesis se cumple"
    assert bound >= operator_norm(t, 2.0)[1]
    full = assemble(KernelSpec(kind=KernelKind.ESSENTIAL), ball_mesh, context)
    assert 0 < truncated_norm_ratio(t, full)


def test_matrix_file_round_trip(ball_mesh, projection, tmp_path):
    path = str(tmp_path / "P.mat")
    save_matrix(projection, path, "cafe")
    loaded, digest = load_matrix(path)
    assert digest == "cafe"
    assert np.array_equal(loaded.entries, projection.entries)
    assert np.array_equal(loaded.weights, projection.weights)
    assert loaded.label == projection.label and loaded.measure == projection.measure

    with open(path, "rb") as handle:
        data = handle.read()
    with open(path, "wb") as handle:
        handle.write(data[:-8])
    with pytest.raises(ConfigurationError):
        load_matrix(path)


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))


# ============================================================================
# MODO EXTRAPOLADO
# ============================================================================

def test_cardinals_interpolate_at_coarse_nodes():
    assert np.allclose(phase_cardinals(8, 8), np.eye(8), atol=1e-12)
    assert np.allclose(polar_cardinals(8, 8), np.eye(8), atol=1e-10)
    coarse = 2.0 * np.pi * np.arange(8) / 8
    fine = 2.0 * np.pi * np.arange(24) / 24
    assert np.allclose(phase_cardinals(8, 24) @ np.cos(2 * coarse), np.cos(2 * fine), atol=1e-12)
    x_coarse, _ = np.polynomial.legendre.leggauss(6)
    x_fine, _ = np.polynomial.legendre.leggauss(15)
    assert np.allclose(polar_cardinals(6, 15) @ x_coarse ** 4, x_fine ** 4, atol=1e-10)


def test_extrapolation_weights():
    assert np.allclose(extrapolation_weights((0.5, 0.7, 0.9)), [7.875, -11.25, 4.375])
    assert np.allclose(extrapolation_weights((0.05, 0.07, 0.09)), [7.875, -11.25, 4.375])
    assert extrapolation_weights((0.5, 0.7, 0.9)).sum() == pytest.approx(1.0)


def test_extrapolated_mode_needs_reinhardt_product_mesh(ball_mesh, perturbed_mesh):
    assert supports_extrapolation(ball_mesh)
    assert not supports_extrapolation(perturbed_mesh)
    spec = KernelSpec(kind=KernelKind.ESSENTIAL, measure=MeasureKind.LAMBDA)
    with pytest.raises(ConfigurationError):
        assemble(spec, perturbed_mesh, KernelContext(domain=perturbed_mesh.domain), AssemblyMode.EXTRAPOLATED)


def test_cauchy_operator_on_ball_reproduces_hardy_functions(ball_mesh, projection):
    context = KernelContext(domain=ball_mesh.domain, smoothed=smooth_hessian(ball_mesh.domain, 0.1, ball_mesh.nodes))
    c = cauchy_operator(ball_mesh, context, 0.1, projection)
    assert c.mode == AssemblyMode.EXTRAPOLATED
    w1 = ball_mesh.nodes[:, 0]
    assert np.max(np.abs(c.entries @ w1 - w1)) < 1e-3
    # C aniquila las funciones antiholomorfas
    assert np.max(np.abs(c.entries @ np.conj(w1))) < 1e-3
    test = smooth_test_basis(ball_mesh, ball_mesh.lambda_weights, 2)
    residual = identity_c_residual(projection, c)
    assert restricted_norm(residual, ball_mesh.lambda_weights, test) < 1e-3


def test_reproducing_correction(ball_mesh, projection, random_matrix):
    corrected = reproducing_correction(random_matrix, projection)
    basis = build_hardy_basis(ball_mesh, 3).columns
    assert np.allclose(corrected.entries @ basis, basis, atol=1e-8)
    # coincide con C sobre el nucleo de P
    f = np.conj(ball_mesh.nodes[:, 0])
    assert np.allclose(projection.entries @ f, 0.0, atol=1e-10)
    assert np.allclose(corrected.entries @ f, random_matrix.entries @ f, atol=1e-8)
    assert corrected.label.endswith("_reproducing")


def test_cauchy_operator_on_perturbed_ball_uses_correction(perturbed_mesh):
    domain = perturbed_mesh.domain
    p = szego_project(perturbed_mesh, perturbed_mesh.lambda_weights, build_hardy_basis(perturbed_mesh, 2))
    context = KernelContext(domain=domain, smoothed=smooth_hessian(domain, 0.1, perturbed_mesh.nodes))
    c = cauchy_operator(perturbed_mesh, context, 0.1, p)
    assert c.mode == AssemblyMode.SUBTRACTION
    w1 = perturbed_mesh.nodes[:, 0]
    assert np.max(np.abs(c.entries @ w1 - w1)) < 1e-8
