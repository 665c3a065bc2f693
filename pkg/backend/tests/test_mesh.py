"""
Tests de la malla de frontera, desplazamientos normales y formato de fichero
"""

import sys
import os
import json

# Añadir path del backend
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import numpy as np
import pytest

from common.errors import (
    ConfigurationError,
    DeltaRangeError,
    MeshingError,
    NonFiniteIntegrandError,
    UnsupportedDimensionError,
)
from common.schemas import DomainSpec, MeasureKind
from domain.catalog import build_domain
from mesh.boundary_mesh import (
    build_mesh,
    delta_max,
    graded_mesh,
    integrate_boundary,
    mesh_scale,
    normal_offset,
    polar_slabs,
)
from mesh.io import load_mesh, save_mesh

SPHERE_AREA = 2.0 * np.pi ** 2  # |S^3|


def test_ball_mesh_quadrature(ball_mesh):
    assert ball_mesh.size == 8 ** 3
    assert np.max(np.abs(ball_mesh.domain.rho(ball_mesh.nodes))) < 1e-10
    assert np.all(ball_mesh.sigma_weights > 0)
    assert integrate_boundary(ball_mesh, 1.0, MeasureKind.SIGMA).real == pytest.approx(SPHERE_AREA, rel=1e-8)
    # int_{S^3} |z_1|^2 d sigma = |S^3| / 2
    moment = integrate_boundary(ball_mesh, lambda z: np.abs(z[:, 0]) ** 2, MeasureKind.SIGMA)
    assert moment.real == pytest.approx(np.pi ** 2, rel=1e-8)


def test_mesh_is_deterministic(ball):
    first = build_mesh(ball, 8)
    second = build_mesh(ball, 8)
    assert first.mesh_hash() == second.mesh_hash()
    assert np.array_equal(first.nodes, second.nodes)


def test_mesh_rejects_low_resolution_and_dimension(ball):
    with pytest.raises(ConfigurationError):
        build_mesh(ball, 7)
    with pytest.raises(UnsupportedDimensionError):
        build_mesh(build_domain(DomainSpec(name="ball", n=4)), 8)


def test_perturbed_mesh_weights(perturbed_mesh):
    assert np.max(np.abs(perturbed_mesh.domain.rho(perturbed_mesh.nodes))) < 1e-10
    assert np.all(perturbed_mesh.lambda_values > 0)
    # el dominio perturbado esta contenido en la bola: menos area
    assert perturbed_mesh.sigma_weights.sum() < SPHERE_AREA
    assert mesh_scale(perturbed_mesh) > 0


def test_polar_slabs_cover_the_sphere(ball):
    slabs = list(polar_slabs(ball, 6, 10))
    assert len(slabs) == 6
    assert all(slab.size == 100 for slab in slabs)
    total = sum(slab.sigma_weights.sum() for slab in slabs)
    assert total == pytest.approx(SPHERE_AREA, rel=1e-8)
    with pytest.raises(UnsupportedDimensionError):
        next(polar_slabs(build_domain(DomainSpec(name="ball", n=3)), 6, 10))


def test_graded_mesh_integrates_the_sphere(ball):
    center = np.array([0.6j, 0.8])
    mesh = graded_mesh(ball, center, 0.01, order=4, azimuths=8)
    assert np.max(np.abs(ball.rho(mesh.nodes))) < 1e-10
    assert mesh.sigma_weights.sum() == pytest.approx(SPHERE_AREA, rel=1e-4)
    moment = np.sum(np.abs(mesh.nodes[:, 0]) ** 2 * mesh.sigma_weights)
    assert moment == pytest.approx(np.pi ** 2, rel=1e-4)
    # nodos concentrados en torno al centro
    assert np.min(np.linalg.norm(mesh.nodes - center, axis=-1)) < 0.01


def test_graded_mesh_on_perturbed_ball(perturbed, perturbed_mesh):
    center = perturbed_mesh.nodes[5]
    mesh = graded_mesh(perturbed, center, 0.02, order=4, azimuths=8)
    assert mesh.sigma_weights.sum() == pytest.approx(perturbed_mesh.sigma_weights.sum(), rel=1e-3)
    with pytest.raises(ConfigurationError):
        graded_mesh(perturbed, center, 0.0)


def test_omega_weights_need_phi(ball_mesh):
    with pytest.raises(ConfigurationError):
        ball_mesh.weights(MeasureKind.OMEGA)
    phi = np.full(ball_mesh.size, 2.0)
    assert np.allclose(ball_mesh.weights(MeasureKind.OMEGA, phi), 2.0 * ball_mesh.lambda_weights)


def test_normal_offset_on_ball(ball_mesh):
    z = ball_mesh.nodes[:10]
    shifted = normal_offset(ball_mesh.domain, z, 0.05)
    assert np.allclose(shifted, 0.95 * z), "en la bola z^delta = (1 - delta) z"
    per_point = normal_offset(ball_mesh.domain, z, np.linspace(0.01, 0.1, 10))
    assert np.all(ball_mesh.domain.rho(per_point) < 0)


def test_normal_offset_range(ball_mesh):
    limit = delta_max(ball_mesh.domain)
    assert limit == pytest.approx(0.2)
    with pytest.raises(DeltaRangeError):
        normal_offset(ball_mesh.domain, ball_mesh.nodes[:3], limit)
    with pytest.raises(DeltaRangeError):
        normal_offset(ball_mesh.domain, ball_mesh.nodes[:3], 0.0)


def test_integrate_rejects_non_finite(ball_mesh):
    values = np.ones(ball_mesh.size)
    values[17] = np.nan
    with pytest.raises(NonFiniteIntegrandError) as info:
        integrate_boundary(ball_mesh, values)
    assert info.value.node == 17


def test_mesh_file_round_trip(perturbed_mesh, tmp_path):
    path = str(tmp_path / "mesh.json")
    save_mesh(perturbed_mesh, path, config_hash="abc123")
    loaded, digest = load_mesh(path)
    assert digest == "abc123"
    assert loaded.mesh_hash() == perturbed_mesh.mesh_hash()
    assert loaded.domain_spec == perturbed_mesh.domain_spec
    assert np.allclose(loaded.lambda_values, perturbed_mesh.lambda_values, rtol=1e-12)


def test_mesh_file_detects_tampered_density(ball_mesh, tmp_path):
    path = str(tmp_path / "mesh.json")
    save_mesh(ball_mesh, path)
    with open(path) as handle:
        payload = json.load(handle)
    payload["lambda_values"][0] *= 1.5
    with open(path, "w") as handle:
        json.dump(payload, handle)
    with pytest.raises(MeshingError):
        load_mesh(path)


def test_malformed_mesh_file_is_a_meshing_error(ball_mesh, tmp_path):
    path = str(tmp_path / "mesh.json")
    save_mesh(ball_mesh, path)
    with open(path) as handle:
        payload = json.load(handle)

    broken = dict(payload)
    del broken["sigma_weights"]
    bad_domain = {**payload, "domain": {**payload["domain"], "name": "torus"}}
    for variant in (broken, bad_domain, {**payload, "resolution": "fine"}):
        with open(path, "w") as handle:
            json.dump(variant, handle)
        with pytest.raises(MeshingError):
            load_mesh(path)


def test_missing_mesh_file(tmp_path):
    with pytest.raises(MeshingError):
        load_mesh(str(tmp_path / "missing.json"))


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
