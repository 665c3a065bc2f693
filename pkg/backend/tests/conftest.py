"""
Fixtures compartidas: dominios del catalogo y mallas pequenas (resolucion 8)
"""

import os
import sys

import numpy as np
import pytest

# Añadir path del backend
backend_path = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.path.insert(0, backend_path)

from common.schemas import DomainSpec, RunConfig
from domain.catalog import build_domain
from mesh.boundary_mesh import build_mesh

TEST_RESOLUTION = 8


@pytest.fixture(scope="session")
def ball():
    return build_domain(DomainSpec(name="ball", n=2))


@pytest.fixture(scope="session")
def ellipsoid():
    return build_domain(DomainSpec(name="ellipsoid", n=2, a=(1.0, 2.0)))


@pytest.fixture(scope="session")
def perturbed():
    return build_domain(DomainSpec(name="perturbed_ball", n=2, kappa=0.1, mu=0.5))


@pytest.fixture(scope="session")
def ball_mesh(ball):
    return build_mesh(ball, TEST_RESOLUTION, DomainSpec(name="ball", n=2))


@pytest.fixture(scope="session")
def perturbed_mesh(perturbed):
    return build_mesh(perturbed, TEST_RESOLUTION, DomainSpec(name="perturbed_ball", n=2, kappa=0.1, mu=0.5))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def small_config(tmp_path):
    return RunConfig(
        domain=DomainSpec(name="ball", n=2),
        resolution=TEST_RESOLUTION,
        eps=(0.1,),
        degree=2,
        samples=200,
        out_dir=str(tmp_path),
    )
