"""Shared fixtures: small surfaces reused across test modules.

Session-scoped because surface construction runs Gauss-Legendre cell
quadrature; the objects are frozen dataclasses and safe to share.
"""

import numpy as np
import pytest

from quasispherical import geometry


@pytest.fixture(scope="session")
def sphere64():
    spec = geometry.SurfaceSpec(shape=geometry.Sphere(radius=1.0), n_theta=64, n_phi=16)
    return geometry.build_surface(spec)


@pytest.fixture(scope="session")
def sphere32():
    spec = geometry.SurfaceSpec(shape=geometry.Sphere(radius=1.0), n_theta=32, n_phi=16)
    return geometry.build_surface(spec)


@pytest.fixture(scope="session")
def spheroid64():
    spec = geometry.SurfaceSpec(
        shape=geometry.Spheroid(equatorial_radius=1.0, polar_radius=1.2),
        n_theta=64,
        n_phi=16,
    )
    return geometry.build_surface(spec)


@pytest.fixture(scope="session")
def sphere2_64():
    spec = geometry.SurfaceSpec(shape=geometry.Sphere(radius=2.0), n_theta=64, n_phi=16)
    return geometry.build_surface(spec)


def rng(seed=0):
    return np.random.default_rng(seed)
