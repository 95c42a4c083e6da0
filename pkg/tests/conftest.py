"""Shared fixtures and a deterministic hypothesis profile.

Reference values sprinkled through the suite were produced by a separate
mpmath implementation run at 30 significant digits and are frozen here as
literals.
"""

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from noneq.correlators import EmitterGeometry
from noneq.material import SIC
from noneq.rates import integral_table
from noneq.scattering import SlabGeometry

settings.register_profile(
    "package",
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("package")

# working frequency used throughout: 0.3 omega_r of the SiC model
OMEGA = 0.3 * SIC.omega_r


@pytest.fixture(scope="session")
def sic_tables():
    """Memoized angular-integral tables for SiC slab geometries.

    Quadrature dominates the suite's runtime; sharing tables across tests
    keeps the whole run fast without coupling their assertions.
    """
    cache = {}

    def get(z1, z2, r12, delta=0.01e-6):
        key = (z1, z2, r12, delta)
        if key not in cache:
            geometry = EmitterGeometry(z1=z1, z2=z2, r12=r12)
            cache[key] = integral_table(OMEGA, geometry, SIC,
                                        SlabGeometry(delta))
        return cache[key]

    return get


@pytest.fixture
def rng():
    return np.random.default_rng(20260822)
