import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from ecorbit.curve import make_curve
from ecorbit.orbit import make_orbit

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def x3p1():
    """y^2 = x^3 + 1 with P ~ (-0.406, 0.966): one real component."""
    E = make_curve("short", 0, 1)
    P = E.lift_x(-0.406, 1)
    return E, P, make_orbit(E, P)


@pytest.fixture(scope="session")
def e37_short():
    """y^2 = x^3 - 16x + 16 with P = (0, 4) on the bounded oval."""
    E = make_curve("short", -16, 16)
    P = E.point(0, 4)
    return E, P, make_orbit(E, P)


@pytest.fixture(scope="session")
def e37_long():
    """y^2 + y = x^3 - x with P = (0, 0)."""
    E = make_curve("long", 0, 0, 1, -1, 0)
    P = E.point(0, 0)
    return E, P, make_orbit(E, P)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
