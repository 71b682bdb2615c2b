import math

import pytest

from orthocount import geom, groups, perp


@pytest.fixture(scope="session")
def modular():
    return groups.preset_modular()


@pytest.fixture(scope="session")
def cusp_family(modular):
    return perp.make_cusp_family(modular, geom.Horoball(geom.INF2, 1.0))


@pytest.fixture(scope="session")
def axis_family(modular):
    return perp.make_axis_family(modular, geom.Isometry(2, 1, 1, 1))


@pytest.fixture(scope="session")
def schottky_sym():
    return groups.preset_schottky_symmetric()


def phi(n: int) -> int:
    r, m, p = n, n, 2
    while p * p <= m:
        if m % p == 0:
            while m % p == 0:
                m //= p
            r -= r // p
        p += 1
    if m > 1:
        r -= r // m
    return r


@pytest.fixture(scope="session")
def euler_phi():
    return phi
