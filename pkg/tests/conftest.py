import numpy as np
import pytest

from hedgehog import FluxRing, Ring, Sphere3, Torus


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture(scope="session")
def unit_ring():
    return Ring(1.0, (0.0,))


@pytest.fixture(scope="session")
def ring2():
    return Ring(1.0, (0.3, 2.1))


@pytest.fixture(scope="session")
def ring3():
    return Ring(1.0, (0.3, 2.1, 4.4))


@pytest.fixture(scope="session")
def flux_ring():
    return FluxRing(1.0, (0.0,), flux=0.25)


@pytest.fixture(scope="session")
def sphere3_1():
    return Sphere3(1.0)


@pytest.fixture(scope="session")
def sphere3_2():
    return Sphere3(1.0, [[0.0, 0.5 * np.pi], [0.5 * np.pi, 0.0]])


@pytest.fixture(scope="session")
def torus2():
    """Unit-square torus with two generic attachment points."""
    return Torus(np.eye(2), [[0.11, 0.23], [0.55, 0.81]])


@pytest.fixture(scope="session")
def torus2_single():
    return Torus(np.eye(2), [[0.0, 0.0]])


def random_hermitian(rng, n, scale=1.0):
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return scale * (a + a.conj().T) / 2


def random_complex(rng, n, scale=1.0):
    return scale * (rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)))


def random_unitary(rng, n):
    q, r = np.linalg.qr(random_complex(rng, n))
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_valid_lm(rng, n):
    """Random Lagrangian pair: Cayley-parametrized, then row-mixed."""
    v = random_unitary(rng, 2 * n)
    eye = np.eye(2 * n)
    L = 1j * (eye + v)
    M = eye - v
    u = random_complex(rng, 2 * n) + 3.0 * eye  # well-conditioned mixer
    return u @ L, u @ M
