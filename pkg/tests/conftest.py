import numpy as np
import pytest

from cavitybell import fock
from cavitybell.modes import Grid1D


@pytest.fixture(scope="session")
def grid256():
    return Grid1D(8.0, 256)


@pytest.fixture(scope="session")
def grid128():
    return Grid1D(8.0, 128)


@pytest.fixture(scope="session")
def entangled():
    return fock.beamsplitter_state(8)


def random_qubit(rng):
    v = rng.standard_normal(2) + 1j * rng.standard_normal(2)
    return v / np.linalg.norm(v)


def random_product_state(rng, nmax=1):
    c = np.zeros((nmax + 1, nmax + 1), dtype=complex)
    c[:2, :2] = np.outer(random_qubit(rng), random_qubit(rng))
    return fock.ModeState2D(nmax, c)


def random_two_qubit_state(rng, nmax=1):
    c = np.zeros((nmax + 1, nmax + 1), dtype=complex)
    block = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    c[:2, :2] = block / np.linalg.norm(block)
    return fock.ModeState2D(nmax, c)


def random_settings(rng):
    t = rng.uniform(0, np.pi, 4)
    p = rng.uniform(-np.pi, np.pi, 4)
    return fock.ChshSettings((t[0], p[0]), (t[1], p[1]), (t[2], p[2]), (t[3], p[3]))


def kron_expect(state, op_x, op_y):
    """Independent 4x4-style oracle: flatten the state, apply np.kron."""
    psi = state.coeffs.reshape(-1)
    mx = op_x.entries if hasattr(op_x, "entries") else op_x
    my = op_y.entries if hasattr(op_y, "entries") else op_y
    return complex(np.vdot(psi, np.kron(mx, my) @ psi))
