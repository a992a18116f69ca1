"""
Shared fixtures: the Hubbard dimer in its usual sectors and a two-level model.
"""

import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from ensemble_kernel import Sector, build_model, diagonalize  # noqa: E402

DIMER = {'name': 'hubbard_chain', 'sites': 2, 't': 1.0, 'U': 2.0}
DIMER_ENERGIES = np.array([1.0 - np.sqrt(5.0), 0.0, 2.0, 1.0 + np.sqrt(5.0)])


def pytest_configure(config):
    config.addinivalue_line('markers', 'slow: propagates many trajectories')


@pytest.fixture
def dimer_sz0():
    """Hubbard dimer, t = 1, U = 2, N = 2, Sz = 0 (dimension 4)."""
    return build_model(DIMER, Sector(2, 0.0))


@pytest.fixture
def dimer_n2():
    """Hubbard dimer at N = 2 without an Sz constraint (dimension 6)."""
    return build_model(DIMER, Sector(2))


@pytest.fixture
def dimer_fock():
    """Hubbard dimer on the full Fock space (dimension 16)."""
    return build_model(DIMER, Sector())


@pytest.fixture
def dimer_n2_spectrum(dimer_n2):
    return diagonalize(dimer_n2)


@pytest.fixture
def two_level():
    """One particle in two orbitals split by Omega = 1."""
    return build_model({'name': 'custom', 'orbitals': 2, 'h': [[0.0, 0.0], [0.0, 1.0]]}, Sector(1))
