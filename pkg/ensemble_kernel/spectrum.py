#!/usr/bin/env python3
"""
Exact Diagonalization

Dense Hermitian diagonalization of an unperturbed Hamiltonian with
tolerance-based degeneracy grouping.

Energies inside one degeneracy group are snapped to a common group energy, so
excitation energies Omega_KL = E_K - E_L are exactly zero between degenerate
states and every downstream "Omega_KL == 0" branch is exact. Eigenvectors
inside a degenerate group are whatever the solver returns; nothing downstream
depends on that choice.
"""

import logging
from dataclasses import dataclass
from functools import cached_property
from typing import List, Tuple

import numpy as np
import scipy.linalg as la

try:
    from .exceptions import SpectrumError, ValidationError
    from .fock_space import ManyBodyOperator
    from .settings import DEFAULT_TOL_E
    from .util import spectral_norm
except ImportError:
    from exceptions import SpectrumError, ValidationError
    from fock_space import ManyBodyOperator
    from settings import DEFAULT_TOL_E
    from util import spectral_norm

logger = logging.getLogger(__name__)

# ||H psi - E psi|| <= RESIDUAL_TOL * ||H||
RESIDUAL_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    """
    Eigen-decomposition of a ManyBodyOperator.

    Attributes:
        hamiltonian: The diagonalized operator (the generator of the ensemble)
        energies: Raw eigenvalues, ascending
        vectors: Orthonormal eigenvectors as columns
        groups: Degeneracy groups, tuples of consecutive state indices
        group_index: Group number of every state
        tol_E: Relative degeneracy tolerance used for grouping
    """

    hamiltonian: ManyBodyOperator
    energies: np.ndarray
    vectors: np.ndarray
    groups: Tuple[Tuple[int, ...], ...]
    group_index: np.ndarray
    tol_E: float

    @property
    def dim(self) -> int:
        return int(self.energies.size)

    @property
    def basis(self):
        return self.hamiltonian.basis

    @cached_property
    def level_energies(self) -> np.ndarray:
        """Energies with every degeneracy group snapped to its mean."""
        snapped = np.empty_like(self.energies)
        for group in self.groups:
            members = list(group)
            snapped[members] = float(np.mean(self.energies[members]))
        return snapped

    def degenerate(self, k: int, l: int) -> bool:
        return bool(self.group_index[k] == self.group_index[l])

    def ground_group(self) -> Tuple[int, ...]:
        return self.groups[0]

    def __repr__(self) -> str:
        return (f"SpectralDecomposition(dim={self.dim}, groups={len(self.groups)}, "
                f"E0={self.energies[0]:.10g})")


def group_degenerate(energies: np.ndarray, tol_E: float) -> Tuple[Tuple[int, ...], ...]:
    """
    Partition ascending energies into degeneracy groups.

    Neighbours with |E_K - E_{K-1}| <= tol_E * max(1, |E_K|) share a group;
    chaining them gives the transitive closure.
    """
    if energies.size == 0:
        return ()
    groups: List[List[int]] = [[0]]
    for k in range(1, energies.size):
        if abs(energies[k] - energies[k - 1]) <= tol_E * max(1.0, abs(energies[k])):
            groups[-1].append(k)
        else:
            groups.append([k])
    return tuple(tuple(group) for group in groups)


def diagonalize(hamiltonian: ManyBodyOperator, tol_E: float = DEFAULT_TOL_E) -> SpectralDecomposition:
    """
    Diagonalize a Hermitian operator and group degenerate levels.

    Args:
        hamiltonian: Hermitian ManyBodyOperator
        tol_E: Relative degeneracy tolerance (default: 1e-9)

    Returns:
        SpectralDecomposition with ascending energies

    Raises:
        ValidationError: tol_E not positive
        SpectrumError: An eigenpair residual exceeds 1e-10 * ||H||

    Example:
        spec = diagonalize(build_model({"name": "hubbard_chain", "sites": 2, "U": 2.0},
                                       Sector(2, 0.0)))
        spec.energies  # [1 - sqrt(5), 0, 2, 1 + sqrt(5)]
    """
    if not tol_E > 0:
        raise ValidationError(f"tol_E must be positive, got {tol_E}", field='tolerances.tol_E')

    matrix = hamiltonian.matrix
    try:
        energies, vectors = la.eigh(matrix)
    except la.LinAlgError as exc:
        raise SpectrumError(f"Eigensolver failed: {exc}") from exc

    norm = spectral_norm(matrix)
    residuals = np.linalg.norm(matrix @ vectors - vectors * energies[None, :], axis=0)
    if residuals.size and norm > 0 and residuals.max() > RESIDUAL_TOL * norm:
        raise SpectrumError(f"Eigenpair residual {residuals.max():.3e} exceeds "
                            f"{RESIDUAL_TOL:g} * ||H|| = {RESIDUAL_TOL * norm:.3e}", residuals)

    groups = group_degenerate(energies, tol_E)
    group_index = np.empty(energies.size, dtype=int)
    for g, group in enumerate(groups):
        group_index[list(group)] = g

    logger.debug(f"Diagonalized dim={energies.size}: {len(groups)} levels, "
                 f"max residual {residuals.max() if residuals.size else 0.0:.2e}")
    energies.setflags(write=False)
    vectors.setflags(write=False)
    group_index.setflags(write=False)
    return SpectralDecomposition(hamiltonian, energies, vectors, groups, group_index, float(tol_E))


def excitation_gaps(spectrum: SpectralDecomposition) -> np.ndarray:
    """
    Excitation energies Omega[K, L] = E_K - E_L from the snapped level energies.

    The full matrix is returned; it is exactly antisymmetric and exactly zero
    between members of one degeneracy group. Entries with K > L are the
    (non-negative) de-excitation table.
    """
    levels = spectrum.level_energies
    return levels[:, None] - levels[None, :]


def spectrum_summary(spectrum: SpectralDecomposition) -> dict:
    """JSON-ready description: energies and degeneracy groups."""
    levels = spectrum.level_energies
    return {
        'dim': spectrum.dim,
        'energies': [float(e) for e in spectrum.energies],
        'levels': [
            {'energy': float(levels[group[0]]), 'degeneracy': len(group), 'states': list(group)}
            for group in spectrum.groups
        ],
        'tol_E': spectrum.tol_E,
    }
