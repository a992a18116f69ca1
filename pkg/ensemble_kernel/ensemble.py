#!/usr/bin/env python3
"""
Ensembles

Weights over the eigenstates of an unperturbed generator, the monotone-weight
condition the response-kernel analysis relies on, and the extended degenerate
structure D(K) / D^r(K) derived from energies and weights.

Features:
- Pure ground state, custom, canonical and grand canonical weights
- Grand canonical ensembles run on the shifted generator H' = H - mu N
- Monotonicity check returning violating pairs as data
- ENSEMBLE_KINDS registry for building ensembles from JSON fragments
"""

import logging
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Any, Callable, Dict, FrozenSet, List, Mapping, Optional, Sequence, Tuple

import numpy as np

try:
    from .exceptions import ValidationError
    from .fock_space import grand_canonical_generator
    from .settings import DEFAULT_TOL_W
    from .spectrum import SpectralDecomposition, diagonalize
    from .util import as_real_vector
except ImportError:
    from exceptions import ValidationError
    from fock_space import grand_canonical_generator
    from settings import DEFAULT_TOL_W
    from spectrum import SpectralDecomposition, diagonalize
    from util import as_real_vector

logger = logging.getLogger(__name__)

NORMALIZATION_TOL = 1e-12


class EnsembleKind(str, Enum):
    PURE = 'pure'
    CUSTOM = 'custom'
    CANONICAL = 'canonical'
    GRAND_CANONICAL = 'grand_canonical'


# Kinds whose weights are functions of the (shifted) energy alone
ENERGY_ONLY_KINDS = (EnsembleKind.CANONICAL, EnsembleKind.GRAND_CANONICAL)


@dataclass(frozen=True, eq=False)
class Ensemble:
    """
    Weighted set of eigenstates of spectrum.hamiltonian.

    Attributes:
        spectrum: Spectral decomposition of the ensemble generator
        weights: Normalized non-negative weight per eigenstate
        kind: How the weights were made
        beta: Inverse temperature (thermal kinds only)
        mu: Chemical potential (grand canonical only)
        tol_w: Relative weight-equality tolerance
    """

    spectrum: SpectralDecomposition
    weights: np.ndarray
    kind: EnsembleKind
    beta: Optional[float] = None
    mu: Optional[float] = None
    tol_w: float = DEFAULT_TOL_W

    def __post_init__(self):
        weights = np.array(self.weights, dtype=float)
        if weights.shape != (self.spectrum.dim,):
            raise ValidationError(f"Expected {self.spectrum.dim} weights, got shape {weights.shape}",
                                  field='ensemble.weights')
        if np.any(weights < 0) or not np.all(np.isfinite(weights)):
            raise ValidationError("Weights must be finite and non-negative", field='ensemble.weights')
        if abs(weights.sum() - 1.0) > NORMALIZATION_TOL:
            raise ValidationError(f"Weights sum to {weights.sum():.15g}, expected 1", field='ensemble.weights')
        weights.setflags(write=False)
        object.__setattr__(self, 'weights', weights)
        object.__setattr__(self, 'kind', EnsembleKind(self.kind))

    @property
    def hamiltonian(self):
        return self.spectrum.hamiltonian

    @property
    def dim(self) -> int:
        return self.spectrum.dim

    @property
    def energy_only(self) -> bool:
        return self.kind in ENERGY_ONLY_KINDS

    @property
    def infinite_temperature(self) -> bool:
        """Energy-only kind at beta = 0: every state carries the same weight."""
        return self.energy_only and self.beta == 0

    @property
    def max_weight(self) -> float:
        return float(self.weights.max())

    @property
    def members(self) -> np.ndarray:
        """Indices of states with non-zero weight."""
        return np.nonzero(self.weights > 0)[0]

    def to_dict(self) -> Dict[str, Any]:
        return {
            'kind': self.kind.value,
            'beta': self.beta,
            'mu': self.mu,
            'weights': [float(w) for w in self.weights],
            'tol_w': self.tol_w,
            'monotone_violations': [list(pair) for pair in check_monotone(self)],
        }

    def __repr__(self) -> str:
        extra = ''
        if self.beta is not None:
            extra += f", beta={self.beta:g}"
        if self.mu is not None:
            extra += f", mu={self.mu:g}"
        return f"Ensemble(kind='{self.kind.value}', dim={self.dim}{extra})"


# ============================================================================
# Constructors
# ============================================================================

def pure_ground_state(spectrum: SpectralDecomposition, tol_w: float = DEFAULT_TOL_W) -> Ensemble:
    """
    Weight 1 on the ground state.

    Raises:
        ValidationError: The ground level is degenerate; an equal-weight
            mixture over it can be requested with custom_weights
    """
    ground = spectrum.ground_group()
    if len(ground) > 1:
        raise ValidationError(f"Ground state is {len(ground)}-fold degenerate; a pure ground state is not "
                              f"unique. Use custom weights over states {list(ground)} instead.",
                              field='ensemble.kind')
    weights = np.zeros(spectrum.dim)
    weights[0] = 1.0
    return Ensemble(spectrum, weights, EnsembleKind.PURE, tol_w=tol_w)


def _boltzmann(levels: np.ndarray, beta: float) -> np.ndarray:
    shifted = np.exp(-beta * (levels - levels.min()))
    weights = shifted / shifted.sum()
    if np.any(weights == 0.0):
        logger.warning(f"{int(np.sum(weights == 0.0))} Boltzmann weight(s) underflow to zero at beta={beta:g}")
    return weights


def _check_beta(beta: Any) -> float:
    if isinstance(beta, bool) or not isinstance(beta, (int, float)) or not np.isfinite(beta) or beta < 0:
        raise ValidationError(f"beta must be a finite number >= 0, got {beta!r}", field='ensemble.beta')
    return float(beta)


def canonical_weights(spectrum: SpectralDecomposition, beta: float, tol_w: float = DEFAULT_TOL_W) -> Ensemble:
    """
    Boltzmann weights exp(-beta (E_K - E_0)) / Z on the spectrum's basis.

    Degenerate states get identical weights because the snapped level energies
    are used.

    Args:
        spectrum: Spectral decomposition (any sector)
        beta: Inverse temperature, finite and >= 0

    Returns:
        Ensemble of kind CANONICAL

    Example:
        ens = canonical_weights(diagonalize(H), beta=1.0)
    """
    beta = _check_beta(beta)
    weights = _boltzmann(spectrum.level_energies, beta)
    return Ensemble(spectrum, weights, EnsembleKind.CANONICAL, beta=beta, tol_w=tol_w)


def grand_canonical_weights(spectrum: SpectralDecomposition, beta: float, mu: float,
                            tol_w: float = DEFAULT_TOL_W) -> Ensemble:
    """
    Grand canonical weights exp(-beta E'_K) / Z with E'_K eigenvalues of H - mu N.

    When the spectrum belongs to the bare H, the shifted generator is built and
    re-diagonalized with the same degeneracy tolerance; the returned ensemble
    then refers to that new spectrum.

    Args:
        spectrum: Spectral decomposition of H, or of H - mu N for the same mu
        beta: Inverse temperature, finite and >= 0
        mu: Chemical potential

    Returns:
        Ensemble of kind GRAND_CANONICAL

    Raises:
        ValidationError: Not on the full Fock space, H does not conserve N,
            or the spectrum is shifted by a different mu
    """
    beta = _check_beta(beta)
    if isinstance(mu, bool) or not isinstance(mu, (int, float)) or not np.isfinite(mu):
        raise ValidationError(f"mu must be a finite number, got {mu!r}", field='ensemble.mu')
    mu = float(mu)
    hamiltonian = spectrum.hamiltonian
    if not hamiltonian.basis.is_full_fock:
        raise ValidationError("Grand canonical ensembles need the full Fock space (no sector)", field='sector')

    if hamiltonian.chemical_potential is None:
        shifted = grand_canonical_generator(hamiltonian, mu)
        spectrum = diagonalize(shifted, spectrum.tol_E)
        logger.debug(f"Re-diagonalized H - {mu:g} N: {len(spectrum.groups)} levels")
    elif abs(hamiltonian.chemical_potential - mu) > 0:
        raise ValidationError(f"Spectrum was computed for mu={hamiltonian.chemical_potential:g}, not {mu:g}",
                              field='ensemble.mu')

    weights = _boltzmann(spectrum.level_energies, beta)
    return Ensemble(spectrum, weights, EnsembleKind.GRAND_CANONICAL, beta=beta, mu=mu, tol_w=tol_w)


def custom_weights(spectrum: SpectralDecomposition, weights: Sequence[float],
                   tol_w: float = DEFAULT_TOL_W) -> Ensemble:
    """
    User-supplied weights, normalized.

    Raises:
        ValidationError: Wrong length, a negative entry or a zero sum

    Example:
        custom_weights(spec, [2, 1, 1, 0]).weights  # [0.5, 0.25, 0.25, 0]
    """
    w = as_real_vector(weights, spectrum.dim, name='ensemble.weights')
    if not np.all(np.isfinite(w)):
        raise ValidationError("Weights must be finite", field='ensemble.weights')
    if np.any(w < 0):
        raise ValidationError(f"Negative weight(s) at {np.nonzero(w < 0)[0].tolist()}", field='ensemble.weights')
    total = w.sum()
    if total <= 0:
        raise ValidationError("Weights sum to zero", field='ensemble.weights')
    return Ensemble(spectrum, w / total, EnsembleKind.CUSTOM, mu=spectrum.hamiltonian.chemical_potential,
                    tol_w=tol_w)


# ============================================================================
# Monotonicity and extended degeneracy
# ============================================================================

def check_monotone(ens: Ensemble) -> List[Tuple[int, int]]:
    """
    Pairs (K, L), K > L, violating (w_L - w_K) * Omega_KL >= 0.

    States are in ascending energy, so Omega_KL >= 0 for K > L and a violation
    is a strictly higher level carrying a larger weight (beyond tol_w * max w).
    Energy-only kinds are monotone by construction.

    Returns:
        Violating pairs sorted by K, then L (empty list when monotone)
    """
    if ens.energy_only:
        return []
    levels = ens.spectrum.level_energies
    w = ens.weights
    tol = ens.tol_w * ens.max_weight
    omega = levels[:, None] - levels[None, :]
    excess = w[:, None] - w[None, :]
    lower = np.tril(np.ones((ens.dim, ens.dim), dtype=bool), k=-1)
    bad = lower & (omega > 0) & (excess > tol)
    return [(int(k), int(l)) for k, l in zip(*np.nonzero(bad))]


@dataclass(frozen=True, eq=False)
class ExtendedDegenerateStructure:
    """
    D(K): states sharing the energy level or the weight of K.
    D^r(K): energetically degenerate partners of K with a different weight.

    For canonical and grand canonical ensembles weight equality follows the
    kind, not the numbers: D(K) is the level of K (every state at beta = 0)
    and D^r(K) is empty.
    """

    D: Tuple[FrozenSet[int], ...]
    Dr: Tuple[FrozenSet[int], ...]

    @cached_property
    def d_mask(self) -> np.ndarray:
        return _mask_of(self.D)

    @cached_property
    def dr_mask(self) -> np.ndarray:
        return _mask_of(self.Dr)

    @property
    def has_reduced_pairs(self) -> bool:
        return any(self.Dr)


def _mask_of(sets: Sequence[FrozenSet[int]]) -> np.ndarray:
    mask = np.zeros((len(sets), len(sets)), dtype=bool)
    for k, members in enumerate(sets):
        mask[k, list(members)] = True
    return mask


def extended_degenerate_structure(ens: Ensemble) -> ExtendedDegenerateStructure:
    """
    Build D(K) and D^r(K) for every state of the ensemble.

    Example:
        eds = extended_degenerate_structure(canonical_weights(spec, 1.0))
        eds.Dr  # all empty for energy-only weights
    """
    groups = ens.spectrum.group_index
    same_level = groups[:, None] == groups[None, :]
    if ens.energy_only:
        # Weights are a strictly decreasing function of the level for beta > 0,
        # whatever their floating-point values; at beta = 0 they are all equal
        same_weight = np.full_like(same_level, ens.infinite_temperature)
        same_weight |= same_level
    else:
        w = ens.weights
        same_weight = np.abs(w[:, None] - w[None, :]) <= ens.tol_w * ens.max_weight
    d = same_level | same_weight
    dr = same_level & ~same_weight
    D = tuple(frozenset(np.nonzero(row)[0].tolist()) for row in d)
    Dr = tuple(frozenset(np.nonzero(row)[0].tolist()) for row in dr)
    return ExtendedDegenerateStructure(D, Dr)


# ============================================================================
# Registry
# ============================================================================

def _from_pure(spectrum: SpectralDecomposition, spec: Mapping[str, Any], tol_w: float) -> Ensemble:
    return pure_ground_state(spectrum, tol_w)


def _from_custom(spectrum: SpectralDecomposition, spec: Mapping[str, Any], tol_w: float) -> Ensemble:
    if 'weights' not in spec:
        raise ValidationError("Custom ensembles need 'weights'", field='ensemble.weights')
    return custom_weights(spectrum, spec['weights'], tol_w)


def _from_canonical(spectrum: SpectralDecomposition, spec: Mapping[str, Any], tol_w: float) -> Ensemble:
    if 'beta' not in spec:
        raise ValidationError("Canonical ensembles need 'beta'", field='ensemble.beta')
    return canonical_weights(spectrum, spec['beta'], tol_w)


def _from_grand_canonical(spectrum: SpectralDecomposition, spec: Mapping[str, Any], tol_w: float) -> Ensemble:
    for key in ('beta', 'mu'):
        if key not in spec:
            raise ValidationError(f"Grand canonical ensembles need '{key}'", field=f'ensemble.{key}')
    return grand_canonical_weights(spectrum, spec['beta'], spec['mu'], tol_w)


# Ensemble registry
# Format: kind -> (builder, description); builders take (spectrum, spec, tol_w)
ENSEMBLE_KINDS: Dict[str, Tuple[Callable[[SpectralDecomposition, Mapping[str, Any], float], Ensemble], str]] = {
    'pure': (_from_pure, 'Non-degenerate ground state with weight 1'),
    'custom': (_from_custom, "Explicit non-negative 'weights', normalized"),
    'canonical': (_from_canonical, "Boltzmann weights at inverse temperature 'beta'"),
    'grand_canonical': (_from_grand_canonical, "Boltzmann weights of H - mu N, needs 'beta' and 'mu'"),
}

ENSEMBLE_FIELDS = ('kind', 'beta', 'mu', 'weights')


def get_available_ensembles() -> List[str]:
    return list(ENSEMBLE_KINDS.keys())


def build_ensemble(spectrum: SpectralDecomposition, spec: Mapping[str, Any],
                   tol_w: float = DEFAULT_TOL_W) -> Ensemble:
    """
    Build an ensemble from the JSON fragment {"kind": ..., "beta", "mu", "weights"}.

    Raises:
        ValidationError: Unknown kind, unknown field or missing parameter
    """
    if not isinstance(spec, Mapping):
        raise ValidationError("Ensemble spec must be an object", field='ensemble')
    unknown = sorted(set(spec) - set(ENSEMBLE_FIELDS))
    if unknown:
        raise ValidationError(f"Unknown ensemble field(s) {unknown}; allowed: {list(ENSEMBLE_FIELDS)}",
                              field=f'ensemble.{unknown[0]}')
    kind = spec.get('kind')
    if not isinstance(kind, str) or kind not in ENSEMBLE_KINDS:
        raise ValidationError(f"Unknown ensemble kind '{kind}'. Available kinds: {get_available_ensembles()}",
                              field='ensemble.kind')
    builder, _ = ENSEMBLE_KINDS[kind]
    ens = builder(spectrum, spec, tol_w)
    logger.info(f"Built {ens!r}")
    return ens


def main():
    """
    Example usage: canonical weights of the Hubbard dimer.
    """
    try:
        from .fock_space import Sector, build_model
    except ImportError:
        from fock_space import Sector, build_model

    spectrum = diagonalize(build_model({'name': 'hubbard_chain', 'sites': 2, 'U': 2.0}, Sector(2, 0.0)))
    for beta in (0.0, 1.0, 5.0):
        ens = canonical_weights(spectrum, beta)
        print(f"beta={beta:<4g} weights={np.round(ens.weights, 6)} violations={check_monotone(ens)}")

    inverted = custom_weights(spectrum, [0.1, 0.2, 0.3, 0.4])
    print(f"inverted custom weights -> violations {check_monotone(inverted)}")


if __name__ == "__main__":
    main()
