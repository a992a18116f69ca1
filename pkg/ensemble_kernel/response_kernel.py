#!/usr/bin/env python3
"""
Response Kernel Analysis

Kernel of the linear density-response function of a finite ensemble, from the
Lehmann representation over eigenstate pairs.

Features:
- Transition moments q_i^{KL} = <Psi_K| Q_i |Psi_L>
- Retarded response chi_ij(tau) in the time domain
- Necessary-condition map over pairs outside the extended degenerate subspace
- Sufficiency residuals in pairwise and commutator form
- Kernel assembly with commutant comparison and T=0 pathological cross-reference
- Static thermal response by finite differences
- Kernel dimension as a function of temperature

Potential directions are real probe-coefficient vectors v; kernel bases are
orthonormal columns of shape (n_probes, k).
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.linalg as la

try:
    from .ensemble import (Ensemble, EnsembleKind, ExtendedDegenerateStructure, canonical_weights,
                           check_monotone, extended_degenerate_structure, grand_canonical_weights)
    from .exceptions import CheckFailure, MonotonicityError, ValidationError
    from .fock_space import ManyBodyOperator, number_operator
    from .probes import (ProbeSet, commutant_basis, ensemble_1rdm, ensemble_density_matrix,
                         predict_pathological_generators)
    from .settings import DEFAULT_FD_STEP, DEFAULT_TOL_PAIR, DEFAULT_TOL_RANK, Tolerances
    from .spectrum import SpectralDecomposition, diagonalize
    from .util import NullSpace, commutator, null_space, principal_angles, same_subspace
except ImportError:
    from ensemble import (Ensemble, EnsembleKind, ExtendedDegenerateStructure, canonical_weights,
                          check_monotone, extended_degenerate_structure, grand_canonical_weights)
    from exceptions import CheckFailure, MonotonicityError, ValidationError
    from fock_space import ManyBodyOperator, number_operator
    from probes import (ProbeSet, commutant_basis, ensemble_1rdm, ensemble_density_matrix,
                        predict_pathological_generators)
    from settings import DEFAULT_FD_STEP, DEFAULT_TOL_PAIR, DEFAULT_TOL_RANK, Tolerances
    from spectrum import SpectralDecomposition, diagonalize
    from util import NullSpace, commutator, null_space, principal_angles, same_subspace

logger = logging.getLogger(__name__)

HERMITIAN_MOMENT_TOL = 1e-12
# Singular-value gaps below this are reported as suspicious
GAP_WARNING = 1e6
PATHOLOGICAL_TOL = 1e-8
# Time points per chunk when summing phases over all pairs
TIME_CHUNK = 256


# ============================================================================
# Transition moments and chi
# ============================================================================

@dataclass(frozen=True, eq=False)
class TransitionMoments:
    """q[i, K, L] = <Psi_K| Q_i |Psi_L> for every probe i."""

    q: np.ndarray
    labels: Tuple[str, ...]

    @property
    def n_probes(self) -> int:
        return int(self.q.shape[0])

    def direction(self, v: Sequence[float]) -> np.ndarray:
        """l[K, L] = sum_j v_j q_j^{KL}."""
        return np.tensordot(np.asarray(v, dtype=float), self.q, axes=1)


def transition_moments(probes: ProbeSet, spectrum: SpectralDecomposition) -> TransitionMoments:
    """
    Probe matrices in the eigenbasis of the spectrum.

    Raises:
        ValidationError: Probes and spectrum live on different bases
    """
    if probes.basis.dim != spectrum.dim or not np.array_equal(probes.basis.states, spectrum.basis.states):
        raise ValidationError("Probes and spectrum act on different bases", field='probes')
    vectors = spectrum.vectors
    q = np.einsum('ak,iab,bl->ikl', vectors.conj(), probes.matrices, vectors, optimize=True)
    asymmetry = float(np.max(np.abs(q - np.conj(np.transpose(q, (0, 2, 1)))))) if q.size else 0.0
    if asymmetry > HERMITIAN_MOMENT_TOL * max(1.0, probes.scale):
        logger.warning(f"Transition moments deviate from Hermitian symmetry by {asymmetry:.3e}")
    q.setflags(write=False)
    return TransitionMoments(q, probes.labels)


def chi_time(probes: ProbeSet, ens: Ensemble, tau: Union[float, Sequence[float]],
             moments: Optional[TransitionMoments] = None) -> np.ndarray:
    """
    Retarded response chi_ij(tau) from the Lehmann sum.

    chi_ij(tau) = -2 Im sum_KL w_L exp(i Omega_KL tau) q_j^{LK} q_i^{KL} for tau >= 0
    (the value at tau = 0 is the 0+ limit) and exactly zero for tau < 0.

    Args:
        probes: Probe set
        ens: Ensemble
        tau: Time difference, scalar or 1-D array

    Returns:
        (n, n) real matrix for scalar tau, (T, n, n) for an array
    """
    moments = moments or transition_moments(probes, ens.spectrum)
    taus = np.atleast_1d(np.asarray(tau, dtype=float))
    if not np.all(np.isfinite(taus)):
        raise ValidationError("tau must be finite", field='tau')
    levels = ens.spectrum.level_energies
    omega = levels[:, None] - levels[None, :]
    q = moments.q
    n = moments.n_probes
    # pair[i, j, K, L] = w_L q_i^{KL} q_j^{LK}
    pair = np.einsum('ikl,jlk,l->ijkl', q, q, ens.weights, optimize=True).reshape(n * n, -1)
    result = np.zeros((taus.size, n, n))
    causal = np.nonzero(taus >= 0)[0]
    for start in range(0, causal.size, TIME_CHUNK):
        index = causal[start:start + TIME_CHUNK]
        phases = np.exp(1j * taus[index, None] * omega.ravel()[None, :])
        result[index] = -2.0 * np.imag(phases @ pair.T).reshape(index.size, n, n)
    return result[0] if np.ndim(tau) == 0 else result


def chi_direction(moments: TransitionMoments, ens: Ensemble, v: Sequence[float],
                  taus: np.ndarray) -> np.ndarray:
    """sum_j chi_ij(tau) v_j on a grid of tau >= 0, shape (T, n)."""
    levels = ens.spectrum.level_energies
    omega = (levels[:, None] - levels[None, :]).ravel()
    l_matrix = moments.direction(v)
    # b[i, K, L] = w_L q_i^{KL} l^{LK}
    b = (moments.q * l_matrix.T[None, :, :] * ens.weights[None, None, :]).reshape(moments.n_probes, -1)
    taus = np.asarray(taus, dtype=float)
    result = np.zeros((taus.size, moments.n_probes))
    for start in range(0, taus.size, TIME_CHUNK):
        chunk = slice(start, start + TIME_CHUNK)
        phases = np.exp(1j * taus[chunk, None] * omega[None, :])
        result[chunk] = -2.0 * np.imag(phases @ b.T)
    result[taus < 0] = 0.0
    return result


# ============================================================================
# Necessary condition
# ============================================================================

@dataclass(frozen=True, eq=False)
class NecessaryMap:
    """
    Linear map v -> (a_KL) over the pairs outside the extended degenerate subspace.

    Attributes:
        rows: Pairs (K, L), K > L, entering the necessary condition
        matrix: Complex (n_rows, n_probes) entries q_j^{KL}
        pair_weights: (w_L - w_K) * Omega_KL of every row; positive, except
            underflowed thermal weights which give 0
    """

    rows: Tuple[Tuple[int, int], ...]
    matrix: np.ndarray
    pair_weights: np.ndarray

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    @property
    def realified(self) -> np.ndarray:
        """Real and imaginary parts stacked: (2 n_rows, n_probes)."""
        return np.vstack([self.matrix.real, self.matrix.imag])


def _require_monotone(ens: Ensemble):
    violations = check_monotone(ens)
    if violations:
        raise MonotonicityError(violations)


def necessary_map(probes: ProbeSet, ens: Ensemble, eds: Optional[ExtendedDegenerateStructure] = None,
                  tol_pair: float = DEFAULT_TOL_PAIR,
                  moments: Optional[TransitionMoments] = None) -> NecessaryMap:
    """
    Build the necessary-condition map.

    Rows are the pairs K > L with L outside D(K) and
    (w_L - w_K) Omega_KL > tol_pair * max(w) * max|Omega|; entries are q_j^{KL}.
    Canonical and grand canonical kinds keep every pair with Omega_KL > 0
    outside D(K), including pairs whose Boltzmann weights underflowed.

    Raises:
        MonotonicityError: The ensemble is not monotone

    Example:
        nmap = necessary_map(probes, canonical_weights(spectrum, 1.0))
        nmap.n_rows  # 6 for four non-degenerate states
    """
    _require_monotone(ens)
    eds = eds or extended_degenerate_structure(ens)
    moments = moments or transition_moments(probes, ens.spectrum)
    levels = ens.spectrum.level_energies
    w = ens.weights
    omega = levels[:, None] - levels[None, :]
    strength = (w[None, :] - w[:, None]) * omega
    threshold = tol_pair * ens.max_weight * float(np.max(np.abs(omega)))
    lower = np.tril(np.ones((ens.dim, ens.dim), dtype=bool), k=-1)
    if ens.energy_only:
        keep = lower & ~eds.d_mask & (omega > 0)
    else:
        keep = lower & ~eds.d_mask & (strength > threshold)
    ks, ls = np.nonzero(keep)
    matrix = moments.q[:, ks, ls].T.copy()
    logger.debug(f"Necessary map: {ks.size} pairs of {ens.dim * (ens.dim - 1) // 2}")
    return NecessaryMap(tuple(zip(ks.tolist(), ls.tolist())), matrix, strength[ks, ls])


def candidate_kernel(nmap: NecessaryMap, tol_rank: float = DEFAULT_TOL_RANK) -> NullSpace:
    """Null space of the realified necessary map (all directions when there are no rows)."""
    n_probes = nmap.matrix.shape[1]
    if nmap.n_rows == 0:
        return NullSpace(np.eye(n_probes), np.zeros(0), 0.0, float('inf'))
    result = null_space(nmap.realified, tol_rank)
    logger.debug(f"Candidate kernel dim {result.dim}; singular values {np.array2string(result.singular_values, precision=3)}")
    return result


def necessary_value(v: Sequence[float], s: float, probes: ProbeSet, ens: Ensemble,
                    moments: Optional[TransitionMoments] = None) -> float:
    """
    sum over necessary pairs of (w_L - w_K) Omega_KL / (s^2 + Omega_KL^2) |a_KL|^2.

    a_KL = sum_j q_j^{KL} v_j for the static direction v. Every term is
    non-negative on a monotone ensemble, so the value vanishes exactly on the
    null space of the necessary map, for every s > 0.

    Raises:
        ValidationError: s <= 0
        MonotonicityError: The ensemble is not monotone
    """
    if isinstance(s, bool) or not isinstance(s, (int, float)) or not s > 0:
        raise ValidationError(f"The Laplace variable s must be positive, got {s!r}", field='s')
    moments = moments or transition_moments(probes, ens.spectrum)
    nmap = necessary_map(probes, ens, moments=moments)
    if nmap.n_rows == 0:
        return 0.0
    ks = np.array([k for k, _ in nmap.rows])
    ls = np.array([l for _, l in nmap.rows])
    levels = ens.spectrum.level_energies
    omega = levels[ks] - levels[ls]
    amplitudes = nmap.matrix @ np.asarray(v, dtype=float)
    return float(np.sum(nmap.pair_weights / (s ** 2 + omega ** 2) * np.abs(amplitudes) ** 2))


# ============================================================================
# Sufficiency
# ============================================================================

def sufficiency_residual(v: Sequence[float], probes: ProbeSet, ens: Ensemble,
                         eds: Optional[ExtendedDegenerateStructure] = None,
                         moments: Optional[TransitionMoments] = None,
                         rho: Optional[np.ndarray] = None) -> Tuple[np.ndarray, np.ndarray]:
    """
    Sufficiency residuals of a candidate direction in both forms.

    Pairwise: r_i = -2 Im sum_{L < K in D^r(L)} (w_L - w_K) q_i^{LK} l^{KL}.
    Commutator: c_i = Re(i sum_K w_K <Psi_K| [Q_i, L_v] |Psi_K>), evaluated with
    matrix commutators in the occupation basis. The two agree whenever v
    satisfies the necessary condition.

    Returns:
        (r, c), one entry per probe
    """
    v = np.asarray(v, dtype=float)
    eds = eds or extended_degenerate_structure(ens)
    moments = moments or transition_moments(probes, ens.spectrum)

    lower = np.tril(eds.dr_mask, k=-1)
    ks, ls = np.nonzero(lower)
    if ks.size:
        l_matrix = moments.direction(v)
        dw = ens.weights[ls] - ens.weights[ks]
        terms = moments.q[:, ls, ks] * (dw * l_matrix[ks, ls])[None, :]
        pairwise = -2.0 * np.imag(terms.sum(axis=1))
    else:
        pairwise = np.zeros(moments.n_probes)

    rho = ensemble_density_matrix(ens) if rho is None else rho
    potential = probes.direction(v)
    traces = np.array([np.trace(rho @ commutator(q, potential)) for q in probes.matrices])
    commutator_form = np.real(1j * traces)
    return pairwise, commutator_form


# ============================================================================
# Kernel assembly
# ============================================================================

@dataclass(frozen=True)
class KernelOptions:
    """
    Switches of compute_kernel.

    Attributes:
        tolerances: Numerical thresholds
        assert_commutant: Raise CheckFailure when an energy-only kernel differs from the commutant
        predict_pathological: Cross-reference predicted T=0 generators for pure ensembles
    """

    tolerances: Tolerances = field(default_factory=Tolerances)
    assert_commutant: bool = True
    predict_pathological: bool = True


def _as_columns(basis: np.ndarray) -> List[List[float]]:
    return [[float(x) for x in column] for column in np.asarray(basis).T]


def _finite_or_none(value: float) -> Optional[float]:
    return float(value) if np.isfinite(value) else None


@dataclass(frozen=True, eq=False)
class KernelReport:
    """
    Result of compute_kernel.

    Bases are (n_probes, k) arrays with orthonormal columns.
    """

    labels: Tuple[str, ...]
    ensemble_kind: str
    n_pairs: int
    candidate: NullSpace
    pairwise_residuals: np.ndarray
    commutator_residuals: np.ndarray
    sufficiency_skipped: bool
    sufficiency_threshold: float
    kernel_basis: np.ndarray
    commutant: NullSpace
    angles: np.ndarray
    equals_commutant: bool
    tolerances: Tolerances
    pathological: Optional[List[Dict[str, Any]]] = None
    commutant_note: Optional[str] = None

    @property
    def candidate_dim(self) -> int:
        return self.candidate.dim

    @property
    def kernel_dim(self) -> int:
        return int(self.kernel_basis.shape[1])

    @property
    def commutant_dim(self) -> int:
        return self.commutant.dim

    @property
    def excess_dimension(self) -> int:
        return self.kernel_dim - self.commutant_dim

    @property
    def max_principal_angle(self) -> float:
        return float(self.angles.max()) if self.angles.size else 0.0

    @property
    def candidate_passes(self) -> List[bool]:
        """Per candidate vector: max_i |r_i| within the sufficiency threshold."""
        if self.pairwise_residuals.size == 0:
            return []
        return [bool(x) for x in np.max(np.abs(self.pairwise_residuals), axis=1) <= self.sufficiency_threshold]

    def contains(self, v: Sequence[float], tol: float = PATHOLOGICAL_TOL) -> bool:
        """Whether direction v lies in the kernel (relative distance <= tol)."""
        return _distance_to_span(np.asarray(v, dtype=float), self.kernel_basis) <= tol

    def to_dict(self) -> Dict[str, Any]:
        form_gap = (float(np.max(np.abs(self.pairwise_residuals - self.commutator_residuals)))
                    if self.pairwise_residuals.size else 0.0)
        return {
            'probe_labels': list(self.labels),
            'ensemble_kind': self.ensemble_kind,
            'n_pairs': self.n_pairs,
            'candidate_dim': self.candidate_dim,
            'kernel_dim': self.kernel_dim,
            'commutant_dim': self.commutant_dim,
            'excess_dimension': self.excess_dimension,
            'singular_values': [float(s) for s in self.candidate.singular_values],
            'rank_threshold': self.candidate.threshold,
            'singular_value_gap': _finite_or_none(self.candidate.gap),
            'candidate_basis': _as_columns(self.candidate.basis),
            'kernel_basis': _as_columns(self.kernel_basis),
            'commutant_basis': _as_columns(self.commutant.basis),
            'commutant_singular_values': [float(s) for s in self.commutant.singular_values],
            'principal_angles': [float(a) for a in self.angles],
            'max_principal_angle': self.max_principal_angle,
            'equals_commutant': self.equals_commutant,
            'commutant_note': self.commutant_note,
            'sufficiency': {
                'skipped': self.sufficiency_skipped,
                'threshold': self.sufficiency_threshold,
                'pairwise': [[float(x) for x in row] for row in self.pairwise_residuals],
                'commutator': [[float(x) for x in row] for row in self.commutator_residuals],
                'passes': self.candidate_passes,
                'max_form_difference': form_gap,
            },
            'pathological': self.pathological,
            'tolerances': self.tolerances.to_dict(),
        }

    def __repr__(self) -> str:
        return (f"KernelReport(kernel_dim={self.kernel_dim}, commutant_dim={self.commutant_dim}, "
                f"candidate_dim={self.candidate_dim}, max_angle={self.max_principal_angle:.2e})")


def _distance_to_span(v: np.ndarray, basis: np.ndarray) -> float:
    norm = float(np.linalg.norm(v))
    if norm == 0.0:
        return 0.0
    projected = basis @ (basis.T @ v) if basis.size else np.zeros_like(v)
    return float(np.linalg.norm(v - projected)) / norm


def _pathological_section(probes: ProbeSet, ens: Ensemble, kernel_basis: np.ndarray,
                          tolerances: Tolerances) -> List[Dict[str, Any]]:
    nodata = ensemble_1rdm(ens, tolerances.tol_occ)
    generators = predict_pathological_generators(nodata, ens.hamiltonian.is_interacting,
                                                  float(np.round(nodata.mean_particle_number)))
    coefficients = np.stack(probes.coefficients)
    section = []
    for index, g in enumerate(generators):
        v = probes.expansion_of(g)
        fit_error = float(np.linalg.norm(np.tensordot(v, coefficients, axes=1) - g))
        in_span = fit_error <= PATHOLOGICAL_TOL * max(1.0, float(np.linalg.norm(g)))
        distance = _distance_to_span(v, kernel_basis) if in_span else None
        section.append({
            'index': index,
            'in_probe_span': bool(in_span),
            'in_kernel': bool(in_span and distance <= PATHOLOGICAL_TOL),
            'distance': distance,
        })
    return section


def compute_kernel(probes: ProbeSet, ens: Ensemble, options: Optional[KernelOptions] = None) -> KernelReport:
    """
    Response kernel of an ensemble restricted to the probe span.

    Steps: monotonicity gate, necessary map and its null space, sufficiency
    filtering on the candidate span (skipped for energy-only kinds), commutant
    comparison by principal angles and, for pure ensembles with one-body probes,
    the predicted pathological generators.

    Args:
        probes: Probe set on the ensemble's basis
        ens: Monotone ensemble
        options: Tolerances and switches (defaults: KernelOptions())

    Returns:
        KernelReport

    Raises:
        MonotonicityError: Non-monotone ensemble
        CheckFailure: Energy-only kernel differs from the commutant and
            options.assert_commutant is set (not raised at beta = 0, where
            the kernel is the whole probe span)

    Example:
        report = compute_kernel(one_body_hermitian_basis(basis), canonical_weights(spectrum, 1.0))
        report.kernel_dim, report.commutant_dim  # (4, 4) on the Hubbard dimer
    """
    options = options or KernelOptions()
    tol = options.tolerances
    _require_monotone(ens)

    moments = transition_moments(probes, ens.spectrum)
    eds = extended_degenerate_structure(ens)
    nmap = necessary_map(probes, ens, eds, tol.tol_pair, moments)
    candidate = candidate_kernel(nmap, tol.tol_rank)
    if 0 < candidate.dim < len(probes) and candidate.gap < GAP_WARNING:
        logger.warning(f"Small singular-value gap {candidate.gap:.3e} at the rank decision")

    rho = ensemble_density_matrix(ens)
    scale = float(probes.scale) ** 2
    threshold = tol.tol_suff * scale
    pairwise = np.zeros((candidate.dim, len(probes)))
    commutator_form = np.zeros((candidate.dim, len(probes)))
    for m in range(candidate.dim):
        pairwise[m], commutator_form[m] = sufficiency_residual(candidate.basis[:, m], probes, ens, eds, moments, rho)

    if ens.energy_only or candidate.dim == 0:
        kernel_basis = candidate.basis
        skipped = ens.energy_only
    else:
        # The residual is linear in v: keep the candidate combinations it annihilates
        residual_map = pairwise.T
        survivors = null_space(residual_map, threshold, absolute=True)
        kernel_basis = candidate.basis @ survivors.basis
        skipped = False
    form_gap = float(np.max(np.abs(pairwise - commutator_form))) if pairwise.size else 0.0
    if form_gap > threshold:
        logger.warning(f"Pairwise and commutator sufficiency residuals differ by {form_gap:.3e}")

    commutant = commutant_basis(ens.hamiltonian, probes, tol.tol_rank)
    angles = principal_angles(kernel_basis, commutant.basis)
    equal, max_angle = same_subspace(kernel_basis, commutant.basis, tol.tol_angle)

    commutant_note = None
    if ens.infinite_temperature:
        # rho is proportional to the identity: every direction is unseen
        commutant_note = 'infinite temperature: the kernel is the whole probe span'
        if not equal:
            logger.info(f"beta = 0: kernel dim {kernel_basis.shape[1]}, commutant dim {commutant.dim}; "
                        f"commutant comparison not asserted")
    elif ens.energy_only and options.assert_commutant and not equal:
        raise CheckFailure(f"Finite-temperature kernel (dim {kernel_basis.shape[1]}) differs from the commutant "
                           f"(dim {commutant.dim}); max principal angle {max_angle:.3e}",
                           {'kernel_dim': int(kernel_basis.shape[1]), 'commutant_dim': commutant.dim,
                            'max_principal_angle': max_angle})

    pathological = None
    if options.predict_pathological and ens.kind == EnsembleKind.PURE and probes.is_one_body:
        pathological = _pathological_section(probes, ens, kernel_basis, tol)

    report = KernelReport(probes.labels, ens.kind.value, nmap.n_rows, candidate, pairwise, commutator_form,
                          skipped, threshold, kernel_basis, commutant, angles, equal, tol, pathological,
                          commutant_note)
    logger.info(f"Kernel: {report!r}")
    return report


# ============================================================================
# Static thermal response
# ============================================================================

def _thermal_expectations(generator: np.ndarray, beta: float, probes: ProbeSet) -> np.ndarray:
    energies, vectors = la.eigh(generator)
    boltzmann = np.exp(-beta * (energies - energies.min()))
    boltzmann /= boltzmann.sum()
    rho = (vectors * boltzmann) @ vectors.conj().T
    return probes.expectation(rho)


def _static_generator(hamiltonian: ManyBodyOperator, kind: Union[str, EnsembleKind],
                      mu: Optional[float]) -> np.ndarray:
    kind = EnsembleKind(kind)
    if kind == EnsembleKind.CANONICAL:
        return np.array(hamiltonian.matrix)
    if kind != EnsembleKind.GRAND_CANONICAL:
        raise ValidationError(f"Static thermal response needs a canonical or grand canonical kind, got '{kind.value}'",
                              field='ensemble.kind')
    if mu is None:
        raise ValidationError("Grand canonical static response needs mu", field='ensemble.mu')
    if hamiltonian.chemical_potential is not None:
        if hamiltonian.chemical_potential != mu:
            raise ValidationError(f"Generator is shifted by mu={hamiltonian.chemical_potential:g}, not {mu:g}",
                                  field='ensemble.mu')
        return np.array(hamiltonian.matrix)
    if not hamiltonian.basis.is_full_fock:
        raise ValidationError("Grand canonical response needs the full Fock space", field='sector')
    return hamiltonian.matrix - mu * number_operator(hamiltonian.basis).matrix


def static_thermal_response(hamiltonian: ManyBodyOperator, probes: ProbeSet, kind: Union[str, EnsembleKind],
                            beta: float, mu: Optional[float], v: Sequence[float],
                            step: float = DEFAULT_FD_STEP) -> np.ndarray:
    """
    Derivative of the thermal expectations <Q_i> along the static perturbation L_v.

    d_i = (Tr[rho(G + h L_v) Q_i] - Tr[rho(G - h L_v) Q_i]) / 2h with G = H
    (canonical) or H - mu N (grand canonical), rho re-diagonalized at +-h.

    Raises:
        ValidationError: Non-thermal kind, missing mu or non-positive step

    Example:
        d = static_thermal_response(H, probes, 'canonical', 1.0, None, number_direction)
        # ~0: exp(-beta h N) is a scalar on a fixed-N sector
    """
    if not step > 0:
        raise ValidationError(f"Finite-difference step must be positive, got {step}", field='tolerances.fd_step')
    generator = _static_generator(hamiltonian, kind, mu)
    potential = probes.direction(v)
    plus = _thermal_expectations(generator + step * potential, beta, probes)
    minus = _thermal_expectations(generator - step * potential, beta, probes)
    return (plus - minus) / (2.0 * step)


def static_kernel(hamiltonian: ManyBodyOperator, probes: ProbeSet, kind: Union[str, EnsembleKind],
                  beta: float, mu: Optional[float] = None, tolerances: Optional[Tolerances] = None) -> NullSpace:
    """
    Directions whose static thermal response vanishes (max_i |d_i| <= static_tol * scale).
    """
    tolerances = tolerances or Tolerances()
    n = len(probes)
    susceptibility = np.stack([static_thermal_response(hamiltonian, probes, kind, beta, mu, np.eye(n)[j],
                                                       tolerances.fd_step) for j in range(n)], axis=1)
    return null_space(susceptibility, tolerances.static_tol * probes.scale, absolute=True)


# ============================================================================
# Temperature sweep
# ============================================================================

def kernel_dimension_sweep(hamiltonian: ManyBodyOperator, probes: ProbeSet, betas: Sequence[float],
                           tolerances: Optional[Tolerances] = None, mu: Optional[float] = None,
                           spectrum: Optional[SpectralDecomposition] = None) -> List[Dict[str, Any]]:
    """
    Kernel dimension of thermal ensembles as a function of beta.

    Canonical unless mu is given (then grand canonical on the full Fock space).

    Returns:
        One row per beta: beta, kernel_dim, commutant_dim, candidate_dim, max_principal_angle
    """
    tolerances = tolerances or Tolerances()
    if not betas:
        raise ValidationError("Sweep needs at least one beta", field='analysis.betas')
    spectrum = spectrum or diagonalize(hamiltonian, tolerances.tol_E)
    options = KernelOptions(tolerances, assert_commutant=False, predict_pathological=False)
    rows = []
    for beta in betas:
        if mu is None:
            ens = canonical_weights(spectrum, beta, tolerances.tol_w)
        else:
            ens = grand_canonical_weights(spectrum, beta, mu, tolerances.tol_w)
            spectrum = ens.spectrum
        report = compute_kernel(probes, ens, options)
        rows.append({'beta': float(beta), 'kernel_dim': report.kernel_dim, 'commutant_dim': report.commutant_dim,
                     'candidate_dim': report.candidate_dim, 'max_principal_angle': report.max_principal_angle})
        logger.info(f"beta={beta:g}: kernel_dim={report.kernel_dim}")
    return rows
