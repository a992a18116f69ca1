#!/usr/bin/env python3
"""
Probe Operators

Families of Hermitian probe operators {Q_i} whose expectation values are
monitored, the ensemble one-body reduced density matrix with its natural
orbitals, the predicted zero-temperature pathological generators, and the
commutant of the Hamiltonian inside the probe span.

Features:
- Site densities, spin densities, the full one-body Hermitian basis
- Symmetry generators N, Sx, Sy, Sz
- Custom probes from one-body coefficient matrices
- Natural orbitals and occupation numbers of any ensemble
- PROBE_KINDS registry for building probe sets from JSON fragments

Probe directions are real coefficient vectors v, the potential being
L_v = sum_j v_j Q_j.
"""

import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.linalg as la

try:
    from .ensemble import Ensemble
    from .exceptions import ValidationError
    from .fock_space import (SPIN_DOWN, SPIN_UP, FockBasis, ManyBodyOperator, coefficient_matrix,
                             one_body_operator)
    from .settings import DEFAULT_TOL_OCC, DEFAULT_TOL_RANK
    from .util import NullSpace, commutator, null_space, spectral_norm
except ImportError:
    from ensemble import Ensemble
    from exceptions import ValidationError
    from fock_space import (SPIN_DOWN, SPIN_UP, FockBasis, ManyBodyOperator, coefficient_matrix,
                            one_body_operator)
    from settings import DEFAULT_TOL_OCC, DEFAULT_TOL_RANK
    from util import NullSpace, commutator, null_space, spectral_norm

logger = logging.getLogger(__name__)

SPAN_KINDS = ('site_density', 'spin_density', 'one_body_full', 'symmetry', 'custom')


@dataclass(frozen=True, eq=False)
class ProbeSet:
    """
    Ordered, labelled probe operators on one basis.

    Attributes:
        probes: Hermitian ManyBodyOperators
        labels: Unique probe names, parallel to probes
        span_kind: Family the probes come from
        coefficients: One-body coefficient matrix of every probe, when all are one-body
    """

    probes: Tuple[ManyBodyOperator, ...]
    labels: Tuple[str, ...]
    span_kind: str = 'custom'
    coefficients: Optional[Tuple[np.ndarray, ...]] = None

    def __post_init__(self):
        object.__setattr__(self, 'probes', tuple(self.probes))
        object.__setattr__(self, 'labels', tuple(str(label) for label in self.labels))
        if not self.probes:
            raise ValidationError("A probe set needs at least one probe", field='probes')
        if len(self.labels) != len(self.probes):
            raise ValidationError(f"{len(self.labels)} labels for {len(self.probes)} probes", field='probes')
        if len(set(self.labels)) != len(self.labels):
            raise ValidationError(f"Probe labels must be unique: {list(self.labels)}", field='probes')
        if self.span_kind not in SPAN_KINDS:
            raise ValidationError(f"Unknown span kind '{self.span_kind}'", field='probes')
        basis = self.probes[0].basis
        if any(q.basis is not basis for q in self.probes):
            raise ValidationError("All probes must act on the same basis", field='probes')
        if self.coefficients is None and all(q.one_body is not None for q in self.probes):
            object.__setattr__(self, 'coefficients', tuple(np.array(q.one_body) for q in self.probes))

    def __len__(self) -> int:
        return len(self.probes)

    @property
    def basis(self) -> FockBasis:
        return self.probes[0].basis

    @cached_property
    def matrices(self) -> np.ndarray:
        """Stacked (n_probes, dim, dim) probe matrices."""
        return np.stack([q.matrix for q in self.probes])

    @cached_property
    def norms(self) -> np.ndarray:
        return np.array([spectral_norm(q.matrix) for q in self.probes])

    @property
    def scale(self) -> float:
        """max_i ||Q_i||, the tolerance scale of response checks."""
        return float(self.norms.max())

    @property
    def is_one_body(self) -> bool:
        return self.coefficients is not None

    def direction(self, v: Sequence[float]) -> np.ndarray:
        """Matrix of L_v = sum_j v_j Q_j."""
        v = np.asarray(v, dtype=float)
        if v.shape != (len(self),):
            raise ValidationError(f"Direction needs {len(self)} coefficients, got shape {v.shape}",
                                  field='direction')
        return np.tensordot(v, self.matrices, axes=1)

    def direction_coefficients(self, v: Sequence[float]) -> np.ndarray:
        """One-body coefficient matrix of L_v."""
        if not self.is_one_body:
            raise ValidationError("Probe set has no one-body coefficients", field='probes')
        return np.tensordot(np.asarray(v, dtype=float), np.stack(self.coefficients), axes=1)

    def expansion_of(self, g: np.ndarray) -> np.ndarray:
        """
        Real probe coefficients v with sum_j v_j h_j closest to the one-body matrix g.

        Least squares over the real and imaginary parts; exact when g lies in
        the coefficient span.
        """
        if not self.is_one_body:
            raise ValidationError("Probe set has no one-body coefficients", field='probes')
        columns = np.stack([c.ravel() for c in self.coefficients], axis=1)
        system = np.vstack([columns.real, columns.imag])
        target = np.asarray(g, dtype=complex).ravel()
        rhs = np.concatenate([target.real, target.imag])
        solution, *_ = la.lstsq(system, rhs)
        return solution

    def expectation(self, rho: np.ndarray) -> np.ndarray:
        """Tr[rho Q_i] for every probe."""
        return np.real(np.einsum('ab,iba->i', rho, self.matrices))

    def to_dict(self) -> Dict[str, Any]:
        return {'span_kind': self.span_kind, 'labels': list(self.labels), 'count': len(self)}

    def __repr__(self) -> str:
        return f"ProbeSet(kind='{self.span_kind}', count={len(self)}, dim={self.basis.dim})"


def _probe_set(basis: FockBasis, coefficients: Sequence[np.ndarray], labels: Sequence[str],
               span_kind: str) -> ProbeSet:
    probes = tuple(one_body_operator(h, basis, label=label) for h, label in zip(coefficients, labels))
    return ProbeSet(probes, tuple(labels), span_kind, tuple(np.asarray(h, dtype=complex) for h in coefficients))


# ============================================================================
# Probe families
# ============================================================================

def site_density_probes(basis: FockBasis) -> ProbeSet:
    """
    One probe per site, n(site) = sum_spin c+ c.

    Example:
        probes = site_density_probes(dimer_basis)
        probes.labels  # ('n(0)', 'n(1)')
    """
    orbitals = basis.orbitals
    m = orbitals.count
    coefficients, labels = [], []
    for site in orbitals.sites:
        h = np.zeros((m, m))
        for p in orbitals.orbitals_on_site(site):
            h[p, p] = 1.0
        coefficients.append(h)
        labels.append(f"n({site})")
    return _probe_set(basis, coefficients, labels, 'site_density')


def spin_density_probes(basis: FockBasis) -> ProbeSet:
    """One probe per spin-orbital, n(site, spin)."""
    m = basis.n_orbitals
    coefficients, labels = [], []
    for p, label in enumerate(basis.orbitals.labels):
        h = np.zeros((m, m))
        h[p, p] = 1.0
        coefficients.append(h)
        labels.append(f"n({label})")
    return _probe_set(basis, coefficients, labels, 'spin_density')


def one_body_hermitian_basis(basis: FockBasis) -> ProbeSet:
    """
    All M^2 Hermitian one-body operators, orthogonal under the trace inner product.

    Order: M diagonal E(p,p), then the symmetric S(p,q) = c+_p c_q + c+_q c_p for
    p < q, then the antisymmetric A(p,q) = i (c+_p c_q - c+_q c_p) for p < q.
    """
    m = basis.n_orbitals
    coefficients, labels = [], []
    for p in range(m):
        h = np.zeros((m, m), dtype=complex)
        h[p, p] = 1.0
        coefficients.append(h)
        labels.append(f"E({p},{p})")
    pairs = [(p, q) for p in range(m) for q in range(p + 1, m)]
    for p, q in pairs:
        h = np.zeros((m, m), dtype=complex)
        h[p, q] = h[q, p] = 1.0
        coefficients.append(h)
        labels.append(f"S({p},{q})")
    for p, q in pairs:
        h = np.zeros((m, m), dtype=complex)
        h[p, q] = 1j
        h[q, p] = -1j
        coefficients.append(h)
        labels.append(f"A({p},{q})")
    return _probe_set(basis, coefficients, labels, 'one_body_full')


def symmetry_coefficients(basis: FockBasis) -> Dict[str, np.ndarray]:
    """One-body coefficient matrices of N and, with spin labels, Sx, Sy, Sz."""
    orbitals = basis.orbitals
    m = orbitals.count
    result = {'N': np.eye(m, dtype=complex)}
    if not orbitals.spinful:
        return result
    sx = np.zeros((m, m), dtype=complex)
    sy = np.zeros((m, m), dtype=complex)
    sz = np.zeros((m, m), dtype=complex)
    for site in orbitals.sites:
        up, down = orbitals.index(site, SPIN_UP), orbitals.index(site, SPIN_DOWN)
        sx[up, down] = sx[down, up] = 0.5
        sy[up, down] = -0.5j
        sy[down, up] = 0.5j
        sz[up, up] = 0.5
        sz[down, down] = -0.5
    result.update({'Sx': sx, 'Sy': sy, 'Sz': sz})
    return result


def symmetry_probes(basis: FockBasis) -> ProbeSet:
    """
    Symmetry generators N, Sx, Sy, Sz (only N without spin labels).

    Each lies in the span of one_body_hermitian_basis; the expansion is
    one_body_hermitian_basis(basis).expansion_of(probes.coefficients[k]).
    """
    table = symmetry_coefficients(basis)
    if len(table) == 1:
        logger.info("No spin labels: symmetry probes reduce to N")
    return _probe_set(basis, list(table.values()), list(table.keys()), 'symmetry')


def custom_probes(basis: FockBasis, matrices: Sequence[Any], labels: Optional[Sequence[str]] = None) -> ProbeSet:
    """
    Probes from explicit one-body coefficient matrices.

    Raises:
        ValidationError: Empty list, malformed or non-Hermitian matrix, label count mismatch
    """
    if not isinstance(matrices, (list, tuple)) or not matrices:
        raise ValidationError("Custom probes need a non-empty list of coefficient matrices", field='probes.custom')
    coefficients = [coefficient_matrix(value, basis.n_orbitals, field=f'probes.custom[{k}]')
                    for k, value in enumerate(matrices)]
    if labels is None:
        labels = [f"Q{k}" for k in range(len(coefficients))]
    elif not isinstance(labels, (list, tuple)) or not all(isinstance(label, str) for label in labels):
        raise ValidationError("Probe labels must be a list of strings", field='probes.labels')
    elif len(labels) != len(coefficients):
        raise ValidationError(f"{len(labels)} labels for {len(coefficients)} custom probes", field='probes.labels')
    return _probe_set(basis, coefficients, list(labels), 'custom')


# ============================================================================
# One-body reduced density matrix
# ============================================================================

@dataclass(frozen=True, eq=False)
class NaturalOrbitalData:
    """
    Ensemble 1RDM gamma_pq = <c+_q c_p> with its eigen-decomposition.

    Attributes:
        gamma: Hermitian M x M matrix
        occupations: Natural occupation numbers, descending
        no_vectors: Natural orbitals as orthonormal columns
        tol_occ: Tolerance for 0 / 1 / degenerate occupations
    """

    gamma: np.ndarray
    occupations: np.ndarray
    no_vectors: np.ndarray
    tol_occ: float = DEFAULT_TOL_OCC

    @property
    def mean_particle_number(self) -> float:
        return float(np.real(np.trace(self.gamma)))

    def to_dict(self) -> Dict[str, Any]:
        return {'occupations': [float(n) for n in self.occupations], 'tol_occ': self.tol_occ}


def ensemble_density_matrix(ens: Ensemble) -> np.ndarray:
    """Many-body rho = sum_K w_K |Psi_K><Psi_K| in the occupation basis."""
    members = ens.members
    vectors = ens.spectrum.vectors[:, members]
    return (vectors * ens.weights[members]) @ vectors.conj().T


def ensemble_1rdm(ens: Ensemble, tol_occ: float = DEFAULT_TOL_OCC) -> NaturalOrbitalData:
    """
    One-body reduced density matrix of an ensemble and its natural orbitals.

    Example:
        nodata = ensemble_1rdm(pure_ground_state(spectrum))
        nodata.occupations  # descending, each in [0, 1]
    """
    basis = ens.spectrum.basis
    m = basis.n_orbitals
    rho = ensemble_density_matrix(ens)
    gamma = np.zeros((m, m), dtype=complex)
    for p in range(m):
        for q in range(m):
            # c+_q c_p |src> = sign |dst>  =>  Tr[rho c+_q c_p] = sum rho[src, dst] * sign
            src, dst, sign = basis.excitation_table(q, p)
            if src.size:
                gamma[p, q] = np.sum(rho[src, dst] * sign)
    gamma = 0.5 * (gamma + gamma.conj().T)
    occupations, vectors = la.eigh(gamma)
    order = np.argsort(occupations)[::-1]
    return NaturalOrbitalData(gamma, occupations[order], vectors[:, order], float(tol_occ))


def _occupation_blocks(occupations: np.ndarray, tol_occ: float, interacting: bool) -> List[Tuple[str, List[int]]]:
    empty = [k for k, n in enumerate(occupations) if n <= tol_occ]
    full = [k for k, n in enumerate(occupations) if n >= 1.0 - tol_occ]
    blocks: List[Tuple[str, List[int]]] = []
    if full:
        blocks.append(('occupied', full))
    if empty:
        blocks.append(('unoccupied', empty))
    if not interacting:
        rest = [k for k in range(occupations.size) if k not in empty and k not in full]
        cluster: List[int] = []
        for k in rest:
            if cluster and abs(occupations[k] - occupations[cluster[-1]]) > tol_occ:
                if len(cluster) > 1:
                    blocks.append(('degenerate', cluster))
                cluster = []
            cluster.append(k)
        if len(cluster) > 1:
            blocks.append(('degenerate', cluster))
    return blocks


def _hermitian_block_basis(size: int) -> List[np.ndarray]:
    generators = []
    for a in range(size):
        g = np.zeros((size, size), dtype=complex)
        g[a, a] = 1.0
        generators.append(g)
    for a in range(size):
        for b in range(a + 1, size):
            g = np.zeros((size, size), dtype=complex)
            g[a, b] = g[b, a] = 1.0
            generators.append(g)
            g = np.zeros((size, size), dtype=complex)
            g[a, b] = 1j
            g[b, a] = -1j
            generators.append(g)
    return generators


def predict_pathological_generators(nodata: NaturalOrbitalData, interacting: bool,
                                    n_particles: Optional[float] = None) -> List[np.ndarray]:
    """
    One-body generators expected in the zero-temperature kernel from 1RDM structure.

    Blocks of natural orbitals considered: fully unoccupied (n <= tol_occ),
    fully occupied (n >= 1 - tol_occ) and, for non-interacting models only,
    groups of equal occupation. Each block of size b contributes b^2 Hermitian
    generators written in the natural-orbital basis and rotated back to the
    orbital basis.

    Args:
        nodata: Natural orbitals of the (pure) ensemble
        interacting: Whether the model has a two-body part
        n_particles: Expected trace of gamma, checked when given

    Returns:
        Hermitian M x M coefficient matrices (possibly an empty list)
    """
    if n_particles is not None and abs(nodata.mean_particle_number - n_particles) > 1e-8:
        logger.warning(f"1RDM trace {nodata.mean_particle_number:.10g} differs from N={n_particles}")
    u = nodata.no_vectors
    generators = []
    for name, block in _occupation_blocks(nodata.occupations, nodata.tol_occ, interacting):
        columns = u[:, block]
        for g in _hermitian_block_basis(len(block)):
            generators.append(columns @ g @ columns.conj().T)
        logger.debug(f"{name} natural-orbital block {block}: {len(block) ** 2} generators")
    return generators


# ============================================================================
# Commutant
# ============================================================================

def commutator_map(hamiltonian: ManyBodyOperator, probes: ProbeSet) -> np.ndarray:
    """Real (2 dim^2, n_probes) matrix of v -> vec([H, L_v]) split into real and imaginary parts."""
    h = hamiltonian.matrix
    columns = np.stack([commutator(h, q).ravel() for q in probes.matrices], axis=1)
    return np.vstack([columns.real, columns.imag])


def commutant_basis(hamiltonian: ManyBodyOperator, probes: ProbeSet, tol_rank: float = DEFAULT_TOL_RANK) -> NullSpace:
    """
    Probe directions commuting with H.

    Args:
        hamiltonian: Operator on the probes' basis
        probes: Probe set
        tol_rank: Singular-value threshold relative to the largest

    Returns:
        NullSpace whose basis columns are orthonormal coefficient vectors

    Raises:
        ValidationError: H and probes live on different bases

    Example:
        commutant_basis(H_dimer, one_body_hermitian_basis(basis)).dim  # 4
    """
    if hamiltonian.basis is not probes.basis and not np.array_equal(hamiltonian.basis.states, probes.basis.states):
        raise ValidationError("Hamiltonian and probes act on different bases", field='probes')
    result = null_space(commutator_map(hamiltonian, probes), tol_rank)
    logger.debug(f"Commutant: dim {result.dim} of {len(probes)}, gap {result.gap:.3e}")
    return result


# ============================================================================
# Registry
# ============================================================================

# Probe registry
# Format: name -> (builder, description)
PROBE_KINDS: Dict[str, Tuple[Callable[[FockBasis], ProbeSet], str]] = {
    'site_density': (site_density_probes, 'Density on every site, summed over spin'),
    'spin_density': (spin_density_probes, 'Density of every spin-orbital'),
    'one_body_full': (one_body_hermitian_basis, 'All M^2 Hermitian one-body operators'),
    'symmetry': (symmetry_probes, 'N, Sx, Sy, Sz'),
}


def get_available_probes() -> List[str]:
    return list(PROBE_KINDS.keys()) + ['custom']


def build_probes(basis: FockBasis, spec: Union[str, Mapping[str, Any]]) -> ProbeSet:
    """
    Build probes from "site_density" | "one_body_full" | ... | {"custom": [...], "labels": [...]}.

    Raises:
        ValidationError: Unknown probe kind or malformed custom entry
    """
    if isinstance(spec, Mapping):
        unknown = sorted(set(spec) - {'custom', 'labels'})
        if unknown or 'custom' not in spec:
            raise ValidationError(f"Probe objects take 'custom' and optional 'labels'; got {sorted(spec)}",
                                  field=f"probes.{unknown[0] if unknown else 'custom'}")
        return custom_probes(basis, spec['custom'], spec.get('labels'))
    if not isinstance(spec, str) or spec not in PROBE_KINDS:
        raise ValidationError(f"Unknown probe kind '{spec}'. Available kinds: {get_available_probes()}",
                              field='probes')
    builder, _ = PROBE_KINDS[spec]
    return builder(basis)
