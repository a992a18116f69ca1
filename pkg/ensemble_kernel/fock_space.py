#!/usr/bin/env python3
"""
Fock Space Construction

This module builds occupation-number bases for a finite set of spin-orbitals
and assembles second-quantized Hermitian operators (Hamiltonians and probes)
as dense matrices on those bases.

Features:
- Orbital sets with (site, spin) labels, spinless or spinful
- Full Fock space, fixed-N and fixed-(N, Sz) sectors
- Fermionic creation/annihilation with Jordan-Wigner signs
- One-body operators sum_pq h_pq c+_p c_q from coefficient matrices
- Density-density (Hubbard type) interactions
- Named models through the MODEL_TYPES registry

Conventions:
- Orbital p <-> bit p of the occupation word
- The creation sign counts occupied orbitals strictly below p
- Operators that leave a restricted sector are projected back onto it
"""

import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Any, Callable, Dict, List, Mapping, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

try:
    from .exceptions import ValidationError
    from .settings import HERMITIAN_TOL_COEFFICIENTS, HERMITIAN_TOL_OPERATOR
    from .util import as_number, commutator, hermiticity_error
except ImportError:
    from exceptions import ValidationError
    from settings import HERMITIAN_TOL_COEFFICIENTS, HERMITIAN_TOL_OPERATOR
    from util import as_number, commutator, hermiticity_error

logger = logging.getLogger(__name__)

SPIN_UP = 'up'
SPIN_DOWN = 'down'
SPIN_PROJECTION = {SPIN_UP: 0.5, SPIN_DOWN: -0.5}

# Guard for the 2^M enumeration
MAX_ORBITALS = 20


# ============================================================================
# Orbitals, sectors and bases
# ============================================================================

class Orbital(NamedTuple):
    """One spin-orbital: a lattice site and an optional spin tag."""

    site: int
    spin: Optional[str] = None

    @property
    def sz(self) -> float:
        return SPIN_PROJECTION.get(self.spin, 0.0)

    def __str__(self) -> str:
        return f"{self.site}{'' if self.spin is None else self.spin[0]}"


@dataclass(frozen=True)
class OrbitalSet:
    """
    Ordered set of M spin-orbitals.

    The position of a label in `labels` is the orbital index p used by every
    operator in the package.

    Example:
        orbitals = OrbitalSet.chain(2, spinful=True)
        # labels: (0, up), (0, down), (1, up), (1, down)
    """

    labels: Tuple[Orbital, ...]

    def __post_init__(self):
        labels = tuple(Orbital(int(lab[0]), lab[1] if len(lab) > 1 else None) for lab in self.labels)
        object.__setattr__(self, 'labels', labels)
        if len(labels) < 1:
            raise ValidationError("An orbital set needs at least one orbital", field='orbitals')
        if len(labels) > MAX_ORBITALS:
            raise ValidationError(f"At most {MAX_ORBITALS} orbitals are supported, got {len(labels)}",
                                  field='orbitals')
        for label in labels:
            if label.spin is not None and label.spin not in SPIN_PROJECTION:
                raise ValidationError(f"Unknown spin tag '{label.spin}' (use 'up', 'down' or None)",
                                      field='orbitals')
        if len(set(labels)) != len(labels):
            raise ValidationError("Orbital (site, spin) labels must be unique", field='orbitals')

    @classmethod
    def chain(cls, sites: int, spinful: bool = True) -> 'OrbitalSet':
        """Site-major orbitals of a lattice: p = 2*site + (0 up, 1 down) when spinful."""
        if int(sites) < 1:
            raise ValidationError(f"Number of sites must be >= 1, got {sites}", field='model.sites')
        if spinful:
            return cls(tuple(Orbital(s, spin) for s in range(int(sites)) for spin in (SPIN_UP, SPIN_DOWN)))
        return cls(tuple(Orbital(s) for s in range(int(sites))))

    @classmethod
    def generic(cls, count: int) -> 'OrbitalSet':
        """M spinless orbitals, each on its own site."""
        return cls.chain(count, spinful=False)

    @property
    def count(self) -> int:
        return len(self.labels)

    @property
    def spinful(self) -> bool:
        return all(label.spin is not None for label in self.labels)

    @property
    def sites(self) -> List[int]:
        return sorted({label.site for label in self.labels})

    def index(self, site: int, spin: Optional[str] = None) -> int:
        """Orbital index of a (site, spin) label."""
        try:
            return self.labels.index(Orbital(site, spin))
        except ValueError:
            raise ValidationError(f"No orbital with site={site}, spin={spin}", field='orbitals') from None

    def orbitals_on_site(self, site: int) -> List[int]:
        return [p for p, label in enumerate(self.labels) if label.site == site]


@dataclass(frozen=True)
class Sector:
    """
    Particle-number sector: full Fock (n_particles None), fixed N, or fixed (N, Sz).
    """

    n_particles: Optional[int] = None
    sz: Optional[float] = None

    @property
    def kind(self) -> str:
        if self.n_particles is None:
            return 'full'
        return 'N' if self.sz is None else 'N_Sz'

    @classmethod
    def from_dict(cls, data: Optional[Mapping[str, Any]]) -> 'Sector':
        """Parse the JSON fragment {"N": int, "Sz": optional}; None or {} means full Fock."""
        if not data:
            return cls()
        unknown = set(data) - {'N', 'Sz'}
        if unknown:
            raise ValidationError(f"Unknown sector field(s): {sorted(unknown)}", field=f'sector.{sorted(unknown)[0]}')
        n = data.get('N')
        sz = data.get('Sz')
        if n is not None and (isinstance(n, bool) or not isinstance(n, int)):
            raise ValidationError(f"Sector N must be an integer, got {n!r}", field='sector.N')
        if sz is not None and n is None:
            raise ValidationError("Sector Sz requires N", field='sector.Sz')
        return cls(n, None if sz is None else as_number(sz, 'sector.Sz'))

    def to_dict(self) -> Dict[str, Any]:
        payload: Dict[str, Any] = {}
        if self.n_particles is not None:
            payload['N'] = self.n_particles
        if self.sz is not None:
            payload['Sz'] = self.sz
        return payload


def _popcount(words: np.ndarray, n_bits: int) -> np.ndarray:
    counts = np.zeros_like(words)
    for bit in range(n_bits):
        counts += (words >> bit) & 1
    return counts


def _mask(indices: Sequence[int]) -> int:
    word = 0
    for p in indices:
        word |= 1 << p
    return word


@dataclass(frozen=True, eq=False)
class FockBasis:
    """
    Enumerated occupation words of a sector, strictly increasing as integers.

    Attributes:
        orbitals: The orbital set
        sector: The sector constraint
        states: int64 array of occupation words (bit p = occupation of orbital p)
    """

    orbitals: OrbitalSet
    sector: Sector
    states: np.ndarray

    @property
    def dim(self) -> int:
        return int(self.states.size)

    @property
    def n_orbitals(self) -> int:
        return self.orbitals.count

    @property
    def is_full_fock(self) -> bool:
        return self.sector.kind == 'full'

    @cached_property
    def occupations(self) -> np.ndarray:
        """(dim, M) 0/1 occupation table."""
        bits = np.arange(self.n_orbitals)
        return ((self.states[:, None] >> bits[None, :]) & 1).astype(float)

    @cached_property
    def particle_numbers(self) -> np.ndarray:
        return self.occupations.sum(axis=1)

    @cached_property
    def excitation_tables(self) -> Dict[Tuple[int, int], Tuple[np.ndarray, np.ndarray, np.ndarray]]:
        """
        Tables of every c+_p c_q, built in one pass on first access.

        The mapping and its read-only arrays are never modified afterwards, so
        threads may share a basis; a concurrent first access builds equal tables.
        """
        m = self.n_orbitals
        return {(p, q): self._build_excitation(p, q) for p in range(m) for q in range(m)}

    def index_of(self, state: int) -> int:
        """Position of an occupation word in the basis, -1 if absent."""
        pos = int(np.searchsorted(self.states, state))
        if pos < self.dim and int(self.states[pos]) == int(state):
            return pos
        return -1

    def excitation_table(self, p: int, q: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """
        Nonzero matrix elements of c+_p c_q on this basis.

        Returns:
            (src, dst, sign) arrays with  c+_p c_q |states[src]> = sign |states[dst]>;
            results outside the basis are dropped (sector projection)
        """
        p, q = int(p), int(q)
        if not (0 <= p < self.n_orbitals and 0 <= q < self.n_orbitals):
            raise ValidationError(f"Orbital index outside 0..{self.n_orbitals - 1}: ({p}, {q})", field='orbital')
        return self.excitation_tables[(p, q)]

    def _build_excitation(self, p: int, q: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        states = self.states
        if p == q:
            src = np.nonzero((states >> p) & 1)[0]
            table = (src, src.copy(), np.ones(src.size))
        else:
            src = np.nonzero((((states >> q) & 1) == 1) & (((states >> p) & 1) == 0))[0]
            words = states[src]
            middle = words ^ (1 << q)
            parity = _popcount(words & ((1 << q) - 1), q) + _popcount(middle & ((1 << p) - 1), p)
            new = middle | (1 << p)
            dst = np.searchsorted(states, new)
            inside = dst < self.dim
            inside[inside] = states[dst[inside]] == new[inside]
            sign = np.where(parity % 2 == 0, 1.0, -1.0)
            table = (src[inside], dst[inside], sign[inside])
        for array in table:
            array.setflags(write=False)
        return table

    def __repr__(self) -> str:
        return f"FockBasis(M={self.n_orbitals}, sector={self.sector.to_dict() or 'full'}, dim={self.dim})"


def build_basis(orbitals: OrbitalSet, sector: Optional[Sector] = None) -> FockBasis:
    """
    Enumerate all occupation words of a sector, sorted ascending.

    Args:
        orbitals: Orbital set with M orbitals
        sector: Sector constraint (default: full Fock space)

    Returns:
        FockBasis of dimension 2^M, C(M, N) or the (N, Sz) count

    Raises:
        ValidationError: Invalid N, Sz without spin labels, or non half-integer Sz

    Example:
        basis = build_basis(OrbitalSet.generic(4), Sector(2))
        basis.dim  # 6
    """
    sector = sector or Sector()
    m = orbitals.count
    words = np.arange(1 << m, dtype=np.int64)

    if sector.n_particles is not None:
        n = sector.n_particles
        if not 0 <= n <= m:
            raise ValidationError(f"Particle number N={n} outside [0, {m}]", field='sector.N')
        words = words[_popcount(words, m) == n]

    if sector.sz is not None:
        if not orbitals.spinful:
            raise ValidationError("An Sz sector requires spin labels on every orbital", field='sector.Sz')
        twice_sz = 2.0 * sector.sz
        if abs(twice_sz - round(twice_sz)) > 1e-12:
            raise ValidationError(f"Sz must be a multiple of 1/2, got {sector.sz}", field='sector.Sz')
        up = _mask([p for p, lab in enumerate(orbitals.labels) if lab.spin == SPIN_UP])
        down = _mask([p for p, lab in enumerate(orbitals.labels) if lab.spin == SPIN_DOWN])
        difference = _popcount(words & up, m) - _popcount(words & down, m)
        words = words[difference == int(round(twice_sz))]

    return FockBasis(orbitals, sector, np.ascontiguousarray(words))


# ============================================================================
# Fermionic algebra
# ============================================================================

def _below(state: int, p: int) -> int:
    return bin(state & ((1 << p) - 1)).count('1')


def apply_creation(p: int, state: int) -> Optional[Tuple[int, int]]:
    """
    Apply c+_p to an occupation word.

    Returns:
        (sign, new_state), or None when orbital p is already occupied

    Examples:
        >>> apply_creation(0, 0b0000)
        (1, 1)
        >>> apply_creation(0, 0b0001) is None
        True
        >>> apply_creation(1, 0b0001)
        (-1, 3)
    """
    if p < 0:
        raise ValidationError(f"Orbital index must be non-negative, got {p}", field='p')
    if (state >> p) & 1:
        return None
    sign = -1 if _below(state, p) % 2 else 1
    return sign, state | (1 << p)


def apply_annihilation(p: int, state: int) -> Optional[Tuple[int, int]]:
    """Apply c_p to an occupation word; None when orbital p is empty."""
    if p < 0:
        raise ValidationError(f"Orbital index must be non-negative, got {p}", field='p')
    if not (state >> p) & 1:
        return None
    sign = -1 if _below(state, p) % 2 else 1
    return sign, state & ~(1 << p)


def creation_matrix(p: int, basis: FockBasis) -> np.ndarray:
    """Matrix of c+_p on the full Fock space, built state by state from apply_creation."""
    if not basis.is_full_fock:
        raise ValidationError("Creation operators change N; use a full Fock basis", field='sector')
    if not 0 <= p < basis.n_orbitals:
        raise ValidationError(f"Orbital index {p} outside [0, {basis.n_orbitals})", field='p')
    matrix = np.zeros((basis.dim, basis.dim))
    for col, state in enumerate(basis.states):
        result = apply_creation(p, int(state))
        if result is not None:
            sign, new = result
            matrix[basis.index_of(new), col] = sign
    return matrix


def excitation_matrix(p: int, q: int, basis: FockBasis) -> np.ndarray:
    """Dense real matrix of c+_p c_q on the basis."""
    src, dst, sign = basis.excitation_table(p, q)
    matrix = np.zeros((basis.dim, basis.dim))
    matrix[dst, src] = sign
    return matrix


# ============================================================================
# Operators
# ============================================================================

@dataclass(frozen=True)
class OneBodyCoefficients:
    """Hermitian M x M coefficient matrix h of sum_pq h_pq c+_p c_q."""

    h: np.ndarray

    def __post_init__(self):
        h = np.array(self.h, dtype=complex)
        if h.ndim != 2 or h.shape[0] != h.shape[1]:
            raise ValidationError(f"One-body coefficients must be square, got shape {h.shape}", field='h')
        scale = max(1.0, float(np.max(np.abs(h)))) if h.size else 1.0
        error = hermiticity_error(h)
        if error > HERMITIAN_TOL_COEFFICIENTS * scale:
            raise ValidationError(f"One-body coefficients are not Hermitian (max |h - h^+| = {error:.3e})",
                                  field='h')
        h.setflags(write=False)
        object.__setattr__(self, 'h', h)

    @property
    def size(self) -> int:
        return int(self.h.shape[0])


@dataclass(frozen=True, eq=False)
class ManyBodyOperator:
    """
    Hermitian matrix on a FockBasis, with provenance.

    Attributes:
        basis: The basis the matrix acts on
        matrix: Dense complex (dim, dim) matrix
        provenance: 'one_body', 'two_body' or 'composite'
        one_body: One-body coefficient matrix when known
        interaction: Density-density pair table {(p, q): U} when present
        chemical_potential: mu when this is a shifted generator H - mu N
        label: Free-form name
    """

    basis: FockBasis
    matrix: np.ndarray
    provenance: str = 'composite'
    one_body: Optional[np.ndarray] = None
    interaction: Optional[Dict[Tuple[int, int], float]] = None
    chemical_potential: Optional[float] = None
    label: str = ''

    def __post_init__(self):
        matrix = np.asarray(self.matrix, dtype=complex)
        if matrix.shape != (self.basis.dim, self.basis.dim):
            raise ValidationError(f"Operator shape {matrix.shape} does not match basis dimension {self.basis.dim}",
                                  field='matrix')
        if self.provenance not in ('one_body', 'two_body', 'composite'):
            raise ValidationError(f"Unknown provenance '{self.provenance}'", field='provenance')
        scale = max(1.0, float(np.max(np.abs(matrix)))) if matrix.size else 1.0
        error = hermiticity_error(matrix)
        if error > HERMITIAN_TOL_OPERATOR * scale:
            raise ValidationError(f"Operator is not Hermitian (max |A - A^+| = {error:.3e})", field='matrix')
        matrix.setflags(write=False)
        object.__setattr__(self, 'matrix', matrix)

    @property
    def dim(self) -> int:
        return self.basis.dim

    @property
    def is_interacting(self) -> bool:
        if self.interaction is None:
            return False
        return any(abs(value) > 0 for value in self.interaction.values())

    def commutes_with(self, other: 'ManyBodyOperator', tol: float = 1e-12) -> bool:
        """Frobenius norm of [A, B] below tol (absolute)."""
        return float(np.linalg.norm(commutator(self.matrix, other.matrix))) <= tol

    def __repr__(self) -> str:
        name = f", label='{self.label}'" if self.label else ''
        return f"ManyBodyOperator(dim={self.dim}, provenance='{self.provenance}'{name})"


def one_body_operator(h: Union[OneBodyCoefficients, np.ndarray], basis: FockBasis,
                      label: str = '') -> ManyBodyOperator:
    """
    Build sum_pq h_pq c+_p c_q on a basis.

    Args:
        h: Hermitian M x M coefficients (array or OneBodyCoefficients)
        basis: Target basis with M orbitals
        label: Optional operator name

    Returns:
        ManyBodyOperator with provenance 'one_body'

    Raises:
        ValidationError: Non-Hermitian h or size mismatch

    Example:
        n_op = one_body_operator(np.eye(4), basis)   # number operator
    """
    coefficients = h if isinstance(h, OneBodyCoefficients) else OneBodyCoefficients(h)
    if coefficients.size != basis.n_orbitals:
        raise ValidationError(f"Coefficient matrix is {coefficients.size}x{coefficients.size} "
                              f"but the basis has {basis.n_orbitals} orbitals", field='h')
    matrix = np.zeros((basis.dim, basis.dim), dtype=complex)
    rows, cols = np.nonzero(coefficients.h)
    for p, q in zip(rows, cols):
        src, dst, sign = basis.excitation_table(int(p), int(q))
        matrix[dst, src] += coefficients.h[p, q] * sign
    return ManyBodyOperator(basis, matrix, provenance='one_body', one_body=np.array(coefficients.h), label=label)


def number_operator(basis: FockBasis) -> ManyBodyOperator:
    return one_body_operator(np.eye(basis.n_orbitals), basis, label='N')


def _pair_table(table: Union[Mapping[Tuple[int, int], float], np.ndarray, Sequence[Sequence[float]]],
                m: int) -> Dict[Tuple[int, int], float]:
    """
    Normalize pair coefficients to {(p, q): U} with p <= q.

    Accepted forms: a {(p, q): U} mapping, a list of [p, q, U] triples, an
    M x M array, or {"matrix": [[...]]} from JSON. A matrix counts every
    unordered pair once: symmetric input uses U[p, q], triangular input uses
    U[p, q] + U[q, p]. Diagonal entries give U_pp n_p.
    """
    pairs: Dict[Tuple[int, int], float] = {}

    def add(p: Any, q: Any, value: Any):
        if isinstance(value, complex) or np.iscomplexobj(value):
            if abs(np.imag(value)) > 0:
                raise ValidationError("Density-density coefficients must be real", field='density_density')
            value = np.real(value)
        if not all(isinstance(x, (int, np.integer)) and not isinstance(x, bool) for x in (p, q)):
            raise ValidationError(f"Pair indices must be integers, got ({p!r}, {q!r})", field='density_density')
        p, q = int(p), int(q)
        value = as_number(value, 'density_density')
        if not (0 <= p < m and 0 <= q < m):
            raise ValidationError(f"Pair ({p}, {q}) outside the {m} orbitals", field='density_density')
        key = (min(p, q), max(p, q))
        pairs[key] = pairs.get(key, 0.0) + float(value)

    if isinstance(table, Mapping) and 'matrix' in table:
        try:
            table = np.asarray(table['matrix'], dtype=complex)
        except (TypeError, ValueError) as exc:
            raise ValidationError(f"Pair matrix must hold numbers: {exc}", field='density_density') from exc
    if isinstance(table, Mapping):
        for (p, q), value in table.items():
            add(p, q, value)
        return pairs

    if isinstance(table, np.ndarray):
        array = table
        if array.shape != (m, m):
            raise ValidationError(f"Pair matrix must be {m}x{m}, got shape {array.shape}", field='density_density')
        if np.iscomplexobj(array) and np.any(np.abs(array.imag) > 0):
            raise ValidationError("Density-density coefficients must be real", field='density_density')
        array = np.real(array).astype(float)
        symmetric = np.allclose(array, array.T, atol=0.0)
        for p in range(m):
            for q in range(p, m):
                value = array[p, q] if (symmetric or p == q) else array[p, q] + array[q, p]
                if value != 0.0:
                    add(p, q, value)
        return pairs

    for entry in table:
        if not isinstance(entry, (list, tuple)) or len(entry) != 3:
            raise ValidationError("Density-density entries must be [p, q, U] triples", field='density_density')
        add(entry[0], entry[1], entry[2])
    return pairs


def two_body_density_interaction(table: Union[Mapping[Tuple[int, int], float], np.ndarray],
                                 basis: FockBasis) -> ManyBodyOperator:
    """
    Diagonal operator sum_pairs U_pq n_p n_q.

    Args:
        table: {(p, q): U} mapping, real M x M matrix, or list of [p, q, U]
        basis: Target basis

    Returns:
        Diagonal ManyBodyOperator with provenance 'two_body'

    Example:
        # 2-site Hubbard, U = 2: the doublon words get 2, the others 0
        two_body_density_interaction({(0, 1): 2.0, (2, 3): 2.0}, basis)
    """
    pairs = _pair_table(table, basis.n_orbitals)
    occ = basis.occupations
    values = np.zeros(basis.dim)
    for (p, q), value in pairs.items():
        values += value * occ[:, p] * occ[:, q]
    return ManyBodyOperator(basis, np.diag(values).astype(complex), provenance='two_body',
                            interaction=pairs, label='interaction')


def grand_canonical_generator(hamiltonian: ManyBodyOperator, mu: float) -> ManyBodyOperator:
    """
    Shifted generator H' = H - mu N used for grand canonical ensembles.

    Raises:
        ValidationError: H does not conserve particle number, or is already shifted
    """
    if hamiltonian.chemical_potential is not None:
        raise ValidationError("Hamiltonian already carries a chemical potential", field='ensemble.mu')
    n_op = number_operator(hamiltonian.basis)
    scale = max(1.0, float(np.max(np.abs(hamiltonian.matrix))))
    if np.linalg.norm(commutator(hamiltonian.matrix, n_op.matrix)) > HERMITIAN_TOL_OPERATOR * scale:
        raise ValidationError("Hamiltonian does not commute with the number operator", field='model')
    one_body = None
    if hamiltonian.one_body is not None:
        one_body = hamiltonian.one_body - mu * np.eye(hamiltonian.basis.n_orbitals)
    return ManyBodyOperator(hamiltonian.basis, hamiltonian.matrix - mu * n_op.matrix, provenance='composite',
                            one_body=one_body, interaction=hamiltonian.interaction,
                            chemical_potential=float(mu), label=f"{hamiltonian.label or 'H'} - mu N")


def site_reflection_coefficients(orbitals: OrbitalSet) -> np.ndarray:
    """One-body coefficients of the lattice mirror site i <-> L-1-i (spin kept)."""
    sites = orbitals.sites
    mirror = {site: sites[len(sites) - 1 - k] for k, site in enumerate(sites)}
    h = np.zeros((orbitals.count, orbitals.count))
    for p, label in enumerate(orbitals.labels):
        h[orbitals.index(mirror[label.site], label.spin), p] = 1.0
    return h


# ============================================================================
# Models
# ============================================================================

def _check_fields(spec: Mapping[str, Any], allowed: Sequence[str], prefix: str = 'model'):
    unknown = sorted(set(spec) - set(allowed))
    if unknown:
        raise ValidationError(f"Unknown {prefix} field(s) {unknown}; allowed: {sorted(allowed)}",
                              field=f'{prefix}.{unknown[0]}')


def _number(spec: Mapping[str, Any], key: str, default: float) -> float:
    value = spec.get(key, default)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValidationError(f"Model field '{key}' must be a number, got {value!r}", field=f'model.{key}')
    return float(value)


def coefficient_matrix(value: Any, m: int, field: str = 'model.h') -> np.ndarray:
    """Parse an M x M matrix given as nested lists or as {"real": ..., "imag": ...}."""
    try:
        if isinstance(value, Mapping):
            _check_fields(value, ('real', 'imag'), prefix=field)
            real = np.asarray(value.get('real', np.zeros((m, m))), dtype=float)
            imag = np.asarray(value.get('imag', np.zeros((m, m))), dtype=float)
            h = real + 1j * imag
        else:
            h = np.asarray(value, dtype=complex)
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"Coefficient matrix must hold numbers: {exc}", field=field) from exc
    if h.shape != (m, m):
        raise ValidationError(f"Coefficient matrix must be {m}x{m}, got shape {h.shape}", field=field)
    return h


def hubbard_chain_coefficients(orbitals: OrbitalSet, t: float, periodic: bool = False) -> np.ndarray:
    """Nearest-neighbour hopping -t between equal spins; the closing bond needs L > 2."""
    sites = orbitals.sites
    bonds = [(sites[k], sites[k + 1]) for k in range(len(sites) - 1)]
    if periodic and len(sites) > 2:
        bonds.append((sites[-1], sites[0]))
    spins = [None] if not orbitals.spinful else [SPIN_UP, SPIN_DOWN]
    h = np.zeros((orbitals.count, orbitals.count), dtype=complex)
    for i, j in bonds:
        for spin in spins:
            p, q = orbitals.index(i, spin), orbitals.index(j, spin)
            h[p, q] -= t
            h[q, p] -= t
    return h


def _build_hubbard_chain(spec: Mapping[str, Any]) -> Tuple[OrbitalSet, np.ndarray, Dict[Tuple[int, int], float]]:
    _check_fields(spec, ('name', 'sites', 'L', 't', 'U', 'periodic', 'spinful', 'sector'))
    sites = spec.get('sites', spec.get('L'))
    if isinstance(sites, bool) or not isinstance(sites, int):
        raise ValidationError(f"'sites' must be an integer, got {sites!r}", field='model.sites')
    spinful = spec.get('spinful', True)
    if not isinstance(spinful, bool):
        raise ValidationError("'spinful' must be true or false", field='model.spinful')
    periodic = spec.get('periodic', False)
    if not isinstance(periodic, bool):
        raise ValidationError("'periodic' must be true or false", field='model.periodic')
    t = _number(spec, 't', 1.0)
    u = _number(spec, 'U', 0.0)
    orbitals = OrbitalSet.chain(sites, spinful=spinful)
    h = hubbard_chain_coefficients(orbitals, t, periodic)
    if not spinful and u != 0.0:
        raise ValidationError("On-site U needs a spinful chain", field='model.U')
    pairs: Dict[Tuple[int, int], float] = {}
    if u != 0.0:
        for site in orbitals.sites:
            pairs[(orbitals.index(site, SPIN_UP), orbitals.index(site, SPIN_DOWN))] = u
    return orbitals, h, pairs


def _build_custom(spec: Mapping[str, Any]) -> Tuple[OrbitalSet, np.ndarray, Dict[Tuple[int, int], float]]:
    _check_fields(spec, ('name', 'orbitals', 'sites', 'spinful', 'h', 'density_density', 'sector'))
    if 'orbitals' in spec:
        count = spec['orbitals']
        if isinstance(count, bool) or not isinstance(count, int):
            raise ValidationError(f"'orbitals' must be an integer, got {count!r}", field='model.orbitals')
        orbitals = OrbitalSet.generic(count)
    elif 'sites' in spec:
        if isinstance(spec['sites'], bool) or not isinstance(spec['sites'], int):
            raise ValidationError(f"'sites' must be an integer, got {spec['sites']!r}", field='model.sites')
        orbitals = OrbitalSet.chain(spec['sites'], spinful=bool(spec.get('spinful', True)))
    else:
        raise ValidationError("Custom model needs 'orbitals' or 'sites'", field='model.orbitals')
    if 'h' not in spec:
        raise ValidationError("Custom model needs a one-body matrix 'h'", field='model.h')
    h = coefficient_matrix(spec['h'], orbitals.count)
    pairs = _pair_table(spec.get('density_density', {}), orbitals.count)
    return orbitals, h, pairs


# Model registry
# Format: name -> (builder, description); builders return (orbitals, h, pair table)
MODEL_TYPES: Dict[str, Tuple[Callable[[Mapping[str, Any]], Tuple[OrbitalSet, np.ndarray, Dict]], str]] = {
    'hubbard_chain': (_build_hubbard_chain, 'Hubbard chain: sites, t, U, periodic, spinful'),
    'custom': (_build_custom, 'Explicit one-body matrix h plus optional density-density pairs'),
}


def get_available_models() -> List[str]:
    return list(MODEL_TYPES.keys())


def build_model(spec: Mapping[str, Any], sector: Optional[Sector] = None) -> ManyBodyOperator:
    """
    Assemble a named model Hamiltonian as one-body + density-density parts.

    Args:
        spec: Model spec, e.g. {"name": "hubbard_chain", "sites": 2, "t": 1, "U": 2}
        sector: Sector to build on; falls back to spec["sector"], then full Fock

    Returns:
        Hermitian ManyBodyOperator with provenance 'composite'

    Raises:
        ValidationError: Unknown model name or malformed field (named in .field)

    Example:
        H = build_model({"name": "hubbard_chain", "sites": 2, "t": 1.0, "U": 2.0},
                        Sector(2, 0.0))
        # ground energy 1 - sqrt(5)
    """
    if not isinstance(spec, Mapping):
        raise ValidationError("Model spec must be an object", field='model')
    name = spec.get('name')
    if not isinstance(name, str) or name not in MODEL_TYPES:
        raise ValidationError(f"Unknown model '{name}'. Available models: {get_available_models()}",
                              field='model.name')
    builder, _ = MODEL_TYPES[name]
    orbitals, h, pairs = builder(spec)
    if sector is None:
        sector = Sector.from_dict(spec.get('sector'))
    basis = build_basis(orbitals, sector)

    one_body = one_body_operator(h, basis)
    interaction = two_body_density_interaction(pairs, basis)
    logger.debug(f"Built {name} on {basis}")
    return ManyBodyOperator(basis, one_body.matrix + interaction.matrix, provenance='composite',
                            one_body=one_body.one_body, interaction=pairs, label=str(name))


def main():
    """
    Example usage: the Hubbard dimer at half filling.
    """
    print("Hubbard dimer, t = 1, U = 2, N = 2, Sz = 0")
    print("=" * 60)
    hamiltonian = build_model({'name': 'hubbard_chain', 'sites': 2, 't': 1.0, 'U': 2.0}, Sector(2, 0.0))
    print(f"Basis: {hamiltonian.basis}")
    for word in hamiltonian.basis.states:
        print(f"  {int(word):04b}")
    energies = np.linalg.eigvalsh(hamiltonian.matrix)
    print(f"Energies: {np.round(energies, 6)}")
    print(f"Closed form ground energy: {1 - np.sqrt(5):.6f}")


if __name__ == "__main__":
    main()
