#!/usr/bin/env python3
"""
Ensemble Kernel Settings

Default tolerances for every numerical decision in the package, and the
Tolerances record that carries them through an experiment.

All thresholds are relative unless stated otherwise:
- tol_E:    degeneracy grouping, |E_K - E_L| <= tol_E * max(1, |E_K|)
- tol_w:    weight equality, |w_K - w_L| <= tol_w * max(w)
- tol_occ:  natural occupation 0 / 1 / degenerate detection (absolute)
- tol_rank: null spaces, singular values < tol_rank * largest singular value
- tol_pair: pair inclusion, (w_L - w_K) * Omega_KL > tol_pair * max(w) * max|Omega|
- tol_suff: sufficiency residuals, |r_i| <= tol_suff * max_i ||Q_i||^2 (absolute scale)
- tol_angle: subspace equality via the largest principal angle
"""

from dataclasses import asdict, dataclass, fields, replace
from typing import Any, Dict, Mapping

try:
    from .exceptions import ValidationError
    from .util import as_number
except ImportError:
    from exceptions import ValidationError
    from util import as_number

DEFAULT_TOL_E = 1e-9
DEFAULT_TOL_W = 1e-12
DEFAULT_TOL_OCC = 1e-8
DEFAULT_TOL_RANK = 1e-10
DEFAULT_TOL_PAIR = 1e-14
DEFAULT_TOL_SUFFICIENCY = 1e-10
DEFAULT_TOL_ANGLE = 1e-8
DEFAULT_FD_STEP = 1e-5
DEFAULT_STATIC_TOL = 1e-7
DEFAULT_LAMBDA = 1e-4
MIN_STEPS_PER_PERIOD = 20

# Hermiticity checks on coefficient matrices and many-body matrices
HERMITIAN_TOL_COEFFICIENTS = 1e-14
HERMITIAN_TOL_OPERATOR = 1e-12


@dataclass(frozen=True)
class Tolerances:
    """
    Tolerance set used by one experiment.

    Attributes:
        tol_E: Relative degeneracy tolerance for energies
        tol_w: Relative weight-equality tolerance
        tol_occ: Occupation-number tolerance for natural orbitals
        tol_rank: Relative singular-value threshold for null spaces
        tol_pair: Relative threshold for including (K, L) pairs in the necessary map
        tol_suff: Sufficiency residual threshold (times max ||Q_i||^2)
        tol_angle: Maximum principal angle for subspace equality
        fd_step: Finite-difference step of the static thermal response
        static_tol: Static-kernel threshold (times max ||Q_i||)
    """

    tol_E: float = DEFAULT_TOL_E
    tol_w: float = DEFAULT_TOL_W
    tol_occ: float = DEFAULT_TOL_OCC
    tol_rank: float = DEFAULT_TOL_RANK
    tol_pair: float = DEFAULT_TOL_PAIR
    tol_suff: float = DEFAULT_TOL_SUFFICIENCY
    tol_angle: float = DEFAULT_TOL_ANGLE
    fd_step: float = DEFAULT_FD_STEP
    static_tol: float = DEFAULT_STATIC_TOL

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if not isinstance(value, (int, float)) or isinstance(value, bool) or not value > 0:
                raise ValidationError(f"Tolerance '{f.name}' must be a positive number, got {value!r}",
                                      field=f'tolerances.{f.name}')

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> 'Tolerances':
        """
        Build tolerances from a (possibly partial) mapping.

        Raises:
            ValidationError: If a key is not a known tolerance or a value is not a number
        """
        known = {f.name for f in fields(cls)}
        for key in data:
            if key not in known:
                raise ValidationError(f"Unknown tolerance '{key}'. Available: {sorted(known)}",
                                      field=f'tolerances.{key}')
        return cls(**{key: as_number(value, f'tolerances.{key}') for key, value in data.items()})

    def with_overrides(self, **overrides: Any) -> 'Tolerances':
        """Copy with some fields replaced; None values are ignored."""
        cleaned = {key: value for key, value in overrides.items() if value is not None}
        if not cleaned:
            return self
        known = {f.name for f in fields(self)}
        for key in cleaned:
            if key not in known:
                raise ValidationError(f"Unknown tolerance '{key}'. Available: {sorted(known)}",
                                      field=f'tolerances.{key}')
        return replace(self, **{key: as_number(value, f'tolerances.{key}') for key, value in cleaned.items()})

    def to_dict(self) -> Dict[str, float]:
        return asdict(self)
