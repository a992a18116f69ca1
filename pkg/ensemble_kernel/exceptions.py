#!/usr/bin/env python3
"""
Ensemble Kernel Exceptions

Every error raised on purpose by the package derives from KernelLabError.
Rejections of bad input (schema errors, invalid sectors, non-monotone
ensembles, under-resolved time grids) are ValidationError subclasses, which the
command-line front end maps to exit code 2. Failed numerical certifications are
CheckFailure (exit code 3).
"""

from typing import Any, Dict, List, Optional, Sequence, Tuple


class KernelLabError(Exception):
    """Base class for all errors raised by ensemble_kernel."""

    def to_dict(self) -> Dict[str, Any]:
        """
        Machine-readable description of the error.

        Returns:
            Dictionary with at least 'error' (class name) and 'message'
        """
        return {'error': self.__class__.__name__, 'message': str(self)}


class ValidationError(KernelLabError, ValueError):
    """Input rejected before (or instead of) any computation."""

    def __init__(self, message: str, field: Optional[str] = None):
        super().__init__(message)
        self.field = field

    def to_dict(self) -> Dict[str, Any]:
        payload = super().to_dict()
        if self.field is not None:
            payload['field'] = self.field
        return payload


class MonotonicityError(ValidationError):
    """The ensemble violates (w_L - w_K) * Omega_KL >= 0 for some pairs."""

    def __init__(self, violations: Sequence[Tuple[int, int]], message: Optional[str] = None):
        self.violations: List[Tuple[int, int]] = [(int(k), int(l)) for k, l in violations]
        if message is None:
            shown = ', '.join(f'({k}, {l})' for k, l in self.violations[:10])
            more = '' if len(self.violations) <= 10 else f' ... ({len(self.violations)} total)'
            message = f"Ensemble is not monotone; violating pairs (K, L): {shown}{more}"
        super().__init__(message, field='ensemble')

    def to_dict(self) -> Dict[str, Any]:
        payload = super().to_dict()
        payload['violations'] = [list(pair) for pair in self.violations]
        return payload


class UnderResolvedGridError(ValidationError):
    """The propagation grid has fewer than the required steps per period."""

    def __init__(self, required_steps: int, message: str):
        super().__init__(message, field='pulse.n_steps')
        self.required_steps = int(required_steps)

    def to_dict(self) -> Dict[str, Any]:
        payload = super().to_dict()
        payload['required_steps'] = self.required_steps
        return payload


class SpectrumError(KernelLabError):
    """Exact diagonalization produced eigenpairs with too large residuals."""

    def __init__(self, message: str, residuals: Optional[Sequence[float]] = None):
        super().__init__(message)
        self.residuals = [float(r) for r in residuals] if residuals is not None else []

    def to_dict(self) -> Dict[str, Any]:
        payload = super().to_dict()
        payload['max_residual'] = max(self.residuals) if self.residuals else None
        return payload


class CheckFailure(KernelLabError, AssertionError):
    """A verified property (commutant theorem, dynamics certification) did not hold."""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.details = dict(details or {})

    def to_dict(self) -> Dict[str, Any]:
        payload = super().to_dict()
        if self.details:
            payload['details'] = self.details
        return payload
