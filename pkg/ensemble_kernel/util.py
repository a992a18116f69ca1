#!/usr/bin/env python3
"""
Ensemble Kernel Utility Functions

Shared helpers: key=value override parsing for the command line, null spaces
with auditable singular-value spectra, principal angles between subspaces,
Hermiticity checks and atomic file writes.
"""

import os
import tempfile
from typing import Any, Dict, Iterable, NamedTuple, Optional, Tuple

import numpy as np
import scipy.linalg as la

try:
    from .exceptions import ValidationError
except ImportError:
    from exceptions import ValidationError


def parse_value(value: str) -> Any:
    """
    Convert a command-line token to bool, int, float or leave it as string.

    Examples:
        >>> parse_value("true")
        True
        >>> parse_value("12")
        12
        >>> parse_value("1e-8")
        1e-08
        >>> parse_value("site_density")
        'site_density'
    """
    value = value.strip()
    if value.lower() == 'true':
        return True
    if value.lower() == 'false':
        return False
    if '.' not in value and value.lstrip('-').isdigit():
        return int(value)
    try:
        return float(value)
    except ValueError:
        return value


def parse_overrides(items: Iterable[str]) -> Dict[str, Any]:
    """
    Parse a list of key=value tokens into a dictionary.

    Tokens without '=' are skipped; the caller decides whether that is an error.

    Args:
        items: Tokens such as ["tol_E=1e-8", "tol_rank=1e-11"]

    Returns:
        Dictionary of converted values

    Examples:
        >>> parse_overrides(["tol_E=1e-8", "tol_w=1e-12"])
        {'tol_E': 1e-08, 'tol_w': 1e-12}
    """
    params: Dict[str, Any] = {}
    for item in items:
        if '=' not in item:
            continue
        key, value = item.split('=', 1)
        params[key.strip()] = parse_value(value)
    return params


class NullSpace(NamedTuple):
    """Orthonormal null-space basis (columns) plus the data behind the rank decision."""

    basis: np.ndarray
    singular_values: np.ndarray
    threshold: float
    gap: float

    @property
    def dim(self) -> int:
        return int(self.basis.shape[1])


def null_space(matrix: np.ndarray, tol_rank: float, absolute: bool = False) -> NullSpace:
    """
    Real null space of a matrix by singular-value thresholding.

    Args:
        matrix: (rows, n) real matrix; rows may be zero
        tol_rank: Threshold; relative to the largest singular value unless absolute
        absolute: Interpret tol_rank as an absolute threshold

    Returns:
        NullSpace with an (n, k) orthonormal basis. The gap is the ratio of the
        smallest retained singular value to the largest discarded one (inf when
        one side is empty).
    """
    matrix = np.asarray(matrix, dtype=float)
    n = matrix.shape[1]
    if matrix.shape[0] == 0 or n == 0:
        return NullSpace(np.eye(n), np.zeros(0), 0.0, float('inf'))

    if matrix.shape[0] < n:
        matrix = np.vstack([matrix, np.zeros((n - matrix.shape[0], n))])
    _, s, vh = la.svd(matrix, full_matrices=False)
    largest = s[0] if s.size else 0.0
    threshold = tol_rank if absolute else tol_rank * largest
    rank = int(np.sum(s > threshold))
    basis = vh[rank:].T.copy()

    if 0 < rank < n:
        discarded = s[rank]
        gap = float(s[rank - 1] / discarded) if discarded > 0 else float('inf')
    else:
        gap = float('inf')
    return NullSpace(basis, s, float(threshold), gap)


def orthonormal_columns(vectors: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Orthonormal basis for the column span of a real matrix."""
    vectors = np.asarray(vectors, dtype=float)
    if vectors.size == 0 or vectors.shape[1] == 0:
        return np.zeros((vectors.shape[0], 0))
    u, s, _ = la.svd(vectors, full_matrices=False)
    rank = int(np.sum(s > tol * max(1.0, s[0])))
    return u[:, :rank]


def principal_angles(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """
    Principal angles between the column spans of a and b (descending).

    Empty subspaces have no angles with each other; against a non-empty
    subspace they are reported as a single right angle.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    empty_a = a.size == 0 or a.shape[1] == 0
    empty_b = b.size == 0 or b.shape[1] == 0
    if empty_a and empty_b:
        return np.zeros(0)
    if empty_a or empty_b:
        return np.array([np.pi / 2])
    return la.subspace_angles(a, b)


def same_subspace(a: np.ndarray, b: np.ndarray, tol_angle: float) -> Tuple[bool, float]:
    """
    Whether two column spans coincide within a principal-angle tolerance.

    Returns:
        (equal, max_angle); subspaces of different dimension are never equal
    """
    dim_a = 0 if np.asarray(a).size == 0 else np.asarray(a).shape[1]
    dim_b = 0 if np.asarray(b).size == 0 else np.asarray(b).shape[1]
    angles = principal_angles(a, b)
    max_angle = float(angles.max()) if angles.size else 0.0
    if dim_a != dim_b:
        return False, max(max_angle, float(np.pi / 2))
    return max_angle <= tol_angle, max_angle


def hermiticity_error(matrix: np.ndarray) -> float:
    """Largest absolute entry of M - M^dagger."""
    matrix = np.asarray(matrix)
    if matrix.size == 0:
        return 0.0
    return float(np.max(np.abs(matrix - matrix.conj().T)))


def spectral_norm(matrix: np.ndarray) -> float:
    matrix = np.asarray(matrix)
    if matrix.size == 0:
        return 0.0
    return float(la.norm(matrix, 2))


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a


def atomic_write_text(path: str, text: str, encoding: str = 'utf-8') -> str:
    """
    Write text to path via a temporary file in the same directory and rename.

    Args:
        path: Destination file
        text: Content
        encoding: Text encoding (default: utf-8)

    Returns:
        The destination path
    """
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp_path = tempfile.mkstemp(prefix='.tmp-', dir=directory)
    try:
        with os.fdopen(fd, 'w', encoding=encoding, newline='') as handle:
            handle.write(text)
        os.replace(tmp_path, path)
    except Exception:
        if os.path.exists(tmp_path):
            os.remove(tmp_path)
        raise
    return path


def as_number(value: Any, field: str) -> float:
    """
    Convert a JSON scalar to float.

    Raises:
        ValidationError: value is a bool, a string or not numeric (field names it)
    """
    if isinstance(value, (bool, str)) or value is None:
        raise ValidationError(f"'{field}' must be a number, got {value!r}", field=field)
    try:
        return float(value)
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"'{field}' must be a number, got {value!r}", field=field) from exc


def as_real_vector(values: Optional[Iterable[float]], length: int, name: str = 'vector') -> np.ndarray:
    """Validate and convert a coefficient list to a real 1-D array of given length."""
    if values is None:
        raise ValidationError(f"{name} is required", field=name)
    if isinstance(values, (str, bytes)) or not hasattr(values, '__iter__'):
        raise ValidationError(f"{name} must be a list of numbers, got {values!r}", field=name)
    items = list(values)
    if any(isinstance(x, (bool, str)) for x in items):
        raise ValidationError(f"{name} must be a list of numbers, got {items!r}", field=name)
    try:
        vector = np.asarray(items, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"{name} must be a list of numbers: {exc}", field=name) from exc
    if vector.ndim != 1 or vector.size != length:
        raise ValidationError(f"{name} must have {length} entries, got shape {vector.shape}", field=name)
    return vector
