"""Input validation helpers shared by the public constructors."""

import numpy as np


class ValidationError(ValueError):
    """Raised when an input violates a type invariant."""


class DimensionMismatch(ValueError):
    """Raised when operands live on different spaces."""


def as_square_matrix(x, name="matrix"):
    a = np.asarray(x)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValidationError(f"{name} must be a square 2-D array, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValidationError(f"{name} has non-finite entries")
    return a.astype(complex)


def check_hermitian(a, atol, name="matrix"):
    dev = np.max(np.abs(a - a.conj().T)) if a.size else 0.0
    if dev > atol:
        raise ValidationError(f"{name} is not Hermitian (max |A - A^H| = {dev:.3g})")
    return (a + a.conj().T) / 2


def check_real_vector(x, name="vector", length=None):
    v = np.asarray(x, dtype=float)
    if v.ndim != 1:
        raise ValidationError(f"{name} must be one-dimensional, got shape {v.shape}")
    if length is not None and v.shape[0] != length:
        raise DimensionMismatch(f"{name} has length {v.shape[0]}, expected {length}")
    if not np.all(np.isfinite(v)):
        raise ValidationError(f"{name} has non-finite entries")
    return v


def check_same_dim(a, b, what="operands"):
    if a.shape != b.shape:
        raise DimensionMismatch(f"{what} have shapes {a.shape} and {b.shape}")


def default_labels(n):
    return tuple(str(i) for i in range(n))


def check_labels(labels, n, name="outcomes"):
    if labels is None:
        return default_labels(n)
    labels = tuple(labels)
    if len(labels) != n:
        raise ValidationError(f"{name}: {len(labels)} labels for {n} entries")
    if len(set(labels)) != len(labels):
        raise ValidationError(f"{name}: duplicate labels")
    return labels
