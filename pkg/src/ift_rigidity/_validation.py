"""Input validation helpers shared by the public functions and estimators."""

from __future__ import annotations

import os

import numpy as np

from .exceptions import NonFiniteError

RANK_TOL_ENV = "IFT_RIGIDITY_RANK_TOL"


def check_vector(x, dim=None, name="x"):
    """Return ``x`` as a finite 1-d float array, optionally of length ``dim``."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be 1-dimensional, got shape {arr.shape}")
    if dim is not None and arr.shape[0] != dim:
        raise ValueError(f"{name} must have length {dim}, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError(f"{name} has non-finite entries")
    return arr


def check_matrix(a, shape=None, name="matrix"):
    arr = np.asarray(a, dtype=float)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-dimensional, got shape {arr.shape}")
    if shape is not None and arr.shape != tuple(shape):
        raise ValueError(f"{name} must have shape {tuple(shape)}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError(f"{name} has non-finite entries")
    return arr


def check_square(a, name="matrix"):
    arr = check_matrix(a, name=name)
    if arr.shape[0] != arr.shape[1]:
        raise ValueError(f"{name} must be square, got shape {arr.shape}")
    return arr


def default_rank_tol():
    """Relative rank tolerance from the environment, or None for the
    scale-invariant default."""
    value = os.environ.get(RANK_TOL_ENV)
    if value is None or value.strip() == "":
        return None
    tol = float(value)
    if not tol > 0:
        raise ValueError(f"{RANK_TOL_ENV} must be positive, got {value!r}")
    return tol
