"""Orthonormal DCT-II basis and sparsity diagnostics.

The basis matrix ``Psi`` has entry ``(i, j) = K(j) * cos(pi * j * (i + 0.5) / N)``
for zero-based ``i`` (equivalently ``i - 0.5`` with one-based rows), with
``K(0) = 1/sqrt(N)`` and ``K(j) = sqrt(2/N)`` otherwise. Columns of ``Psi`` are
the cosine atoms, so ``x = Psi @ alpha`` is the inverse transform and
``alpha = Psi.T @ x`` is the forward one.

Transforms are dense matrix-vector products. Block lengths in this package
stay at or below a few thousand samples, where the O(N^2) cost is negligible
next to recovery.
"""
from functools import lru_cache

import numpy as np

from .errors import InvalidArgumentError

#: Coefficient vector in the DCT domain; same length as the block it came from.
DctCoefficients = np.ndarray

__all__ = [
    "DctCoefficients",
    "dct_basis",
    "dct_forward",
    "dct_inverse",
    "coherence",
    "sparsity_count",
]


@lru_cache(maxsize=32)
def _basis(n):
    i = np.arange(n, dtype=float)[:, None] + 0.5
    j = np.arange(n, dtype=float)[None, :]
    scale = np.full(n, np.sqrt(2.0 / n))
    scale[0] = 1.0 / np.sqrt(n)
    psi = scale * np.cos(np.pi * j * i / n)
    psi.setflags(write=False)
    return psi


def dct_basis(n):
    """Return the read-only ``n x n`` IDCT matrix (columns are DCT atoms).

    Results are cached per ``n``; the array is shared, so it is marked
    read-only.
    """
    n = int(n)
    if n < 1:
        raise InvalidArgumentError(f"basis size must be >= 1, got {n}")
    return _basis(n)


def _as_vector(x, name):
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise InvalidArgumentError(f"{name} must be one-dimensional, got shape {x.shape}")
    if x.size == 0:
        raise InvalidArgumentError(f"{name} must be non-empty")
    if not np.all(np.isfinite(x)):
        raise InvalidArgumentError(f"{name} contains non-finite entries")
    return x


def dct_forward(x):
    """Forward orthonormal DCT: ``alpha = Psi.T @ x``."""
    x = _as_vector(x, "signal")
    return dct_basis(x.size).T @ x


def dct_inverse(alpha):
    """Inverse orthonormal DCT: ``x = Psi @ alpha``."""
    alpha = _as_vector(alpha, "coefficients")
    return dct_basis(alpha.size) @ alpha


def coherence(basis):
    """``sqrt(N)`` times the largest absolute entry of an ``N x N`` unitary matrix.

    Ranges from 1 (maximally incoherent, e.g. the DCT gives sqrt(2)) up to
    ``sqrt(N)`` for the identity.
    """
    basis = np.asarray(basis, dtype=float)
    if basis.ndim != 2 or basis.shape[0] != basis.shape[1] or basis.size == 0:
        raise InvalidArgumentError(f"basis must be a non-empty square matrix, got {basis.shape}")
    return float(np.sqrt(basis.shape[0]) * np.abs(basis).max())


def sparsity_count(alpha, rel_threshold=0.01):
    """Number of coefficients with ``|alpha_j| > rel_threshold * max|alpha|``.

    ``rel_threshold = 0`` counts exact nonzeros. An all-zero vector has
    sparsity 0 for any threshold.
    """
    if not 0.0 <= rel_threshold < 1.0:
        raise InvalidArgumentError(f"rel_threshold must lie in [0, 1), got {rel_threshold}")
    mag = np.abs(np.asarray(alpha, dtype=float))
    if mag.size == 0:
        return 0
    return int(np.count_nonzero(mag > rel_threshold * mag.max()))
