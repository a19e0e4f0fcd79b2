"""Dense real tensor kernels.

Tensors are plain ``numpy.ndarray`` objects of dtype float64 in C (row-major)
order. Every function here is pure: inputs are never modified.
"""
import logging
from typing import Sequence, Tuple

import numpy as np

from .errors import ContractShapeError, PermutationError, SymmetryError

logger = logging.getLogger(__name__)

SYMMETRY_TOL = 1e-10


def as_tensor(data, shape: Sequence[int] = None) -> np.ndarray:
    """Return a float64 row-major copy of ``data``, optionally reshaped."""
    arr = np.array(data, dtype=np.float64, order="C")
    if shape is not None:
        shape = tuple(int(e) for e in shape)
        if any(e <= 0 for e in shape) or int(np.prod(shape)) != arr.size:
            raise PermutationError(f"Cannot view {arr.size} values as shape {shape}")
        arr = arr.reshape(shape)
    return arr


def contract(a: np.ndarray, b: np.ndarray, axes_a: Sequence[int], axes_b: Sequence[int]) -> np.ndarray:
    """Sum over paired axes of ``a`` and ``b``.

    The result keeps the uncontracted axes of ``a`` followed by those of ``b``.
    """
    axes_a = [int(ax) for ax in axes_a]
    axes_b = [int(ax) for ax in axes_b]
    if len(axes_a) != len(axes_b):
        raise ContractShapeError(f"Axis lists differ in length: {axes_a} vs {axes_b}")
    for ax_a, ax_b in zip(axes_a, axes_b):
        if not (-a.ndim <= ax_a < a.ndim) or not (-b.ndim <= ax_b < b.ndim):
            raise ContractShapeError(f"Axis pair ({ax_a}, {ax_b}) out of range for shapes {a.shape}, {b.shape}")
        if a.shape[ax_a] != b.shape[ax_b]:
            raise ContractShapeError(
                f"Extent mismatch on axes ({ax_a}, {ax_b}): {a.shape[ax_a]} != {b.shape[ax_b]}"
            )
    return np.tensordot(a, b, axes=(axes_a, axes_b))


def permute_reshape(a: np.ndarray, perm: Sequence[int], new_shape: Sequence[int]) -> np.ndarray:
    perm = [int(p) for p in perm]
    if sorted(perm) != list(range(a.ndim)):
        raise PermutationError(f"{perm} is not a permutation of {a.ndim} axes")
    new_shape = tuple(int(e) for e in new_shape)
    if int(np.prod(new_shape)) != a.size:
        raise PermutationError(f"Cannot reshape {a.shape} (size {a.size}) to {new_shape}")
    return np.ascontiguousarray(np.transpose(a, perm)).reshape(new_shape)


def qr(m: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Thin QR factorization: Q is p x min(p,q), R is min(p,q) x q."""
    if m.ndim != 2:
        raise ContractShapeError(f"qr expects a matrix, got shape {m.shape}")
    q, r = np.linalg.qr(m, mode="reduced")
    # fix the gauge: non-negative diagonal of R
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    return q * signs, r * signs[:, None]


def lq(m: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Thin LQ factorization (``m = L @ Q`` with orthonormal rows of Q)."""
    q, r = qr(m.T)
    return r.T, q.T


def symmetric_eig(m: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Eigenvalues in ascending order and orthonormal eigenvectors as columns."""
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise SymmetryError(f"symmetric_eig expects a square matrix, got shape {m.shape}")
    scale = max(1.0, float(np.max(np.abs(m)))) if m.size else 1.0
    asym = float(np.max(np.abs(m - m.T))) if m.size else 0.0
    if asym > SYMMETRY_TOL * scale:
        raise SymmetryError(f"Matrix is not symmetric (max |m - m^T| = {asym:.3e})")
    values, vectors = np.linalg.eigh(m)
    return values, vectors


def singular_values(m: np.ndarray) -> np.ndarray:
    """Singular values in descending order."""
    if m.ndim != 2:
        raise ContractShapeError(f"singular_values expects a matrix, got shape {m.shape}")
    return np.linalg.svd(m, compute_uv=False)


def truncated_svd(m: np.ndarray, max_rank: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """SVD keeping at most ``max_rank`` of the largest singular triplets."""
    u, s, vt = np.linalg.svd(m, full_matrices=False)
    keep = max(1, min(int(max_rank), s.size))
    return u[:, :keep], s[:keep], vt[:keep, :]
