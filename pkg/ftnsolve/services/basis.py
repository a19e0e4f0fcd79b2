"""Single-oscillator basis (Hermite functions) and operator matrices.

phi_s(x) = (2^s s! sqrt(pi))^{-1/2} exp(-x^2/2) h_s(x) is evaluated with the
normalized three-term recurrence, so large orders never touch factorials.
"""
import logging
from functools import lru_cache
from typing import Callable, Optional, Tuple

import numpy as np

from ..models import BasisSpec
from .errors import BasisIndexError, NonFiniteKernelError

logger = logging.getLogger(__name__)

PI_QUARTER = np.pi ** -0.25

Kernel = Callable[[int, np.ndarray], np.ndarray]
TwoSiteKernel = Callable[[int, int, np.ndarray, np.ndarray], np.ndarray]


def sob_table(order: int, x) -> np.ndarray:
    """Values phi_s(x) for s < order, shape ``(order,) + shape(x)``."""
    x = np.asarray(x, dtype=np.float64)
    table = np.empty((order,) + x.shape)
    table[0] = PI_QUARTER * np.exp(-0.5 * x * x)
    if order > 1:
        table[1] = np.sqrt(2.0) * x * table[0]
    for s in range(1, order - 1):
        table[s + 1] = np.sqrt(2.0 / (s + 1)) * x * table[s] - np.sqrt(s / (s + 1)) * table[s - 1]
    return table


def sob_eval(s: int, x, order: Optional[int] = None):
    """phi_s(x); ``order`` (the expansion order D) bounds the admissible index."""
    if s < 0 or (order is not None and s >= order):
        raise BasisIndexError(f"basis index {s} outside [0, {order})")
    values = sob_table(s + 1, x)[s]
    return float(values) if values.ndim == 0 else values


def sob_derivative(s: int, x):
    """d phi_s / dx = sqrt(s/2) phi_{s-1} - sqrt((s+1)/2) phi_{s+1}."""
    if s < 0:
        raise BasisIndexError(f"basis index {s} is negative")
    table = sob_table(s + 2, x)
    values = -np.sqrt((s + 1) / 2.0) * table[s + 1]
    if s > 0:
        values = values + np.sqrt(s / 2.0) * table[s - 1]
    return float(values) if np.ndim(values) == 0 else values


def gauss_hermite(n_nodes: int) -> Tuple[np.ndarray, np.ndarray]:
    """Nodes and weights for the integral of exp(-x^2) p(x), exact up to degree 2K-1."""
    if n_nodes < 1:
        raise ValueError(f"node count must be positive, got {n_nodes}")
    nodes, weights = np.polynomial.hermite.hermgauss(n_nodes)
    return nodes, weights


def _scaled_quadrature(spec: BasisSpec) -> Tuple[np.ndarray, np.ndarray]:
    # the products integrated below already carry exp(-x^2) through the two phi factors
    nodes, weights = gauss_hermite(spec.quadrature_nodes)
    return nodes, weights * np.exp(nodes * nodes)


def operator_matrix_quadrature(kernel: Kernel, spec: BasisSpec) -> np.ndarray:
    """O[s', s] = integral of phi_{s'}(x) * kernel(s, x) by Gauss-Hermite quadrature.

    ``kernel(s, x)`` returns the values of O[phi_s] on the array of nodes ``x``.
    """
    nodes, scaled = _scaled_quadrature(spec)
    table = sob_table(spec.order, nodes)
    columns = []
    for s in range(spec.order):
        values = np.asarray(kernel(s, nodes), dtype=np.float64)
        if not np.all(np.isfinite(values)):
            raise NonFiniteKernelError(f"kernel returned non-finite values for basis index {s}")
        columns.append(table @ (scaled * values))
    return np.stack(columns, axis=1)


def two_site_matrix_quadrature(kernel: TwoSiteKernel, spec: BasisSpec) -> np.ndarray:
    """Fourth-order tensor O[n1', n2', n1, n2] by product Gauss-Hermite quadrature.

    ``kernel(n1, n2, x1, x2)`` returns O[phi_n1(x1) phi_n2(x2)] on the node grid.
    """
    nodes, scaled = _scaled_quadrature(spec)
    table = sob_table(spec.order, nodes) * scaled
    x1, x2 = np.meshgrid(nodes, nodes, indexing="ij")
    d = spec.order
    out = np.empty((d, d, d, d))
    for n1 in range(d):
        for n2 in range(d):
            values = np.asarray(kernel(n1, n2, x1, x2), dtype=np.float64)
            if not np.all(np.isfinite(values)):
                raise NonFiniteKernelError(f"kernel returned non-finite values for indices ({n1}, {n2})")
            out[:, :, n1, n2] = table @ values @ table.T
    return out


def _frozen(m: np.ndarray) -> np.ndarray:
    m.flags.writeable = False
    return m


@lru_cache(maxsize=None)
def d_matrix(order: int) -> np.ndarray:
    """Matrix of d/dx: D[s-1, s] = sqrt(s/2), D[s+1, s] = -sqrt((s+1)/2)."""
    s = np.arange(1, order)
    off = np.sqrt(s / 2.0)
    m = np.zeros((order, order))
    m[s - 1, s] = off
    m[s, s - 1] = -off
    return _frozen(m)


@lru_cache(maxsize=None)
def x_matrix(order: int) -> np.ndarray:
    """Matrix of x: X[s-1, s] = X[s, s-1] = sqrt(s/2)."""
    s = np.arange(1, order)
    off = np.sqrt(s / 2.0)
    m = np.zeros((order, order))
    m[s - 1, s] = off
    m[s, s - 1] = off
    return _frozen(m)


def matrix_power(m: np.ndarray, k: int) -> np.ndarray:
    """k-th power of the truncated matrix (not the projection of the k-th operator power)."""
    if k < 1:
        raise ValueError(f"power must be >= 1, got {k}")
    return np.linalg.matrix_power(np.asarray(m, dtype=np.float64), k)


@lru_cache(maxsize=None)
def kinetic_matrix(order: int) -> np.ndarray:
    return _frozen(-0.5 * matrix_power(d_matrix(order), 2))


@lru_cache(maxsize=None)
def identity_matrix(order: int) -> np.ndarray:
    return _frozen(np.eye(order))


def harmonic_matrix(order: int, omega: float = 1.0) -> np.ndarray:
    """-1/2 D^2 + 1/2 omega^2 X^2 for one oscillator."""
    return kinetic_matrix(order) + 0.5 * omega * omega * matrix_power(x_matrix(order), 2)
