"""Open-boundary matrix product states for expansion coefficients.

Tensor n has shape ``(left bond, D, right bond)``; the outer bonds have
extent 1. ``Mps`` values are immutable and every operation returns a new one.
Sites are 0-based; a cut ``c`` is the bond between sites ``c-1`` and ``c``.
"""
import logging
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from ..models import EntanglementSpectrum
from . import tensor_core
from .basis import sob_table
from .errors import MpsShapeError, SharedRangeError, SiteRangeError, SizeGuardError, ZeroNormError

logger = logging.getLogger(__name__)

FULL_TENSOR_LIMIT = 10 ** 7


def _frozen(t) -> np.ndarray:
    arr = np.asarray(t, dtype=np.float64)
    if arr.flags.writeable:
        arr = np.array(arr, order="C")
        arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class Mps:
    tensors: Tuple[np.ndarray, ...]

    def __post_init__(self):
        tensors = tuple(_frozen(t) for t in self.tensors)
        if not tensors:
            raise MpsShapeError("an MPS needs at least one tensor")
        for n, t in enumerate(tensors):
            if t.ndim != 3:
                raise MpsShapeError(f"tensor {n} has rank {t.ndim}, expected 3")
        if tensors[0].shape[0] != 1 or tensors[-1].shape[2] != 1:
            raise MpsShapeError("boundary bonds must have extent 1")
        phys = tensors[0].shape[1]
        for n, (a, b) in enumerate(zip(tensors, tensors[1:])):
            if a.shape[2] != b.shape[0]:
                raise MpsShapeError(f"bond {n + 1} mismatch: {a.shape[2]} != {b.shape[0]}")
        if any(t.shape[1] != phys for t in tensors):
            raise MpsShapeError("all physical extents must be equal")
        object.__setattr__(self, "tensors", tensors)

    @property
    def n_sites(self) -> int:
        return len(self.tensors)

    @property
    def phys_dim(self) -> int:
        return self.tensors[0].shape[1]

    @property
    def bond_dims(self) -> List[int]:
        return [t.shape[0] for t in self.tensors] + [1]

    @property
    def max_bond(self) -> int:
        return max(self.bond_dims)

    def replace(self, site: int, tensor: np.ndarray) -> "Mps":
        tensors = list(self.tensors)
        tensors[site] = tensor
        return Mps(tuple(tensors))


def _check_site(psi: Mps, site: int, span: int = 1):
    if site < 0 or site + span > psi.n_sites:
        raise SiteRangeError(f"site {site} (span {span}) outside a chain of {psi.n_sites} sites")


def _check_cut(psi: Mps, cut: int):
    if not 1 <= cut <= psi.n_sites - 1:
        raise SiteRangeError(f"cut {cut} outside [1, {psi.n_sites - 1}]")


def _check_pair(a: Mps, b: Mps):
    if a.n_sites != b.n_sites or a.phys_dim != b.phys_dim:
        raise MpsShapeError(
            f"MPS shapes differ: N={a.n_sites}/{b.n_sites}, D={a.phys_dim}/{b.phys_dim}"
        )


def bond_caps(n_sites: int, phys_dim: int, chi: int) -> List[int]:
    """min(chi, D^n, D^(N-n)) for every bond n = 0..N."""
    caps = []
    for n in range(n_sites + 1):
        left = min(n, n_sites - n)
        cap = 1
        for _ in range(left):
            cap *= phys_dim
            if cap >= chi:
                break
        caps.append(min(chi, cap))
    return caps


def random_mps(n_sites: int, phys_dim: int, chi: int, seed: int) -> Mps:
    if n_sites < 1 or phys_dim < 1 or chi < 1:
        raise MpsShapeError(f"invalid dimensions N={n_sites}, D={phys_dim}, chi={chi}")
    rng = np.random.default_rng(seed)
    bonds = bond_caps(n_sites, phys_dim, chi)
    scale = 1.0 / np.sqrt(phys_dim * chi)
    tensors = tuple(
        rng.standard_normal((bonds[n], phys_dim, bonds[n + 1])) * scale for n in range(n_sites)
    )
    return Mps(tensors)


def product_mps(vectors: Sequence[Sequence[float]]) -> Mps:
    """Bond-dimension-1 MPS from one coefficient vector per site."""
    return Mps(tuple(np.asarray(v, dtype=np.float64).reshape(1, -1, 1) for v in vectors))


def to_full_tensor(psi: Mps) -> np.ndarray:
    size = psi.phys_dim ** psi.n_sites
    if size > FULL_TENSOR_LIMIT:
        raise SizeGuardError(f"full tensor of {size} entries exceeds {FULL_TENSOR_LIMIT}")
    result = psi.tensors[0].reshape(psi.phys_dim, -1)
    for t in psi.tensors[1:]:
        result = tensor_core.contract(result, t, [result.ndim - 1], [0])
    return result.reshape((psi.phys_dim,) * psi.n_sites)


def from_full_tensor(full: np.ndarray) -> Mps:
    """Exact MPS of a dense coefficient tensor by successive QR factorizations."""
    full = np.asarray(full, dtype=np.float64)
    dims = full.shape
    tensors = []
    rest = full.reshape(1, -1)
    for d in dims[:-1]:
        left = rest.shape[0]
        q, r = tensor_core.qr(rest.reshape(left * d, -1))
        tensors.append(q.reshape(left, d, q.shape[1]))
        rest = r
    tensors.append(rest.reshape(rest.shape[0], dims[-1], 1))
    return Mps(tuple(tensors))


def _transfer(env: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # two-step order: absorb the env into A, then close over (s, alpha')
    tmp = tensor_core.contract(env, a, [0], [0])
    return tensor_core.contract(tmp, b, [0, 1], [0, 1])


def inner(psi_a: Mps, psi_b: Mps) -> float:
    _check_pair(psi_a, psi_b)
    env = np.ones((1, 1))
    for a, b in zip(psi_a.tensors, psi_b.tensors):
        env = _transfer(env, a, b)
    return float(env[0, 0])


def norm(psi: Mps) -> float:
    return float(np.sqrt(max(inner(psi, psi), 0.0)))


def scale(psi: Mps, c: float) -> Mps:
    return psi.replace(0, psi.tensors[0] * float(c))


def _block_sum(tensors_a: Sequence[np.ndarray], tensors_b: Sequence[np.ndarray]) -> List[np.ndarray]:
    """Block construction over a contiguous range whose outer bonds are shared."""
    if len(tensors_a) == 1:
        return [tensors_a[0] + tensors_b[0]]
    out = [np.concatenate([tensors_a[0], tensors_b[0]], axis=2)]
    for a, b in zip(tensors_a[1:-1], tensors_b[1:-1]):
        block = np.zeros((a.shape[0] + b.shape[0], a.shape[1], a.shape[2] + b.shape[2]))
        block[: a.shape[0], :, : a.shape[2]] = a
        block[a.shape[0]:, :, a.shape[2]:] = b
        out.append(block)
    out.append(np.concatenate([tensors_a[-1], tensors_b[-1]], axis=0))
    return out


def add(psi_a: Mps, psi_b: Mps) -> Mps:
    _check_pair(psi_a, psi_b)
    return Mps(tuple(_block_sum(psi_a.tensors, psi_b.tensors)))


def add_shared(psi_a: Mps, psi_b: Mps, first: int, last: int) -> Mps:
    """Sum of two MPS that are identical outside sites ``first..last``.

    Shared tensors are kept once and bonds grow only inside the range; a
    single-site range sums the differing tensors in place.
    """
    _check_pair(psi_a, psi_b)
    if not 0 <= first <= last < psi_a.n_sites:
        raise SiteRangeError(f"range [{first}, {last}] outside a chain of {psi_a.n_sites} sites")
    for n in list(range(first)) + list(range(last + 1, psi_a.n_sites)):
        if not np.array_equal(psi_a.tensors[n], psi_b.tensors[n]):
            raise SharedRangeError(f"tensor {n} differs outside the declared range [{first}, {last}]")
    ta, tb = psi_a.tensors[first:last + 1], psi_b.tensors[first:last + 1]
    if ta[0].shape[0] != tb[0].shape[0] or ta[-1].shape[2] != tb[-1].shape[2]:
        raise MpsShapeError(f"outer bonds of range [{first}, {last}] are not shared")
    if first == last and ta[0].shape != tb[0].shape:
        raise MpsShapeError(f"tensors at site {first} differ in shape")
    middle = _block_sum(ta, tb)
    return Mps(psi_a.tensors[:first] + tuple(middle) + psi_a.tensors[last + 1:])


def apply_single(psi: Mps, site: int, op: np.ndarray) -> Mps:
    """A~[a, s, b] = sum_t O[s, t] A[a, t, b] at ``site``; bonds unchanged."""
    _check_site(psi, site)
    op = np.asarray(op, dtype=np.float64)
    if op.shape != (psi.phys_dim, psi.phys_dim):
        raise MpsShapeError(f"operator shape {op.shape} does not match D={psi.phys_dim}")
    tensor = tensor_core.contract(op, psi.tensors[site], [1], [1])
    return psi.replace(site, np.transpose(tensor, (1, 0, 2)))


def apply_two_site(psi: Mps, site: int, op: np.ndarray) -> Mps:
    """Apply a non-separable operator O[s1', s2', s1, s2] on ``site`` and ``site+1``.

    The merged block is split back with an exact thin QR (no truncation).
    """
    _check_site(psi, site, span=2)
    d = psi.phys_dim
    op = np.asarray(op, dtype=np.float64)
    if op.shape != (d, d, d, d):
        raise MpsShapeError(f"two-site operator shape {op.shape} does not match D={d}")
    a, b = psi.tensors[site], psi.tensors[site + 1]
    theta = tensor_core.contract(a, b, [2], [0])                 # (l, s1, s2, r)
    theta = tensor_core.contract(op, theta, [2, 3], [1, 2])      # (s1', s2', l, r)
    left, right = a.shape[0], b.shape[2]
    matrix = tensor_core.permute_reshape(theta, [2, 0, 1, 3], [left * d, d * right])
    q, r = tensor_core.qr(matrix)
    rank = q.shape[1]
    tensors = list(psi.tensors)
    tensors[site] = q.reshape(left, d, rank)
    tensors[site + 1] = r.reshape(rank, d, right)
    return Mps(tuple(tensors))


def expectation_single(psi: Mps, site: int, op: np.ndarray) -> float:
    """Quantum average <psi|O_site|psi> / <psi|psi>."""
    return _ratio(inner(psi, apply_single(psi, site, op)), inner(psi, psi))


def expectation_two_site(psi: Mps, site: int, op: np.ndarray) -> float:
    return _ratio(inner(psi, apply_two_site(psi, site, op)), inner(psi, psi))


def _ratio(numerator: float, denominator: float) -> float:
    if denominator <= 0.0:
        raise ZeroNormError("state has zero norm")
    return numerator / denominator


def left_orthonormalize(psi: Mps, stop: int) -> Tuple[List[np.ndarray], np.ndarray]:
    """QR sweep over sites ``0..stop-1``; returns the orthonormal tensors and the carried R."""
    tensors = []
    carry = np.ones((1, 1))
    for t in psi.tensors[:stop]:
        t = tensor_core.contract(carry, t, [1], [0])
        left, d, right = t.shape
        q, r = tensor_core.qr(t.reshape(left * d, right))
        tensors.append(q.reshape(left, d, q.shape[1]))
        carry = r
    return tensors, carry


def right_orthonormalize(psi: Mps, start: int) -> Tuple[List[np.ndarray], np.ndarray]:
    """LQ sweep over sites ``N-1..start``; returns the orthonormal tensors (in site order) and the carried L."""
    tensors = []
    carry = np.ones((1, 1))
    for t in reversed(psi.tensors[start:]):
        t = tensor_core.contract(t, carry, [2], [0])
        left, d, right = t.shape
        lmat, q = tensor_core.lq(t.reshape(left, d * right))
        tensors.append(q.reshape(q.shape[0], d, right))
        carry = lmat
    tensors.reverse()
    return tensors, carry


def canonicalize_center(psi: Mps, cut: int) -> Tuple[Mps, np.ndarray]:
    """Mixed canonical form around bond ``cut``.

    Sites left of the cut are left-orthonormal, sites right of it
    right-orthonormal; the returned center matrix carries the norm and is
    absorbed into site ``cut-1`` of the returned MPS.
    """
    _check_cut(psi, cut)
    left, carry_left = left_orthonormalize(psi, cut)
    right, carry_right = right_orthonormalize(psi, cut)
    center = carry_left @ carry_right
    if np.linalg.norm(center) == 0.0:
        raise ZeroNormError("cannot canonicalize a zero-norm state")
    left[-1] = tensor_core.contract(left[-1], center, [2], [0])
    return Mps(tuple(left + right)), center


def entanglement_spectrum(psi: Mps, cut: int) -> EntanglementSpectrum:
    _, center = canonicalize_center(psi, cut)
    values = tensor_core.singular_values(center)
    values = values / np.linalg.norm(values)
    return EntanglementSpectrum(cut=cut, values=[float(v) for v in values])


def entanglement_entropy(spectrum: EntanglementSpectrum) -> float:
    """S = -2 sum lambda^2 ln lambda, with 0 ln 0 = 0."""
    lam = np.asarray(spectrum.values, dtype=np.float64)
    lam = lam[lam > 0]
    return float(-2.0 * np.sum(lam * lam * np.log(lam)))


def compress(psi: Mps, chi_max: int) -> Mps:
    """Keep the chi_max largest Schmidt values at every bond (one left-canonical sweep then SVD sweep)."""
    if psi.n_sites == 1:
        return psi
    tensors, carry = left_orthonormalize(psi, psi.n_sites)
    tensors[-1] = tensor_core.contract(tensors[-1], carry, [2], [0])
    for n in range(psi.n_sites - 1, 0, -1):
        t = tensors[n]
        left, d, right = t.shape
        u, s, vt = tensor_core.truncated_svd(t.reshape(left, d * right), chi_max)
        tensors[n] = vt.reshape(vt.shape[0], d, right)
        tensors[n - 1] = tensor_core.contract(tensors[n - 1], u * s, [2], [0])
    return Mps(tuple(tensors))


def wavefunction_values(psi: Mps, points) -> np.ndarray:
    """psi(x_1..x_N) at an array of points of shape ``(M, N)``, without forming the coefficient tensor."""
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if points.shape[1] != psi.n_sites:
        raise MpsShapeError(f"points have {points.shape[1]} coordinates for {psi.n_sites} sites")
    env = np.ones((points.shape[0], 1))
    for n, t in enumerate(psi.tensors):
        phi = sob_table(psi.phys_dim, points[:, n]).T                  # (M, D)
        site = np.einsum("ms,asb->mab", phi, t)
        env = np.einsum("ma,mab->mb", env, site)
    return env[:, 0]
