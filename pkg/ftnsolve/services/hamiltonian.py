"""Coupled harmonic oscillators acting on coefficient MPS.

H = sum_m [-1/2 d^2/dx_m^2 + 1/2 w_m^2 x_m^2] + g sum_m x_m x_{m+1} + g3 sum_m x_m x_{m+1} x_{m+2}
"""
import logging
import math
from typing import List, NamedTuple

import numpy as np

from ..models import BasisSpec, OscillatorChain
from . import mps as mps_ops
from .basis import identity_matrix, kinetic_matrix, matrix_power, x_matrix
from .errors import MpsShapeError, NoRealSolutionError, ZeroNormError
from .mps import Mps

logger = logging.getLogger(__name__)


class Term(NamedTuple):
    """One summand of H|psi>: ``state`` equals psi outside sites ``first..last``."""
    first: int
    last: int
    state: Mps


def _check_state(psi: Mps, model: OscillatorChain, spec: BasisSpec):
    if psi.n_sites != model.n_sites or psi.phys_dim != spec.order:
        raise MpsShapeError(
            f"state (N={psi.n_sites}, D={psi.phys_dim}) does not match model N={model.n_sites}, D={spec.order}"
        )


def hamiltonian_terms(psi: Mps, model: OscillatorChain, spec: BasisSpec) -> List[Term]:
    """The (4N-3) term states, ordered by site: kinetic, potential, two-body, three-body."""
    _check_state(psi, model, spec)
    d = spec.order
    kinetic = kinetic_matrix(d)
    x = x_matrix(d)
    x2 = matrix_power(x, 2)
    n = model.n_sites
    terms = []
    for m in range(n):
        terms.append(Term(m, m, mps_ops.apply_single(psi, m, kinetic)))
        w = model.omega[m]
        terms.append(Term(m, m, mps_ops.apply_single(psi, m, 0.5 * w * w * x2)))
        if m + 1 < n and model.gamma != 0.0:
            state = mps_ops.apply_single(psi, m, model.gamma * x)
            terms.append(Term(m, m + 1, mps_ops.apply_single(state, m + 1, x)))
        if m + 2 < n and model.gamma3 != 0.0:
            state = mps_ops.apply_single(psi, m, model.gamma3 * x)
            state = mps_ops.apply_single(state, m + 1, x)
            terms.append(Term(m, m + 2, mps_ops.apply_single(state, m + 2, x)))
    return terms


def _merge(a: Term, b: Term) -> Term:
    first, last = min(a.first, b.first), max(a.last, b.last)
    return Term(first, last, mps_ops.add_shared(a.state, b.state, first, last))


def sum_terms(terms: List[Term]) -> Term:
    """Sum term states with shared-tensor additions.

    Equal ranges are merged in place first; the rest is summed as a balanced
    tree in list order, so every partial sum still equals psi outside its range.
    """
    if not terms:
        raise ValueError("no terms to sum")
    merged = [terms[0]]
    for term in terms[1:]:
        if (term.first, term.last) == (merged[-1].first, merged[-1].last):
            merged[-1] = _merge(merged[-1], term)
        else:
            merged.append(term)
    while len(merged) > 1:
        paired = [_merge(a, b) for a, b in zip(merged[0::2], merged[1::2])]
        if len(merged) % 2:
            paired.append(merged[-1])
        merged = paired
    return merged[0]


def apply_hamiltonian(psi: Mps, model: OscillatorChain, spec: BasisSpec) -> Mps:
    total = sum_terms(hamiltonian_terms(psi, model, spec))
    logger.debug(f"H|psi> assembled with bond dimension {total.state.max_bond} (psi: {psi.max_bond})")
    return total.state


def energy(psi: Mps, model: OscillatorChain, spec: BasisSpec) -> float:
    """Rayleigh quotient <psi|H|psi> / <psi|psi>."""
    norm2 = mps_ops.inner(psi, psi)
    if norm2 <= 0.0:
        raise ZeroNormError("energy of a zero-norm state is undefined")
    return mps_ops.inner(psi, apply_hamiltonian(psi, model, spec)) / norm2


def residual_loss(psi: Mps, model: OscillatorChain, spec: BasisSpec) -> float:
    """||(H - E) psi||^2 / ||psi||^2 with E the Rayleigh quotient of psi."""
    return residual_of_image(psi, apply_hamiltonian(psi, model, spec))


def residual_of_image(psi: Mps, h_psi: Mps) -> float:
    """Residual from an already assembled H|psi>."""
    norm2 = mps_ops.inner(psi, psi)
    if norm2 <= 0.0:
        raise ZeroNormError("residual of a zero-norm state is undefined")
    e = mps_ops.inner(psi, h_psi) / norm2
    z = mps_ops.add(h_psi, mps_ops.scale(psi, -e))
    return max(mps_ops.inner(z, z), 0.0) / norm2


def exact_ground_energy(n_sites: int, gamma: float) -> float:
    """1/2 sum_n sqrt(1 + 2 g cos(n pi / (N+1))), for unit frequencies and no three-body term."""
    total = 0.0
    for n in range(1, n_sites + 1):
        radicand = 1.0 + 2.0 * gamma * math.cos(n * math.pi / (n_sites + 1))
        if radicand < 0.0:
            raise NoRealSolutionError(
                f"no real solution for N={n_sites}, gamma={gamma} (|gamma| > {critical_coupling(n_sites):.6f})"
            )
        total += math.sqrt(radicand)
    return 0.5 * total


def critical_coupling(n_sites: int) -> float:
    """gamma_c = 1/2 sec(pi / (N+1)); infinite for a single oscillator."""
    if n_sites < 1:
        raise ValueError(f"need at least one oscillator, got {n_sites}")
    if n_sites == 1:
        return math.inf
    return 0.5 / math.cos(math.pi / (n_sites + 1))


def exact_reference(model: OscillatorChain):
    """Closed-form ground energy when it applies, else None."""
    if model.gamma3 != 0.0 or not model.unit_frequencies:
        return None
    try:
        return exact_ground_energy(model.n_sites, model.gamma)
    except NoRealSolutionError:
        return None


# Matrix-product-operator form

def hamiltonian_mpo(model: OscillatorChain, spec: BasisSpec) -> List[np.ndarray]:
    """H as an MPO with tensors W[a, b, s', s] and bond dimension 4.

    Bond states: 0 nothing placed yet, 1 one x placed, 2 two x placed, 3 done.
    """
    d = spec.order
    eye = identity_matrix(d)
    x = x_matrix(d)
    x2 = matrix_power(x, 2)
    kinetic = kinetic_matrix(d)
    n = model.n_sites
    tensors = []
    for m in range(n):
        w = np.zeros((4, 4, d, d))
        w[0, 0] = eye
        w[3, 3] = eye
        w[0, 3] = kinetic + 0.5 * model.omega[m] ** 2 * x2
        w[0, 1] = x
        w[1, 2] = x
        w[1, 3] = model.gamma * x
        w[2, 3] = model.gamma3 * x
        left = w[:1] if m == 0 else w
        tensors.append(left[:, 3:] if m == n - 1 else left)
    return tensors


def mpo_left_step(env: np.ndarray, bra: np.ndarray, w: np.ndarray, ket: np.ndarray) -> np.ndarray:
    """Advance L[a, w, a'] (bra bond, MPO bond, ket bond) over one site."""
    tmp = np.tensordot(env, ket, axes=([2], [0]))             # (a, w, t, b')
    tmp = np.tensordot(tmp, w, axes=([1, 2], [0, 3]))         # (a, b', w', s)
    tmp = np.tensordot(tmp, bra, axes=([0, 3], [0, 1]))       # (b', w', b)
    return tmp.transpose(2, 1, 0)


def mpo_right_step(env: np.ndarray, bra: np.ndarray, w: np.ndarray, ket: np.ndarray) -> np.ndarray:
    """Advance R[b, w, b'] (bra bond, MPO bond, ket bond) over one site to the left."""
    tmp = np.tensordot(ket, env, axes=([2], [2]))             # (a', t, b, w')
    tmp = np.tensordot(tmp, w, axes=([1, 3], [3, 1]))         # (a', b, w, s)
    tmp = np.tensordot(tmp, bra, axes=([1, 3], [2, 1]))       # (a', w, a)
    return tmp.transpose(2, 1, 0)


def mpo_expectation(psi: Mps, mpo: List[np.ndarray]) -> float:
    """<psi|W|psi> (not normalized)."""
    env = np.ones((1, 1, 1))
    for t, w in zip(psi.tensors, mpo):
        env = mpo_left_step(env, t, w, t)
    return float(env[0, 0, 0])


def _mpo_square_step(env: np.ndarray, bra: np.ndarray, w: np.ndarray, ket: np.ndarray) -> np.ndarray:
    # env[a, w1, w2, a'] with w2 the layer acting first on the ket
    tmp = np.tensordot(env, ket, axes=([3], [0]))             # (a, w1, w2, t, b')
    tmp = np.tensordot(tmp, w, axes=([2, 3], [0, 3]))         # (a, w1, b', v2, u)
    tmp = np.tensordot(tmp, w, axes=([1, 4], [0, 3]))         # (a, b', v2, v1, s)
    tmp = np.tensordot(tmp, bra, axes=([0, 4], [0, 1]))       # (b', v2, v1, b)
    return tmp.transpose(3, 2, 1, 0)


def mpo_residual(psi: Mps, mpo: List[np.ndarray]) -> float:
    """<H^2> - <H>^2 in the normalized state; equals residual_loss up to rounding."""
    env = np.ones((1, 1, 1, 1))
    for t, w in zip(psi.tensors, mpo):
        env = _mpo_square_step(env, t, w, t)
    norm2 = mps_ops.inner(psi, psi)
    if norm2 <= 0.0:
        raise ZeroNormError("residual of a zero-norm state is undefined")
    e = mpo_expectation(psi, mpo) / norm2
    return max(float(env[0, 0, 0, 0]) / norm2 - e * e, 0.0)
