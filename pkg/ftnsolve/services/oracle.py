"""Brute-force references on the full coefficient tensor.

Everything here materializes D^N-sized objects and is meant for small chains.
"""
import logging
import math
from dataclasses import dataclass
from functools import reduce
from typing import Dict, List, Literal, Optional, Sequence, Tuple

import numpy as np

from ..models import BasisSpec, OptimizerConfig, OscillatorChain
from . import tensor_core
from .basis import harmonic_matrix, identity_matrix, x_matrix
from .errors import ContractShapeError, DivergenceError, SizeGuardError, SymmetryError
from .optimizer import AdamState, PlateauSchedule, adam_step, sgd_step

logger = logging.getLogger(__name__)

DEFAULT_MAX_DIM = 4096


@dataclass(frozen=True, eq=False)
class DenseProblem:
    h: np.ndarray
    n_sites: int
    order: int

    def __post_init__(self):
        dim = self.order ** self.n_sites
        if self.h.shape != (dim, dim):
            raise ContractShapeError(f"H has shape {self.h.shape}, expected ({dim}, {dim})")
        scale = max(1.0, float(np.max(np.abs(self.h))))
        if float(np.max(np.abs(self.h - self.h.T))) > tensor_core.SYMMETRY_TOL * scale:
            raise SymmetryError("dense Hamiltonian is not symmetric")

    @property
    def dim(self) -> int:
        return self.h.shape[0]


def check_dense_size(n_sites: int, order: int, max_dim: int = DEFAULT_MAX_DIM) -> int:
    dim = order ** n_sites
    if dim > max_dim:
        raise SizeGuardError(f"dense dimension D^N = {order}^{n_sites} = {dim} exceeds the guard {max_dim}")
    return dim


def embed(local: Dict[int, np.ndarray], n_sites: int, order: int) -> np.ndarray:
    """Kronecker product with ``local[m]`` on site m and the identity elsewhere."""
    eye = identity_matrix(order)
    return reduce(np.kron, [local.get(m, eye) for m in range(n_sites)])


def dense_hamiltonian(model: OscillatorChain, spec: BasisSpec, max_dim: int = DEFAULT_MAX_DIM) -> DenseProblem:
    n, d = model.n_sites, spec.order
    dim = check_dense_size(n, d, max_dim)
    x = x_matrix(d)
    h = np.zeros((dim, dim))
    for m in range(n):
        h += embed({m: harmonic_matrix(d, model.omega[m])}, n, d)
    if model.gamma != 0.0:
        for m in range(n - 1):
            h += model.gamma * embed({m: x, m + 1: x}, n, d)
    if model.gamma3 != 0.0:
        for m in range(n - 2):
            h += model.gamma3 * embed({m: x, m + 1: x, m + 2: x}, n, d)
    logger.debug(f"Dense Hamiltonian assembled: dim={dim}")
    return DenseProblem(h=h, n_sites=n, order=d)


def dense_ground_state(problem: DenseProblem) -> Tuple[float, np.ndarray]:
    values, vectors = tensor_core.symmetric_eig(problem.h)
    vector = vectors[:, 0]
    # sign convention: largest-magnitude entry positive
    if vector[np.argmax(np.abs(vector))] < 0:
        vector = -vector
    return float(values[0]), vector


def minimize_quotient(
    matrix: np.ndarray,
    config: OptimizerConfig,
    initial: Optional[np.ndarray] = None,
) -> Tuple[float, np.ndarray, int]:
    """Gradient minimization of c^T M c / c^T c over a coefficient vector.

    Uses the same update rules and plateau schedule as the MPS solver.
    Returns the final quotient, the normalized minimizer and the iteration count.
    """
    rng = np.random.default_rng(config.seed)
    c = rng.standard_normal(matrix.shape[0]) if initial is None else np.array(initial, dtype=np.float64)
    c = c / np.linalg.norm(c)
    schedule = PlateauSchedule.from_config(config)
    adam = AdamState.zeros_like([c], config) if config.method == "adam" else None
    value = math.nan
    for iteration in range(1, config.max_iters + 1):
        mc = matrix @ c
        norm2 = float(c @ c)
        value = float(c @ mc) / norm2
        if not math.isfinite(value):
            raise DivergenceError(f"loss became non-finite at iteration {iteration}")
        grad = 2.0 * (mc - value * c) / norm2
        action = schedule.update(value)
        if action == "stop" or iteration == config.max_iters:
            break
        if adam is not None:
            (c,), adam = adam_step(adam, [c], [grad], schedule.learning_rate)
        else:
            (c,) = sgd_step([c], [grad], schedule.learning_rate)
        c = c / np.linalg.norm(c)
    return value, c / np.linalg.norm(c), iteration


def full_tensor_solve(
    model: OscillatorChain,
    spec: BasisSpec,
    config: Optional[OptimizerConfig] = None,
    max_dim: int = DEFAULT_MAX_DIM,
) -> Tuple[float, np.ndarray]:
    """Minimize the dense Rayleigh quotient directly over the D^N coefficients."""
    config = config or OptimizerConfig()
    problem = dense_hamiltonian(model, spec, max_dim)
    logger.info(f"Full-tensor solve: N={model.n_sites}, D={spec.order}, {problem.dim} coefficients")
    value, c, iterations = minimize_quotient(problem.h, config)
    logger.info(f"Full-tensor solve finished: E={value:.12f} after {iterations} iterations")
    return value, c.reshape((spec.order,) * model.n_sites)


def single_variable_solve(
    terms: Sequence[np.ndarray],
    spec: BasisSpec,
    config: Optional[OptimizerConfig] = None,
    mode: Literal["rayleigh", "residual"] = "rayleigh",
) -> Tuple[float, np.ndarray]:
    """Solve sum_p O[p] C = 0 (residual) or minimize C^T (sum_p O[p]) C (rayleigh) for one variable.

    In residual mode the value is |Z|^2 = |sum_p O[p] C|^2 at the best unit-norm C;
    it is close to zero only when the equation has a solution in the basis.
    """
    if not terms:
        raise ValueError("single_variable_solve needs at least one operator matrix")
    d = spec.order
    mats: List[np.ndarray] = [np.asarray(t, dtype=np.float64) for t in terms]
    for t in mats:
        if t.shape != (d, d):
            raise ContractShapeError(f"operator matrix of shape {t.shape} for D={d}")
    total = sum(mats)
    if mode == "rayleigh":
        matrix = 0.5 * (total + total.T)
    elif mode == "residual":
        matrix = total.T @ total
    else:
        raise ValueError(f"unknown mode {mode!r}")
    value, c, _ = minimize_quotient(matrix, config or OptimizerConfig())
    return value, c
