"""Gradient engine and ground-state training loop.

The loss is the Rayleigh quotient L = <psi|H|psi> / <psi|psi> of an
unnormalized MPS; all tensors are updated together from one gradient pass.
"""
import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np

from ..models import BasisSpec, CheckpointState, OptimizerConfig, OscillatorChain, SolveReport
from . import hamiltonian
from . import mps as mps_ops
from . import storage
from .errors import DivergenceError, MpsShapeError, ZeroNormError
from .mps import Mps

logger = logging.getLogger(__name__)

RENORM_LOW = 1e-8
RENORM_HIGH = 1e8


# Loss and gradient

def loss(psi: Mps, model: OscillatorChain, spec: BasisSpec) -> float:
    """Optimization objective; identical to the energy."""
    return hamiltonian.energy(psi, model, spec)


def _norm_right_step(env: np.ndarray, t: np.ndarray) -> np.ndarray:
    tmp = np.tensordot(t, env, axes=([2], [1]))               # (a', s, b)
    return np.tensordot(t, tmp, axes=([1, 2], [1, 2]))        # (a, a')


def _environments(psi: Mps, mpo: List[np.ndarray]):
    n = psi.n_sites
    h_left = [np.ones((1, 1, 1))]
    n_left = [np.ones((1, 1))]
    for t, w in zip(psi.tensors, mpo):
        h_left.append(hamiltonian.mpo_left_step(h_left[-1], t, w, t))
        n_left.append(np.tensordot(np.tensordot(n_left[-1], t, axes=([0], [0])), t, axes=([0, 1], [0, 1])))
    h_right = [None] * n + [np.ones((1, 1, 1))]
    n_right = [None] * n + [np.ones((1, 1))]
    for k in range(n - 1, -1, -1):
        t = psi.tensors[k]
        h_right[k] = hamiltonian.mpo_right_step(h_right[k + 1], t, mpo[k], t)
        n_right[k] = _norm_right_step(n_right[k + 1], t)
    return h_left, h_right, n_left, n_right


def loss_and_gradient(psi: Mps, mpo: List[np.ndarray]) -> Tuple[float, List[np.ndarray]]:
    """L and dL/dA for every tensor from one pass of left/right environments.

    G = 2 (E_env - L * N_env) / <psi|psi>, where E_env and N_env are the
    Hamiltonian and norm networks with the tensor removed.
    """
    if len(mpo) != psi.n_sites:
        raise MpsShapeError(f"MPO has {len(mpo)} sites, state has {psi.n_sites}")
    h_left, h_right, n_left, n_right = _environments(psi, mpo)
    numerator = float(h_left[-1][0, 0, 0])
    norm2 = float(n_left[-1][0, 0])
    if not norm2 > 0.0:
        if math.isfinite(norm2):
            raise ZeroNormError("gradient of a zero-norm state is undefined")
        raise DivergenceError(f"state norm is not finite ({norm2})")
    value = numerator / norm2
    grads = []
    for k, t in enumerate(psi.tensors):
        g_h = np.tensordot(h_left[k], t, axes=([2], [0]))                  # (a, w, t, b')
        g_h = np.tensordot(g_h, mpo[k], axes=([1, 2], [0, 3]))             # (a, b', w', s)
        g_h = np.tensordot(g_h, h_right[k + 1], axes=([1, 2], [2, 1]))     # (a, s, b)
        g_n = np.tensordot(np.tensordot(n_left[k], t, axes=([1], [0])), n_right[k + 1], axes=([2], [1]))
        grads.append(2.0 * (g_h - value * g_n) / norm2)
    return value, grads


def gradient(psi: Mps, model: OscillatorChain, spec: BasisSpec) -> List[np.ndarray]:
    return loss_and_gradient(psi, hamiltonian.hamiltonian_mpo(model, spec))[1]


# Update rules

@dataclass
class AdamState:
    """First/second moments per tensor plus the step count."""
    m: List[np.ndarray]
    v: List[np.ndarray]
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    @classmethod
    def zeros_like(cls, tensors, config: Optional[OptimizerConfig] = None) -> "AdamState":
        config = config or OptimizerConfig()
        return cls(
            m=[np.zeros_like(t) for t in tensors],
            v=[np.zeros_like(t) for t in tensors],
            beta1=config.beta1,
            beta2=config.beta2,
            epsilon=config.epsilon,
        )


def adam_step(state: AdamState, tensors, grads, learning_rate: float) -> Tuple[List[np.ndarray], AdamState]:
    if len(state.m) != len(grads) or any(m.shape != g.shape for m, g in zip(state.m, grads)):
        raise MpsShapeError("Adam moments do not match the gradient shapes")
    state.step += 1
    b1, b2 = state.beta1, state.beta2
    correction1 = 1.0 - b1 ** state.step
    correction2 = 1.0 - b2 ** state.step
    updated = []
    for k, (t, g) in enumerate(zip(tensors, grads)):
        state.m[k] = b1 * state.m[k] + (1.0 - b1) * g
        state.v[k] = b2 * state.v[k] + (1.0 - b2) * g * g
        m_hat = state.m[k] / correction1
        v_hat = state.v[k] / correction2
        updated.append(t - learning_rate * m_hat / (np.sqrt(v_hat) + state.epsilon))
    return updated, state


def sgd_step(tensors, grads, learning_rate: float) -> List[np.ndarray]:
    return [t - learning_rate * g for t, g in zip(tensors, grads)]


# Convergence policy

@dataclass
class PlateauSchedule:
    """Learning-rate halving on plateaus of the trailing-average loss.

    After ``patience`` iterations without a ``rel_tol`` relative improvement
    the rate is halved; ``max_halvings`` consecutive halvings without an
    improvement end the run. Independently, a loss that ends up above the
    value recorded ``trend_span`` iterations earlier is refused (see
    ``within_trend``) and the caller retreats with half the rate.
    """
    learning_rate: float
    rel_tol: float
    patience: int
    window: int
    max_halvings: int
    trend_span: int = 50
    best_average: Optional[float] = None
    since_improvement: int = 0
    halvings: int = 0
    retreats: int = 0
    history: List[float] = field(default_factory=list)

    @classmethod
    def from_config(cls, config: OptimizerConfig) -> "PlateauSchedule":
        return cls(
            learning_rate=config.learning_rate,
            rel_tol=config.rel_tol,
            patience=config.patience,
            window=config.window,
            max_halvings=config.max_halvings,
            trend_span=config.trend_span,
        )

    def trailing_average(self) -> float:
        return float(np.mean(self.history[-self.window:]))

    def within_trend(self, value: float) -> bool:
        """False when ``value`` exceeds the loss ``trend_span`` iterations back by more than rel_tol."""
        if len(self.history) < self.trend_span:
            return True
        reference = self.history[-self.trend_span]
        return value <= reference + self.rel_tol * abs(reference)

    def retreat(self) -> float:
        self.learning_rate *= 0.5
        self.retreats += 1
        return self.learning_rate

    def update(self, value: float) -> str:
        """Record one loss value; returns ``"continue"``, ``"halve"`` or ``"stop"``."""
        self.history.append(value)
        average = self.trailing_average()
        if self.best_average is None or average < self.best_average - self.rel_tol * abs(self.best_average):
            self.best_average = average
            self.since_improvement = 0
            self.halvings = 0
            return "continue"
        self.since_improvement += 1
        if self.since_improvement < self.patience:
            return "continue"
        if self.halvings >= self.max_halvings:
            return "stop"
        self.learning_rate *= 0.5
        self.halvings += 1
        self.since_improvement = 0
        return "halve"


# Training loop

def _renormalize(tensors: List[np.ndarray], adam: Optional[AdamState] = None) -> List[np.ndarray]:
    """Spread a rescaling over all tensors once the norm leaves [RENORM_LOW, RENORM_HIGH].

    The loss is scale invariant and its gradient scales as 1/factor, so the
    Adam moments are rescaled with it (m by 1/factor, v by 1/factor**2).
    """
    norm = mps_ops.norm(Mps(tuple(tensors)))
    if RENORM_LOW <= norm <= RENORM_HIGH or norm == 0.0 or not math.isfinite(norm):
        return tensors
    factor = norm ** (-1.0 / len(tensors))
    logger.debug(f"Rescaling state with norm {norm:.3e}")
    if adam is not None:
        adam.m = [m / factor for m in adam.m]
        adam.v = [v / (factor * factor) for v in adam.v]
    return [t * factor for t in tensors]


def _diagnostics(psi: Mps):
    n = psi.n_sites
    if n < 2:
        return None, [1.0], 0.0
    cut = n // 2
    spectrum = mps_ops.entanglement_spectrum(psi, cut)
    return cut, spectrum.values, mps_ops.entanglement_entropy(spectrum)


def solve_ground_state(
    model: OscillatorChain,
    spec: BasisSpec,
    chi: int,
    config: Optional[OptimizerConfig] = None,
    *,
    residual_interval: int = 0,
    log_interval: int = 100,
    checkpoint_dir: Optional[Path] = None,
    checkpoint_interval: int = 0,
    resume: Optional[Path] = None,
    initial: Optional[Mps] = None,
) -> Tuple[Mps, SolveReport]:
    """Minimize the Rayleigh quotient from a random MPS of bond dimension ``chi``.

    Every recorded loss is at most the loss ``trend_span`` iterations earlier
    (up to rel_tol). A step that would break this is discarded: the run goes
    back to the lowest-energy state seen so far, restarts the Adam moments and
    halves the learning rate.
    """
    config = config or OptimizerConfig()
    mpo = hamiltonian.hamiltonian_mpo(model, spec)
    schedule = PlateauSchedule.from_config(config)
    trajectory: List[float] = []
    residual_history = {}
    elapsed = 0.0
    best: Optional[Tuple[float, List[np.ndarray]]] = None
    # a resumed state was recorded before the checkpoint was written
    recorded = False

    if resume is not None:
        psi, moments, state = storage.load_checkpoint(resume)
        tensors = [np.array(t) for t in psi.tensors]
        adam = None
        if config.method == "adam":
            adam = AdamState.zeros_like(tensors, config)
            if moments is not None:
                adam.m, adam.v = moments
                adam.step = state.adam_step
        schedule.learning_rate = state.learning_rate
        schedule.best_average = state.best_average
        schedule.since_improvement = state.since_improvement
        schedule.halvings = state.halvings
        schedule.retreats = state.retreats
        schedule.history = list(state.energy_trajectory)
        trajectory = list(state.energy_trajectory)
        residual_history = dict(state.residual_history)
        elapsed = state.elapsed
        best_state = storage.load_best_state(resume)
        if best_state is not None and state.best_energy is not None:
            best = (state.best_energy, [np.array(t) for t in best_state.tensors])
        recorded = bool(trajectory)
        logger.info(f"Resuming solve at iteration {state.iteration}")
    else:
        psi = initial if initial is not None else mps_ops.random_mps(model.n_sites, spec.order, chi, config.seed)
        tensors = [np.array(t) for t in psi.tensors]
        tensors = [t * mps_ops.norm(psi) ** (-1.0 / len(tensors)) for t in tensors]
        adam = AdamState.zeros_like(tensors, config) if config.method == "adam" else None

    if psi.n_sites != model.n_sites or psi.phys_dim != spec.order:
        raise MpsShapeError(f"initial state does not match N={model.n_sites}, D={spec.order}")

    logger.info(
        f"Starting {config.method} solve: N={model.n_sites}, D={spec.order}, chi={chi}, "
        f"gamma={model.gamma}, gamma3={model.gamma3}"
    )
    start = time.perf_counter()
    converged = False
    while len(trajectory) < config.max_iters:
        state_now = Mps(tuple(tensors))
        value, grads = loss_and_gradient(state_now, mpo)
        iteration = len(trajectory) + 1
        if not math.isfinite(value) or not all(np.all(np.isfinite(g)) for g in grads):
            raise DivergenceError(
                f"loss became non-finite at iteration {iteration} (learning rate {schedule.learning_rate:.3e})"
            )
        if recorded:
            recorded = False
        else:
            if best is not None and not schedule.within_trend(value):
                # the best state always passes: its loss is at most every recorded loss
                tensors = [t.copy() for t in best[1]]
                adam = AdamState.zeros_like(tensors, config) if adam is not None else None
                schedule.retreat()
                logger.info(
                    f"Loss rose above its value {schedule.trend_span} iterations back at iteration {iteration}; "
                    f"back to E={best[0]:.12f}, learning rate -> {schedule.learning_rate:.3e}"
                )
                continue
            trajectory.append(value)
            if best is None or value < best[0]:
                best = (value, tensors)
            if residual_interval and iteration % residual_interval == 0:
                residual_history[iteration] = hamiltonian.mpo_residual(state_now, mpo)
            if iteration % log_interval == 0:
                logger.debug(f"iter {iteration}: L={value:.12f} lr={schedule.learning_rate:.3e}")

            action = schedule.update(value)
            if action == "halve":
                logger.info(f"Loss plateau at iteration {iteration}; learning rate -> {schedule.learning_rate:.3e}")
            elif action == "stop":
                converged = True
                logger.info(f"Converged after {iteration} iterations")
                break
            if iteration >= config.max_iters:
                break

            if checkpoint_dir is not None and checkpoint_interval and iteration % checkpoint_interval == 0:
                state = CheckpointState(
                    iteration=iteration,
                    adam_step=adam.step if adam else 0,
                    learning_rate=schedule.learning_rate,
                    best_average=schedule.best_average,
                    since_improvement=schedule.since_improvement,
                    halvings=schedule.halvings,
                    retreats=schedule.retreats,
                    best_energy=best[0],
                    energy_trajectory=trajectory,
                    residual_history=residual_history,
                    elapsed=elapsed + time.perf_counter() - start,
                )
                storage.save_checkpoint(checkpoint_dir, state_now, state,
                                        (adam.m, adam.v) if adam else None, Mps(tuple(best[1])))

        if adam is not None:
            tensors, adam = adam_step(adam, tensors, grads, schedule.learning_rate)
        else:
            tensors = sgd_step(tensors, grads, schedule.learning_rate)
        tensors = _renormalize(tensors, adam)

    psi = Mps(tuple(tensors))
    if not converged:
        logger.info(f"Stopped at the iteration cap ({config.max_iters})")
    if schedule.retreats:
        logger.info(f"Learning rate halved {schedule.retreats} times after a rising loss")
    wall_time = elapsed + time.perf_counter() - start

    h_psi = hamiltonian.apply_hamiltonian(psi, model, spec)
    residual = hamiltonian.residual_of_image(psi, h_psi)
    residual_history.setdefault(len(trajectory), residual)
    cut, spectrum, entropy = _diagnostics(psi)
    exact = hamiltonian.exact_reference(model)
    if exact is None:
        logger.warning(f"No closed-form reference for gamma={model.gamma}, gamma3={model.gamma3}")
    final = trajectory[-1]
    report = SolveReport(
        n_sites=model.n_sites,
        order=spec.order,
        chi=chi,
        gamma=model.gamma,
        gamma3=model.gamma3,
        energy_trajectory=trajectory,
        final_energy=final,
        exact_energy=exact,
        error=abs(final - exact) if exact is not None else None,
        entropy=entropy,
        spectrum=spectrum,
        cut=cut,
        residual=residual,
        residual_history=residual_history,
        iterations=len(trajectory),
        wall_time=wall_time,
        chi_h=h_psi.max_bond,
        converged=converged,
        final_learning_rate=schedule.learning_rate,
    )
    logger.info(
        f"Solve finished: E={final:.12f}, residual={residual:.3e}, S={entropy:.6f}, "
        f"iterations={report.iterations}, {wall_time:.1f}s"
    )
    return psi, report
