import math

import numpy as np
import pytest

from ftnsolve.models import BasisSpec, OptimizerConfig, OscillatorChain
from ftnsolve.services import oracle
from ftnsolve.services.basis import harmonic_matrix, identity_matrix, kinetic_matrix, matrix_power, x_matrix
from ftnsolve.services.errors import ContractShapeError, SizeGuardError, SymmetryError
from ftnsolve.services.hamiltonian import exact_ground_energy
from ftnsolve.services.optimizer import solve_ground_state


def test_single_oscillator_is_diagonal():
    problem = oracle.dense_hamiltonian(OscillatorChain(n_sites=1, gamma=0.0), BasisSpec(order=4))
    # the truncated X @ X lowers the last diagonal entry
    assert np.allclose(problem.h, np.diag([0.5, 1.5, 2.5, 1.5]), atol=1e-12)
    assert problem.dim == 4


def test_uncoupled_spectrum_is_pairwise_sums():
    problem = oracle.dense_hamiltonian(OscillatorChain(n_sites=2, gamma=0.0), BasisSpec(order=3))
    single = np.linalg.eigvalsh(harmonic_matrix(3))
    expected = np.sort([a + b for a in single for b in single])
    assert np.allclose(np.linalg.eigvalsh(problem.h), expected, atol=1e-12)


def test_two_site_coupling_is_explicit_kron():
    problem = oracle.dense_hamiltonian(OscillatorChain(n_sites=2, gamma=1.0), BasisSpec(order=2))
    x = x_matrix(2)
    h1 = harmonic_matrix(2)
    eye = identity_matrix(2)
    expected = np.kron(h1, eye) + np.kron(eye, h1) + np.kron(x, x)
    assert np.allclose(problem.h, expected, atol=1e-14)
    assert np.allclose(problem.h, np.eye(4) + np.kron(x, x), atol=1e-14)


def test_three_body_term_included():
    model = OscillatorChain(n_sites=3, gamma=0.0, gamma3=0.2)
    problem = oracle.dense_hamiltonian(model, BasisSpec(order=2))
    base = oracle.dense_hamiltonian(OscillatorChain(n_sites=3, gamma=0.0), BasisSpec(order=2))
    x = x_matrix(2)
    assert np.allclose(problem.h - base.h, 0.2 * np.kron(np.kron(x, x), x), atol=1e-14)


def test_embed_places_local_operators():
    x = x_matrix(3)
    assert np.allclose(oracle.embed({0: x}, 2, 3), np.kron(x, np.eye(3)))
    assert np.allclose(oracle.embed({1: x}, 3, 3), np.kron(np.kron(np.eye(3), x), np.eye(3)))


def test_dense_ground_state_residual_and_sign():
    problem = oracle.dense_hamiltonian(OscillatorChain(n_sites=3, gamma=-0.4, gamma3=0.1), BasisSpec(order=4))
    e0, v = oracle.dense_ground_state(problem)
    assert abs(np.linalg.norm(v) - 1.0) < 1e-12
    assert np.max(np.abs(problem.h @ v - e0 * v)) < 1e-10
    assert v[np.argmax(np.abs(v))] > 0
    assert abs(e0 - np.linalg.eigvalsh(problem.h)[0]) < 1e-10


def test_size_guard():
    assert oracle.check_dense_size(2, 8) == 64
    with pytest.raises(SizeGuardError):
        oracle.check_dense_size(8, 4)
    with pytest.raises(SizeGuardError):
        oracle.dense_hamiltonian(OscillatorChain(n_sites=3, gamma=0.1), BasisSpec(order=4), max_dim=32)


def test_dense_problem_validation():
    with pytest.raises(ContractShapeError):
        oracle.DenseProblem(h=np.eye(3), n_sites=2, order=2)
    with pytest.raises(SymmetryError):
        oracle.DenseProblem(h=np.triu(np.ones((4, 4))), n_sites=2, order=2)


def test_minimize_quotient_finds_smallest_eigenvalue():
    config = OptimizerConfig()
    value, c, iterations = oracle.minimize_quotient(np.diag([3.0, 1.0, 2.0]), config)
    assert abs(value - 1.0) < 1e-8
    assert abs(abs(c[1]) - 1.0) < 1e-4
    assert 1 <= iterations <= config.max_iters


def test_full_tensor_solve_decoupled_pair():
    value, coefficients = oracle.full_tensor_solve(OscillatorChain(n_sites=2, gamma=0.0), BasisSpec(order=4))
    assert coefficients.shape == (4, 4)
    assert abs(np.linalg.norm(coefficients) - 1.0) < 1e-12
    assert abs(value - 1.0) < 1e-6


def test_full_tensor_solve_matches_diagonalization():
    model = OscillatorChain(n_sites=3, gamma=-0.4)
    spec = BasisSpec(order=4)
    e0, _ = oracle.dense_ground_state(oracle.dense_hamiltonian(model, spec))
    value, coefficients = oracle.full_tensor_solve(model, spec, OptimizerConfig())
    assert coefficients.shape == (4, 4, 4)
    assert value >= e0 - 1e-12
    assert value - e0 < 1e-6


def test_full_tensor_solve_agrees_with_mps():
    model = OscillatorChain(n_sites=4, gamma=-0.5)
    spec = BasisSpec(order=4)
    value, _ = oracle.full_tensor_solve(model, spec)
    _, report = solve_ground_state(model, spec, 16, OptimizerConfig())
    assert abs(value - report.final_energy) < 1e-5


def test_single_variable_rayleigh():
    d = 6
    spec = BasisSpec(order=d)
    terms = [kinetic_matrix(d), 0.5 * matrix_power(x_matrix(d), 2)]
    value, c = oracle.single_variable_solve(terms, spec, OptimizerConfig())
    assert abs(value - 0.5) < 1e-8
    assert abs(abs(c[0]) - 1.0) < 1e-4


def test_single_variable_residual_mode():
    d = 6
    spec = BasisSpec(order=d)
    terms = [kinetic_matrix(d), 0.5 * matrix_power(x_matrix(d), 2)]
    solvable, _ = oracle.single_variable_solve(terms + [-0.5 * np.eye(d)], spec, mode="residual")
    assert solvable < 1e-8
    value, _ = oracle.single_variable_solve(terms + [-0.4 * np.eye(d)], spec, mode="residual")
    best = min((lam - 0.4) ** 2 for lam in np.linalg.eigvalsh(harmonic_matrix(d)))
    assert abs(best - 0.01) < 1e-12
    assert abs(value - best) < 1e-8


def test_single_variable_errors():
    spec = BasisSpec(order=3)
    with pytest.raises(ValueError):
        oracle.single_variable_solve([], spec)
    with pytest.raises(ContractShapeError):
        oracle.single_variable_solve([np.eye(4)], spec)
    with pytest.raises(ValueError):
        oracle.single_variable_solve([np.eye(3)], spec, mode="newton")


def test_energy_converges_with_expansion_order():
    model = OscillatorChain(n_sites=2, gamma=-0.3)
    exact = exact_ground_energy(2, -0.3)
    errors = [abs(oracle.dense_ground_state(oracle.dense_hamiltonian(model, BasisSpec(order=d)))[0] - exact)
              for d in (4, 8, 16)]
    assert errors[0] > errors[1] > errors[2]
    assert errors[2] < 1e-8
    assert math.isfinite(exact)
