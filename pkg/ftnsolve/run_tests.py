#!/usr/bin/env python3
"""
Run the long reproduction scenarios (chain ground states, expansion-order
and bond-dimension convergence, residual-based detection of unphysical couplings)
"""
import argparse
import logging
import sys
import time

from ftnsolve.models import BasisSpec, OptimizerConfig, OscillatorChain
from ftnsolve.services.oracle import dense_ground_state, dense_hamiltonian
from ftnsolve.services.optimizer import solve_ground_state

# Configure logging
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
    handlers=[
        logging.FileHandler("test_run.log"),
        logging.StreamHandler(sys.stdout)
    ]
)
logger = logging.getLogger(__name__)


def _solve(n_sites, order, chi, gamma, gamma3=0.0, seed=0):
    model = OscillatorChain(n_sites=n_sites, gamma=gamma, gamma3=gamma3)
    return solve_ground_state(model, BasisSpec(order=order), chi, OptimizerConfig(seed=seed))[1]


def small_chain():
    """N=3, D=6, chi=6, gamma=-0.4 against exact diagonalization."""
    model = OscillatorChain(n_sites=3, gamma=-0.4)
    spec = BasisSpec(order=6)
    e0, _ = dense_ground_state(dense_hamiltonian(model, spec))
    report = _solve(3, 6, 6, -0.4)
    logger.info(f"E_mps={report.final_energy:.12f} E0={e0:.12f}")
    return abs(report.final_energy - e0) < 1e-6 and report.final_energy >= e0 - 1e-9


def bond_dimension():
    """N=16, D=8, chi=16, gamma=-0.5: energy error and middle-cut entropy."""
    report = _solve(16, 8, 16, -0.5)
    logger.info(f"eps={report.error:.3e} S={report.entropy:.4f} chi_H={report.chi_h}")
    return report.error <= 1e-4 and abs(report.entropy - 0.36) <= 0.05


def expansion_order():
    """N=8, gamma=-0.5, chi=16: error versus D in {4, 8, 12, 16}."""
    errors = []
    for order in (4, 8, 12, 16):
        report = _solve(8, order, 16, -0.5)
        logger.info(f"D={order}: eps={report.error:.3e}")
        errors.append(report.error)
    non_increasing = all(b <= a * 1.01 for a, b in zip(errors, errors[1:]))
    return non_increasing and errors[2] < 10 * errors[3] + 1e-12


def coupling_detection():
    """N=16, D=16, chi=16: residual below and above gamma_c."""
    below = _solve(16, 16, 16, 0.4)
    above = _solve(16, 16, 16, 0.6)
    logger.info(f"residual(0.4)={below.residual:.3e} residual(0.6)={above.residual:.3e}")
    return below.residual < 1e-2 and above.residual > 1.0


def three_body():
    """N=16, D=8, chi=16, gamma=-0.2: residual over the three-body coupling grid."""
    residuals = {}
    for gamma3 in (0.05, 0.10, 0.15, 0.20, 0.25):
        residuals[gamma3] = _solve(16, 8, 16, -0.2, gamma3).residual
        logger.info(f"gamma3={gamma3}: residual={residuals[gamma3]:.3e}")
    strict = all(residuals[g] < 1e-1 for g in (0.05, 0.10, 0.15)) and all(residuals[g] > 1 for g in (0.20, 0.25))
    relaxed = residuals[0.25] >= 100 * residuals[0.10]
    return strict or relaxed


SCENARIOS = {
    "small": small_chain,
    "chi": bond_dimension,
    "order": expansion_order,
    "gamma": coupling_detection,
    "gamma3": three_body,
}


def main():
    parser = argparse.ArgumentParser(description='Run reproduction scenarios for ftnsolve')
    parser.add_argument('--scenario', choices=sorted(SCENARIOS), action='append',
                        help='Scenario to run (repeatable, default: all)')
    parser.add_argument('--verbose', '-v', action='store_true',
                        help='Show more detailed log output')

    args = parser.parse_args()

    # Set logging level based on verbose flag
    if args.verbose:
        logging.getLogger().setLevel(logging.DEBUG)
        print("Verbose logging enabled")

    failures = []
    for name in args.scenario or list(SCENARIOS):
        start = time.perf_counter()
        print(f"\nRunning scenario: {name}")
        try:
            passed = SCENARIOS[name]()
        except Exception as e:
            logger.error(f"Scenario {name} raised: {e}", exc_info=True)
            passed = False
        logger.info(f"Scenario {name}: {'PASS' if passed else 'FAIL'} ({time.perf_counter() - start:.1f}s)")
        if not passed:
            failures.append(name)

    if failures:
        print(f"\nFailed scenarios: {', '.join(failures)}")
        return 1
    print("\nAll scenarios passed")
    return 0


if __name__ == "__main__":
    sys.exit(main())
