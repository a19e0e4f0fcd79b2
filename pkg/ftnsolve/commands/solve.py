import logging

from ..models import RunConfig, SolveReport
from ..services.optimizer import solve_ground_state
from ..services.storage import ResultStore

logger = logging.getLogger(__name__)


def run(config: RunConfig, resume=None) -> SolveReport:
    """Ground-state solve; writes report JSON, trajectory/spectrum CSV and the final state."""
    store = ResultStore(config.output.directory, config.output.formats)
    checkpoint_dir = store.path("checkpoint") if config.output.checkpoint_interval else None
    psi, report = solve_ground_state(
        config.model,
        config.basis,
        config.ansatz.chi,
        config.optimizer,
        residual_interval=config.output.residual_interval,
        log_interval=config.output.log_interval,
        checkpoint_dir=checkpoint_dir,
        checkpoint_interval=config.output.checkpoint_interval,
        resume=resume,
    )
    store.save_report(report)
    store.save_mps(psi)

    print(f"E = {report.final_energy:.12f}")
    if report.exact_energy is not None:
        print(f"E_exact = {report.exact_energy:.12f}  eps = {report.error:.3e}")
    print(f"S = {report.entropy:.6f}  residual = {report.residual:.3e}  chi_H = {report.chi_h}")
    print(f"iterations = {report.iterations}  converged = {report.converged}  time = {report.wall_time:.1f}s")
    return report
