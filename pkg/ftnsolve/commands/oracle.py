import json
import logging
from typing import Any, Dict

from ..models import RunConfig
from ..services.optimizer import solve_ground_state
from ..services.oracle import check_dense_size, dense_ground_state, dense_hamiltonian, full_tensor_solve
from ..services.storage import ResultStore

logger = logging.getLogger(__name__)


def run(config: RunConfig) -> Dict[str, Any]:
    """Dense references: exact diagonalization, optionally full-tensor descent and the MPS gap."""
    max_dim = config.oracle.max_dim
    check_dense_size(config.model.n_sites, config.basis.order, max_dim)
    problem = dense_hamiltonian(config.model, config.basis, max_dim)
    e0, _ = dense_ground_state(problem)
    result: Dict[str, Any] = {"E0": e0}
    if config.oracle.full_tensor:
        result["E_fulltensor"], _ = full_tensor_solve(config.model, config.basis, config.optimizer, max_dim)
    if config.oracle.compare_mps:
        _, report = solve_ground_state(config.model, config.basis, config.ansatz.chi, config.optimizer,
                                       log_interval=config.output.log_interval)
        result["E_mps"] = report.final_energy
        result["gap_to_mps"] = report.final_energy - e0
    logger.info(f"Oracle results: {result}")
    if "json" in config.output.formats:
        ResultStore(config.output.directory, config.output.formats).save_json(result, "oracle.json")
    print(json.dumps(result, indent=2))
    return result
