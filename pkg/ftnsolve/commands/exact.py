import logging
import math
from typing import Any, Dict, Optional

from ..models import RunConfig
from ..services.basis import d_matrix, kinetic_matrix, x_matrix
from ..services.errors import NoRealSolutionError
from ..services.hamiltonian import critical_coupling, exact_ground_energy
from ..services.storage import ResultStore, matrix_frame

logger = logging.getLogger(__name__)


def dump_operators(directory, order: int):
    store = ResultStore(directory, ["csv"])
    for name, matrix in (("d_matrix", d_matrix(order)), ("x_matrix", x_matrix(order)),
                         ("kinetic_matrix", kinetic_matrix(order))):
        store.save_frame(matrix_frame(matrix), f"{name}.csv")


def run(config: RunConfig, dump_dir: Optional[str] = None) -> Dict[str, Any]:
    """Closed-form ground energy and critical coupling for the configured chain."""
    n, gamma = config.model.n_sites, config.model.gamma
    gamma_c = critical_coupling(n)
    result: Dict[str, Any] = {"n_sites": n, "gamma": gamma, "gamma_c": gamma_c}
    try:
        result["E_exact"] = exact_ground_energy(n, gamma)
        print(f"E_exact = {result['E_exact']:.12f}")
    except NoRealSolutionError:
        result["E_exact"] = None
        logger.warning(f"No real ground energy for N={n}, gamma={gamma}")
        print("E_exact = no real solution")
    print("gamma_c = inf" if math.isinf(gamma_c) else f"gamma_c = {gamma_c:.12f}")
    if not config.model.unit_frequencies or config.model.gamma3 != 0.0:
        print("note: the closed form assumes unit frequencies and gamma3 = 0")
    if dump_dir:
        dump_operators(dump_dir, config.basis.order)
    return result
