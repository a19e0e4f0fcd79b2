import asyncio
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from typing import Any, Dict, List, Optional

from ..models import BasisSpec, RunConfig
from ..services.config import worker_slots
from ..services.errors import ConfigError, FtnSolveError
from ..services.optimizer import solve_ground_state
from ..services.storage import SCAN_COLUMNS, ResultStore, scan_frame

logger = logging.getLogger(__name__)


def _scan_basis(basis: BasisSpec, order: int) -> BasisSpec:
    """Basis for a scanned order; an explicit node count survives while it still covers 2D+8."""
    nodes = basis.quadrature_nodes if "quadrature_nodes" in basis.model_fields_set else None
    if nodes is not None and nodes < 2 * order + 8:
        logger.info(f"quadrature_nodes={nodes} is too few for D={order}; using {2 * order + 8}")
        nodes = None
    return BasisSpec(order=order, quadrature_nodes=nodes)


def row_config(config: RunConfig, parameter: str, value: float, n_sites: Optional[int] = None) -> RunConfig:
    """The sub-run configuration for one scan value."""
    model = config.model
    if n_sites is not None and n_sites != model.n_sites:
        model = model.with_updates(n_sites=n_sites)
    basis, ansatz = config.basis, config.ansatz
    if parameter == "D":
        basis = _scan_basis(basis, int(value))
    elif parameter == "chi":
        ansatz = ansatz.model_copy(update={"chi": int(value)})
    elif parameter in ("gamma", "gamma3"):
        model = model.with_updates(**{parameter: float(value)})
    else:
        raise ConfigError(f"unknown scan parameter {parameter!r}")
    return config.model_copy(update={"model": model, "basis": basis, "ansatz": ansatz})


def empty_row(value: float, status: str = "ok") -> Dict[str, Any]:
    row = {column: math.nan for column in SCAN_COLUMNS}
    row.update({"param": value, "status": status})
    return row


def scan_row(config: RunConfig, parameter: str, value: float, n_sites: Optional[int] = None) -> Dict[str, Any]:
    """Run one scan value; failures become a row with a status message."""
    row = empty_row(value)
    start = time.perf_counter()
    try:
        sub = row_config(config, parameter, value, n_sites)
        _, report = solve_ground_state(
            sub.model,
            sub.basis,
            sub.ansatz.chi,
            sub.optimizer,
            residual_interval=0,
            log_interval=sub.output.log_interval,
        )
    except (FtnSolveError, ValueError) as e:
        logger.warning(f"Scan row {parameter}={value} failed: {e}")
        row["status"] = f"failed: {e}".replace("\n", " ")
        row["seconds"] = time.perf_counter() - start
        return row
    row.update({
        "E": report.final_energy,
        "E_exact": report.exact_energy if report.exact_energy is not None else math.nan,
        "eps": report.error if report.error is not None else math.nan,
        "S": report.entropy,
        "residual": report.residual,
        "chiH": report.chi_h,
        "iters": report.iterations,
        "seconds": report.wall_time,
    })
    logger.info(f"Scan row {parameter}={value}: E={report.final_energy:.10f}, residual={report.residual:.3e}")
    return row


async def run_rows(config: RunConfig, n_sites: Optional[int] = None) -> List[Dict[str, Any]]:
    """All scan rows in input order, on up to ``worker_slots`` processes."""
    parameter = config.scan.parameter
    values = config.scan.values
    slots = worker_slots(config)
    if slots <= 1:
        return [scan_row(config, parameter, v, n_sites) for v in values]
    loop = asyncio.get_running_loop()
    with ProcessPoolExecutor(max_workers=slots) as executor:
        tasks = [loop.run_in_executor(executor, scan_row, config, parameter, v, n_sites) for v in values]
        results = await asyncio.gather(*tasks, return_exceptions=True)
    rows = []
    for value, result in zip(values, results):
        if isinstance(result, Exception):
            logger.error(f"Scan worker for {parameter}={value} raised: {result}")
            result = empty_row(value, status=f"failed: {result}")
        rows.append(result)
    return rows


def run(config: RunConfig) -> Dict[str, Any]:
    if config.scan.parameter is None:
        raise ConfigError("scan.parameter is not set (one of D, chi, gamma, gamma3)")
    if not config.scan.values:
        raise ConfigError("scan.values must not be empty")
    store = ResultStore(config.output.directory, config.output.formats)
    tables = {}
    chain_lengths = config.scan.n_sites or [None]
    for n_sites in chain_lengths:
        rows = asyncio.run(run_rows(config, n_sites))
        name = "scan.csv" if n_sites is None else f"scan_N{n_sites}.csv"
        store.save_frame(scan_frame(rows), name)
        tables[name] = rows
        failed = sum(1 for r in rows if r["status"] != "ok")
        print(f"{name}: {len(rows)} rows ({failed} failed)")
    return tables
