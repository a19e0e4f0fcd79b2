import json
import logging
import os
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from ..models import CheckpointState, SolveReport
from .errors import CheckpointFormatError, MpsShapeError
from .mps import Mps

logger = logging.getLogger(__name__)

MAGIC = b"FTNMPS"
FORMAT_VERSION = 1
FLOAT_FORMAT = "%.17g"

TRAJECTORY_COLUMNS = ["iter", "energy", "loss_residual"]
SPECTRUM_COLUMNS = ["k", "lambda"]
SCAN_COLUMNS = ["param", "E", "E_exact", "eps", "S", "residual", "chiH", "iters", "seconds", "status"]


# MPS container

def encode_mps(psi: Mps) -> bytes:
    header = np.array([FORMAT_VERSION, psi.n_sites, psi.phys_dim] + psi.bond_dims, dtype="<u4")
    body = b"".join(np.ascontiguousarray(t, dtype="<f8").tobytes() for t in psi.tensors)
    return MAGIC + header.tobytes() + body


def decode_mps(blob: bytes) -> Mps:
    if not blob.startswith(MAGIC):
        raise CheckpointFormatError("not an MPS container (bad magic)")
    offset = len(MAGIC)
    if len(blob) < offset + 12:
        raise CheckpointFormatError("truncated header")
    version, n_sites, phys_dim = (int(v) for v in np.frombuffer(blob, dtype="<u4", count=3, offset=offset))
    if version != FORMAT_VERSION:
        raise CheckpointFormatError(f"unsupported container version {version}")
    offset += 12
    if n_sites < 1 or phys_dim < 1 or len(blob) < offset + 4 * (n_sites + 1):
        raise CheckpointFormatError("truncated bond table")
    bonds = [int(b) for b in np.frombuffer(blob, dtype="<u4", count=n_sites + 1, offset=offset)]
    offset += 4 * (n_sites + 1)
    sizes = [bonds[n] * phys_dim * bonds[n + 1] for n in range(n_sites)]
    if len(blob) != offset + 8 * sum(sizes):
        raise CheckpointFormatError(f"expected {offset + 8 * sum(sizes)} bytes, found {len(blob)}")
    tensors = []
    for n, size in enumerate(sizes):
        values = np.frombuffer(blob, dtype="<f8", count=size, offset=offset)
        tensors.append(values.astype(np.float64).reshape(bonds[n], phys_dim, bonds[n + 1]))
        offset += 8 * size
    try:
        return Mps(tuple(tensors))
    except MpsShapeError as e:
        raise CheckpointFormatError(f"invalid MPS in container: {e}") from e


def write_mps(path, psi: Mps):
    Path(path).write_bytes(encode_mps(psi))


def read_mps(path) -> Mps:
    return decode_mps(Path(path).read_bytes())


def mps_to_json(psi: Mps) -> Dict[str, Any]:
    return {
        "n_sites": psi.n_sites,
        "phys_dim": psi.phys_dim,
        "bond_dims": psi.bond_dims,
        "tensors": [t.tolist() for t in psi.tensors],
    }


def mps_from_json(data: Dict[str, Any]) -> Mps:
    try:
        psi = Mps(tuple(np.asarray(t, dtype=np.float64) for t in data["tensors"]))
    except (KeyError, TypeError, ValueError) as e:
        raise CheckpointFormatError(f"invalid MPS document: {e}") from e
    if psi.bond_dims != list(data.get("bond_dims", psi.bond_dims)):
        raise CheckpointFormatError("bond_dims do not match the tensors")
    return psi


# Solver checkpoints

def save_checkpoint(directory, psi: Mps, state: CheckpointState,
                    moments: Optional[Tuple[Sequence[np.ndarray], Sequence[np.ndarray]]] = None,
                    best: Optional[Mps] = None):
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    write_mps(directory / "psi.ftn", psi)
    if moments is not None:
        write_mps(directory / "adam_m.ftn", Mps(tuple(moments[0])))
        write_mps(directory / "adam_v.ftn", Mps(tuple(moments[1])))
    if best is not None:
        write_mps(directory / "best.ftn", best)
    (directory / "state.json").write_text(state.model_dump_json(indent=2))
    logger.info(f"Checkpoint written to {directory} at iteration {state.iteration}")


def load_best_state(directory) -> Optional[Mps]:
    """Lowest-energy state recorded before the checkpoint, if one was stored."""
    path = Path(directory) / "best.ftn"
    return read_mps(path) if path.exists() else None


def load_checkpoint(directory):
    """Return ``(psi, moments or None, state)`` from a checkpoint directory."""
    directory = Path(directory)
    state_file = directory / "state.json"
    if not state_file.exists():
        raise CheckpointFormatError(f"no state.json in {directory}")
    try:
        state = CheckpointState.model_validate_json(state_file.read_text())
    except ValueError as e:
        raise CheckpointFormatError(f"invalid checkpoint state: {e}") from e
    psi = read_mps(directory / "psi.ftn")
    moments = None
    if (directory / "adam_m.ftn").exists() and (directory / "adam_v.ftn").exists():
        m = read_mps(directory / "adam_m.ftn")
        v = read_mps(directory / "adam_v.ftn")
        moments = ([np.array(t) for t in m.tensors], [np.array(t) for t in v.tensors])
    logger.info(f"Loaded checkpoint from {directory} (iteration {state.iteration})")
    return psi, moments, state


# Result files

def write_csv(frame: pd.DataFrame, path):
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, na_rep="nan", lineterminator="\n")


def trajectory_frame(report: SolveReport) -> pd.DataFrame:
    iters = np.arange(1, len(report.energy_trajectory) + 1)
    residual = [report.residual_history.get(int(i), np.nan) for i in iters]
    return pd.DataFrame({"iter": iters, "energy": report.energy_trajectory, "loss_residual": residual},
                        columns=TRAJECTORY_COLUMNS)


def spectrum_frame(report: SolveReport) -> pd.DataFrame:
    return pd.DataFrame({"k": np.arange(1, len(report.spectrum) + 1), "lambda": report.spectrum},
                        columns=SPECTRUM_COLUMNS)


def scan_frame(rows: List[Dict[str, Any]]) -> pd.DataFrame:
    return pd.DataFrame(rows, columns=SCAN_COLUMNS)


def matrix_frame(matrix: np.ndarray) -> pd.DataFrame:
    return pd.DataFrame(np.asarray(matrix), columns=[f"s{j}" for j in range(matrix.shape[1])])


class ResultStore:
    """Writes command results below one output directory."""

    def __init__(self, directory, formats: Sequence[str] = ("json", "csv")):
        self.directory = Path(directory)
        self.formats = set(formats)
        os.makedirs(self.directory, exist_ok=True)
        logger.info(f"Result store initialized at {self.directory}")

    def path(self, name: str) -> Path:
        return self.directory / name

    def save_report(self, report: SolveReport, stem: str = "report") -> List[Path]:
        written = []
        if "json" in self.formats:
            written.append(self.save_json(report.model_dump(mode="json"), f"{stem}.json"))
        if "csv" in self.formats:
            written.append(self.save_frame(trajectory_frame(report), f"{stem}_trajectory.csv"))
            written.append(self.save_frame(spectrum_frame(report), f"{stem}_spectrum.csv"))
        return written

    def save_frame(self, frame: pd.DataFrame, name: str) -> Path:
        path = self.path(name)
        write_csv(frame, path)
        logger.info(f"Saved {len(frame)} rows to {path}")
        return path

    def save_json(self, data: Dict[str, Any], name: str) -> Path:
        path = self.path(name)
        path.write_text(json.dumps(data, indent=2, allow_nan=True))
        logger.info(f"Saved {path}")
        return path

    def save_mps(self, psi: Mps, name: str = "psi.ftn") -> Path:
        path = self.path(name)
        write_mps(path, psi)
        return path


def load_report(path) -> SolveReport:
    return SolveReport.model_validate_json(Path(path).read_text())
