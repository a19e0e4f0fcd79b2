import math
from datetime import datetime
from typing import Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

# Basis / model parameters

class BasisSpec(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    order: int = Field(8, ge=2, description="Expansion order D per variable")
    quadrature_nodes: Optional[int] = Field(None, description="Gauss-Hermite node count K")

    @model_validator(mode="after")
    def _check_nodes(self):
        if self.quadrature_nodes is None:
            object.__setattr__(self, "quadrature_nodes", 2 * self.order + 8)
        elif self.quadrature_nodes < 2 * self.order + 8:
            raise ValueError(
                f"quadrature_nodes={self.quadrature_nodes} is below 2*order+8={2 * self.order + 8}"
            )
        return self


class OscillatorChain(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    n_sites: int = Field(16, ge=1)
    omega: Optional[List[float]] = None
    gamma: float = -0.5
    gamma3: float = 0.0

    @model_validator(mode="after")
    def _check_chain(self):
        if self.omega is None:
            object.__setattr__(self, "omega", [1.0] * self.n_sites)
        if len(self.omega) != self.n_sites:
            raise ValueError(f"omega has {len(self.omega)} entries for {self.n_sites} oscillators")
        values = list(self.omega) + [self.gamma, self.gamma3]
        if not all(math.isfinite(v) for v in values):
            raise ValueError("model parameters must be finite")
        if self.gamma != 0.0 and self.n_sites < 2:
            raise ValueError("two-body coupling needs at least 2 oscillators")
        if self.gamma3 != 0.0 and self.n_sites < 3:
            raise ValueError("three-body coupling needs at least 3 oscillators")
        return self

    @property
    def unit_frequencies(self) -> bool:
        return all(w == 1.0 for w in self.omega)

    def with_updates(self, **changes) -> "OscillatorChain":
        """Re-validated copy; omega is reset to all-ones when N changes without new frequencies."""
        data = self.model_dump()
        if "n_sites" in changes and "omega" not in changes and changes["n_sites"] != self.n_sites:
            data["omega"] = None
        data.update(changes)
        return OscillatorChain.model_validate(data)


# Optimizer

class OptimizerConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    method: Literal["adam", "sgd"] = "adam"
    learning_rate: float = Field(1e-2, gt=0)
    beta1: float = Field(0.9, ge=0, lt=1)
    beta2: float = Field(0.999, ge=0, lt=1)
    epsilon: float = Field(1e-8, gt=0)
    max_iters: int = Field(50_000, ge=1)
    rel_tol: float = Field(1e-8, gt=0)
    patience: int = Field(200, ge=1)
    window: int = Field(20, ge=1)
    trend_span: int = Field(50, ge=1)
    max_halvings: int = Field(4, ge=1)
    seed: int = 0


class EntanglementSpectrum(BaseModel):
    cut: int = Field(..., ge=1)
    values: List[float]

    @field_validator("values")
    @classmethod
    def _check_values(cls, values: List[float]) -> List[float]:
        if not values:
            raise ValueError("an entanglement spectrum needs at least one value")
        if any(v < 0 for v in values):
            raise ValueError("Schmidt numbers are non-negative")
        if any(a < b for a, b in zip(values, values[1:])):
            raise ValueError("Schmidt numbers must be sorted in descending order")
        total = sum(v * v for v in values)
        if abs(total - 1.0) > 1e-10:
            raise ValueError(f"Schmidt numbers are not normalized (sum of squares = {total!r})")
        return values


class SolveReport(BaseModel):
    n_sites: int
    order: int
    chi: int
    gamma: float
    gamma3: float
    energy_trajectory: List[float]
    final_energy: float
    exact_energy: Optional[float] = None
    error: Optional[float] = None
    entropy: float
    spectrum: List[float]
    cut: Optional[int] = None
    residual: float
    residual_history: Dict[int, float] = Field(default_factory=dict)
    iterations: int
    wall_time: float
    chi_h: int
    converged: bool
    final_learning_rate: float
    created_at: datetime = Field(default_factory=datetime.now)

    @model_validator(mode="after")
    def _check_trajectory(self):
        if not self.energy_trajectory:
            raise ValueError("energy_trajectory must not be empty")
        if self.final_energy != self.energy_trajectory[-1]:
            raise ValueError("final_energy must equal the last trajectory entry")
        return self


class CheckpointState(BaseModel):
    """Scalar solver state stored next to the tensors of a checkpoint."""
    iteration: int = Field(..., ge=0)
    adam_step: int = Field(0, ge=0)
    learning_rate: float
    best_average: Optional[float] = None
    since_improvement: int = 0
    halvings: int = 0
    retreats: int = 0
    best_energy: Optional[float] = None
    energy_trajectory: List[float] = Field(default_factory=list)
    residual_history: Dict[int, float] = Field(default_factory=dict)
    elapsed: float = 0.0


# Run configuration (CLI)

def _as_list(value):
    """A single override value (``--scan.values=1``) stands for a one-element list."""
    if isinstance(value, (list, tuple)):
        return value
    return [value]


class AnsatzSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    chi: int = Field(16, ge=1)


class OutputSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    directory: str = "results"
    formats: List[Literal["json", "csv"]] = Field(default_factory=lambda: ["json", "csv"])
    checkpoint_interval: int = Field(0, ge=0)
    residual_interval: int = Field(100, ge=0)
    log_interval: int = Field(100, ge=1)

    @field_validator("formats", mode="before")
    @classmethod
    def _wrap_format(cls, value):
        return _as_list(value)


class ScanSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    parameter: Optional[Literal["D", "chi", "gamma", "gamma3"]] = None
    values: List[float] = Field(default_factory=list)
    n_sites: List[int] = Field(default_factory=list)
    workers: int = Field(1, ge=1)

    @field_validator("values", "n_sites", mode="before")
    @classmethod
    def _wrap_single_value(cls, value):
        return _as_list(value)


class OracleSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    max_dim: int = Field(4096, ge=1)
    full_tensor: bool = True
    compare_mps: bool = False


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    model: OscillatorChain = Field(default_factory=OscillatorChain)
    basis: BasisSpec = Field(default_factory=BasisSpec)
    ansatz: AnsatzSection = Field(default_factory=AnsatzSection)
    optimizer: OptimizerConfig = Field(default_factory=OptimizerConfig)
    output: OutputSection = Field(default_factory=OutputSection)
    scan: ScanSection = Field(default_factory=ScanSection)
    oracle: OracleSection = Field(default_factory=OracleSection)
