import logging
import math
from datetime import datetime
from enum import Enum
from typing import List, Literal, Optional

from pydantic import BaseModel, Field, computed_field, model_validator

from config import Config
from models.excitation import ExcitationProtocol, Modulation, SwitchOff
from models.report import ModeReport, TwoModeFit
from models.system import SystemSpec

# pi / (20 omega_R) with omega_R = 2
MAX_SAMPLE_INTERVAL = math.pi / 40.0
POST_PULSE_MARGIN = 100.0


class SolverMethod(str, Enum):
    GRID = "grid"
    BASIS = "basis"


class Representation(str, Enum):
    SEPARATED = "separated"
    PAIR = "pair"


class SolverSettings(BaseModel):
    method: SolverMethod = SolverMethod.GRID
    representation: Representation = Representation.SEPARATED
    grid_points: int = Field(default_factory=lambda: Config.GRID_POINTS, ge=3)
    time_step: Optional[float] = Field(None, gt=0.0)
    imaginary_time_step: float = Field(default_factory=lambda: Config.IMAGINARY_TIME_STEP, gt=0.0)
    imaginary_time_tolerance: float = Field(default_factory=lambda: Config.IMAGINARY_TIME_TOLERANCE, gt=0.0)
    basis_size: Optional[int] = Field(None, ge=2)

    @property
    def resolved_time_step(self) -> float:
        if self.time_step is not None:
            return self.time_step
        return Config.BASIS_TIME_STEP if self.method is SolverMethod.BASIS else Config.TIME_STEP

    @property
    def resolved_basis_size(self) -> int:
        if self.basis_size is not None:
            return self.basis_size
        return Config.PAIR_BASIS_SIZE if self.representation is Representation.PAIR else Config.BASIS_SIZE

    def refined(self) -> "SolverSettings":
        """Next resolution of the convergence protocol."""
        if self.method is SolverMethod.GRID:
            return self.model_copy(update={"grid_points": int(round(1.5 * self.grid_points)),
                                           "time_step": 0.5 * self.resolved_time_step})
        if self.representation is Representation.PAIR:
            factor = int(round(math.sqrt(self.resolved_basis_size))) + 2
            return self.model_copy(update={"basis_size": factor * factor})
        return self.model_copy(update={"basis_size": self.resolved_basis_size + 50})


class RunConfig(BaseModel):
    """Everything that determines a run; outputs embed it fully resolved."""

    system: SystemSpec = Field(default_factory=SystemSpec)
    solver: SolverSettings = Field(default_factory=SolverSettings)
    protocol: ExcitationProtocol = Field(default_factory=SwitchOff)
    duration: float = Field(200.0, gt=0.0)
    sample_interval: float = Field(default_factory=lambda: Config.SAMPLE_INTERVAL, gt=0.0)
    fit_start: Optional[float] = Field(None, ge=0.0)
    couplings: List[float] = Field(default_factory=list)
    drive_frequencies: List[float] = Field(default_factory=list)
    check_convergence: bool = False
    convergence_tolerance: float = Field(1e-3, gt=0.0)
    output_dir: str = Field(default_factory=lambda: Config.OUTPUT_DIR)
    workers: int = Field(default_factory=lambda: Config.WORKERS, ge=1)
    label: Optional[str] = None

    @model_validator(mode="after")
    def check_consistency(self):
        if self.system.dimension == 2 and self.solver.representation is Representation.PAIR:
            raise ValueError("Two-particle representations are only available in one dimension")
        if any(lam < 0.0 for lam in self.couplings):
            raise ValueError("Sweep couplings must be non-negative")
        if any(w <= 0.0 for w in self.drive_frequencies):
            raise ValueError("Drive frequencies must be positive")
        if self.sample_interval < self.solver.resolved_time_step:
            raise ValueError("Sample interval is shorter than the time step")
        if self.sample_interval > MAX_SAMPLE_INTERVAL:
            logging.warning(f"Sample interval {self.sample_interval} undersamples the breathing modes "
                            f"(limit {MAX_SAMPLE_INTERVAL:.4f})")
        if isinstance(self.protocol, Modulation) and self.duration < self.protocol.end_time + POST_PULSE_MARGIN:
            logging.warning(f"Run ends at {self.duration}, less than {POST_PULSE_MARGIN} after the pulse; "
                            f"E_inf may not have settled")
        return self

    @property
    def analysis_start(self) -> float:
        return self.fit_start if self.fit_start is not None else self.protocol.end_time

    def identity(self) -> dict:
        """Fields that determine the numbers; output location and worker count do not."""
        return self.model_dump(mode="json", exclude={"output_dir", "workers", "label", "couplings",
                                                     "drive_frequencies"})

    def for_point(self, coupling: Optional[float] = None, drive_frequency: Optional[float] = None) -> "RunConfig":
        update = {"couplings": [], "drive_frequencies": []}
        if coupling is not None:
            update["system"] = self.system.with_coupling(coupling)
        if drive_frequency is not None:
            if not isinstance(self.protocol, Modulation):
                raise ValueError("Drive frequencies need a modulation protocol")
            update["protocol"] = self.protocol.model_copy(update={"frequency": drive_frequency})
        return self.model_copy(update=update)


class ConvergenceCheck(BaseModel):
    setting: str
    relative_frequency: Optional[float] = None
    com_frequency: Optional[float] = None
    asymptotic_energy: Optional[float] = None
    delta: float


class RunRecord(BaseModel):
    config_hash: str
    config: RunConfig
    status: Literal["completed", "failed"] = "completed"
    stage: Optional[str] = None
    error: Optional[str] = None
    exit_code: int = 0
    ground_energy: Optional[float] = None
    fit: Optional[TwoModeFit] = None
    report: Optional[ModeReport] = None
    asymptotic_energy: Optional[float] = None
    series_path: Optional[str] = None
    summary_path: Optional[str] = None
    convergence: List[ConvergenceCheck] = Field(default_factory=list)
    converged: Optional[bool] = None
    bose_fermi_mapped: bool = False
    created_at: datetime = Field(default_factory=datetime.utcnow)

    def summary(self) -> dict:
        """JSON summary content; free of timestamps so identical configs give identical files."""
        return self.model_dump(mode="json", exclude={"created_at", "summary_path"})


class SweepResult(BaseModel):
    """Records of a coupling sweep in sweep order, plus the assembled curve file."""

    records: List[RunRecord]
    curve_path: Optional[str] = None

    @computed_field
    @property
    def partial(self) -> bool:
        return any(record.status != "completed" for record in self.records)

    @property
    def exit_code(self) -> int:
        # 3 marks a sweep whose failed points are listed next to the finished ones
        if not self.partial:
            return 0
        if all(record.status != "completed" for record in self.records):
            return max(record.exit_code for record in self.records)
        return 3
