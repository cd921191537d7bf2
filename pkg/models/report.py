import math
from typing import List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, computed_field

from models.system import Symmetry
from models.timeseries import TimeSeries

SQRT3 = math.sqrt(3.0)


class SingleModeFit(BaseModel):
    """f(t) = a sin[omega (t - t0)] + f0"""

    amplitude: float
    frequency: float
    phase_shift: float
    offset: float
    residual_rms: float


class TwoModeFit(BaseModel):
    """f(t) = a sin[omega_r (t - t0)] + b sin[omega_R (t - t0')] + f0, with omega_r <= omega_R.

    When the modes cannot be told apart (``merged``) both frequencies carry the
    single-mode result.
    """

    channel: str
    relative_amplitude: float
    relative_frequency: float = Field(..., gt=0.0)
    relative_phase_shift: float
    com_amplitude: float
    com_frequency: float = Field(..., gt=0.0)
    com_phase_shift: float
    offset: float
    residual_rms: float
    single_mode_residual_rms: Optional[float] = None
    parameter_errors: List[float] = Field(default_factory=list)
    merged: bool = False

    @computed_field
    @property
    def frequency_ratio(self) -> float:
        return self.relative_frequency / self.com_frequency


class SpectralPeak(BaseModel):
    frequency: float
    power: float


class ResonancePeak(BaseModel):
    center: float
    height: float
    area: float
    width: float


class ResonanceSpectrum(BaseModel):
    """Asymptotic energy E_inf(omega_ext) of a modulation scan at fixed coupling."""

    coupling: float
    symmetry: Symmetry
    dimension: int
    frequencies: List[float]
    energies: List[float]
    ground_energy: Optional[float] = None
    peaks: List[ResonancePeak] = Field(default_factory=list)
    failures: List[Tuple[float, str]] = Field(default_factory=list)

    @computed_field
    @property
    def partial(self) -> bool:
        return bool(self.failures)


class DriveResponse(BaseModel):
    """Response to a modulation at omega_ext = alpha * omega_r."""

    alpha: float
    frequency: float
    asymptotic_energy: float
    series: Optional[TimeSeries] = Field(None, exclude=True)


class FitFormulaParams(BaseModel):
    """omega(lambda) = a exp[-arctan(b lambda + c)] + d with a, d tied to omega(0) = 2 and omega(inf) = sqrt(3)."""

    model_config = ConfigDict(frozen=True)

    b: float
    c: float

    @computed_field
    @property
    def d_c(self) -> float:
        return math.exp(math.pi / 2.0 - math.atan(self.c))

    @computed_field
    @property
    def d(self) -> float:
        return (2.0 - SQRT3 * self.d_c) / (1.0 - self.d_c)

    @computed_field
    @property
    def a(self) -> float:
        return (SQRT3 - self.d) * math.exp(math.pi / 2.0)


class HartreeResult(BaseModel):
    coupling: float
    effective_trap_frequency: float
    frequency: float
    interaction_energy: float
    interaction_slope: float
    interaction_curvature: float
    trap_energy: float


class SemiclassicalResult(BaseModel):
    coupling: float
    gaussian_width: float
    separation: float
    potential_curvature: float
    frequency: float


class ModeReport(BaseModel):
    """Breathing frequencies from any method, in the shape shared by the JSON summaries."""

    method: Literal["fit", "resonance", "gap", "hartree", "semiclassical", "classical"]
    coupling: float
    symmetry: Symmetry
    dimension: int
    relative_frequency: float
    com_frequency: float = 2.0
    relative_weight: Optional[float] = None
    com_weight: Optional[float] = None
    residual_rms: Optional[float] = None
    merged: bool = False
    bose_fermi_mapped: bool = False

    @computed_field
    @property
    def frequency_ratio(self) -> float:
        return self.relative_frequency / self.com_frequency
