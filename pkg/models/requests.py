from typing import List, Literal, Optional, Tuple

from pydantic import BaseModel, Field, model_validator

from models.system import SystemSpec


class MeanfieldRequest(BaseModel):
    system: SystemSpec = Field(default_factory=SystemSpec)
    model: Literal["hartree", "semiclassical"] = "hartree"


class FitFormulaRequest(BaseModel):
    """Either evaluate given (b, c) on ``couplings`` or calibrate them on ``points``."""

    b: Optional[float] = None
    c: Optional[float] = None
    couplings: List[float] = Field(default_factory=list)
    points: List[Tuple[float, float]] = Field(default_factory=list)

    @model_validator(mode="after")
    def check_mode(self):
        if self.points:
            return self
        if self.b is None or self.c is None:
            raise ValueError("Give calibration points, or both b and c")
        if not self.couplings:
            raise ValueError("Give couplings to evaluate the formula at")
        return self
