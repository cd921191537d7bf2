import logging
import math
from typing import Annotated, Literal, Union

from pydantic import BaseModel, ConfigDict, Field, model_validator

LINEAR_RESPONSE_DEPTH = 0.05


class SwitchOff(BaseModel):
    """Method (I): the trap is turned off on [t_on, t_on + duration]."""

    model_config = ConfigDict(frozen=True)

    kind: Literal["switch_off"] = "switch_off"
    t_on: float = Field(1.0, ge=0.0)
    duration: float = Field(0.1, gt=0.0, le=0.5)

    @property
    def end_time(self) -> float:
        return self.t_on + self.duration


class Modulation(BaseModel):
    """Method (II): trap curvature 1 + beta0 exp[-(t-t0)^2 / 2 sigma] sin(omega_ext t).

    ``width`` is sigma as it appears in the exponent, so it carries units of time squared.
    """

    model_config = ConfigDict(frozen=True)

    kind: Literal["modulation"] = "modulation"
    depth: float = Field(5e-3, gt=0.0, lt=1.0)
    center: float = Field(240.0, ge=0.0)
    width: float = Field(100.0, gt=0.0)
    frequency: float = Field(..., gt=0.0)

    @model_validator(mode="after")
    def warn_outside_linear_response(self):
        if self.depth > LINEAR_RESPONSE_DEPTH:
            logging.warning(f"Modulation depth {self.depth} exceeds the linear-response "
                            f"regime ({LINEAR_RESPONSE_DEPTH})")
        return self

    @property
    def end_time(self) -> float:
        return self.center + 4.0 * math.sqrt(self.width)

    def envelope(self, t: float) -> float:
        return math.exp(-(t - self.center) ** 2 / (2.0 * self.width))


ExcitationProtocol = Annotated[Union[SwitchOff, Modulation], Field(discriminator="kind")]
