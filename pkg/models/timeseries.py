from typing import Any, Dict, List

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

UPOT = "U_pot"
ABSX = "abs_x"
ETOT = "E_tot"
NORM = "norm"
TRAP = "trap_factor"

DEFAULT_CHANNELS = (UPOT, ABSX, ETOT, NORM)


class TimeSeries(BaseModel):
    """Observables sampled on a common, strictly increasing time axis."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    times: np.ndarray
    channels: Dict[str, np.ndarray]
    metadata: Dict[str, Any] = Field(default_factory=dict)

    @model_validator(mode="after")
    def check_axes(self):
        if self.times.ndim != 1:
            raise ValueError("Time axis must be one-dimensional")
        if self.times.size > 1 and np.any(np.diff(self.times) <= 0.0):
            raise ValueError("Times must be strictly increasing")
        for name, values in self.channels.items():
            if values.shape != self.times.shape:
                raise ValueError(f"Channel {name} has {values.size} samples for {self.times.size} times")
        return self

    @property
    def channel_names(self) -> List[str]:
        return list(self.channels)

    @property
    def duration(self) -> float:
        return float(self.times[-1] - self.times[0]) if self.times.size else 0.0

    @property
    def sample_interval(self) -> float:
        return float(np.mean(np.diff(self.times)))

    def is_uniform(self, rtol: float = 1e-6) -> bool:
        steps = np.diff(self.times)
        return bool(np.all(np.abs(steps - steps.mean()) <= rtol * steps.mean()))

    def channel(self, name: str) -> np.ndarray:
        if name not in self.channels:
            raise ValueError(f"Unknown channel '{name}'; available: {', '.join(self.channels)}")
        return self.channels[name]

    def deviation(self, name: str) -> np.ndarray:
        """Channel minus its first sample, the quantity plotted for breathing oscillations."""
        values = self.channel(name)
        return values - values[0]

    def window(self, start: float, end: float = np.inf) -> "TimeSeries":
        mask = (self.times >= start) & (self.times <= end)
        return TimeSeries(times=self.times[mask],
                          channels={name: values[mask] for name, values in self.channels.items()},
                          metadata=dict(self.metadata))
