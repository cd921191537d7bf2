import math

from models.excitation import ExcitationProtocol, Modulation, SwitchOff


def trap_factor(protocol: ExcitationProtocol, t: float) -> float:
    """Multiplier of the harmonic confinement at time ``t``."""
    if t < 0.0:
        raise ValueError("Protocol time must be non-negative")
    if isinstance(protocol, SwitchOff):
        return 0.0 if protocol.t_on <= t <= protocol.end_time else 1.0
    if isinstance(protocol, Modulation):
        beta = protocol.depth * protocol.envelope(t) * math.sin(protocol.frequency * t)
        return 1.0 + beta
    raise TypeError(f"Unknown excitation protocol {type(protocol).__name__}")
