"""Expectation values recorded along a run: trap energy, mean distance from the center, total energy."""
import logging
from typing import Dict, List, Optional

import numpy as np

from models.system import CoordinateFrame, SystemSpec
from models.timeseries import ABSX, DEFAULT_CHANNELS, ETOT, NORM, UPOT, TimeSeries
from models.wavefunction import BasisWavefunction, Grid, GridWavefunction, SeparatedWavefunction, Wavefunction
from services.grid_propagator import default_grid, propagator_for
from services.oscillator_basis import basis_propagator_for

ASYMPTOTIC_WINDOW = 50.0
LINE_OBSERVATION_POINTS = 1600
PAIR_OBSERVATION_POINTS = 256


def _weights(psi: GridWavefunction) -> np.ndarray:
    density = np.abs(psi.amplitudes) ** 2
    return density / density.sum()


def _basis_propagator(psi: BasisWavefunction, spec: SystemSpec):
    return basis_propagator_for(spec, psi.frame, psi.basis_size, psi.angular_momentum)


def observation_grid(spec: SystemSpec, frame: CoordinateFrame) -> Grid:
    points = PAIR_OBSERVATION_POINTS if frame is CoordinateFrame.TWO_PARTICLE else LINE_OBSERVATION_POINTS
    return default_grid(spec, frame, points)


def _on_grid(psi, spec: SystemSpec) -> GridWavefunction:
    if isinstance(psi, GridWavefunction):
        return psi
    return _basis_propagator(psi, spec).to_grid(psi, observation_grid(spec, psi.frame))


def expectation_upot(psi: Wavefunction, spec: SystemSpec) -> float:
    """<sum_i r_i^2 / 2> at unit trap factor."""
    if isinstance(psi, SeparatedWavefunction):
        return expectation_upot(psi.center_of_mass, spec) + expectation_upot(psi.relative, spec)
    if isinstance(psi, BasisWavefunction):
        return _basis_propagator(psi, spec).trap_energy(psi)

    p = _weights(psi)
    x = psi.grid.coordinates
    if psi.frame is CoordinateFrame.TWO_PARTICLE:
        return float(np.sum(p * 0.5 * (x[:, None] ** 2 + x[None, :] ** 2)))
    if psi.frame is CoordinateFrame.RELATIVE:
        return float(np.sum(p * 0.25 * x * x))
    return float(np.sum(p * x * x))


def _expected_maximum(a: np.ndarray, pa: np.ndarray, b: np.ndarray, pb: np.ndarray) -> float:
    """E[max(A, B)] for independent discrete A and B."""
    order_a = np.argsort(a)
    a, pa = a[order_a], pa[order_a]
    order_b = np.argsort(b)
    b, pb = b[order_b], pb[order_b]
    cdf_a = np.concatenate(([0.0], np.cumsum(pa)))
    cdf_b = np.concatenate(([0.0], np.cumsum(pb)))
    b_at_most_a = cdf_b[np.searchsorted(b, a, side="right")]
    a_below_b = cdf_a[np.searchsorted(a, b, side="left")]
    return float(np.sum(pa * a * b_at_most_a) + np.sum(pb * b * a_below_b))


def expectation_absx(psi: Wavefunction, spec: SystemSpec) -> float:
    """<(|x1| + |x2|)/2> for two particles; the radial mean for a single line problem.

    For a 1D product state (|x1| + |x2|)/2 = max(|R|, |r|/2), evaluated from the
    two marginal densities; in 2D the product state reports <r>/2.
    """
    if isinstance(psi, SeparatedWavefunction):
        relative = _on_grid(psi.relative, spec)
        if spec.dimension == 2:
            return 0.5 * expectation_absx(relative, spec)
        center = _on_grid(psi.center_of_mass, spec)
        return _expected_maximum(np.abs(center.grid.coordinates), _weights(center),
                                 0.5 * np.abs(relative.grid.coordinates), _weights(relative))

    psi = _on_grid(psi, spec)
    p = _weights(psi)
    x = psi.grid.coordinates
    if psi.frame is CoordinateFrame.TWO_PARTICLE:
        return float(np.sum(p * 0.5 * (np.abs(x)[:, None] + np.abs(x)[None, :])))
    return float(np.sum(p * np.abs(x)))


def total_energy(psi: Wavefunction, spec: SystemSpec, trap_factor: float = 1.0) -> float:
    if isinstance(psi, SeparatedWavefunction):
        return total_energy(psi.center_of_mass, spec, trap_factor) + total_energy(psi.relative, spec, trap_factor)
    if isinstance(psi, BasisWavefunction):
        return _basis_propagator(psi, spec).energy(psi, trap_factor)
    propagator = propagator_for(spec, psi.grid, psi.frame, psi.angular_momentum)
    return propagator.energy(psi, trap_factor)


def measure(psi: Wavefunction, spec: SystemSpec, trap_factor: float = 1.0) -> Dict[str, float]:
    return {
        UPOT: expectation_upot(psi, spec),
        ABSX: expectation_absx(psi, spec),
        ETOT: total_energy(psi, spec, trap_factor),
        NORM: psi.norm(),
    }


class TimeSeriesRecorder:
    def __init__(self, channels=DEFAULT_CHANNELS, metadata: Optional[dict] = None):
        self.channels = tuple(channels)
        self.metadata = dict(metadata or {})
        self._times: List[float] = []
        self._values: Dict[str, List[float]] = {name: [] for name in self.channels}

    def __len__(self):
        return len(self._times)

    def record(self, t: float, values: Dict[str, float]):
        if self._times and t <= self._times[-1]:
            raise ValueError(f"Sample at t={t} is not after t={self._times[-1]}")
        self._times.append(t)
        for name in self.channels:
            self._values[name].append(values[name])

    def build(self) -> TimeSeries:
        return TimeSeries(times=np.array(self._times),
                          channels={name: np.array(values) for name, values in self._values.items()},
                          metadata=self.metadata)


def asymptotic_energy(series: TimeSeries, window: float = ASYMPTOTIC_WINDOW) -> float:
    """E_inf: mean total energy over the last ``window`` time units."""
    energies = series.channel(ETOT)
    if series.duration < window:
        logging.warning(f"Series of length {series.duration:.1f} is shorter than the averaging window {window}")
    mask = series.times >= series.times[-1] - window
    return float(np.mean(energies[mask]))
