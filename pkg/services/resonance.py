"""Resonance spectroscopy: E_inf(omega_ext) scans with the modulation protocol and the peaks in them."""
import logging
import math
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import trapezoid
from scipy.signal import find_peaks

from models.excitation import Modulation
from models.report import DriveResponse, ModeReport, ResonancePeak, ResonanceSpectrum
from models.run import POST_PULSE_MARGIN, RunConfig
from models.system import SystemSpec
from services.observables import asymptotic_energy
from services.oscillator_basis import spectral_gap
from services.simulation import Simulation, computational_spec
from services.workers import parallel_map
from utils.errors import SimulationError

PEAK_PROMINENCE = 0.05
PEAK_REGION = 0.05
COM_FREQUENCY = 2.0
DRIVE_RATIOS = (0.95, 0.995, 1.0)


def _drive_point(payload: str):
    """Worker for one drive frequency; solver and validation failures come back as data tagged with their stage."""
    stage, frequency = "setup", None
    try:
        config = RunConfig.model_validate_json(payload)
        frequency = config.protocol.frequency
        stage = "propagation"
        series, ground = Simulation(config).run()
        stage = "analysis"
        energy = asymptotic_energy(series)
    except (SimulationError, ValueError) as e:
        logging.error(f"Drive point omega_ext={frequency} failed during {stage}: {e}")
        return frequency, None, None, None, f"{stage}: {e}"
    return frequency, energy, ground, series, None


def _scan_point(payload: str):
    frequency, energy, ground, _, error = _drive_point(payload)
    return frequency, energy, ground, error


def scan_config(spec: SystemSpec, template: Optional[Modulation] = None,
                config: Optional[RunConfig] = None, frequency: float = COM_FREQUENCY) -> RunConfig:
    """Run configuration shared by the points of a scan; the run outlasts the pulse by the settling margin."""
    if config is None:
        template = template or Modulation(frequency=frequency)
        return RunConfig(system=spec, protocol=template, duration=template.end_time + POST_PULSE_MARGIN)
    if not isinstance(config.protocol, Modulation):
        raise ValueError("Resonance scans need a modulation protocol")
    return config.model_copy(update={"system": spec})


def scan_resonance(spec: SystemSpec, frequencies: Sequence[float], template: Optional[Modulation] = None,
                   config: Optional[RunConfig] = None, workers: Optional[int] = None) -> ResonanceSpectrum:
    """One independent modulated run per drive frequency; failed points are skipped and listed."""
    frequencies = sorted(float(w) for w in frequencies)
    if not frequencies:
        raise ValueError("Resonance scan needs at least one drive frequency")
    base = scan_config(spec, template, config, frequencies[0])
    payloads = [base.for_point(drive_frequency=w).model_dump_json() for w in frequencies]
    results = parallel_map(_scan_point, payloads, workers or base.workers)

    points, failures, ground = [], [], None
    for frequency, (_, energy, e0, error) in zip(frequencies, results):
        if error is not None:
            failures.append((frequency, error))
            continue
        points.append((frequency, energy))
        ground = e0 if ground is None else ground
    if failures:
        logging.warning(f"Resonance scan at lambda={spec.coupling} is partial: {len(failures)} points failed")

    omega = [p[0] for p in points]
    energies = [p[1] for p in points]
    peaks = locate_peaks(omega, energies) if len(points) >= 3 else []
    logging.info(f"Scan at lambda={spec.coupling}: peaks at {', '.join(f'{p.center:.4f}' for p in peaks)}")
    return ResonanceSpectrum(coupling=spec.coupling, symmetry=spec.symmetry, dimension=spec.dimension,
                             frequencies=omega, energies=energies, ground_energy=ground, peaks=peaks,
                             failures=failures)


def _crossing(x0: float, y0: float, x1: float, y1: float, level: float) -> float:
    if y1 == y0:
        return x0
    return x0 + (level - y0) * (x1 - x0) / (y1 - y0)


def _half_width(w: np.ndarray, excess: np.ndarray, i: int) -> float:
    half = 0.5 * excess[i]
    left = i
    while left > 0 and excess[left - 1] > half:
        left -= 1
    right = i
    while right < w.size - 1 and excess[right + 1] > half:
        right += 1
    lo = _crossing(w[left - 1], excess[left - 1], w[left], excess[left], half) if left > 0 else w[0]
    hi = _crossing(w[right], excess[right], w[right + 1], excess[right + 1], half) if right < w.size - 1 else w[-1]
    return float(hi - lo)


def locate_peaks(frequencies: Sequence[float], energies: Sequence[float],
                 prominence: float = PEAK_PROMINENCE) -> List[ResonancePeak]:
    """Absorption peaks above the straight baseline through the scan endpoints.

    Areas integrate the excess over the contiguous region above 5% of each
    peak height; widths are full widths at half maximum.
    """
    w = np.asarray(frequencies, dtype=float)
    e = np.asarray(energies, dtype=float)
    if w.size != e.size:
        raise ValueError("Frequencies and energies differ in length")
    if w.size < 3:
        return []
    baseline = np.interp(w, [w[0], w[-1]], [e[0], e[-1]])
    excess = e - baseline
    top = float(excess.max())
    if top <= 0.0:
        return []

    indices, _ = find_peaks(excess, prominence=prominence * top)
    peaks = []
    for i in indices:
        height = float(excess[i])
        center = float(w[i])
        if 0 < i < w.size - 1:
            y0, y1, y2 = excess[i - 1], excess[i], excess[i + 1]
            denominator = y0 - 2.0 * y1 + y2
            if denominator < 0.0:
                center += 0.5 * (y0 - y2) / denominator * 0.5 * (w[i + 1] - w[i - 1])
        lo = i
        while lo > 0 and excess[lo - 1] > PEAK_REGION * height:
            lo -= 1
        hi = i
        while hi < w.size - 1 and excess[hi + 1] > PEAK_REGION * height:
            hi += 1
        area = float(trapezoid(excess[lo:hi + 1], w[lo:hi + 1]))
        peaks.append(ResonancePeak(center=center, height=height, area=area, width=_half_width(w, excess, i)))
    return peaks


def spectrum_report(spectrum: ResonanceSpectrum, bose_fermi_mapped: bool = False) -> ModeReport:
    """Assign the peak nearest omega = 2 to the center of mass and the strongest other one to the relative mode."""
    if not spectrum.peaks:
        raise ValueError(f"No absorption peaks in the scan at lambda={spectrum.coupling}")
    com = min(spectrum.peaks, key=lambda p: abs(p.center - COM_FREQUENCY))
    others = [p for p in spectrum.peaks if p is not com]
    common = dict(method="resonance", coupling=spectrum.coupling, symmetry=spectrum.symmetry,
                  dimension=spectrum.dimension, bose_fermi_mapped=bose_fermi_mapped)
    if not others:
        return ModeReport(relative_frequency=com.center, com_frequency=com.center, relative_weight=com.area,
                          com_weight=com.area, merged=True, **common)
    relative = max(others, key=lambda p: p.area)
    return ModeReport(relative_frequency=relative.center, com_frequency=com.center, relative_weight=relative.area,
                      com_weight=com.area, **common)


def compare_drives(spec: SystemSpec, alphas: Sequence[float] = DRIVE_RATIOS, relative_frequency: Optional[float] = None,
                   template: Optional[Modulation] = None, config: Optional[RunConfig] = None,
                   workers: Optional[int] = None) -> List[DriveResponse]:
    """Modulate at omega_ext = alpha * omega_r; the resonant drive leaves the most energy behind."""
    if relative_frequency is None:
        relative_frequency = spectral_gap(computational_spec(spec))
    drives: List[Tuple[float, float]] = [(float(a), float(a) * relative_frequency) for a in alphas]
    if any(w <= 0.0 for _, w in drives):
        raise ValueError("Drive ratios must be positive")
    base = scan_config(spec, template, config, drives[0][1])
    payloads = [base.for_point(drive_frequency=w).model_dump_json() for _, w in drives]
    results = parallel_map(_drive_point, payloads, workers or base.workers)

    responses = []
    for (alpha, frequency), (_, energy, _, series, error) in zip(drives, results):
        if error is not None:
            raise SimulationError(f"Drive at alpha={alpha} failed: {error}")
        responses.append(DriveResponse(alpha=alpha, frequency=frequency, asymptotic_energy=energy, series=series))
        logging.info(f"alpha={alpha}: omega_ext={frequency:.5f} E_inf={energy:.8f}")
    return responses


def resolution(frequencies: Sequence[float]) -> float:
    """Largest spacing of a scan grid, the accuracy its peak positions can claim."""
    w = np.sort(np.asarray(frequencies, dtype=float))
    return float(np.max(np.diff(w))) if w.size > 1 else math.inf
