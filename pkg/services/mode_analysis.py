"""Frequency extraction from observable time series: periodogram peaks and sinusoid fits."""
import logging
import math
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import least_squares
from scipy.signal import find_peaks

from models.report import SingleModeFit, SpectralPeak, TwoModeFit
from models.timeseries import UPOT, TimeSeries
from utils.errors import ConvergenceError

DEFAULT_GUESSES = (math.sqrt(3.0), 2.0)
NEGLIGIBLE_AMPLITUDE = 1e-3


def fft_peaks(series: TimeSeries, channel: str = UPOT, count: int = 2, pad_factor: int = 16,
              threshold: float = 1e-4) -> List[SpectralPeak]:
    """Strongest local maxima of the Hann-windowed periodogram, refined by parabolic interpolation.

    Peaks weaker than ``threshold`` times the strongest are dropped. Returned in
    order of decreasing power.
    """
    if not series.is_uniform():
        raise ValueError("Periodogram needs uniformly sampled data")
    values = series.channel(channel)
    values = values - values.mean()
    n = values.size
    size = pad_factor * n
    dt = series.sample_interval

    power = np.abs(np.fft.rfft(values * np.hanning(n), size)) ** 2
    omega = 2.0 * math.pi * np.fft.rfftfreq(size, dt)
    if not np.any(power > 0.0):
        return []

    indices, _ = find_peaks(power, height=threshold * power.max())
    peaks = []
    for i in indices:
        left, centre, right = power[i - 1], power[i], power[i + 1]
        denominator = left - 2.0 * centre + right
        shift = 0.5 * (left - right) / denominator if denominator != 0.0 else 0.0
        peaks.append(SpectralPeak(frequency=float(omega[i] + shift * (omega[1] - omega[0])),
                                  power=float(centre - 0.25 * (left - right) * shift)))
    peaks.sort(key=lambda peak: peak.power, reverse=True)
    return peaks[:count]


def _prepare(series: TimeSeries, channel: str) -> Tuple[np.ndarray, np.ndarray, float]:
    values = series.channel(channel)
    if values.size < 8:
        raise ValueError("Too few samples to fit")
    t0 = float(series.times[0])
    return series.times - t0, values, t0


def _linear_amplitudes(tau: np.ndarray, values: np.ndarray, frequencies: Sequence[float]) -> np.ndarray:
    columns = []
    for omega in frequencies:
        columns += [np.sin(omega * tau), np.cos(omega * tau)]
    columns.append(np.ones_like(tau))
    coefficients, *_ = np.linalg.lstsq(np.column_stack(columns), values, rcond=None)
    return coefficients


def _model(params: np.ndarray, tau: np.ndarray, modes: int) -> np.ndarray:
    result = np.full_like(tau, params[-1])
    for k in range(modes):
        omega, s, c = params[3 * k:3 * k + 3]
        result += s * np.sin(omega * tau) + c * np.cos(omega * tau)
    return result


def _solve(tau: np.ndarray, values: np.ndarray, frequencies: Sequence[float]):
    linear = _linear_amplitudes(tau, values, frequencies)
    start = []
    for k, omega in enumerate(frequencies):
        start += [omega, linear[2 * k], linear[2 * k + 1]]
    start.append(linear[-1])
    modes = len(frequencies)

    result = least_squares(lambda p: _model(p, tau, modes) - values, np.array(start), method="lm",
                           xtol=1e-10, ftol=1e-12, gtol=1e-12, x_scale="jac", max_nfev=20000)
    if result.status <= 0:
        raise ConvergenceError(f"Sinusoid fit did not converge: {result.message}")
    return result


def _amplitude_and_shift(omega: float, s: float, c: float, t_start: float) -> Tuple[float, float]:
    # s sin(w tau) + c cos(w tau) = a sin(w tau + theta) = a sin[w (t - t0)]
    amplitude = math.hypot(s, c)
    theta = math.atan2(c, s)
    return amplitude, t_start - theta / omega


def _parameter_errors(result) -> List[float]:
    dof = max(result.fun.size - result.x.size, 1)
    variance = 2.0 * result.cost / dof
    try:
        covariance = np.linalg.inv(result.jac.T @ result.jac) * variance
    except np.linalg.LinAlgError:
        return []
    return [float(math.sqrt(abs(v))) for v in np.diag(covariance)]


def fit_single_mode(series: TimeSeries, channel: str = UPOT,
                    initial_frequency: Optional[float] = None) -> SingleModeFit:
    tau, values, t_start = _prepare(series, channel)
    if initial_frequency is None:
        peaks = fft_peaks(series, channel, count=1)
        initial_frequency = peaks[0].frequency if peaks else DEFAULT_GUESSES[1]
    result = _solve(tau, values, [initial_frequency])
    omega, s, c, offset = result.x
    if omega < 0.0:
        omega, s = -omega, -s
    amplitude, shift = _amplitude_and_shift(omega, s, c, t_start)
    return SingleModeFit(amplitude=amplitude, frequency=omega, phase_shift=shift, offset=float(offset),
                         residual_rms=float(math.sqrt(np.mean(result.fun ** 2))))


def fit_two_modes(series: TimeSeries, channel: str = UPOT,
                  initial_guesses: Optional[Tuple[float, float]] = None) -> TwoModeFit:
    """Least-squares fit of two sinusoids plus offset.

    Seeds come from the periodogram when not given. The pair is reported as
    merged when the frequencies are closer than the Fourier resolution 2 pi / T
    of the window, or when one amplitude is negligible.
    """
    tau, values, t_start = _prepare(series, channel)
    resolution = 2.0 * math.pi / series.duration
    try:
        single = fit_single_mode(series, channel)
    except ConvergenceError:
        single = None

    if initial_guesses is None:
        peaks = fft_peaks(series, channel, count=2)
        if len(peaks) >= 2:
            initial_guesses = tuple(sorted(p.frequency for p in peaks[:2]))
        elif peaks:
            initial_guesses = (peaks[0].frequency - resolution, peaks[0].frequency + resolution)
        else:
            initial_guesses = DEFAULT_GUESSES

    try:
        result = _solve(tau, values, initial_guesses)
    except ConvergenceError as e:
        if single is None:
            raise
        logging.warning(f"Two-mode fit failed ({e}); reporting the single-mode fit")
        return _merged(channel, single)

    modes = []
    for k in range(2):
        omega, s, c = result.x[3 * k:3 * k + 3]
        if omega < 0.0:
            omega, s = -omega, -s
        amplitude, shift = _amplitude_and_shift(omega, s, c, t_start)
        modes.append((omega, amplitude, shift))
    modes.sort(key=lambda mode: mode[0])
    (w_r, a, t_r), (w_R, b, t_R) = modes

    largest = max(a, b)
    if w_R - w_r < resolution or min(a, b) < NEGLIGIBLE_AMPLITUDE * largest or w_r <= 0.0:
        if single is None:
            single = fit_single_mode(series, channel, initial_frequency=w_R if b >= a else w_r)
        return _merged(channel, single)

    residual = float(math.sqrt(np.mean(result.fun ** 2)))
    return TwoModeFit(channel=channel, relative_amplitude=a, relative_frequency=w_r, relative_phase_shift=t_r,
                      com_amplitude=b, com_frequency=w_R, com_phase_shift=t_R, offset=float(result.x[-1]),
                      residual_rms=residual,
                      single_mode_residual_rms=single.residual_rms if single else None,
                      parameter_errors=_parameter_errors(result))


def _merged(channel: str, single: SingleModeFit) -> TwoModeFit:
    return TwoModeFit(channel=channel, relative_amplitude=single.amplitude, relative_frequency=single.frequency,
                      relative_phase_shift=single.phase_shift, com_amplitude=0.0, com_frequency=single.frequency,
                      com_phase_shift=single.phase_shift, offset=single.offset,
                      residual_rms=single.residual_rms, single_mode_residual_rms=single.residual_rms, merged=True)


def evaluate_two_modes(fit: TwoModeFit, times: np.ndarray) -> np.ndarray:
    t = np.asarray(times, dtype=float)
    return (fit.relative_amplitude * np.sin(fit.relative_frequency * (t - fit.relative_phase_shift))
            + fit.com_amplitude * np.sin(fit.com_frequency * (t - fit.com_phase_shift)) + fit.offset)
