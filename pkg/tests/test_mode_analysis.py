import math
import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
from models.timeseries import UPOT, TimeSeries
from services.mode_analysis import evaluate_two_modes, fft_peaks, fit_single_mode, fit_two_modes


def make_series(values_of, duration=600.0, dt=0.1):
    t = np.arange(0.0, duration + 0.5 * dt, dt)
    return TimeSeries(times=t, channels={UPOT: values_of(t)})


@pytest.fixture
def two_mode_series():
    """Relative mode at 1.9 and center-of-mass mode at 2.0"""
    return make_series(lambda t: 0.3 * np.sin(1.9 * (t - 0.4)) + 0.5 * np.sin(2.0 * t) + 1.0)


class TestPeriodogram:
    def test_single_peak(self):
        """Test that the strongest peak lies within the Fourier resolution"""
        series = make_series(lambda t: np.sin(1.7 * t))
        peaks = fft_peaks(series, count=1)
        assert abs(peaks[0].frequency - 1.7) < 2.0 * math.pi / series.duration

    def test_two_resolved_peaks(self, two_mode_series):
        """Test that both breathing lines appear, strongest first"""
        peaks = fft_peaks(two_mode_series)
        assert len(peaks) == 2
        assert peaks[0].frequency == pytest.approx(2.0, abs=0.01)
        assert peaks[1].frequency == pytest.approx(1.9, abs=0.01)

    def test_non_uniform_sampling_rejected(self):
        """Test that irregular time axes are refused"""
        t = np.concatenate((np.linspace(0.0, 10.0, 101), [10.5]))
        with pytest.raises(ValueError):
            fft_peaks(TimeSeries(times=t, channels={UPOT: np.sin(t)}))

    def test_constant_signal_has_no_peaks(self):
        """Test an empty result for a flat channel"""
        assert fft_peaks(make_series(lambda t: np.full_like(t, 2.0), duration=50.0)) == []


class TestSinusoidFits:
    def test_two_mode_recovery(self, two_mode_series):
        """Test that the fit recovers both frequencies and amplitudes"""
        fit = fit_two_modes(two_mode_series)
        assert not fit.merged
        assert fit.relative_frequency == pytest.approx(1.9, abs=1e-6)
        assert fit.com_frequency == pytest.approx(2.0, abs=1e-6)
        assert abs(fit.relative_amplitude) == pytest.approx(0.3, abs=1e-6)
        assert abs(fit.com_amplitude) == pytest.approx(0.5, abs=1e-6)
        assert fit.offset == pytest.approx(1.0, abs=1e-6)
        assert fit.frequency_ratio == pytest.approx(0.95, abs=1e-6)

    def test_fit_reproduces_signal(self, two_mode_series):
        """Test evaluate_two_modes against the fitted samples"""
        fit = fit_two_modes(two_mode_series)
        model = evaluate_two_modes(fit, two_mode_series.times)
        assert np.max(np.abs(model - two_mode_series.channel(UPOT))) < 1e-6

    def test_explicit_seeds(self, two_mode_series):
        """Test that given starting frequencies are honored"""
        fit = fit_two_modes(two_mode_series, initial_guesses=(1.88, 2.01))
        assert fit.relative_frequency == pytest.approx(1.9, abs=1e-6)

    def test_single_sinusoid_is_merged(self):
        """Test that one oscillation is reported as merged modes"""
        fit = fit_two_modes(make_series(lambda t: 0.2 * np.sin(2.0 * t) + 1.0))
        assert fit.merged
        assert fit.relative_frequency == pytest.approx(2.0, abs=1e-6)
        assert fit.com_frequency == pytest.approx(2.0, abs=1e-6)

    def test_single_mode_fit(self):
        """Test the one-sinusoid model"""
        fit = fit_single_mode(make_series(lambda t: 0.2 * np.sin(1.8 * (t - 1.0)) + 0.5))
        assert fit.frequency == pytest.approx(1.8, abs=1e-6)
        assert fit.amplitude == pytest.approx(0.2, abs=1e-6)
        assert fit.residual_rms < 1e-8

    def test_too_few_samples(self):
        """Test that short series cannot be fitted"""
        with pytest.raises(ValueError):
            fit_two_modes(make_series(lambda t: np.sin(t), duration=0.5))
