import math
import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
from models.report import FitFormulaParams
from services.fit_formula import eval_fit_formula, fit_formula_calibrate, max_deviation


@pytest.fixture
def params():
    return FitFormulaParams(b=0.7, c=-0.4)


class TestFitFormula:
    def test_ideal_limit(self, params):
        """Test omega(0) = 2 for any (b, c)"""
        assert eval_fit_formula(params, 0.0) == pytest.approx(2.0, abs=1e-12)
        assert eval_fit_formula(FitFormulaParams(b=3.0, c=1.5), 0.0) == pytest.approx(2.0, abs=1e-12)

    def test_classical_limit(self, params):
        """Test omega -> sqrt(3) for lambda -> infinity"""
        assert eval_fit_formula(params, 1e9) == pytest.approx(math.sqrt(3.0), abs=1e-8)

    def test_monotone_decrease(self, params):
        """Test that the curve falls from 2 towards sqrt(3)"""
        values = eval_fit_formula(params, np.linspace(0.0, 50.0, 101))
        assert np.all(np.diff(values) < 0.0)

    def test_vectorized(self, params):
        """Test array input gives array output"""
        assert eval_fit_formula(params, [0.0, 1.0]).shape == (2,)

    def test_negative_coupling_rejected(self, params):
        """Test that lambda < 0 is refused"""
        with pytest.raises(ValueError):
            eval_fit_formula(params, -0.1)


class TestCalibration:
    def test_recovers_parameters(self, params):
        """Test that noise-free points give back (b, c)"""
        couplings = [0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 30.0]
        points = [(lam, eval_fit_formula(params, lam)) for lam in couplings]
        calibrated = fit_formula_calibrate(points)
        assert calibrated.b == pytest.approx(0.7, abs=1e-6)
        assert calibrated.c == pytest.approx(-0.4, abs=1e-6)
        assert max_deviation(calibrated, points) < 1e-9

    def test_too_few_points(self):
        """Test that calibration needs four points"""
        with pytest.raises(ValueError):
            fit_formula_calibrate([(0.1, 1.98), (1.0, 1.9), (10.0, 1.8)])
